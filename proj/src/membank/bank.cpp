// SPDX-License-Identifier: Apache-2.0
#include "raea/membank/bank.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "raea/common/error.hpp"

namespace raea::bank {

MemoryBank::MemoryBank(BankConfig cfg) : cfg_(std::move(cfg)), encoder_(cfg_.encoder_seed) {
    if (cfg_.L < 1 || cfg_.L > kMaxFragmentLength) throw ConfigError("fragment length must lie in [1, 16]");
    if (cfg_.stride < 1) throw ConfigError("stride must be >= 1");
    if (cfg_.modalities.observation.empty()) throw ConfigError("bank needs at least one observation modality");
}

int MemoryBank::insert(PolicyFragment f) {
    std::vector<Payload> ps = f.payloads();
    std::vector<std::vector<double>> feats;
    for (const auto& p : ps) feats.push_back(enc::encode_modality(p, encoder_));
    enc::EmbeddingVec e = enc::fuse(feats);
    return insert_with_embedding(std::move(f), std::move(e));
}

int MemoryBank::insert_with_embedding(PolicyFragment f, std::vector<double> embedding) {
    if (f.action_dim() > kMaxStateDim || f.proprio_dim() > kMaxStateDim) {
        throw CapViolation("fragment action_dim " + std::to_string(f.action_dim()) + " / proprio_dim " +
                           std::to_string(f.proprio_dim()) + " exceeds 9");
    }
    if (f.length() < 1 || f.length() > kMaxFragmentLength || f.proprio.size() != f.actions.size()) {
        throw DimensionError("fragment length must lie in [1, 16] with one proprio row per action");
    }
    for (const auto& a : f.actions)
        if (static_cast<int>(a.size()) != f.action_dim()) throw DimensionError("ragged fragment actions");
    for (const auto& p : f.proprio)
        if (static_cast<int>(p.size()) != f.proprio_dim()) throw DimensionError("ragged fragment proprio");
    if (embedding.size() != encoder_.d_e()) throw DimensionError("embedding width mismatch");

    std::vector<std::vector<double>> feats;
    for (const auto& p : f.payloads()) feats.push_back(enc::encode_modality(p, encoder_));

    const int id = static_cast<int>(fragments_.size());
    f.id = id;
    by_embodiment_[f.embodiment_id].push_back(id);
    fragments_.push_back(std::move(f));
    features_.push_back(std::move(feats));
    embeddings_.insert(embeddings_.end(), embedding.begin(), embedding.end());
    return id;
}

std::span<const double> MemoryBank::embedding(int id) const {
    const std::size_t d = encoder_.d_e();
    if (id < 0 || static_cast<std::size_t>(id) >= fragments_.size()) throw DimensionError("fragment id out of range");
    return {embeddings_.data() + static_cast<std::size_t>(id) * d, d};
}

std::set<std::string> MemoryBank::episode_ids() const {
    std::set<std::string> ids;
    for (const auto& f : fragments_) ids.insert(f.source.episode_id);
    return ids;
}

std::vector<Scored> MemoryBank::search(std::span<const double> query, std::size_t n,
                                       const EmbodimentFilter& filter) const {
    if (query.size() != encoder_.d_e()) throw DimensionError("query width mismatch");
    if (n == 0) throw ConfigError("search needs n >= 1");
    std::vector<Scored> all;
    all.reserve(fragments_.size());
    auto score_one = [&](int id) { all.push_back({id, enc::dot(query, embedding(id))}); };
    if (filter) {
        for (const auto& emb : *filter) {
            auto it = by_embodiment_.find(emb);
            if (it == by_embodiment_.end()) continue;
            for (int id : it->second) score_one(id);
        }
    } else {
        for (int id = 0; id < static_cast<int>(fragments_.size()); ++id) score_one(id);
    }
    const std::size_t take = std::min(n, all.size());
    auto better = [](const Scored& a, const Scored& b) { return a.score > b.score || (a.score == b.score && a.id < b.id); };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), better);
    all.resize(take);
    return all;
}

bool operator==(const MemoryBank& a, const MemoryBank& b) {
    return a.cfg_.L == b.cfg_.L && a.cfg_.stride == b.cfg_.stride && a.cfg_.modalities == b.cfg_.modalities &&
           a.cfg_.encoder_seed == b.cfg_.encoder_seed && a.cfg_.config_hash == b.cfg_.config_hash &&
           a.fragments_ == b.fragments_ && a.embeddings_.size() == b.embeddings_.size() &&
           std::equal(a.embeddings_.begin(), a.embeddings_.end(), b.embeddings_.begin(),
                      [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; });
}

void RetrievalConfig::validate() const {
    std::vector<std::string> bad;
    if (k < 1) bad.push_back("k must be >= 1");
    if (candidate_pool < k) bad.push_back("candidate_pool must be >= k");
    if (!(dup_threshold > 0.0 && dup_threshold <= 1.0)) bad.push_back("dup_threshold must lie in (0, 1]");
    if (!(query_dropout_rate >= 0.0 && query_dropout_rate < 1.0)) bad.push_back("query_dropout_rate must lie in [0, 1)");
    if (!bad.empty()) throw ValidationError(bad);
}

RetrievalResult select_diverse(const MemoryBank& bank, std::span<const double> query, const RetrievalConfig& cfg) {
    cfg.validate();
    RetrievalResult out;
    if (bank.empty()) return out;
    const auto candidates = bank.search(query, static_cast<std::size_t>(cfg.candidate_pool), cfg.embodiment_filter);
    for (const auto& c : candidates) {
        if (static_cast<int>(out.size()) == cfg.k) break;
        if (cfg.dedup) {
            if (c.score > cfg.dup_threshold) continue;
            const auto ce = bank.embedding(c.id);
            bool dup = false;
            for (const auto& s : out) {
                if (enc::dot(ce, bank.embedding(s.id)) > cfg.dup_threshold) {
                    dup = true;
                    break;
                }
            }
            if (dup) continue;
        }
        out.push_back(c);
    }
    return out;
}

RetrievalResult retrieve(const MemoryBank& bank, const enc::Query& q, const RetrievalConfig& cfg, enc::Mode mode,
                         Rng& rng) {
    cfg.validate();
    const auto e = enc::encode_query(q, bank.encoder(), mode, cfg.query_dropout_rate, rng);
    return select_diverse(bank, e, cfg);
}

MemoryBank build_bank(const std::vector<env::Episode>& episodes, const BankConfig& cfg) {
    MemoryBank bank(cfg);
    for (auto& f : build_fragments(episodes, cfg.L, cfg.stride, cfg.modalities)) bank.insert(std::move(f));
    return bank;
}

}  // namespace raea::bank
