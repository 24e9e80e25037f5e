// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "raea/membank/fragment.hpp"

namespace raea::bank {

struct BankConfig {
    int L = 8;
    int stride = 4;
    ModalitySet modalities;
    std::uint64_t encoder_seed = 0;
    std::string config_hash;
};

struct Scored {
    int id = -1;
    double score = 0.0;
    friend bool operator==(const Scored&, const Scored&) = default;
};

using RetrievalResult = std::vector<Scored>;
using EmbodimentFilter = std::optional<std::set<std::string>>;

/// Flat maximum-inner-product index over fragment embeddings.
class MemoryBank {
public:
    explicit MemoryBank(BankConfig cfg = {});

    const BankConfig& config() const noexcept { return cfg_; }
    const enc::EncoderParams& encoder() const noexcept { return encoder_; }

    /// Computes the embedding and cached per-payload features, assigns id = size().
    int insert(PolicyFragment f);
    /// Insert with a known embedding (bank loading).
    int insert_with_embedding(PolicyFragment f, std::vector<double> embedding);

    std::size_t size() const noexcept { return fragments_.size(); }
    bool empty() const noexcept { return fragments_.empty(); }
    const PolicyFragment& fragment(int id) const { return fragments_.at(static_cast<std::size_t>(id)); }
    std::span<const double> embedding(int id) const;
    /// Per-payload encode_modality outputs, in payloads() order.
    const std::vector<std::vector<double>>& features(int id) const { return features_.at(static_cast<std::size_t>(id)); }
    const std::vector<double>& embeddings() const noexcept { return embeddings_; }
    const std::map<std::string, std::vector<int>>& embodiment_index() const noexcept { return by_embodiment_; }
    std::set<std::string> episode_ids() const;

    /// Exact top-n by dot product over (filtered) embeddings; ties go to the lower id.
    std::vector<Scored> search(std::span<const double> query, std::size_t n,
                               const EmbodimentFilter& filter = std::nullopt) const;

    friend bool operator==(const MemoryBank& a, const MemoryBank& b);

private:
    BankConfig cfg_;
    enc::EncoderParams encoder_;
    std::vector<PolicyFragment> fragments_;
    std::vector<std::vector<std::vector<double>>> features_;
    std::vector<double> embeddings_;
    std::map<std::string, std::vector<int>> by_embodiment_;
};

struct RetrievalConfig {
    int k = 3;
    double dup_threshold = 0.9;
    int candidate_pool = 64;
    EmbodimentFilter embodiment_filter;
    double query_dropout_rate = 0.7;
    /// false turns off both similarity tests (plain top-k).
    bool dedup = true;
    /// Re-retrieve every step from the observation alone after the first frame.
    bool per_step_retrieval = false;

    void validate() const;
};

/// Scans the top candidate_pool hits in rank order and keeps a candidate
/// unless its similarity to the query, or to any kept candidate, exceeds
/// dup_threshold. Stops after k selections.
RetrievalResult select_diverse(const MemoryBank& bank, std::span<const double> query, const RetrievalConfig& cfg);

RetrievalResult retrieve(const MemoryBank& bank, const enc::Query& q, const RetrievalConfig& cfg, enc::Mode mode,
                         Rng& rng);

/// Builds a bank from episodes with the configured window and modalities.
MemoryBank build_bank(const std::vector<env::Episode>& episodes, const BankConfig& cfg);

inline constexpr int kBankVersion = 1;

std::string serialize_bank(const MemoryBank& bank);
MemoryBank parse_bank(const std::string& text);
void save_bank(const MemoryBank& bank, const std::filesystem::path& path);
MemoryBank load_bank(const std::filesystem::path& path);
/// Checksum stored in the header (hex FNV-1a over the fragment lines).
std::string bank_checksum(const MemoryBank& bank);

}  // namespace raea::bank
