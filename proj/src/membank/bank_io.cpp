// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <sstream>

#include "raea/common/error.hpp"
#include "raea/common/io.hpp"
#include "raea/membank/bank.hpp"

namespace raea::bank {

using nlohmann::json;

namespace {

constexpr double kVerifyTolerance = 1e-12;

json modality_list(const std::vector<Modality>& ms) {
    json out = json::array();
    for (Modality m : ms) out.push_back(env::to_string(m));
    return out;
}

std::vector<Modality> parse_modality_list(const json& j) {
    std::vector<Modality> out;
    for (const auto& s : j) out.push_back(env::parse_modality(s.get<std::string>()));
    return out;
}

std::vector<std::string> fragment_lines(const MemoryBank& bank) {
    std::vector<std::string> lines;
    lines.reserve(bank.size());
    for (int id = 0; id < static_cast<int>(bank.size()); ++id) {
        json j = fragment_to_json(bank.fragment(id));
        auto e = bank.embedding(id);
        j["embedding"] = std::vector<double>(e.begin(), e.end());
        lines.push_back(j.dump());
    }
    return lines;
}

std::uint64_t checksum_of(const std::vector<std::string>& lines) {
    std::uint64_t h = kFnvOffset;
    for (const auto& l : lines) {
        h = fnv1a64(l, h);
        h = fnv1a64("\n", h);
    }
    return h;
}

}  // namespace

std::string bank_checksum(const MemoryBank& bank) { return hex64(checksum_of(fragment_lines(bank))); }

std::string serialize_bank(const MemoryBank& bank) {
    const auto lines = fragment_lines(bank);
    const auto& cfg = bank.config();
    json header{{"version", kBankVersion},
                {"d_e", bank.encoder().d_e()},
                {"encoder_seed", cfg.encoder_seed},
                {"vocab", env::vocabulary()},
                {"L", cfg.L},
                {"stride", cfg.stride},
                {"count", bank.size()},
                {"checksum", hex64(checksum_of(lines))},
                {"instruction_modalities", modality_list(cfg.modalities.instruction)},
                {"observation_modalities", modality_list(cfg.modalities.observation)},
                {"config_hash", cfg.config_hash}};
    std::string out = header.dump();
    out += '\n';
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

MemoryBank parse_bank(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw CorruptBank("bank file is empty");
    json header;
    BankConfig cfg;
    std::size_t count = 0;
    std::string checksum;
    try {
        header = json::parse(line);
        if (header.at("version").get<int>() != kBankVersion) {
            throw CorruptBank("bank version " + header.at("version").dump() + " is not supported");
        }
        if (header.at("d_e").get<std::size_t>() != enc::kEmbedDim) throw CorruptBank("unsupported embedding width");
        if (header.at("vocab").get<std::vector<std::string>>() != env::vocabulary()) {
            throw CorruptBank("bank vocabulary differs from this build");
        }
        cfg.encoder_seed = header.at("encoder_seed").get<std::uint64_t>();
        cfg.L = header.at("L").get<int>();
        cfg.stride = header.at("stride").get<int>();
        cfg.modalities.instruction = parse_modality_list(header.at("instruction_modalities"));
        cfg.modalities.observation = parse_modality_list(header.at("observation_modalities"));
        cfg.config_hash = header.at("config_hash").get<std::string>();
        count = header.at("count").get<std::size_t>();
        checksum = header.at("checksum").get<std::string>();
    } catch (const json::exception& ex) {
        throw CorruptBank(std::string("bad bank header: ") + ex.what());
    } catch (const ConfigError& ex) {
        throw CorruptBank(std::string("bad bank header: ") + ex.what());
    }

    std::vector<std::string> lines;
    while (std::getline(is, line)) {
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.size() != count) {
        throw CorruptBank("header promises " + std::to_string(count) + " fragments, file has " +
                          std::to_string(lines.size()));
    }
    if (hex64(checksum_of(lines)) != checksum) throw CorruptBank("checksum mismatch");

    MemoryBank bank(cfg);
    try {
        for (const auto& l : lines) {
            json j = json::parse(l);
            PolicyFragment f = fragment_from_json(j);
            const int expect = static_cast<int>(bank.size());
            if (f.id != expect) throw CorruptBank("fragment ids out of order at " + std::to_string(expect));
            bank.insert_with_embedding(std::move(f), j.at("embedding").get<std::vector<double>>());
        }
    } catch (const json::exception& ex) {
        throw CorruptBank(std::string("bad fragment record: ") + ex.what());
    } catch (const DimensionError& ex) {
        throw CorruptBank(std::string("bad fragment record: ") + ex.what());
    }

    // Spot-check a deterministic 1% sample (at least one) against recomputation.
    if (!bank.empty()) {
        Rng rng(derive_seed(fnv1a64(checksum), "verify"));
        const std::size_t samples = std::max<std::size_t>(1, (bank.size() + 99) / 100);
        for (std::size_t s = 0; s < samples; ++s) {
            const int id = static_cast<int>(rng.index(bank.size()));
            const auto fresh = enc::fuse(bank.features(id));
            const auto stored = bank.embedding(id);
            for (std::size_t i = 0; i < fresh.size(); ++i) {
                if (!(std::abs(fresh[i] - stored[i]) <= kVerifyTolerance)) {
                    throw CorruptBank("embedding of fragment " + std::to_string(id) +
                                      " does not match recomputation (encoder header altered?)");
                }
            }
        }
    }
    return bank;
}

void save_bank(const MemoryBank& bank, const std::filesystem::path& path) { atomic_write(path, serialize_bank(bank)); }

MemoryBank load_bank(const std::filesystem::path& path) { return parse_bank(read_file(path)); }

}  // namespace raea::bank
