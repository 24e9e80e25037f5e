// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "raea/trainer/trainer.hpp"

namespace raea::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    TrainConfig config;
    TrainState state;
    std::string config_hash;
    /// Checksum of the bank the policy was trained against.
    std::string bank_hash;
};

/// Binary layout: magic "RAEACKPT", version, length-prefixed JSON header
/// (config, step, rng state, config and bank hashes), named parameter arrays, Adam
/// moments, loss history, then an FNV-1a checksum of everything before it.
std::string serialize_checkpoint(const TrainConfig& cfg, const TrainState& s, const std::string& config_hash = "",
                                 const std::string& bank_hash = "");
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const TrainConfig& cfg, const TrainState& s, const std::filesystem::path& path,
                     const std::string& config_hash = "", const std::string& bank_hash = "");
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace raea::train
