// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "raea/evalharness/ablation.hpp"

namespace raea::cli {

/// One document configuring every pipeline stage.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    int threads = 1;
    eval::Experiment experiment;

    /// The base arm with seed and thread count applied.
    eval::Arm base_arm() const;
    /// Hash recorded in every artifact produced from this config.
    std::string hash() const;
};

nlohmann::json to_json(const RunConfig& c);

/// Fills defaults and checks every field. Throws ValidationError listing all
/// failures, each prefixed with the JSON pointer of the offending value.
RunConfig validate_config(const nlohmann::json& doc);

/// Reads and validates a config file; `seed_override` (RAEA_SEED) replaces the seed.
RunConfig load_run_config(const std::filesystem::path& path, const std::optional<std::string>& seed_override = {});

/// Parses a RAEA_SEED value; throws ValidationError when it is not an unsigned integer.
std::uint64_t parse_seed(const std::string& text);

}  // namespace raea::cli
