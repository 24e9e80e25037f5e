// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace raea::gen {

inline constexpr int kMaxStateDim = 9;
inline constexpr std::size_t kMaxPositions = 512;

enum class Fusion { cross_attention, film, concat, none };
enum class QuerySource { main, retrieved };

/// Which status segments of a retrieved fragment are tokenised.
enum class StatusTokens { all, no_proprio, no_action_proprio };

std::string_view to_string(Fusion f);
std::string_view to_string(QuerySource q);
std::string_view to_string(StatusTokens s);
Fusion parse_fusion(std::string_view s);
QuerySource parse_query_source(std::string_view s);
StatusTokens parse_status_tokens(std::string_view s);

struct GeneratorConfig {
    int d_model = 64;
    int n_heads = 4;
    int n_blocks = 3;
    int ffn_hidden = 128;
    int encoder_hidden = 64;
    int conv_width = 3;
    /// Per-head downsample rate of the sequence aggregation; empty means all 1.
    std::vector<int> sc_rates;
    QuerySource attn_query_source = QuerySource::main;
    Fusion fusion = Fusion::cross_attention;
    StatusTokens status_tokens = StatusTokens::all;
    /// Width of the retriever features reused as instruction/observation tokens.
    int feature_dim = 64;
    int max_state_dim = kMaxStateDim;

    int d_h() const { return d_model / n_heads; }
    int sc_rate(int head) const;
    /// Throws ConfigError on the first broken invariant.
    void validate() const;
    friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

/// Five-block preset used for the larger simulated suites.
GeneratorConfig simulated_preset();

nlohmann::json to_json(const GeneratorConfig& cfg);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

}  // namespace raea::gen
