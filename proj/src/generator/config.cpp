// SPDX-License-Identifier: Apache-2.0
#include "raea/generator/config.hpp"

#include <string>

#include "raea/common/error.hpp"

namespace raea::gen {

std::string_view to_string(Fusion f) {
    switch (f) {
        case Fusion::cross_attention: return "cross_attention";
        case Fusion::film: return "film";
        case Fusion::concat: return "concat";
        case Fusion::none: return "none";
    }
    return "?";
}

std::string_view to_string(QuerySource q) { return q == QuerySource::main ? "main" : "retrieved"; }

std::string_view to_string(StatusTokens s) {
    switch (s) {
        case StatusTokens::all: return "all";
        case StatusTokens::no_proprio: return "no_proprio";
        case StatusTokens::no_action_proprio: return "no_action_proprio";
    }
    return "?";
}

Fusion parse_fusion(std::string_view s) {
    for (Fusion f : {Fusion::cross_attention, Fusion::film, Fusion::concat, Fusion::none})
        if (to_string(f) == s) return f;
    throw ConfigError("unknown fusion '" + std::string(s) + "'");
}

QuerySource parse_query_source(std::string_view s) {
    if (s == "main") return QuerySource::main;
    if (s == "retrieved") return QuerySource::retrieved;
    throw ConfigError("unknown attn_query_source '" + std::string(s) + "'");
}

StatusTokens parse_status_tokens(std::string_view s) {
    for (StatusTokens t : {StatusTokens::all, StatusTokens::no_proprio, StatusTokens::no_action_proprio})
        if (to_string(t) == s) return t;
    throw ConfigError("unknown status_tokens '" + std::string(s) + "'");
}

int GeneratorConfig::sc_rate(int head) const {
    return sc_rates.empty() ? 1 : sc_rates.at(static_cast<std::size_t>(head));
}

void GeneratorConfig::validate() const {
    if (d_model < 1 || n_heads < 1) throw ConfigError("d_model and n_heads must be positive");
    if (d_model % n_heads != 0) throw ConfigError("d_model must be divisible by n_heads");
    if (n_blocks < 1) throw ConfigError("n_blocks must be >= 1");
    if (ffn_hidden < 1 || encoder_hidden < 1 || feature_dim < 1) throw ConfigError("layer widths must be positive");
    if (conv_width < 1 || conv_width % 2 == 0) throw ConfigError("conv_width must be odd");
    if (!sc_rates.empty()) {
        if (static_cast<int>(sc_rates.size()) != n_heads) throw ConfigError("sc_rates needs one rate per head");
        for (int r : sc_rates)
            if (r < 1) throw ConfigError("sc_rates must be >= 1");
    }
    if (max_state_dim != kMaxStateDim) throw ConfigError("max_state_dim is fixed at 9");
}

GeneratorConfig simulated_preset() {
    GeneratorConfig c;
    c.n_blocks = 5;
    return c;
}

nlohmann::json to_json(const GeneratorConfig& c) {
    return {{"d_model", c.d_model},
            {"n_heads", c.n_heads},
            {"n_blocks", c.n_blocks},
            {"ffn_hidden", c.ffn_hidden},
            {"encoder_hidden", c.encoder_hidden},
            {"conv_width", c.conv_width},
            {"sc_rates", c.sc_rates},
            {"attn_query_source", to_string(c.attn_query_source)},
            {"fusion", to_string(c.fusion)},
            {"status_tokens", to_string(c.status_tokens)},
            {"feature_dim", c.feature_dim},
            {"max_state_dim", c.max_state_dim}};
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    try {
        c.d_model = j.at("d_model").get<int>();
        c.n_heads = j.at("n_heads").get<int>();
        c.n_blocks = j.at("n_blocks").get<int>();
        c.ffn_hidden = j.at("ffn_hidden").get<int>();
        c.encoder_hidden = j.at("encoder_hidden").get<int>();
        c.conv_width = j.at("conv_width").get<int>();
        c.sc_rates = j.at("sc_rates").get<std::vector<int>>();
        c.attn_query_source = parse_query_source(j.at("attn_query_source").get<std::string>());
        c.fusion = parse_fusion(j.at("fusion").get<std::string>());
        c.status_tokens = parse_status_tokens(j.at("status_tokens").get<std::string>());
        c.feature_dim = j.at("feature_dim").get<int>();
        c.max_state_dim = j.at("max_state_dim").get<int>();
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("generator config: ") + ex.what());
    }
    c.validate();
    return c;
}

}  // namespace raea::gen
