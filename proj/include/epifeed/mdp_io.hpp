#pragma once

#include "epifeed/instances.hpp"

#include "json.hpp"

#include <filesystem>

namespace epifeed {

/// MDP file file:
///   num_states, num_actions, horizon, transitions[s][a][s'], init_dist,
///   feature_map: {kind: "direct", normalize?} |
///                {kind: "sum_decomposable", orthogonal, tables[h][s][a][d]} |
///                {kind: "custom", tables[h][s][a][d]},
///   B, and either w_star or w_seed (w* drawn on the sphere of radius B).
/// Throws ConfigError on missing or malformed fields.
Instance instance_from_json(const nlohmann::json& j, const std::string& name = "custom");
Instance load_instance(const std::filesystem::path& path);
nlohmann::json instance_to_json(const Instance& inst);

}  // namespace epifeed
