#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "uavnet/planner.hpp"
#include "uavnet/scenario.hpp"
#include "uavnet/sim_harness.hpp"

namespace uavnet {

struct ParsedConfig {
    Scenario scenario;
    PlannerSettings settings;
};

/// Strict scenario + settings parse: unknown fields, type mismatches and
/// invariant violations are collected and raised together as a ConfigError.
/// dB-valued channel fields are converted to linear here. When `users` is
/// absent, 9 sites are placed uniformly at random from the scenario seed.
ParsedConfig parse_config(const std::filesystem::path& path);
ParsedConfig parse_config_text(const std::string& text);

/// Inverse of the parser for round-trips (linear channel units).
std::string scenario_to_text(const Scenario& scenario);

/// Writes per_slot.csv, episodes.csv, traces.csv and summary.json.
/// Contents are byte-deterministic given the metrics.
void emit_results(const std::vector<EpisodeMetrics>& metrics,
                  const std::filesystem::path& out_dir);

}  // namespace uavnet
