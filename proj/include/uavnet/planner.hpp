#pragma once

#include <string>
#include <vector>

#include "uavnet/risk_utility.hpp"
#include "uavnet/subproblems.hpp"

namespace uavnet {

struct PlannerSettings {
    int max_iterations = 20;     // L
    double tolerance = 1e-4;     // relative objective change
    RiskConfig risk;
    bool history_in_objective = true;
    double rate_scale = 1e-3;    // kbps scale inside the exp-utility objective
    SolveSettings solver;
};

struct BlockReport {
    int iteration = 0;
    std::string block;  // "association" | "bandwidth" | "trajectory" | "rounding"
    SolveStatus status = SolveStatus::converged;
    int outer = 0;
    int inner = 0;
    double objective_after = 0.0;
};

struct ConvergenceTrace {
    std::vector<double> objectives;  // true exp-utility value after each AO iteration
    std::vector<BlockReport> blocks;
    double relaxed_objective = 0.0;
    double rounded_objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct PlanResult {
    Plan plan;
    ConvergenceTrace trace;
};

/// Alternating optimization over association, bandwidth and trajectory with a
/// final binary mapping and bandwidth re-solve. `history` carries realized
/// per-slot sums (bits/s) that enter the objective as constants when
/// settings.history_in_objective is set.
PlanResult ao_optimize(const Scenario& scenario, const ChannelRealization& realization,
                       Window window, const std::vector<Vec2>& anchors,
                       const std::vector<std::uint8_t>& alive, const PlannerSettings& settings,
                       const std::vector<double>& history = {});

/// The beta = 0 special case: plain average-sum-rate maximization.
PlanResult sr_max(const Scenario& scenario, const ChannelRealization& realization, Window window,
                  const std::vector<Vec2>& anchors, const std::vector<std::uint8_t>& alive,
                  const PlannerSettings& settings, const std::vector<double>& history = {});

/// Trace rows as CSV (iteration, objective, block, solver status).
std::string trace_to_csv(const ConvergenceTrace& trace);

}  // namespace uavnet
