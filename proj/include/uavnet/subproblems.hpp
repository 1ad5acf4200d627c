#pragma once

#include <cstdint>
#include <vector>

#include "uavnet/channel.hpp"
#include "uavnet/convex_core.hpp"
#include "uavnet/scenario.hpp"

namespace uavnet {

/// Auxiliary distance-reciprocal bounds for the trajectory surrogate, plus the
/// linearization copies (superscript-l quantities). At construction all four
/// tables equal 1/(‖q_l − c‖² + H²).
struct EtaBounds {
    Window window;
    std::size_t n_uav = 0;
    std::size_t n_user = 0;
    std::vector<double> lower;    // eta^lower (u, k, slot)
    std::vector<double> upper;    // eta^upper
    std::vector<double> lower_l;  // linearization values
    std::vector<double> upper_l;
    std::vector<Vec2> traj_l;     // (u, slot)

    std::size_t idx(std::size_t u, std::size_t k, int slot) const {
        return (u * n_user + k) * static_cast<std::size_t>(window.length()) +
               static_cast<std::size_t>(window.offset(slot));
    }
    Vec2 traj_l_at(std::size_t u, int slot) const {
        return traj_l[u * static_cast<std::size_t>(window.length()) +
                      static_cast<std::size_t>(window.offset(slot))];
    }
};

/// Shared inputs of the three alternating-optimization block solves.
struct AoContext {
    const Scenario* scenario = nullptr;
    const ChannelRealization* realization = nullptr;
    std::vector<std::uint8_t> alive;   // the planner's view of the fleet
    double mu = 0.0;                   // risk weight, <= 0
    std::vector<double> history_sums;  // realized per-slot sums (bits/s), constants
    double rate_scale = 1e-3;          // slot sums are scaled by this inside the objective
    SolveSettings solver;
};

struct SubproblemResult {
    Plan plan;
    SolveReport report;
};

struct TrajectoryResult {
    Plan plan;
    EtaBounds eta;
    SolveReport report;
};

/// True exponential-utility objective of a plan: exp_utility over the scaled
/// history constants plus the plan window's per-slot sums (true rates).
double plan_objective(const Plan& plan, const AoContext& ctx);

/// Relaxed association solve (simplex per (user, slot) over alive UAVs plus
/// bandwidth budgets); bandwidth and trajectories held fixed. The returned
/// plan's objective never falls below the incoming one.
SubproblemResult solve_association(const Plan& plan, const AoContext& ctx);

/// Per (user, slot): serving UAV = argmax of the relaxed association among
/// alive UAVs, ties to the lowest UAV id. Budgets may be violated afterwards
/// and must be restored by a follow-up solve_bandwidth.
Plan round_association(const Plan& relaxed, const Scenario& scenario,
                       const std::vector<std::uint8_t>& alive);

/// Bandwidth solve under fixed association (relaxed or binary) and fixed
/// trajectories.
SubproblemResult solve_bandwidth(const Plan& plan, const AoContext& ctx);

/// eta tables initialized at the plan's trajectory (the linearization point).
EtaBounds init_eta(const Plan& plan, const Scenario& scenario);

/// Concave surrogate lower bound of the spectral efficiency of link (u,k) at
/// `slot`, built from the eta bounds; sums run over UAVs alive at that slot.
double surrogate_rate(const EtaBounds& eta, const ChannelRealization& realization,
                      const Scenario& scenario, std::size_t u, std::size_t k, int slot);

/// One SCA step of the trajectory design: linearizes at the incoming
/// trajectory, maximizes the surrogate objective over (positions, eta) under
/// mobility, bounds, anchor, linearized eta and collision constraints. The
/// returned plan's true objective never falls below the incoming one.
TrajectoryResult solve_trajectory(const Plan& plan, const AoContext& ctx);

namespace detail {

/// The barrier programs behind the three solves, exposed for oracle-level
/// verification (finite-difference gradient checks). Variables are the
/// solver-scaled ones; `start` is the strictly feasible start the solve uses.
ConcaveProgram association_program(const Plan& plan, const AoContext& ctx);
ConcaveProgram bandwidth_program(const Plan& plan, const AoContext& ctx);
ConcaveProgram trajectory_program(const Plan& plan, const AoContext& ctx);

}  // namespace detail

}  // namespace uavnet
