#include "uavnet/planner.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "uavnet/errors.hpp"

namespace uavnet {

namespace {

void check_anchors(const Scenario& sc, const std::vector<Vec2>& anchors,
                   const std::vector<std::uint8_t>& alive) {
    if (anchors.size() != sc.n_uavs())
        throw SolverError("planner: anchors must cover every UAV");
    if (alive.size() != sc.n_uavs())
        throw SolverError("planner: alive mask must cover every UAV");
    const double tol = 1e-6;
    for (std::size_t u = 0; u < sc.n_uavs(); ++u) {
        if (!alive[u]) continue;
        if (!sc.in_area(anchors[u], tol))
            throw SolverError("planner: anchor of uav " + std::to_string(u) + " out of bounds");
        for (std::size_t j = u + 1; j < sc.n_uavs(); ++j) {
            if (!alive[j]) continue;
            if (distance(anchors[u], anchors[j]) < sc.d_min - tol)
                throw SolverError("planner: anchors closer than D_min");
        }
    }
}

Plan initial_plan(const Scenario& sc, Window window, const std::vector<Vec2>& anchors,
                  const std::vector<std::uint8_t>& alive) {
    Plan plan = Plan::make(sc.n_uavs(), sc.n_users(), window);
    std::size_t ua = 0;
    for (auto a : alive) ua += a ? 1 : 0;
    const double uniform = ua > 0 ? 1.0 / static_cast<double>(ua) : 0.0;
    for (std::size_t u = 0; u < sc.n_uavs(); ++u) {
        for (int slot = window.first; slot <= window.last; ++slot) {
            plan.pos_at(u, slot) = anchors[u];
            if (!alive[u]) continue;
            double b0 = 0.9 * sc.uavs[u].bandwidth_budget / static_cast<double>(sc.n_users());
            for (std::size_t k = 0; k < sc.n_users(); ++k) {
                plan.assoc_at(u, k, slot) = uniform;
                plan.bw_at(u, k, slot) = b0;
            }
        }
    }
    return plan;
}

void push_block(ConvergenceTrace& trace, int iteration, const char* name,
                const SolveReport& rep, double objective_after) {
    BlockReport b;
    b.iteration = iteration;
    b.block = name;
    b.status = rep.status;
    b.outer = rep.outer_iterations;
    b.inner = rep.inner_iterations;
    b.objective_after = objective_after;
    trace.blocks.push_back(std::move(b));
}

}  // namespace

PlanResult ao_optimize(const Scenario& scenario, const ChannelRealization& realization,
                       Window window, const std::vector<Vec2>& anchors,
                       const std::vector<std::uint8_t>& alive, const PlannerSettings& settings,
                       const std::vector<double>& history) {
    if (window.empty()) throw SolverError("planner: empty window");
    check_anchors(scenario, anchors, alive);

    AoContext ctx;
    ctx.scenario = &scenario;
    ctx.realization = &realization;
    ctx.alive = alive;
    ctx.mu = settings.risk.mu;
    if (settings.history_in_objective) ctx.history_sums = history;
    ctx.rate_scale = settings.rate_scale;
    ctx.solver = settings.solver;

    Plan plan = initial_plan(scenario, window, anchors, alive);
    ConvergenceTrace trace;
    double obj_prev = plan_objective(plan, ctx);

    for (int it = 1; it <= settings.max_iterations; ++it) {
        ++trace.iterations;

        SubproblemResult assoc = solve_association(plan, ctx);
        plan = std::move(assoc.plan);
        push_block(trace, it, "association", assoc.report, assoc.report.objective);

        SubproblemResult bw = solve_bandwidth(plan, ctx);
        plan = std::move(bw.plan);
        push_block(trace, it, "bandwidth", bw.report, bw.report.objective);

        TrajectoryResult tr = solve_trajectory(plan, ctx);
        plan = std::move(tr.plan);
        push_block(trace, it, "trajectory", tr.report, tr.report.objective);

        double obj = plan_objective(plan, ctx);
        trace.objectives.push_back(obj);

        double rel = std::abs(obj - obj_prev) / std::max(1e-12, std::abs(obj_prev));
        obj_prev = obj;
        if (rel < settings.tolerance) {
            trace.converged = true;
            break;
        }
    }
    trace.relaxed_objective = obj_prev;

    // Algorithm's final step: binary mapping, then restore budgets.
    Plan binary = round_association(plan, scenario, alive);
    SubproblemResult final_bw = solve_bandwidth(binary, ctx);
    Plan final_plan = std::move(final_bw.plan);
    double rounded = plan_objective(final_plan, ctx);
    push_block(trace, trace.iterations + 1, "rounding", final_bw.report, rounded);
    trace.rounded_objective = rounded;

    return {std::move(final_plan), std::move(trace)};
}

PlanResult sr_max(const Scenario& scenario, const ChannelRealization& realization, Window window,
                  const std::vector<Vec2>& anchors, const std::vector<std::uint8_t>& alive,
                  const PlannerSettings& settings, const std::vector<double>& history) {
    PlannerSettings srs = settings;
    srs.risk = RiskConfig::from_mu(0.0);
    return ao_optimize(scenario, realization, window, anchors, alive, srs, history);
}

std::string trace_to_csv(const ConvergenceTrace& trace) {
    std::ostringstream os;
    os << "iteration,objective,block,status\n";
    char buf[64];
    for (const auto& b : trace.blocks) {
        std::snprintf(buf, sizeof(buf), "%.12g", b.objective_after);
        os << b.iteration << ',' << buf << ',' << b.block << ',' << to_string(b.status) << '\n';
    }
    return os.str();
}

}  // namespace uavnet
