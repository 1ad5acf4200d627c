#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace uavnet {

/// Value-and-gradient oracle: returns f(x) and fills grad (same length as x).
using Oracle = std::function<double(std::span<const double>, std::span<double>)>;

/// Convex inequality g(x) <= 0. `scale` normalizes violation reporting.
/// A nonempty `support` lists the only coordinates the gradient touches; the
/// solver then reads and clears just those entries.
struct IneqConstraint {
    Oracle eval;
    std::string name;
    double scale = 1.0;
    std::vector<int> support;
};

/// Smooth concave maximization under convex inequalities, affine equalities
/// and box bounds. `start` must be strictly feasible for the inequalities and
/// the box, and satisfy the equalities to 1e-9.
struct ConcaveProgram {
    int dim = 0;
    Oracle objective;
    std::vector<IneqConstraint> ineqs;
    std::vector<std::vector<double>> eq_rows;  // affine equality lhs rows
    std::vector<double> eq_rhs;
    std::vector<double> lower;  // box; empty = unbounded, +-inf entries allowed
    std::vector<double> upper;
    std::vector<double> start;
};

enum class SolveStatus { converged, iteration_cap, numerical_failure };

const char* to_string(SolveStatus s);

struct SolveSettings {
    int max_outer = 12;
    int max_inner = 400;
    double t0 = 1.0;
    double t_scale = 10.0;
    double barrier_gap = 1e-7;        // stop once (#ineqs)/t < barrier_gap
    double stationarity_tol = 1e-5;   // scaled by (1 + |objective|)
    double violation_tol = 1e-7;      // scaled by constraint scale
    bool debug_trace = false;
    std::string trace_path;           // iteration-trace CSV when debug_trace
};

struct SolveReport {
    std::vector<double> solution;
    double objective = 0.0;
    int outer_iterations = 0;
    int inner_iterations = 0;
    double max_violation = 0.0;
    double stationarity = 0.0;
    SolveStatus status = SolveStatus::numerical_failure;
    std::vector<double> outer_objectives;  // one true-objective value per outer pass
};

/// Log-barrier method: minimizes -t·f(x) - Σ log(-g_j(x)) over the affine
/// subspace (equalities eliminated by null-space projection), gradient descent
/// with Armijo backtracking inside, t scaled by t_scale per outer pass.
SolveReport maximize(const ConcaveProgram& program, const SolveSettings& settings = {});

struct KktReport {
    double projected_gradient = 0.0;
    double complementarity = 0.0;
    double equality_residual = 0.0;
    double max_residual = 0.0;
};

/// First-order residuals at `point` with barrier-implied multipliers
/// lambda_j = 1/(t_ref·(-g_j)). Throws naming the worst constraint if the
/// point is infeasible beyond 1e-6 (scaled).
KktReport check_kkt(const ConcaveProgram& program, std::span<const double> point,
                    double t_ref = 1e10);

}  // namespace uavnet
