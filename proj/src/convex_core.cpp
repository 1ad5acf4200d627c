#include "uavnet/convex_core.hpp"

#include <Eigen/Dense>

#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace uavnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijoC1 = 1e-4;
constexpr double kMinStep = 1e-14;

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Orthonormal basis of the null space of `a` (n x 0 when the kernel is trivial).
MatrixXd orthonormal_kernel(const MatrixXd& a) {
    MatrixXd kernel = a.fullPivLu().kernel();
    if (kernel.cols() == 1 && kernel.col(0).isZero(0.0)) return MatrixXd(a.cols(), 0);
    Eigen::HouseholderQR<MatrixXd> qr(kernel);
    return MatrixXd(qr.householderQ()) .leftCols(kernel.cols());
}

struct Evaluator {
    const ConcaveProgram& p;
    bool has_eq = false;
    bool has_box = false;
    MatrixXd null_basis;  // x = x_anchor + N z
    VectorXd x_anchor;
    int zdim = 0;
    std::size_t barrier_terms = 0;  // inequalities + finite box bounds

    // scratch
    mutable VectorXd x_buf, grad_x, grad_term;

    explicit Evaluator(const ConcaveProgram& prog) : p(prog) {
        const int n = p.dim;
        has_box = !p.lower.empty() || !p.upper.empty();
        barrier_terms = p.ineqs.size();
        if (has_box) {
            for (int i = 0; i < n; ++i) {
                if (!p.lower.empty() && std::isfinite(p.lower[i])) ++barrier_terms;
                if (!p.upper.empty() && std::isfinite(p.upper[i])) ++barrier_terms;
            }
        }
        x_anchor = Eigen::Map<const VectorXd>(p.start.data(), n);
        if (!p.eq_rows.empty()) {
            has_eq = true;
            MatrixXd a(p.eq_rows.size(), n);
            for (std::size_t r = 0; r < p.eq_rows.size(); ++r)
                a.row(static_cast<Eigen::Index>(r)) =
                    Eigen::Map<const VectorXd>(p.eq_rows[r].data(), n);
            null_basis = orthonormal_kernel(a);
            zdim = static_cast<int>(null_basis.cols());
        } else {
            zdim = n;
        }
        x_buf.resize(n);
        grad_x.resize(n);
        grad_term.resize(n);
    }

    void to_x(const VectorXd& z, VectorXd& x) const {
        if (has_eq)
            x = x_anchor + null_basis * z;
        else
            x = z;
    }

    VectorXd initial_z() const {
        if (has_eq) return VectorXd::Zero(zdim);
        return x_anchor;
    }

    bool box_ok(const VectorXd& x) const {
        if (!has_box) return true;
        for (int i = 0; i < p.dim; ++i) {
            if (!p.lower.empty() && !(x[i] > p.lower[i])) return false;
            if (!p.upper.empty() && !(x[i] < p.upper[i])) return false;
        }
        return true;
    }

    /// Barrier value at z; returns false when x(z) leaves the strict interior.
    bool value(const VectorXd& z, double t, double& phi, double& f) const {
        to_x(z, x_buf);
        if (!box_ok(x_buf)) return false;
        std::span<const double> xs(x_buf.data(), static_cast<std::size_t>(p.dim));
        std::span<double> no_grad;

        phi = 0.0;
        for (const auto& c : p.ineqs) {
            double g = c.eval(xs, no_grad);
            if (!(g < 0.0)) return false;
            phi -= std::log(-g);
        }
        if (has_box) {
            for (int i = 0; i < p.dim; ++i) {
                if (!p.lower.empty() && std::isfinite(p.lower[i]))
                    phi -= std::log(x_buf[i] - p.lower[i]);
                if (!p.upper.empty() && std::isfinite(p.upper[i]))
                    phi -= std::log(p.upper[i] - x_buf[i]);
            }
        }
        f = p.objective(xs, no_grad);
        if (!std::isfinite(f)) return false;
        phi -= t * f;
        return std::isfinite(phi);
    }

    /// Barrier value and gradient in z at a strictly feasible z.
    bool value_grad(const VectorXd& z, double t, double& phi, double& f, VectorXd& gz) const {
        to_x(z, x_buf);
        if (!box_ok(x_buf)) return false;
        std::span<const double> xs(x_buf.data(), static_cast<std::size_t>(p.dim));

        phi = 0.0;
        grad_x.setZero();
        std::span<double> gs(grad_term.data(), static_cast<std::size_t>(p.dim));
        for (const auto& c : p.ineqs) {
            double g;
            if (c.support.empty()) {
                grad_term.setZero();
                g = c.eval(xs, gs);
                if (!(g < 0.0)) return false;
                grad_x += grad_term / (-g);
            } else {
                for (int i : c.support) grad_term[i] = 0.0;
                g = c.eval(xs, gs);
                if (!(g < 0.0)) return false;
                for (int i : c.support) grad_x[i] += grad_term[i] / (-g);
            }
            phi -= std::log(-g);
        }
        if (has_box) {
            for (int i = 0; i < p.dim; ++i) {
                if (!p.lower.empty() && std::isfinite(p.lower[i])) {
                    phi -= std::log(x_buf[i] - p.lower[i]);
                    grad_x[i] -= 1.0 / (x_buf[i] - p.lower[i]);
                }
                if (!p.upper.empty() && std::isfinite(p.upper[i])) {
                    phi -= std::log(p.upper[i] - x_buf[i]);
                    grad_x[i] += 1.0 / (p.upper[i] - x_buf[i]);
                }
            }
        }
        grad_term.setZero();
        std::span<double> gs(grad_term.data(), static_cast<std::size_t>(p.dim));
        f = p.objective(xs, gs);
        if (!std::isfinite(f)) return false;
        phi -= t * f;
        grad_x -= t * grad_term;

        if (has_eq)
            gz.noalias() = null_basis.transpose() * grad_x;
        else
            gz = grad_x;
        return std::isfinite(phi);
    }

    double objective_at(const VectorXd& z) const {
        to_x(z, x_buf);
        std::span<const double> xs(x_buf.data(), static_cast<std::size_t>(p.dim));
        std::span<double> no_grad;
        return p.objective(xs, no_grad);
    }

    double max_scaled_violation(const VectorXd& z) const {
        to_x(z, x_buf);
        std::span<const double> xs(x_buf.data(), static_cast<std::size_t>(p.dim));
        std::span<double> no_grad;
        double worst = 0.0;
        for (const auto& c : p.ineqs)
            worst = std::max(worst, c.eval(xs, no_grad) / c.scale);
        for (std::size_t r = 0; r < p.eq_rows.size(); ++r) {
            double lhs = Eigen::Map<const VectorXd>(p.eq_rows[r].data(), p.dim).dot(x_buf);
            worst = std::max(worst, std::abs(lhs - p.eq_rhs[r]) / (1.0 + std::abs(p.eq_rhs[r])));
        }
        if (has_box) {
            for (int i = 0; i < p.dim; ++i) {
                if (!p.lower.empty() && std::isfinite(p.lower[i]))
                    worst = std::max(worst, p.lower[i] - x_buf[i]);
                if (!p.upper.empty() && std::isfinite(p.upper[i]))
                    worst = std::max(worst, x_buf[i] - p.upper[i]);
            }
        }
        return worst;
    }
};

void check_start(const ConcaveProgram& p) {
    if (p.dim <= 0) throw std::invalid_argument("program dimension must be positive");
    if (static_cast<int>(p.start.size()) != p.dim)
        throw std::invalid_argument("start size does not match program dimension");
    if (!p.lower.empty() && static_cast<int>(p.lower.size()) != p.dim)
        throw std::invalid_argument("box lower size mismatch");
    if (!p.upper.empty() && static_cast<int>(p.upper.size()) != p.dim)
        throw std::invalid_argument("box upper size mismatch");
    if (p.eq_rows.size() != p.eq_rhs.size())
        throw std::invalid_argument("equality rows/rhs size mismatch");

    std::span<const double> xs(p.start.data(), p.start.size());
    std::span<double> no_grad;
    for (const auto& c : p.ineqs) {
        double g = c.eval(xs, no_grad);
        if (!(g < -1e-10 * c.scale))
            throw std::invalid_argument("barrier start not strictly feasible: " + c.name);
    }
    for (int i = 0; i < p.dim; ++i) {
        if (!p.lower.empty() && !(p.start[i] > p.lower[i]))
            throw std::invalid_argument("barrier start at or below lower bound, coordinate " +
                                        std::to_string(i));
        if (!p.upper.empty() && !(p.start[i] < p.upper[i]))
            throw std::invalid_argument("barrier start at or above upper bound, coordinate " +
                                        std::to_string(i));
    }
    for (std::size_t r = 0; r < p.eq_rows.size(); ++r) {
        double lhs = 0.0;
        for (int i = 0; i < p.dim; ++i) lhs += p.eq_rows[r][i] * p.start[i];
        if (std::abs(lhs - p.eq_rhs[r]) > 1e-9 * (1.0 + std::abs(p.eq_rhs[r])))
            throw std::invalid_argument("barrier start violates equality row " +
                                        std::to_string(r));
    }
}

}  // namespace

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::iteration_cap: return "iteration-cap";
        case SolveStatus::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

SolveReport maximize(const ConcaveProgram& program, const SolveSettings& settings) {
    check_start(program);
    Evaluator ev(program);

    SolveReport report;
    report.solution = program.start;

    if (ev.zdim == 0) {
        // Equalities pin every degree of freedom.
        VectorXd z = VectorXd::Zero(0);
        report.objective = ev.objective_at(z);
        report.outer_objectives.push_back(report.objective);
        report.max_violation = 0.0;
        report.stationarity = 0.0;
        report.status = SolveStatus::converged;
        return report;
    }

    std::ofstream trace;
    if (settings.debug_trace && !settings.trace_path.empty()) {
        trace.open(settings.trace_path);
        trace << "outer,inner,t,objective,stationarity\n";
    }

    VectorXd z = ev.initial_z();
    VectorXd z_prev_outer = z;
    VectorXd grad(ev.zdim), cand(ev.zdim);
    double f_prev_outer = -kInf;
    double t = settings.t0;
    double alpha_seed = 1.0;
    bool gap_reached = false;
    bool stalled_unconverged = false;
    bool hard_failure = false;

    const double m_barrier = static_cast<double>(ev.barrier_terms);

    for (int outer = 0; outer < settings.max_outer; ++outer) {
        ++report.outer_iterations;
        double phi = 0.0, f = 0.0;
        bool ok = ev.value_grad(z, t, phi, f, grad);
        if (!ok) {
            // Only reachable via floating-point drift; keep the last good point.
            hard_failure = true;
            break;
        }
        double inner_tol = 0.5 * settings.stationarity_tol * t * (1.0 + std::abs(f));
        stalled_unconverged = false;

        int inner = 0;
        for (; inner < settings.max_inner; ++inner) {
            double gnorm = grad.norm();
            if (trace.is_open()) {
                char line[160];
                std::snprintf(line, sizeof(line), "%d,%d,%.6g,%.12g,%.6g\n", outer, inner, t, f,
                              gnorm / (t * (1.0 + std::abs(f))));
                trace << line;
            }
            if (gnorm <= inner_tol) break;

            // Armijo backtracking along the steepest-descent direction.
            double alpha = alpha_seed;
            double target_slope = kArmijoC1 * gnorm * gnorm;
            bool accepted = false;
            while (alpha >= kMinStep) {
                cand = z - alpha * grad;
                double phi_c = 0.0, f_c = 0.0;
                if (ev.value(cand, t, phi_c, f_c) && phi_c <= phi - alpha * target_slope) {
                    z = cand;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            ++report.inner_iterations;
            if (!accepted) {
                stalled_unconverged = grad.norm() > inner_tol;
                break;
            }
            alpha_seed = std::min(alpha * 2.0, 1e8);
            ok = ev.value_grad(z, t, phi, f, grad);
            if (!ok) {
                hard_failure = true;
                break;
            }
#ifndef NDEBUG
            assert(ev.max_scaled_violation(z) <= 1e-12 && "barrier iterate left the feasible set");
#endif
        }
        if (hard_failure) break;

        double f_now = ev.objective_at(z);
        if (f_now < f_prev_outer) {
            // Inexact inner solves can step backwards; keep the better iterate
            // so the outer objective sequence stays nondecreasing.
            z = z_prev_outer;
            f_now = f_prev_outer;
        }
        z_prev_outer = z;
        f_prev_outer = f_now;
        report.outer_objectives.push_back(f_now);

        if (m_barrier / t < settings.barrier_gap) {
            gap_reached = true;
            break;
        }
        t *= settings.t_scale;
        alpha_seed = std::max(alpha_seed / settings.t_scale, kMinStep * 1e3);
    }

    ev.to_x(z, ev.x_buf);
    report.solution.assign(ev.x_buf.data(), ev.x_buf.data() + program.dim);
    double phi = 0.0, f = 0.0;
    if (ev.value_grad(z, t, phi, f, grad)) {
        report.objective = f;
        report.stationarity = grad.norm() / (t * (1.0 + std::abs(f)));
    } else {
        report.objective = ev.objective_at(z);
        report.stationarity = kInf;
        hard_failure = true;
    }
    report.max_violation = std::max(0.0, ev.max_scaled_violation(z));

    bool tol_ok = report.stationarity <= settings.stationarity_tol &&
                  report.max_violation <= settings.violation_tol;
    if (hard_failure || (stalled_unconverged && !tol_ok))
        report.status = SolveStatus::numerical_failure;
    else if (gap_reached && tol_ok)
        report.status = SolveStatus::converged;
    else
        report.status = SolveStatus::iteration_cap;
    return report;
}

KktReport check_kkt(const ConcaveProgram& program, std::span<const double> point, double t_ref) {
    if (static_cast<int>(point.size()) != program.dim)
        throw std::invalid_argument("check_kkt: point size mismatch");

    VectorXd x = Eigen::Map<const VectorXd>(point.data(), program.dim);
    std::span<const double> xs(point.data(), point.size());
    std::span<double> no_grad;

    // Feasibility gate (1e-6 scaled), naming the worst violator.
    double worst = 0.0;
    std::string worst_name;
    for (const auto& c : program.ineqs) {
        double g = c.eval(xs, no_grad) / c.scale;
        if (g > worst) {
            worst = g;
            worst_name = c.name;
        }
    }
    for (std::size_t r = 0; r < program.eq_rows.size(); ++r) {
        double lhs = Eigen::Map<const VectorXd>(program.eq_rows[r].data(), program.dim).dot(x);
        double res = std::abs(lhs - program.eq_rhs[r]) / (1.0 + std::abs(program.eq_rhs[r]));
        if (res > worst) {
            worst = res;
            worst_name = "equality row " + std::to_string(r);
        }
    }
    for (int i = 0; i < program.dim; ++i) {
        if (!program.lower.empty() && program.lower[i] - x[i] > worst) {
            worst = program.lower[i] - x[i];
            worst_name = "lower bound " + std::to_string(i);
        }
        if (!program.upper.empty() && x[i] - program.upper[i] > worst) {
            worst = x[i] - program.upper[i];
            worst_name = "upper bound " + std::to_string(i);
        }
    }
    if (worst > 1e-6)
        throw std::invalid_argument("check_kkt: point infeasible, worst constraint: " +
                                    worst_name);

    KktReport rep;
    VectorXd lagr(program.dim), term(program.dim);
    term.setZero();
    std::span<double> gs(term.data(), static_cast<std::size_t>(program.dim));
    program.objective(xs, gs);
    lagr = term;

    bool any_barrier = false;
    for (const auto& c : program.ineqs) {
        term.setZero();
        double g = c.eval(xs, gs);
        double gap = std::max(-g, 1e-300);
        if (c.support.empty()) {
            lagr -= term / (t_ref * gap);
        } else {
            for (int i : c.support) lagr[i] -= term[i] / (t_ref * gap);
        }
        any_barrier = true;
    }
    for (int i = 0; i < program.dim; ++i) {
        if (!program.lower.empty() && std::isfinite(program.lower[i])) {
            lagr[i] += 1.0 / (t_ref * std::max(x[i] - program.lower[i], 1e-300));
            any_barrier = true;
        }
        if (!program.upper.empty() && std::isfinite(program.upper[i])) {
            lagr[i] -= 1.0 / (t_ref * std::max(program.upper[i] - x[i], 1e-300));
            any_barrier = true;
        }
    }

    double eq_res = 0.0;
    if (!program.eq_rows.empty()) {
        MatrixXd a(program.eq_rows.size(), program.dim);
        for (std::size_t r = 0; r < program.eq_rows.size(); ++r)
            a.row(static_cast<Eigen::Index>(r)) =
                Eigen::Map<const VectorXd>(program.eq_rows[r].data(), program.dim);
        MatrixXd kernel = orthonormal_kernel(a);
        rep.projected_gradient = kernel.cols() == 0 ? 0.0 : (kernel.transpose() * lagr).norm();
        VectorXd rhs = Eigen::Map<const VectorXd>(program.eq_rhs.data(),
                                                  static_cast<Eigen::Index>(program.eq_rhs.size()));
        eq_res = (a * x - rhs).lpNorm<Eigen::Infinity>();
    } else {
        rep.projected_gradient = lagr.norm();
    }
    rep.complementarity = any_barrier ? 1.0 / t_ref : 0.0;
    rep.equality_residual = eq_res;
    rep.max_residual =
        std::max({rep.projected_gradient, rep.complementarity, rep.equality_residual});
    return rep;
}

}  // namespace uavnet
