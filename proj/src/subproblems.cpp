#include "uavnet/subproblems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "uavnet/errors.hpp"
#include "uavnet/risk_utility.hpp"

namespace uavnet {

namespace {

constexpr double kLn2 = 0.6931471805599453;

std::vector<std::size_t> alive_indices(const std::vector<std::uint8_t>& alive) {
    std::vector<std::size_t> out;
    for (std::size_t u = 0; u < alive.size(); ++u)
        if (alive[u]) out.push_back(u);
    return out;
}

std::vector<double> scaled_history(const AoContext& ctx) {
    std::vector<double> h(ctx.history_sums.size());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = ctx.history_sums[i] * ctx.rate_scale;
    return h;
}

/// Spectral efficiencies log2(1+SINR) per (uav, user, slot) at the plan's
/// trajectory, interference restricted to the context's alive set.
struct SpectralTable {
    Window window;
    std::size_t n_uav = 0, n_user = 0;
    std::vector<double> se;

    double at(std::size_t u, std::size_t k, int slot) const {
        return se[(u * n_user + k) * static_cast<std::size_t>(window.length()) +
                  static_cast<std::size_t>(window.offset(slot))];
    }
};

SpectralTable spectral_table(const Plan& plan, const AoContext& ctx) {
    const Scenario& sc = *ctx.scenario;
    SpectralTable t;
    t.window = plan.window;
    t.n_uav = sc.n_uavs();
    t.n_user = sc.n_users();
    t.se.assign(t.n_uav * t.n_user * static_cast<std::size_t>(plan.window.length()), 0.0);

    std::vector<double> rx(t.n_uav);
    for (int slot = plan.window.first; slot <= plan.window.last; ++slot) {
        for (std::size_t k = 0; k < t.n_user; ++k) {
            double total = 0.0;
            for (std::size_t u = 0; u < t.n_uav; ++u) {
                if (!ctx.alive[u]) {
                    rx[u] = 0.0;
                    continue;
                }
                rx[u] = channel_gain(plan.pos_at(u, slot), sc.users[k].position,
                                     ctx.realization->at(u, k, slot), sc.channel,
                                     sc.altitude_h) *
                        sc.uavs[u].tx_power;
                total += rx[u];
            }
            for (std::size_t u = 0; u < t.n_uav; ++u) {
                if (!ctx.alive[u]) continue;
                double sinr = rx[u] / (total - rx[u] + sc.channel.noise_power);
                t.se[(u * t.n_user + k) * static_cast<std::size_t>(plan.window.length()) +
                     static_cast<std::size_t>(plan.window.offset(slot))] =
                    std::log2(1.0 + sinr);
            }
        }
    }
    return t;
}

/// Exp-utility objective whose window slot sums are affine in the variables:
/// S[off] = base[off] + Σ coeff[i]·x[i] with each variable tied to one slot.
struct AffineSlotObjective {
    double mu = 0.0;
    std::vector<double> hist;      // scaled history constants
    std::vector<double> base;      // per-slot constant part (scaled)
    std::vector<double> coeff;     // per-variable coefficient (scaled)
    std::vector<int> slot_of_var;  // window offset of each variable

    mutable std::vector<double> vals, weights;

    double operator()(std::span<const double> x, std::span<double> grad) const {
        const std::size_t n_win = base.size();
        vals.assign(hist.begin(), hist.end());
        vals.resize(hist.size() + n_win);
        for (std::size_t o = 0; o < n_win; ++o) vals[hist.size() + o] = base[o];
        for (std::size_t i = 0; i < coeff.size(); ++i)
            vals[hist.size() + static_cast<std::size_t>(slot_of_var[i])] += coeff[i] * x[i];
        double g = exp_utility(vals, mu);
        if (!grad.empty()) {
            weights = exp_utility_weights(vals, mu);
            for (std::size_t i = 0; i < coeff.size(); ++i)
                grad[i] =
                    weights[hist.size() + static_cast<std::size_t>(slot_of_var[i])] * coeff[i];
        }
        return g;
    }
};

/// Affine inequality (Σ c_i·x_i − rhs)/scale <= 0 over a sparse support.
struct AffineIneq {
    std::vector<int> vars;
    std::vector<double> coef;
    double rhs = 0.0;
    double scale = 1.0;

    double operator()(std::span<const double> x, std::span<double> grad) const {
        double acc = -rhs;
        for (std::size_t i = 0; i < vars.size(); ++i) acc += coef[i] * x[vars[i]];
        if (!grad.empty())
            for (std::size_t i = 0; i < vars.size(); ++i) grad[vars[i]] = coef[i] / scale;
        return acc / scale;
    }
};

// ------------------------------- association -------------------------------

struct AssocBuild {
    ConcaveProgram prog;
    std::vector<std::size_t> aidx;
    std::size_t n_user = 0;
    int w = 0;

    int var(std::size_t ai, std::size_t k, int off) const {
        return static_cast<int>((ai * n_user + k) * static_cast<std::size_t>(w) +
                                static_cast<std::size_t>(off));
    }
};

AssocBuild build_association(const Plan& plan, const AoContext& ctx) {
    const Scenario& sc = *ctx.scenario;
    AssocBuild b;
    b.aidx = alive_indices(ctx.alive);
    b.n_user = sc.n_users();
    b.w = plan.window.length();
    const std::size_t ua = b.aidx.size();
    if (ua == 0) throw SolverError("association solve with no alive UAVs");
    const int dim = static_cast<int>(ua * b.n_user * static_cast<std::size_t>(b.w));
    b.prog.dim = dim;

    SpectralTable se = spectral_table(plan, ctx);

    auto obj = std::make_shared<AffineSlotObjective>();
    obj->mu = ctx.mu;
    obj->hist = scaled_history(ctx);
    obj->base.assign(static_cast<std::size_t>(b.w), 0.0);
    obj->coeff.resize(static_cast<std::size_t>(dim));
    obj->slot_of_var.resize(static_cast<std::size_t>(dim));
    for (std::size_t ai = 0; ai < ua; ++ai)
        for (std::size_t k = 0; k < b.n_user; ++k)
            for (int off = 0; off < b.w; ++off) {
                int slot = plan.window.first + off;
                int v = b.var(ai, k, off);
                obj->coeff[static_cast<std::size_t>(v)] =
                    plan.bw_at(b.aidx[ai], k, slot) * se.at(b.aidx[ai], k, slot) *
                    ctx.rate_scale;
                obj->slot_of_var[static_cast<std::size_t>(v)] = off;
            }
    b.prog.objective = [obj](std::span<const double> x, std::span<double> g) {
        return (*obj)(x, g);
    };

    // (11a): per (user, slot) simplex over alive UAVs.
    for (std::size_t k = 0; k < b.n_user; ++k)
        for (int off = 0; off < b.w; ++off) {
            std::vector<double> row(static_cast<std::size_t>(dim), 0.0);
            for (std::size_t ai = 0; ai < ua; ++ai)
                row[static_cast<std::size_t>(b.var(ai, k, off))] = 1.0;
            b.prog.eq_rows.push_back(std::move(row));
            b.prog.eq_rhs.push_back(1.0);
        }

    // (11c): per (uav, slot) bandwidth budget with fixed b.
    for (std::size_t ai = 0; ai < ua; ++ai) {
        double budget = sc.uavs[b.aidx[ai]].bandwidth_budget;
        for (int off = 0; off < b.w; ++off) {
            int slot = plan.window.first + off;
            auto c = std::make_shared<AffineIneq>();
            for (std::size_t k = 0; k < b.n_user; ++k) {
                double bw = plan.bw_at(b.aidx[ai], k, slot);
                if (bw <= 0.0) continue;
                c->vars.push_back(b.var(ai, k, off));
                c->coef.push_back(bw);
            }
            if (c->vars.empty()) continue;
            c->rhs = budget;
            c->scale = budget;
            IneqConstraint ic;
            ic.eval = [c](std::span<const double> x, std::span<double> g) { return (*c)(x, g); };
            ic.name =
                "budget(u=" + std::to_string(b.aidx[ai]) + ",n=" + std::to_string(slot) + ")";
            ic.support = c->vars;
            b.prog.ineqs.push_back(std::move(ic));
        }
    }

    b.prog.lower.assign(static_cast<std::size_t>(dim), 0.0);
    b.prog.upper.assign(static_cast<std::size_t>(dim), 1.0);

    // Start candidates: incoming pulled toward uniform, plain uniform, then
    // blends of a budget-greedy binary assignment with uniform.
    auto strictly_ok = [&](const std::vector<double>& x) {
        for (std::size_t ai = 0; ai < ua; ++ai) {
            double budget = sc.uavs[b.aidx[ai]].bandwidth_budget;
            for (int off = 0; off < b.w; ++off) {
                int slot = plan.window.first + off;
                double used = 0.0;
                for (std::size_t k = 0; k < b.n_user; ++k)
                    used += x[static_cast<std::size_t>(b.var(ai, k, off))] *
                            plan.bw_at(b.aidx[ai], k, slot);
                if (!(used < budget * (1.0 - 1e-9))) return false;
            }
        }
        for (double v : x)
            if (!(v > 1e-12 && v < 1.0 - 1e-12)) return false;
        return true;
    };

    std::vector<std::vector<double>> candidates;
    const double uniform = 1.0 / static_cast<double>(ua);
    {
        std::vector<double> x(static_cast<std::size_t>(dim));
        const double theta = 1e-6;
        for (std::size_t ai = 0; ai < ua; ++ai)
            for (std::size_t k = 0; k < b.n_user; ++k)
                for (int off = 0; off < b.w; ++off)
                    x[static_cast<std::size_t>(b.var(ai, k, off))] =
                        (1.0 - theta) * plan.assoc_at(b.aidx[ai], k, plan.window.first + off) +
                        theta * uniform;
        candidates.push_back(std::move(x));
    }
    candidates.emplace_back(static_cast<std::size_t>(dim), uniform);
    {
        std::vector<double> greedy(static_cast<std::size_t>(dim), 0.0);
        std::vector<double> used(ua * static_cast<std::size_t>(b.w), 0.0);
        for (int off = 0; off < b.w; ++off) {
            int slot = plan.window.first + off;
            for (std::size_t k = 0; k < b.n_user; ++k) {
                std::size_t best = 0;
                double best_load = std::numeric_limits<double>::infinity();
                for (std::size_t ai = 0; ai < ua; ++ai) {
                    double budget = sc.uavs[b.aidx[ai]].bandwidth_budget;
                    double load = (used[ai * static_cast<std::size_t>(b.w) +
                                        static_cast<std::size_t>(off)] +
                                   plan.bw_at(b.aidx[ai], k, slot)) /
                                  budget;
                    if (load < best_load) {
                        best_load = load;
                        best = ai;
                    }
                }
                greedy[static_cast<std::size_t>(b.var(best, k, off))] = 1.0;
                used[best * static_cast<std::size_t>(b.w) + static_cast<std::size_t>(off)] +=
                    plan.bw_at(b.aidx[best], k, slot);
            }
        }
        for (double t : {0.999, 0.99, 0.9, 0.5}) {
            std::vector<double> x(static_cast<std::size_t>(dim));
            for (std::size_t i = 0; i < static_cast<std::size_t>(dim); ++i)
                x[i] = t * greedy[i] + (1.0 - t) * uniform;
            candidates.push_back(std::move(x));
        }
    }

    bool found = false;
    for (auto& c : candidates) {
        if (strictly_ok(c)) {
            b.prog.start = std::move(c);
            found = true;
            break;
        }
    }
    if (!found)
        throw SolverError(
            "association start infeasible: fixed bandwidths exceed every budget "
            "(corrupted plan)");
    return b;
}

// -------------------------------- bandwidth --------------------------------

struct BwCell {
    std::size_t u, k;
    int off;
    double a;
};

struct BwBuild {
    ConcaveProgram prog;
    std::vector<BwCell> cells;
};

BwBuild build_bandwidth(const Plan& plan, const AoContext& ctx) {
    const Scenario& sc = *ctx.scenario;
    const auto aidx = alive_indices(ctx.alive);
    const std::size_t n_user = sc.n_users();
    const int w = plan.window.length();
    const double drop_tol = 1e-9;

    BwBuild b;
    for (std::size_t u : aidx) {
        if (sc.uavs[u].bandwidth_budget <= 0.0) continue;
        for (std::size_t k = 0; k < n_user; ++k)
            for (int off = 0; off < w; ++off) {
                double a = plan.assoc_at(u, k, plan.window.first + off);
                if (a > drop_tol) b.cells.push_back({u, k, off, a});
            }
    }
    if (b.cells.empty()) return b;

    SpectralTable se = spectral_table(plan, ctx);
    const int dim = static_cast<int>(b.cells.size());
    b.prog.dim = dim;

    auto obj = std::make_shared<AffineSlotObjective>();
    obj->mu = ctx.mu;
    obj->hist = scaled_history(ctx);
    obj->base.assign(static_cast<std::size_t>(w), 0.0);
    obj->coeff.resize(b.cells.size());
    obj->slot_of_var.resize(b.cells.size());
    for (std::size_t i = 0; i < b.cells.size(); ++i) {
        const BwCell& c = b.cells[i];
        obj->coeff[i] = c.a * se.at(c.u, c.k, plan.window.first + c.off) * ctx.rate_scale;
        obj->slot_of_var[i] = c.off;
    }
    b.prog.objective = [obj](std::span<const double> x, std::span<double> g) {
        return (*obj)(x, g);
    };

    std::vector<std::vector<int>> row_cells(sc.n_uavs() * static_cast<std::size_t>(w));
    for (std::size_t i = 0; i < b.cells.size(); ++i)
        row_cells[b.cells[i].u * static_cast<std::size_t>(w) +
                  static_cast<std::size_t>(b.cells[i].off)]
            .push_back(static_cast<int>(i));
    for (std::size_t u : aidx) {
        double budget = sc.uavs[u].bandwidth_budget;
        if (budget <= 0.0) continue;
        for (int off = 0; off < w; ++off) {
            auto& members =
                row_cells[u * static_cast<std::size_t>(w) + static_cast<std::size_t>(off)];
            if (members.empty()) continue;
            auto c = std::make_shared<AffineIneq>();
            for (int m : members) {
                c->vars.push_back(m);
                c->coef.push_back(b.cells[static_cast<std::size_t>(m)].a);
            }
            c->rhs = budget;
            c->scale = budget;
            IneqConstraint ic;
            ic.eval = [c](std::span<const double> x, std::span<double> g) { return (*c)(x, g); };
            ic.name = "budget(u=" + std::to_string(u) +
                      ",n=" + std::to_string(plan.window.first + off) + ")";
            ic.support = c->vars;
            b.prog.ineqs.push_back(std::move(ic));
        }
    }

    b.prog.lower.assign(b.cells.size(), 0.0);
    b.prog.upper.resize(b.cells.size());
    for (std::size_t i = 0; i < b.cells.size(); ++i)
        b.prog.upper[i] = sc.uavs[b.cells[i].u].bandwidth_budget / b.cells[i].a;

    // Start: per (uav, slot), uniform bandwidth spending 0.9 of the budget.
    b.prog.start.resize(b.cells.size());
    std::vector<double> row_a(sc.n_uavs() * static_cast<std::size_t>(w), 0.0);
    for (const BwCell& c : b.cells)
        row_a[c.u * static_cast<std::size_t>(w) + static_cast<std::size_t>(c.off)] += c.a;
    for (std::size_t i = 0; i < b.cells.size(); ++i) {
        const BwCell& c = b.cells[i];
        double asum = row_a[c.u * static_cast<std::size_t>(w) + static_cast<std::size_t>(c.off)];
        b.prog.start[i] = 0.9 * sc.uavs[c.u].bandwidth_budget / asum;
    }
    return b;
}

// -------------------------------- trajectory -------------------------------

struct TrajWork {
    std::vector<std::size_t> aidx;
    std::size_t ua = 0, n_user = 0;
    int w = 0, n_voff = 0;
    int dim = 0;
    std::vector<int> lo_var, up_var;  // (ai, k, voff) -> var or -1
    double q_scale = 1.0;
    Vec2 q_origin;

    std::vector<double> w_k;     // (voff, k): Σ_u a·b
    std::vector<double> c_k;     // (voff, k): Σ_u a·b·log2(D_u)
    std::vector<double> coef_t;  // (voff, k, ai): rho·hbar·p·eta_ref
    std::vector<double> zlin;    // (voff, k, ai): coef_t·Σ_{u≠i} a·b/(D_u·ln2)
    std::vector<double> eta_ref; // (ai, k, voff)
    double noise = 0.0;
    double rate_scale = 1.0;
    double mu = 0.0;
    std::vector<double> hist;
    double anchor_sum_scaled = 0.0;

    mutable std::vector<double> vals, weights;

    int qvar(std::size_t ai, int voff, int axis) const {
        return static_cast<int>(
            (ai * static_cast<std::size_t>(n_voff) + static_cast<std::size_t>(voff)) * 2 +
            static_cast<std::size_t>(axis));
    }
    std::size_t ekey(std::size_t ai, std::size_t k, int voff) const {
        return (ai * n_user + k) * static_cast<std::size_t>(n_voff) +
               static_cast<std::size_t>(voff);
    }
    std::size_t vkkey(int voff, std::size_t k) const {
        return static_cast<std::size_t>(voff) * n_user + k;
    }
    std::size_t vkakey(int voff, std::size_t k, std::size_t ai) const {
        return (static_cast<std::size_t>(voff) * n_user + k) * ua + ai;
    }

    double objective(std::span<const double> x, std::span<double> grad) const {
        vals.assign(hist.begin(), hist.end());
        vals.push_back(anchor_sum_scaled);
        const std::size_t base = hist.size() + 1;
        vals.resize(base + static_cast<std::size_t>(n_voff), 0.0);

        for (int voff = 0; voff < n_voff; ++voff) {
            double s = 0.0;
            for (std::size_t k = 0; k < n_user; ++k) {
                double wk = w_k[vkkey(voff, k)];
                if (wk > 0.0) {
                    double t_all = noise;
                    for (std::size_t ai = 0; ai < ua; ++ai) {
                        int lv = lo_var[ekey(ai, k, voff)];
                        if (lv < 0) continue;
                        t_all += coef_t[vkakey(voff, k, ai)] * x[lv];
                    }
                    s += wk * std::log2(t_all) - c_k[vkkey(voff, k)];
                }
                for (std::size_t ai = 0; ai < ua; ++ai) {
                    int zv = up_var[ekey(ai, k, voff)];
                    if (zv < 0) continue;
                    s -= zlin[vkakey(voff, k, ai)] * (x[zv] - 1.0);
                }
            }
            vals[base + static_cast<std::size_t>(voff)] = s * rate_scale;
        }
        double g = exp_utility(vals, mu);
        if (!grad.empty()) {
            std::fill(grad.begin(), grad.end(), 0.0);
            weights = exp_utility_weights(vals, mu);
            for (int voff = 0; voff < n_voff; ++voff) {
                double wt = weights[base + static_cast<std::size_t>(voff)] * rate_scale;
                for (std::size_t k = 0; k < n_user; ++k) {
                    double wk = w_k[vkkey(voff, k)];
                    if (wk > 0.0) {
                        double t_all = noise;
                        for (std::size_t ai = 0; ai < ua; ++ai) {
                            int lv = lo_var[ekey(ai, k, voff)];
                            if (lv < 0) continue;
                            t_all += coef_t[vkakey(voff, k, ai)] * x[lv];
                        }
                        double f = wt * wk / (t_all * kLn2);
                        for (std::size_t ai = 0; ai < ua; ++ai) {
                            int lv = lo_var[ekey(ai, k, voff)];
                            if (lv < 0) continue;
                            grad[lv] += f * coef_t[vkakey(voff, k, ai)];
                        }
                    }
                    for (std::size_t ai = 0; ai < ua; ++ai) {
                        int zv = up_var[ekey(ai, k, voff)];
                        if (zv < 0) continue;
                        grad[zv] -= wt * zlin[vkakey(voff, k, ai)];
                    }
                }
            }
        }
        return g;
    }
};

struct TrajBuild {
    ConcaveProgram prog;
    std::shared_ptr<TrajWork> work;
    bool degenerate = false;  // window has no free slot
    bool start_ok = true;
};

void check_linearization_point(const Plan& plan, const AoContext& ctx) {
    const Scenario& sc = *ctx.scenario;
    const auto aidx = alive_indices(ctx.alive);
    const double tol = 1e-6;
    for (int slot = plan.window.first; slot <= plan.window.last; ++slot) {
        for (std::size_t a = 0; a < aidx.size(); ++a) {
            Vec2 p = plan.pos_at(aidx[a], slot);
            if (!sc.in_area(p, tol))
                throw SolverError("SCA requires feasible linearization point (bounds)");
            if (slot > plan.window.first) {
                double step = distance(p, plan.pos_at(aidx[a], slot - 1));
                if (step > sc.d_max + tol)
                    throw SolverError("SCA requires feasible linearization point (mobility)");
            }
            for (std::size_t b2 = a + 1; b2 < aidx.size(); ++b2) {
                double d = distance(p, plan.pos_at(aidx[b2], slot));
                if (d < sc.d_min - tol)
                    throw SolverError("SCA requires feasible linearization point (separation)");
            }
        }
    }
}

TrajBuild build_trajectory(const Plan& plan, const AoContext& ctx) {
    const Scenario& sc = *ctx.scenario;
    const auto aidx = alive_indices(ctx.alive);
    const std::size_t ua = aidx.size();
    const std::size_t n_user = sc.n_users();
    const int w = plan.window.length();
    const double h_sq = sc.altitude_h * sc.altitude_h;
    const double d_max_sq = sc.d_max * sc.d_max;
    const double d_min_sq = sc.d_min * sc.d_min;

    check_linearization_point(plan, ctx);

    TrajBuild out;
    if (w <= 1 || ua == 0) {
        out.degenerate = true;
        return out;
    }

    auto work = std::make_shared<TrajWork>();
    out.work = work;
    work->aidx = aidx;
    work->ua = ua;
    work->n_user = n_user;
    work->w = w;
    work->n_voff = w - 1;
    work->noise = sc.channel.noise_power;
    work->rate_scale = ctx.rate_scale;
    work->mu = ctx.mu;
    work->hist = scaled_history(ctx);
    work->q_scale = std::max(sc.q_max.x - sc.q_min.x, sc.q_max.y - sc.q_min.y);
    work->q_origin = sc.q_min;

    const int n_voff = work->n_voff;
    const int q_vars = static_cast<int>(2 * ua * static_cast<std::size_t>(n_voff));

    work->eta_ref.assign(ua * n_user * static_cast<std::size_t>(n_voff), 0.0);
    for (std::size_t ai = 0; ai < ua; ++ai)
        for (std::size_t k = 0; k < n_user; ++k)
            for (int voff = 0; voff < n_voff; ++voff) {
                int slot = plan.window.first + 1 + voff;
                double d_sq = distance_sq(plan.pos_at(aidx[ai], slot), sc.users[k].position);
                work->eta_ref[work->ekey(ai, k, voff)] = 1.0 / (d_sq + h_sq);
            }

    const double rho = sc.channel.ref_gain_rho;
    work->w_k.assign(static_cast<std::size_t>(n_voff) * n_user, 0.0);
    work->c_k.assign(static_cast<std::size_t>(n_voff) * n_user, 0.0);
    work->coef_t.assign(static_cast<std::size_t>(n_voff) * n_user * ua, 0.0);
    work->zlin.assign(static_cast<std::size_t>(n_voff) * n_user * ua, 0.0);
    for (int voff = 0; voff < n_voff; ++voff) {
        int slot = plan.window.first + 1 + voff;
        for (std::size_t k = 0; k < n_user; ++k) {
            for (std::size_t ai = 0; ai < ua; ++ai) {
                std::size_t u = aidx[ai];
                work->coef_t[work->vkakey(voff, k, ai)] =
                    rho * ctx.realization->at(u, k, slot) * sc.uavs[u].tx_power *
                    work->eta_ref[work->ekey(ai, k, voff)];
            }
            double wk = 0.0;
            for (std::size_t ai = 0; ai < ua; ++ai)
                wk += plan.assoc_at(aidx[ai], k, slot) * plan.bw_at(aidx[ai], k, slot);
            work->w_k[work->vkkey(voff, k)] = wk;

            std::vector<double> d_u(ua, work->noise);
            for (std::size_t uu = 0; uu < ua; ++uu)
                for (std::size_t ii = 0; ii < ua; ++ii)
                    if (ii != uu) d_u[uu] += work->coef_t[work->vkakey(voff, k, ii)];
            double ck = 0.0;
            for (std::size_t uu = 0; uu < ua; ++uu) {
                double ab = plan.assoc_at(aidx[uu], k, slot) * plan.bw_at(aidx[uu], k, slot);
                if (ab > 0.0) ck += ab * std::log2(d_u[uu]);
            }
            work->c_k[work->vkkey(voff, k)] = ck;
            for (std::size_t ii = 0; ii < ua; ++ii) {
                double acc = 0.0;
                for (std::size_t uu = 0; uu < ua; ++uu) {
                    if (uu == ii) continue;
                    double ab = plan.assoc_at(aidx[uu], k, slot) * plan.bw_at(aidx[uu], k, slot);
                    if (ab > 0.0) acc += ab / (d_u[uu] * kLn2);
                }
                work->zlin[work->vkakey(voff, k, ii)] =
                    work->coef_t[work->vkakey(voff, k, ii)] * acc;
            }
        }
    }

    work->lo_var.assign(ua * n_user * static_cast<std::size_t>(n_voff), -1);
    work->up_var.assign(ua * n_user * static_cast<std::size_t>(n_voff), -1);
    int next = q_vars;
    for (std::size_t ai = 0; ai < ua; ++ai)
        for (std::size_t k = 0; k < n_user; ++k)
            for (int voff = 0; voff < n_voff; ++voff)
                if (work->w_k[work->vkkey(voff, k)] > 0.0)
                    work->lo_var[work->ekey(ai, k, voff)] = next++;
    for (std::size_t ai = 0; ai < ua; ++ai)
        for (std::size_t k = 0; k < n_user; ++k)
            for (int voff = 0; voff < n_voff; ++voff)
                if (work->zlin[work->vkakey(voff, k, ai)] > 0.0)
                    work->up_var[work->ekey(ai, k, voff)] = next++;
    work->dim = next;

    {
        double s = 0.0;
        for (std::size_t k = 0; k < n_user; ++k)
            s += user_rate_masked(plan, *ctx.realization, sc, ctx.alive, k, plan.window.first);
        work->anchor_sum_scaled = s * ctx.rate_scale;
    }

    ConcaveProgram& prog = out.prog;
    prog.dim = work->dim;
    prog.objective = [work](std::span<const double> x, std::span<double> g) {
        return work->objective(x, g);
    };

    const double ql = work->q_scale;
    const Vec2 origin = work->q_origin;
    const double diag = std::sqrt(distance_sq(sc.q_min, sc.q_max));

    // (6d) mobility.
    for (std::size_t ai = 0; ai < ua; ++ai) {
        for (int voff = 0; voff < n_voff; ++voff) {
            int slot = plan.window.first + 1 + voff;
            bool prev_fixed = voff == 0;
            Vec2 prev_const = plan.pos_at(aidx[ai], slot - 1);
            int vx = work->qvar(ai, voff, 0), vy = work->qvar(ai, voff, 1);
            int px = prev_fixed ? -1 : work->qvar(ai, voff - 1, 0);
            int py = prev_fixed ? -1 : work->qvar(ai, voff - 1, 1);
            IneqConstraint ic;
            ic.name =
                "mobility(u=" + std::to_string(aidx[ai]) + ",n=" + std::to_string(slot) + ")";
            ic.support =
                prev_fixed ? std::vector<int>{vx, vy} : std::vector<int>{vx, vy, px, py};
            ic.eval = [=](std::span<const double> x, std::span<double> g) {
                double axp = origin.x + ql * x[vx];
                double ayp = origin.y + ql * x[vy];
                double bxp = prev_fixed ? prev_const.x : origin.x + ql * x[px];
                double byp = prev_fixed ? prev_const.y : origin.y + ql * x[py];
                double dx = axp - bxp, dy = ayp - byp;
                if (!g.empty()) {
                    g[vx] = 2.0 * dx * ql / d_max_sq;
                    g[vy] = 2.0 * dy * ql / d_max_sq;
                    if (!prev_fixed) {
                        g[px] = -2.0 * dx * ql / d_max_sq;
                        g[py] = -2.0 * dy * ql / d_max_sq;
                    }
                }
                return (dx * dx + dy * dy - d_max_sq) / d_max_sq;
            };
            prog.ineqs.push_back(std::move(ic));
        }
    }

    // (19), (20): distance-reciprocal bound constraints in scaled variables.
    for (std::size_t ai = 0; ai < ua; ++ai) {
        for (std::size_t k = 0; k < n_user; ++k) {
            Vec2 c_pos = sc.users[k].position;
            for (int voff = 0; voff < n_voff; ++voff) {
                double eref = work->eta_ref[work->ekey(ai, k, voff)];
                Vec2 q_l = plan.pos_at(aidx[ai], plan.window.first + 1 + voff);
                int vx = work->qvar(ai, voff, 0), vy = work->qvar(ai, voff, 1);
                int lv = work->lo_var[work->ekey(ai, k, voff)];
                int zv = work->up_var[work->ekey(ai, k, voff)];
                if (lv >= 0) {
                    IneqConstraint ic;
                    ic.name = "eta_lower(u=" + std::to_string(aidx[ai]) +
                              ",k=" + std::to_string(k) + ")";
                    ic.support = {vx, vy, lv};
                    ic.eval = [=](std::span<const double> x, std::span<double> g) {
                        double dx = origin.x + ql * x[vx] - c_pos.x;
                        double dy = origin.y + ql * x[vy] - c_pos.y;
                        if (!g.empty()) {
                            g[vx] = 2.0 * dx * ql * eref;
                            g[vy] = 2.0 * dy * ql * eref;
                            g[lv] = 1.0;
                        }
                        return eref * (dx * dx + dy * dy + h_sq) + x[lv] - 2.0;
                    };
                    prog.ineqs.push_back(std::move(ic));
                }
                if (zv >= 0) {
                    IneqConstraint ic;
                    ic.name = "eta_upper(u=" + std::to_string(aidx[ai]) +
                              ",k=" + std::to_string(k) + ")";
                    ic.support = {vx, vy, zv};
                    ic.eval = [=](std::span<const double> x, std::span<double> g) {
                        double qx = origin.x + ql * x[vx];
                        double qy = origin.y + ql * x[vy];
                        double z = x[zv];
                        double lin = 2.0 * eref * ((q_l.x - c_pos.x) * (qx - q_l.x) +
                                                   (q_l.y - c_pos.y) * (qy - q_l.y));
                        if (!g.empty()) {
                            g[vx] = -2.0 * eref * (q_l.x - c_pos.x) * ql;
                            g[vy] = -2.0 * eref * (q_l.y - c_pos.y) * ql;
                            g[zv] = -1.0 / (z * z);
                        }
                        return 1.0 / z - 1.0 - lin;
                    };
                    prog.ineqs.push_back(std::move(ic));
                }
            }
        }
    }

    // (21): linearized pairwise separation.
    for (std::size_t a = 0; a < ua; ++a) {
        for (std::size_t b2 = a + 1; b2 < ua; ++b2) {
            for (int voff = 0; voff < n_voff; ++voff) {
                int slot = plan.window.first + 1 + voff;
                Vec2 delta_l = plan.pos_at(aidx[a], slot) - plan.pos_at(aidx[b2], slot);
                double dl_sq = delta_l.norm_sq();
                double scale = std::max(d_min_sq, dl_sq);
                int ax = work->qvar(a, voff, 0), ay = work->qvar(a, voff, 1);
                int bx = work->qvar(b2, voff, 0), by = work->qvar(b2, voff, 1);
                IneqConstraint ic;
                ic.name = "separation(u=" + std::to_string(aidx[a]) +
                          ",j=" + std::to_string(aidx[b2]) + ",n=" + std::to_string(slot) + ")";
                ic.support = {ax, ay, bx, by};
                ic.eval = [=](std::span<const double> x, std::span<double> g) {
                    double dx = ql * (x[ax] - x[bx]);
                    double dy = ql * (x[ay] - x[by]);
                    if (!g.empty()) {
                        g[ax] = -2.0 * delta_l.x * ql / scale;
                        g[ay] = -2.0 * delta_l.y * ql / scale;
                        g[bx] = 2.0 * delta_l.x * ql / scale;
                        g[by] = 2.0 * delta_l.y * ql / scale;
                    }
                    return (d_min_sq + dl_sq - 2.0 * (delta_l.x * dx + delta_l.y * dy)) / scale;
                };
                prog.ineqs.push_back(std::move(ic));
            }
        }
    }

    // Boxes.
    prog.lower.assign(static_cast<std::size_t>(work->dim), 0.0);
    prog.upper.assign(static_cast<std::size_t>(work->dim), 0.0);
    for (std::size_t ai = 0; ai < ua; ++ai)
        for (int voff = 0; voff < n_voff; ++voff) {
            prog.upper[static_cast<std::size_t>(work->qvar(ai, voff, 0))] =
                (sc.q_max.x - origin.x) / ql;
            prog.upper[static_cast<std::size_t>(work->qvar(ai, voff, 1))] =
                (sc.q_max.y - origin.y) / ql;
        }
    for (std::size_t ai = 0; ai < ua; ++ai)
        for (std::size_t k = 0; k < n_user; ++k)
            for (int voff = 0; voff < n_voff; ++voff) {
                double eref = work->eta_ref[work->ekey(ai, k, voff)];
                double cap = 2.0 / (h_sq * eref);
                int lv = work->lo_var[work->ekey(ai, k, voff)];
                int zv = work->up_var[work->ekey(ai, k, voff)];
                if (lv >= 0) prog.upper[static_cast<std::size_t>(lv)] = cap;
                if (zv >= 0) {
                    double d_l = std::sqrt(std::max(1.0 / eref - h_sq, 0.0));
                    double reach_sq = (d_l + diag) * (d_l + diag) + h_sq;
                    prog.lower[static_cast<std::size_t>(zv)] = 0.5 / (reach_sq * eref);
                    prog.upper[static_cast<std::size_t>(zv)] = cap;
                }
            }

    // Start: incoming trajectory pulled strictly inside the feasible set.
    std::vector<Vec2> q_start(ua * static_cast<std::size_t>(n_voff));
    for (std::size_t ai = 0; ai < ua; ++ai)
        for (int voff = 0; voff < n_voff; ++voff)
            q_start[ai * static_cast<std::size_t>(n_voff) + static_cast<std::size_t>(voff)] =
                plan.pos_at(aidx[ai], plan.window.first + 1 + voff);

    const double box_margin = 1e-7 * ql;
    for (auto& p : q_start) {
        p.x = std::min(std::max(p.x, sc.q_min.x + box_margin), sc.q_max.x - box_margin);
        p.y = std::min(std::max(p.y, sc.q_min.y + box_margin), sc.q_max.y - box_margin);
    }
    for (std::size_t ai = 0; ai < ua; ++ai) {
        Vec2 prev = plan.pos_at(aidx[ai], plan.window.first);
        for (int voff = 0; voff < n_voff; ++voff) {
            Vec2& cur =
                q_start[ai * static_cast<std::size_t>(n_voff) + static_cast<std::size_t>(voff)];
            Vec2 step = cur - prev;
            double len = step.norm();
            double cap = sc.d_max * (1.0 - 1e-6);
            if (len > cap) cur = prev + step * (cap / len);
            prev = cur;
        }
    }
    for (int sweep = 0; sweep < 4; ++sweep) {
        for (int voff = 0; voff < n_voff; ++voff) {
            for (std::size_t a = 0; a < ua; ++a) {
                for (std::size_t b2 = a + 1; b2 < ua; ++b2) {
                    Vec2& pa = q_start[a * static_cast<std::size_t>(n_voff) +
                                       static_cast<std::size_t>(voff)];
                    Vec2& pb = q_start[b2 * static_cast<std::size_t>(n_voff) +
                                       static_cast<std::size_t>(voff)];
                    Vec2 delta = pa - pb;
                    double d = delta.norm();
                    double target = sc.d_min * (1.0 + 1e-8);
                    if (d >= target) continue;
                    Vec2 dir = d > 1e-12 ? delta * (1.0 / d) : Vec2{1.0, 0.0};
                    double push = 0.5 * (target - d) + 1e-12;
                    pa += dir * push;
                    pb += dir * (-push);
                }
            }
        }
    }

    prog.start.assign(static_cast<std::size_t>(work->dim), 0.0);
    for (std::size_t ai = 0; ai < ua; ++ai)
        for (int voff = 0; voff < n_voff; ++voff) {
            Vec2 p =
                q_start[ai * static_cast<std::size_t>(n_voff) + static_cast<std::size_t>(voff)];
            prog.start[static_cast<std::size_t>(work->qvar(ai, voff, 0))] = (p.x - origin.x) / ql;
            prog.start[static_cast<std::size_t>(work->qvar(ai, voff, 1))] = (p.y - origin.y) / ql;
        }
    for (std::size_t ai = 0; ai < ua; ++ai)
        for (std::size_t k = 0; k < n_user; ++k)
            for (int voff = 0; voff < n_voff; ++voff) {
                int lv = work->lo_var[work->ekey(ai, k, voff)];
                int zv = work->up_var[work->ekey(ai, k, voff)];
                if (lv < 0 && zv < 0) continue;
                Vec2 p = q_start[ai * static_cast<std::size_t>(n_voff) +
                                 static_cast<std::size_t>(voff)];
                double eref = work->eta_ref[work->ekey(ai, k, voff)];
                double eta_here = 1.0 / (distance_sq(p, sc.users[k].position) + h_sq);
                if (lv >= 0)
                    prog.start[static_cast<std::size_t>(lv)] = (1.0 - 1e-6) * eta_here / eref;
                if (zv >= 0)
                    prog.start[static_cast<std::size_t>(zv)] = (1.0 + 1e-6) * eta_here / eref;
            }

    // Confirm the repaired start is strictly interior.
    {
        std::span<const double> xs(prog.start.data(), prog.start.size());
        std::span<double> no_grad;
        for (const auto& c : prog.ineqs)
            if (!(c.eval(xs, no_grad) < 0.0)) {
                out.start_ok = false;
                return out;
            }
        for (int i = 0; i < work->dim; ++i)
            if (!(prog.start[static_cast<std::size_t>(i)] >
                      prog.lower[static_cast<std::size_t>(i)] &&
                  prog.start[static_cast<std::size_t>(i)] <
                      prog.upper[static_cast<std::size_t>(i)])) {
                out.start_ok = false;
                return out;
            }
    }
    return out;
}

}  // namespace

double plan_objective(const Plan& plan, const AoContext& ctx) {
    auto sums = per_slot_sums_masked(plan, *ctx.realization, *ctx.scenario, ctx.alive);
    std::vector<double> vals = scaled_history(ctx);
    for (double s : sums) vals.push_back(s * ctx.rate_scale);
    return exp_utility(vals, ctx.mu);
}

SubproblemResult solve_association(const Plan& plan, const AoContext& ctx) {
    AssocBuild b = build_association(plan, ctx);
    SolveReport report = maximize(b.prog, ctx.solver);

    SubproblemResult out;
    out.plan = plan;
    for (std::size_t ai = 0; ai < b.aidx.size(); ++ai)
        for (std::size_t k = 0; k < b.n_user; ++k)
            for (int off = 0; off < b.w; ++off)
                out.plan.assoc_at(b.aidx[ai], k, plan.window.first + off) =
                    report.solution[static_cast<std::size_t>(b.var(ai, k, off))];
    out.plan.binary_flag = false;

    double incoming = plan_objective(plan, ctx);
    double updated = plan_objective(out.plan, ctx);
    if (updated < incoming) out.plan = plan;  // numerical safeguard
    report.objective = std::max(updated, incoming);
    out.report = std::move(report);
    return out;
}

Plan round_association(const Plan& relaxed, const Scenario& scenario,
                       const std::vector<std::uint8_t>& alive) {
    Plan out = relaxed;
    const int w = relaxed.window.length();
    for (std::size_t k = 0; k < relaxed.n_user; ++k) {
        for (int off = 0; off < w; ++off) {
            int slot = relaxed.window.first + off;
            int best = -1;
            double best_val = -1.0;
            for (std::size_t u = 0; u < relaxed.n_uav; ++u) {
                if (!alive[u]) continue;
                double a = relaxed.assoc_at(u, k, slot);
                bool take =
                    a > best_val ||
                    (a == best_val && best >= 0 &&
                     scenario.uavs[u].id < scenario.uavs[static_cast<std::size_t>(best)].id);
                if (take) {
                    best = static_cast<int>(u);
                    best_val = a;
                }
            }
            for (std::size_t u = 0; u < relaxed.n_uav; ++u) {
                double sel = (static_cast<int>(u) == best) ? 1.0 : 0.0;
                out.assoc_at(u, k, slot) = sel;
                if (sel == 0.0) out.bw_at(u, k, slot) = 0.0;
            }
        }
    }
    out.binary_flag = true;
    return out;
}

SubproblemResult solve_bandwidth(const Plan& plan, const AoContext& ctx) {
    const Scenario& sc = *ctx.scenario;
    const int w = plan.window.length();
    BwBuild b = build_bandwidth(plan, ctx);

    SubproblemResult out;
    out.plan = plan;
    for (std::size_t u = 0; u < sc.n_uavs(); ++u)
        for (std::size_t k = 0; k < sc.n_users(); ++k)
            for (int off = 0; off < w; ++off) out.plan.bw_at(u, k, plan.window.first + off) = 0.0;

    if (b.cells.empty()) {
        out.report.status = SolveStatus::converged;
        out.report.objective = plan_objective(out.plan, ctx);
        return out;
    }

    SolveReport report = maximize(b.prog, ctx.solver);
    for (std::size_t i = 0; i < b.cells.size(); ++i)
        out.plan.bw_at(b.cells[i].u, b.cells[i].k, plan.window.first + b.cells[i].off) =
            report.solution[i];

    // Rounding can hand over a budget-violating plan; the monotonicity
    // safeguard only applies when the incoming plan was feasible.
    bool incoming_feasible = true;
    for (std::size_t u = 0; u < sc.n_uavs() && incoming_feasible; ++u)
        for (int off = 0; off < w && incoming_feasible; ++off) {
            double used = 0.0;
            for (std::size_t k = 0; k < sc.n_users(); ++k)
                used += plan.assoc_at(u, k, plan.window.first + off) *
                        plan.bw_at(u, k, plan.window.first + off);
            if (used > sc.uavs[u].bandwidth_budget * (1.0 + 1e-9)) incoming_feasible = false;
        }
    double updated = plan_objective(out.plan, ctx);
    if (incoming_feasible) {
        double incoming = plan_objective(plan, ctx);
        if (updated < incoming) {
            out.plan = plan;
            updated = incoming;
        }
    }
    report.objective = updated;
    out.report = std::move(report);
    return out;
}

EtaBounds init_eta(const Plan& plan, const Scenario& scenario) {
    EtaBounds eta;
    eta.window = plan.window;
    eta.n_uav = plan.n_uav;
    eta.n_user = scenario.n_users();
    const std::size_t cells =
        eta.n_uav * eta.n_user * static_cast<std::size_t>(plan.window.length());
    eta.lower.resize(cells);
    eta.upper.resize(cells);
    eta.traj_l = plan.traj;
    const double h_sq = scenario.altitude_h * scenario.altitude_h;
    for (std::size_t u = 0; u < eta.n_uav; ++u)
        for (std::size_t k = 0; k < eta.n_user; ++k)
            for (int slot = plan.window.first; slot <= plan.window.last; ++slot) {
                double d_sq = distance_sq(plan.pos_at(u, slot), scenario.users[k].position);
                eta.lower[eta.idx(u, k, slot)] = 1.0 / (d_sq + h_sq);
                eta.upper[eta.idx(u, k, slot)] = 1.0 / (d_sq + h_sq);
            }
    eta.lower_l = eta.lower;
    eta.upper_l = eta.upper;
    return eta;
}

double surrogate_rate(const EtaBounds& eta, const ChannelRealization& realization,
                      const Scenario& scenario, std::size_t u, std::size_t k, int slot) {
    const double rho = scenario.channel.ref_gain_rho;
    const double noise = scenario.channel.noise_power;
    double t_all = noise;
    double denom = noise;
    double offset = 0.0;
    for (std::size_t i = 0; i < scenario.n_uavs(); ++i) {
        if (!scenario.alive(i, slot)) continue;
        double c = rho * realization.at(i, k, slot) * scenario.uavs[i].tx_power;
        t_all += c * eta.lower[eta.idx(i, k, slot)];
        if (i != u) {
            denom += c * eta.upper_l[eta.idx(i, k, slot)];
            offset += c * (eta.upper[eta.idx(i, k, slot)] - eta.upper_l[eta.idx(i, k, slot)]);
        }
    }
    return std::log2(t_all) - std::log2(denom) - offset / (denom * kLn2);
}

TrajectoryResult solve_trajectory(const Plan& plan, const AoContext& ctx) {
    const Scenario& sc = *ctx.scenario;
    TrajBuild b = build_trajectory(plan, ctx);

    TrajectoryResult out;
    out.plan = plan;
    out.eta = init_eta(plan, sc);
    if (b.degenerate) {
        out.report.status = SolveStatus::converged;
        out.report.objective = plan_objective(plan, ctx);
        return out;
    }
    if (!b.start_ok) {
        out.report.status = SolveStatus::iteration_cap;
        out.report.objective = plan_objective(plan, ctx);
        return out;
    }

    const auto& work = *b.work;
    SolveReport report = maximize(b.prog, ctx.solver);

    Plan candidate = plan;
    for (std::size_t ai = 0; ai < work.ua; ++ai)
        for (int voff = 0; voff < work.n_voff; ++voff) {
            int slot = plan.window.first + 1 + voff;
            candidate.pos_at(work.aidx[ai], slot) =
                Vec2{work.q_origin.x + work.q_scale *
                                           report.solution[static_cast<std::size_t>(
                                               work.qvar(ai, voff, 0))],
                     work.q_origin.y + work.q_scale *
                                           report.solution[static_cast<std::size_t>(
                                               work.qvar(ai, voff, 1))]};
        }

    double incoming = plan_objective(plan, ctx);
    double updated = plan_objective(candidate, ctx);
    if (updated >= incoming) {
        out.plan = std::move(candidate);
        out.eta = init_eta(out.plan, sc);
        for (std::size_t ai = 0; ai < work.ua; ++ai)
            for (std::size_t k = 0; k < work.n_user; ++k)
                for (int voff = 0; voff < work.n_voff; ++voff) {
                    int slot = plan.window.first + 1 + voff;
                    double eref = work.eta_ref[work.ekey(ai, k, voff)];
                    int lv = work.lo_var[work.ekey(ai, k, voff)];
                    int zv = work.up_var[work.ekey(ai, k, voff)];
                    std::size_t e = out.eta.idx(work.aidx[ai], k, slot);
                    if (lv >= 0)
                        out.eta.lower[e] = report.solution[static_cast<std::size_t>(lv)] * eref;
                    if (zv >= 0)
                        out.eta.upper[e] = report.solution[static_cast<std::size_t>(zv)] * eref;
                    out.eta.lower_l[e] = eref;
                    out.eta.upper_l[e] = eref;
                }
        out.eta.traj_l = plan.traj;
    }
    report.objective = std::max(updated, incoming);
    out.report = std::move(report);
    return out;
}

namespace detail {

ConcaveProgram association_program(const Plan& plan, const AoContext& ctx) {
    return build_association(plan, ctx).prog;
}

ConcaveProgram bandwidth_program(const Plan& plan, const AoContext& ctx) {
    return build_bandwidth(plan, ctx).prog;
}

ConcaveProgram trajectory_program(const Plan& plan, const AoContext& ctx) {
    TrajBuild b = build_trajectory(plan, ctx);
    return b.prog;
}

}  // namespace detail

}  // namespace uavnet
