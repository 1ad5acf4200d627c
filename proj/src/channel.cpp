#include "uavnet/channel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "uavnet/rng.hpp"

namespace uavnet {

Plan Plan::make(std::size_t n_uav, std::size_t n_user, Window w) {
    Plan p;
    p.window = w;
    p.n_uav = n_uav;
    p.n_user = n_user;
    std::size_t cells = n_uav * n_user * static_cast<std::size_t>(w.length());
    p.assoc.assign(cells, 0.0);
    p.bandwidth.assign(cells, 0.0);
    p.traj.assign(n_uav * static_cast<std::size_t>(w.length()), Vec2{});
    return p;
}

ChannelRealization draw_fading(const Scenario& scenario, Window window, std::uint64_t seed) {
    ChannelRealization r;
    r.window = window;
    r.n_uav = scenario.n_uavs();
    r.n_user = scenario.n_users();
    r.seed = seed;
    r.hbar.resize(r.n_uav * r.n_user * static_cast<std::size_t>(window.length()));

    const double m = scenario.channel.rician_m;
    const double los_amp = std::sqrt(m / (m + 1.0));
    const double nlos_amp = std::sqrt(1.0 / (m + 1.0));
    const double two_pi = 2.0 * std::numbers::pi;

    for (std::size_t u = 0; u < r.n_uav; ++u) {
        for (std::size_t k = 0; k < r.n_user; ++k) {
            for (int slot = window.first; slot <= window.last; ++slot) {
                // One stream per (u,k,slot) so draws do not depend on the window.
                std::uint64_t stream = mix_seed(seed, (u + 1) * 0x100000001B3ULL);
                stream = mix_seed(stream, (k + 1) * 0x1000193ULL);
                stream = mix_seed(stream, static_cast<std::uint64_t>(slot));
                SplitMix64 gen(stream);

                double theta = two_pi * gen.next_double();
                // Box-Muller; scattered part is CN(0,1) => N(0, 1/2) per axis.
                double u1 = gen.next_double();
                double u2 = gen.next_double();
                double radius = std::sqrt(-2.0 * std::log1p(-u1));
                double z1 = radius * std::cos(two_pi * u2);
                double z2 = radius * std::sin(two_pi * u2);

                double re = los_amp * std::cos(theta) + nlos_amp * z1 / std::numbers::sqrt2;
                double im = los_amp * std::sin(theta) + nlos_amp * z2 / std::numbers::sqrt2;
                r.at(u, k, slot) = re * re + im * im;
            }
        }
    }
    return r;
}

ChannelRealization unit_fading(const Scenario& scenario, Window window) {
    ChannelRealization r;
    r.window = window;
    r.n_uav = scenario.n_uavs();
    r.n_user = scenario.n_users();
    r.seed = 0;
    r.hbar.assign(r.n_uav * r.n_user * static_cast<std::size_t>(window.length()), 1.0);
    return r;
}

double channel_gain(const Vec2& position_u, const Vec2& position_k, double h_bar,
                    const ChannelParams& params, double altitude) {
    double d_sq = distance_sq(position_u, position_k) + altitude * altitude;
    return params.ref_gain_rho * h_bar / d_sq;
}

double link_rate(double bandwidth, std::span<const double> gains, std::span<const double> powers,
                 std::size_t serving_uav, double noise) {
    if (bandwidth <= 0.0) return 0.0;
    double signal = gains[serving_uav] * powers[serving_uav];
    double interference = 0.0;
    for (std::size_t i = 0; i < gains.size(); ++i) {
        if (i == serving_uav) continue;
        interference += gains[i] * powers[i];
    }
    return bandwidth * std::log2(1.0 + signal / (interference + noise));
}

namespace {

/// Received powers h_i·p_i for every UAV at (k, slot); dead UAVs contribute 0.
void received_powers(const Plan& plan, const ChannelRealization& realization,
                     const Scenario& scenario, std::span<const std::uint8_t> alive,
                     std::size_t k, int slot, std::vector<double>& out) {
    out.resize(scenario.n_uavs());
    for (std::size_t u = 0; u < scenario.n_uavs(); ++u) {
        if (!alive[u]) {
            out[u] = 0.0;
            continue;
        }
        double g = channel_gain(plan.pos_at(u, slot), scenario.users[k].position,
                                realization.at(u, k, slot), scenario.channel,
                                scenario.altitude_h);
        out[u] = g * scenario.uavs[u].tx_power;
    }
}

}  // namespace

double user_rate_masked(const Plan& plan, const ChannelRealization& realization,
                        const Scenario& scenario, std::span<const std::uint8_t> alive,
                        std::size_t k, int slot) {
    std::vector<double> rx;
    received_powers(plan, realization, scenario, alive, k, slot, rx);
    double total = 0.0;
    for (double p : rx) total += p;

    double rate = 0.0;
    for (std::size_t u = 0; u < scenario.n_uavs(); ++u) {
        double a = plan.assoc_at(u, k, slot);
        if (a <= 0.0 || !alive[u]) continue;
        double b = plan.bw_at(u, k, slot);
        if (b <= 0.0) continue;
        double sinr = rx[u] / (total - rx[u] + scenario.channel.noise_power);
        rate += a * b * std::log2(1.0 + sinr);
    }
    return rate;
}

double user_rate(const Plan& plan, const ChannelRealization& realization,
                 const Scenario& scenario, std::size_t k, int slot) {
    return user_rate_masked(plan, realization, scenario, scenario.alive_mask(slot), k, slot);
}

std::vector<double> per_slot_sums_masked(const Plan& plan, const ChannelRealization& realization,
                                         const Scenario& scenario,
                                         std::span<const std::uint8_t> alive) {
    std::vector<double> sums(static_cast<std::size_t>(plan.window.length()), 0.0);
    for (int slot = plan.window.first; slot <= plan.window.last; ++slot) {
        double s = 0.0;
        for (std::size_t k = 0; k < scenario.n_users(); ++k)
            s += user_rate_masked(plan, realization, scenario, alive, k, slot);
        sums[static_cast<std::size_t>(plan.window.offset(slot))] = s;
    }
    return sums;
}

double sum_rate(const Plan& plan, const ChannelRealization& realization,
                const Scenario& scenario, int slot) {
    double s = 0.0;
    for (std::size_t k = 0; k < scenario.n_users(); ++k)
        s += user_rate(plan, realization, scenario, k, slot);
    return s;
}

std::vector<double> per_slot_sums(const Plan& plan, const ChannelRealization& realization,
                                  const Scenario& scenario) {
    std::vector<double> sums(static_cast<std::size_t>(plan.window.length()), 0.0);
    for (int slot = plan.window.first; slot <= plan.window.last; ++slot)
        sums[static_cast<std::size_t>(plan.window.offset(slot))] =
            sum_rate(plan, realization, scenario, slot);
    return sums;
}

std::vector<double> user_rate_table(const Plan& plan, const ChannelRealization& realization,
                                    const Scenario& scenario) {
    const std::size_t w = static_cast<std::size_t>(plan.window.length());
    std::vector<double> table(scenario.n_users() * w, 0.0);
    for (std::size_t k = 0; k < scenario.n_users(); ++k)
        for (int slot = plan.window.first; slot <= plan.window.last; ++slot)
            table[k * w + static_cast<std::size_t>(plan.window.offset(slot))] =
                user_rate(plan, realization, scenario, k, slot);
    return table;
}

std::vector<std::string> plan_violations(const Plan& plan, const Scenario& scenario,
                                         std::span<const Vec2> anchors,
                                         std::span<const std::uint8_t> alive) {
    std::vector<std::string> out;
    auto bad = [&out](const std::string& m) { out.push_back(m); };
    const double h_tol = 1e-6;  // meters, constraints (6d)-(6e)

    for (int slot = plan.window.first; slot <= plan.window.last; ++slot) {
        // (6a)-(6b): one-hot association over alive UAVs for binary plans;
        // [0,1] entries otherwise.
        for (std::size_t k = 0; k < plan.n_user; ++k) {
            double col = 0.0;
            for (std::size_t u = 0; u < plan.n_uav; ++u) {
                double a = plan.assoc_at(u, k, slot);
                if (a < -1e-12 || a > 1.0 + 1e-12)
                    bad("assoc out of [0,1] at (u=" + std::to_string(u) +
                        ",k=" + std::to_string(k) + ",n=" + std::to_string(slot) + ")");
                if (plan.binary_flag && a != 0.0 && a != 1.0)
                    bad("binary plan has fractional assoc at (u=" + std::to_string(u) +
                        ",k=" + std::to_string(k) + ",n=" + std::to_string(slot) + ")");
                if (!alive.empty() && !alive[u] && a != 0.0)
                    bad("association to dead uav " + std::to_string(u) + " at slot " +
                        std::to_string(slot));
                col += a;
            }
            if (plan.binary_flag && col != 1.0)
                bad("association column for user " + std::to_string(k) + " at slot " +
                    std::to_string(slot) + " does not sum to 1");
        }
        // (6c): per-UAV bandwidth budget.
        for (std::size_t u = 0; u < plan.n_uav; ++u) {
            double used = 0.0;
            for (std::size_t k = 0; k < plan.n_user; ++k) {
                if (plan.bw_at(u, k, slot) < -1e-12)
                    bad("negative bandwidth at (u=" + std::to_string(u) +
                        ",k=" + std::to_string(k) + ",n=" + std::to_string(slot) + ")");
                used += plan.assoc_at(u, k, slot) * plan.bw_at(u, k, slot);
            }
            double budget = scenario.uavs[u].bandwidth_budget;
            if (used > budget * (1.0 + 1e-9) + 1e-15)
                bad("bandwidth budget exceeded for uav " + std::to_string(u) + " at slot " +
                    std::to_string(slot));
        }
        // (6f): area bounds (only meaningful for alive UAVs).
        for (std::size_t u = 0; u < plan.n_uav; ++u) {
            if (!alive.empty() && !alive[u]) continue;
            if (!scenario.in_area(plan.pos_at(u, slot), h_tol))
                bad("uav " + std::to_string(u) + " outside bounds at slot " +
                    std::to_string(slot));
        }
        // (6e): pairwise separation among alive UAVs.
        for (std::size_t u = 0; u < plan.n_uav; ++u) {
            if (!alive.empty() && !alive[u]) continue;
            for (std::size_t j = u + 1; j < plan.n_uav; ++j) {
                if (!alive.empty() && !alive[j]) continue;
                double d = distance(plan.pos_at(u, slot), plan.pos_at(j, slot));
                if (d < scenario.d_min - h_tol)
                    bad("uavs " + std::to_string(u) + "," + std::to_string(j) +
                        " closer than D_min at slot " + std::to_string(slot));
            }
        }
        // (6d): per-slot displacement.
        if (slot > plan.window.first) {
            for (std::size_t u = 0; u < plan.n_uav; ++u) {
                if (!alive.empty() && !alive[u]) continue;
                double step = distance(plan.pos_at(u, slot), plan.pos_at(u, slot - 1));
                if (step > scenario.d_max + h_tol)
                    bad("uav " + std::to_string(u) + " moves more than D_max into slot " +
                        std::to_string(slot));
            }
        }
    }
    // (6g): anchor continuity at the window's first slot.
    if (!anchors.empty()) {
        for (std::size_t u = 0; u < plan.n_uav; ++u) {
            if (!alive.empty() && !alive[u]) continue;
            Vec2 p = plan.pos_at(u, plan.window.first);
            if (p.x != anchors[u].x || p.y != anchors[u].y)
                bad("uav " + std::to_string(u) + " does not start at its anchor");
        }
    }
    return out;
}

std::string realization_to_csv(const ChannelRealization& realization) {
    std::ostringstream os;
    os << "uav,user,slot,hbar\n";
    char buf[64];
    for (std::size_t u = 0; u < realization.n_uav; ++u)
        for (std::size_t k = 0; k < realization.n_user; ++k)
            for (int slot = realization.window.first; slot <= realization.window.last; ++slot) {
                std::snprintf(buf, sizeof(buf), "%.17g", realization.at(u, k, slot));
                os << u << ',' << k << ',' << slot << ',' << buf << '\n';
            }
    return os.str();
}

}  // namespace uavnet
