#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uavnet/geometry.hpp"
#include "uavnet/scenario.hpp"

namespace uavnet {

/// Per-slot Rician fading power factors h̄[u][k][n] over a slot window.
/// Entries are unit-mean; draws are i.i.d. per (uav, user, slot) and depend
/// only on (seed, uav, user, slot), so overlapping windows agree.
struct ChannelRealization {
    Window window;
    std::size_t n_uav = 0;
    std::size_t n_user = 0;
    std::vector<double> hbar;  // (u * n_user + k) * window.length() + offset
    std::uint64_t seed = 0;

    double at(std::size_t u, std::size_t k, int slot) const {
        return hbar[(u * n_user + k) * static_cast<std::size_t>(window.length()) +
                    static_cast<std::size_t>(window.offset(slot))];
    }
    double& at(std::size_t u, std::size_t k, int slot) {
        return hbar[(u * n_user + k) * static_cast<std::size_t>(window.length()) +
                    static_cast<std::size_t>(window.offset(slot))];
    }
};

/// Decision triple (association, bandwidth, trajectory) over a planning window.
/// Association entries live in [0,1] while relaxed and in {0,1} once
/// binary_flag is set.
struct Plan {
    Window window;
    std::size_t n_uav = 0;
    std::size_t n_user = 0;
    std::vector<double> assoc;      // (u, k, slot)
    std::vector<double> bandwidth;  // (u, k, slot), Hz
    std::vector<Vec2> traj;         // (u, slot)
    bool binary_flag = false;

    static Plan make(std::size_t n_uav, std::size_t n_user, Window w);

    std::size_t idx(std::size_t u, std::size_t k, int slot) const {
        return (u * n_user + k) * static_cast<std::size_t>(window.length()) +
               static_cast<std::size_t>(window.offset(slot));
    }
    double assoc_at(std::size_t u, std::size_t k, int slot) const { return assoc[idx(u, k, slot)]; }
    double& assoc_at(std::size_t u, std::size_t k, int slot) { return assoc[idx(u, k, slot)]; }
    double bw_at(std::size_t u, std::size_t k, int slot) const { return bandwidth[idx(u, k, slot)]; }
    double& bw_at(std::size_t u, std::size_t k, int slot) { return bandwidth[idx(u, k, slot)]; }
    Vec2 pos_at(std::size_t u, int slot) const {
        return traj[u * static_cast<std::size_t>(window.length()) +
                    static_cast<std::size_t>(window.offset(slot))];
    }
    Vec2& pos_at(std::size_t u, int slot) {
        return traj[u * static_cast<std::size_t>(window.length()) +
                    static_cast<std::size_t>(window.offset(slot))];
    }
};

/// Draws |sqrt(M/(M+1))·ḡ + sqrt(1/(M+1))·g̃|² with ḡ a unit-magnitude phase
/// and g̃ circularly-symmetric standard complex Gaussian.
ChannelRealization draw_fading(const Scenario& scenario, Window window, std::uint64_t seed);

/// Realization with every entry forced to E[h̄] = 1 (expected-value planning).
ChannelRealization unit_fading(const Scenario& scenario, Window window);

/// rho·h_bar / (‖q_u − c_k‖² + H²).
double channel_gain(const Vec2& position_u, const Vec2& position_k, double h_bar,
                    const ChannelParams& params, double altitude);

/// b·log2(1 + h_u·p_u / (Σ_{i≠u} h_i·p_i + σ²)). Dead UAVs are expressed by
/// zero entries in `powers`.
double link_rate(double bandwidth, std::span<const double> gains, std::span<const double> powers,
                 std::size_t serving_uav, double noise);

/// R_k[n] = Σ_u a_{u,k}[n]·r_{u,k}[n]; fractional association weights rates
/// linearly. UAVs failed at slot n contribute neither signal nor interference.
double user_rate(const Plan& plan, const ChannelRealization& realization,
                 const Scenario& scenario, std::size_t k, int slot);

/// user_rate with an explicit alive mask (a planner's view of the fleet).
double user_rate_masked(const Plan& plan, const ChannelRealization& realization,
                        const Scenario& scenario, std::span<const std::uint8_t> alive,
                        std::size_t k, int slot);

/// Per-slot sums over the plan window under an explicit alive mask.
std::vector<double> per_slot_sums_masked(const Plan& plan, const ChannelRealization& realization,
                                         const Scenario& scenario,
                                         std::span<const std::uint8_t> alive);

double sum_rate(const Plan& plan, const ChannelRealization& realization,
                const Scenario& scenario, int slot);

/// Per-slot sums over the plan window, in bits/s.
std::vector<double> per_slot_sums(const Plan& plan, const ChannelRealization& realization,
                                  const Scenario& scenario);

/// Full (user, slot) rate table over the plan window, row-major by user.
std::vector<double> user_rate_table(const Plan& plan, const ChannelRealization& realization,
                                    const Scenario& scenario);

/// Feasibility of a plan against Problem (6): one-hot association over the
/// given alive set (binary plans), bandwidth budgets, mobility, collision,
/// bounds, and anchor continuity. Empty result means feasible.
std::vector<std::string> plan_violations(const Plan& plan, const Scenario& scenario,
                                         std::span<const Vec2> anchors,
                                         std::span<const std::uint8_t> alive);

/// CSV audit dump (columns: uav,user,slot,hbar).
std::string realization_to_csv(const ChannelRealization& realization);

}  // namespace uavnet
