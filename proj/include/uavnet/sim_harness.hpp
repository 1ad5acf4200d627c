#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uavnet/baselines.hpp"
#include "uavnet/planner.hpp"

namespace uavnet {

enum class Scheme { pro_alg, sr_max, baseline1, baseline2 };

const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

struct EpisodeOptions {
    PlannerSettings planner;
    bool expected_fading = false;  // plan on E[h̄]=1 instead of the realized draws
};

struct EpisodeMetrics {
    std::string scheme;
    double mu = 0.0;
    std::uint64_t seed = 0;
    std::size_t n_users = 0;
    std::size_t n_slots = 0;
    std::vector<double> slot_sums;   // bits/s, one entry per episode slot
    std::vector<double> user_rates;  // (user, slot) row-major, bits/s
    double avg_rate_p1 = 0.0;        // mean sum rate before the first failure
    double avg_rate_p2 = 0.0;        // mean sum rate from the first failure on
    double variance = 0.0;           // population variance of slot_sums
    double jain = 0.0;               // Jain index of users' episode-average rates
    int iterations = 0;              // planner iterations across planning calls
    std::vector<ConvergenceTrace> traces;
};

/// Two-period failure episode: plan failure-unaware, execute, hold the stale
/// plan through each failure slot, replan with the survivors anchored at their
/// pre-failure positions and the realized sums as history, execute the rest.
EpisodeMetrics run_episode(const Scenario& scenario, Scheme scheme, double mu,
                           std::uint64_t seed, const EpisodeOptions& options = {});

/// pro_alg at every mu plus sr_max, baseline1 and baseline2, once per seed.
std::vector<EpisodeMetrics> sweep_mu(const Scenario& scenario, std::span<const double> mus,
                                     std::span<const std::uint64_t> seeds,
                                     const EpisodeOptions& options = {}, int max_workers = 0);

}  // namespace uavnet
