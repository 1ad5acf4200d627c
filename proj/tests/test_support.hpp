#pragma once

#include <vector>

#include "uavnet/rng.hpp"
#include "uavnet/scenario.hpp"

namespace uavnet::test {

/// The simulation setup used throughout the experiments: 3 UAVs at the given
/// anchors, H=60 m, B=10 kHz, D_max=25 m, D_min=4 m, N=20, -20 dB reference
/// gain, 3 dB Rician factor.
inline Scenario paper_scenario(int n_users = 9, std::uint64_t seed = 42) {
    Scenario s;
    s.uavs = {
        {0, {125.0, 375.0}, 10e3, 0.1},
        {1, {375.0, 375.0}, 10e3, 0.1},
        {2, {250.0, 125.0}, 10e3, 0.1},
    };
    s.channel.ref_gain_rho = 0.01;             // -20 dB
    s.channel.rician_m = 1.9952623149688795;   // 3 dB
    s.channel.noise_power = 1e-13;
    s.n_slots = 20;
    s.q_min = {0.0, 0.0};
    s.q_max = {500.0, 500.0};
    s.altitude_h = 60.0;
    s.d_max = 25.0;
    s.d_min = 4.0;
    s.seed = seed;
    SplitMix64 gen(mix_seed(seed, 0x5173u));
    for (int k = 0; k < n_users; ++k) {
        UserSite site;
        site.id = k;
        site.position = Vec2{gen.next_double() * 500.0, gen.next_double() * 500.0};
        s.users.push_back(site);
    }
    return s;
}

inline Scenario paper_scenario_with_failure(int slot = 11, int uav_id = 2) {
    Scenario s = paper_scenario();
    s.failures.push_back({uav_id, slot});
    return s;
}

inline std::vector<Vec2> initial_anchors(const Scenario& s) {
    std::vector<Vec2> a(s.n_uavs());
    for (std::size_t u = 0; u < s.n_uavs(); ++u) a[u] = s.uavs[u].initial_position;
    return a;
}

inline std::vector<std::uint8_t> all_alive(const Scenario& s) {
    return std::vector<std::uint8_t>(s.n_uavs(), 1);
}

}  // namespace uavnet::test
