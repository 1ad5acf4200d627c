#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavnet/geometry.hpp"

namespace uavnet {

struct ChannelParams {
    double ref_gain_rho = 0.01;     // linear power gain at 1 m
    double rician_m = 1.9952623149688795;  // linear Rician factor (3 dB)
    double noise_power = 1e-13;     // watts
};

struct UavConfig {
    int id = 0;
    Vec2 initial_position;
    double bandwidth_budget = 0.0;  // Hz
    double tx_power = 0.0;          // watts, constant over slots
};

struct UserSite {
    int id = 0;
    Vec2 position;
};

/// The UAV is unavailable from `slot` (1-based) onward.
struct FailureEvent {
    int uav_id = 0;
    int slot = 0;
};

struct Scenario {
    std::vector<UavConfig> uavs;
    std::vector<UserSite> users;
    ChannelParams channel;
    int n_slots = 1;
    Vec2 q_min{0.0, 0.0};
    Vec2 q_max{500.0, 500.0};
    double altitude_h = 60.0;   // m
    double d_max = 25.0;        // m per slot
    double d_min = 4.0;         // m
    std::vector<FailureEvent> failures;
    std::uint64_t seed = 0;

    std::size_t n_uavs() const { return uavs.size(); }
    std::size_t n_users() const { return users.size(); }

    /// True iff UAV `u` (by index) is operating at 1-based slot `slot`.
    bool alive(std::size_t u, int slot) const;
    std::vector<std::uint8_t> alive_mask(int slot) const;
    std::size_t alive_count(int slot) const;

    /// Index into `uavs` for a config id, or -1.
    int uav_index(int id) const;

    bool in_area(const Vec2& p, double tol = 0.0) const {
        return p.x >= q_min.x - tol && p.x <= q_max.x + tol &&
               p.y >= q_min.y - tol && p.y <= q_max.y + tol;
    }

    /// Sorted distinct failure slots.
    std::vector<int> failure_slots() const;
};

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const { return issues_; }

private:
    std::vector<std::string> issues_;
};

/// Complete list of invariant violations; empty means the scenario is valid.
std::vector<std::string> scenario_violations(const Scenario& s);

/// Returns the scenario unchanged if valid; throws ValidationError with the
/// full violation list otherwise.
Scenario validate_scenario(const Scenario& raw);

}  // namespace uavnet
