#include "uavnet/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace uavnet {

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
    std::ostringstream os;
    os << "scenario validation failed (" << issues.size() << " issue"
       << (issues.size() == 1 ? "" : "s") << "):";
    for (const auto& i : issues) os << "\n  - " << i;
    return os.str();
}

bool finite(const Vec2& v) { return std::isfinite(v.x) && std::isfinite(v.y); }

}  // namespace

ValidationError::ValidationError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

bool Scenario::alive(std::size_t u, int slot) const {
    for (const auto& f : failures) {
        if (uav_index(f.uav_id) == static_cast<int>(u) && slot >= f.slot) return false;
    }
    return true;
}

std::vector<std::uint8_t> Scenario::alive_mask(int slot) const {
    std::vector<std::uint8_t> mask(n_uavs(), 1);
    for (std::size_t u = 0; u < n_uavs(); ++u) mask[u] = alive(u, slot) ? 1 : 0;
    return mask;
}

std::size_t Scenario::alive_count(int slot) const {
    std::size_t c = 0;
    for (std::size_t u = 0; u < n_uavs(); ++u)
        if (alive(u, slot)) ++c;
    return c;
}

int Scenario::uav_index(int id) const {
    for (std::size_t u = 0; u < uavs.size(); ++u)
        if (uavs[u].id == id) return static_cast<int>(u);
    return -1;
}

std::vector<int> Scenario::failure_slots() const {
    std::set<int> slots;
    for (const auto& f : failures) slots.insert(f.slot);
    return {slots.begin(), slots.end()};
}

std::vector<std::string> scenario_violations(const Scenario& s) {
    std::vector<std::string> out;
    auto bad = [&out](const std::string& msg) { out.push_back(msg); };

    if (s.n_slots < 1) bad("n_slots must be >= 1");
    if (!(s.d_max > 0.0)) bad("d_max must be > 0");
    if (!(s.d_min >= 0.0)) bad("d_min must be >= 0");
    if (!(s.altitude_h > 0.0)) bad("altitude_h must be > 0");
    if (!(s.q_min.x < s.q_max.x && s.q_min.y < s.q_max.y))
        bad("slot_bounds: q_min must be componentwise below q_max");

    if (s.uavs.empty()) bad("uavs must be nonempty");
    if (s.users.empty()) bad("users must be nonempty");

    std::set<int> uav_ids, user_ids;
    for (const auto& u : s.uavs) {
        if (!uav_ids.insert(u.id).second)
            bad("duplicate uav id " + std::to_string(u.id));
        if (!finite(u.initial_position))
            bad("uav " + std::to_string(u.id) + ": initial_position not finite");
        if (!(u.bandwidth_budget > 0.0))
            bad("uav " + std::to_string(u.id) + ": bandwidth_budget must be > 0");
        if (!(u.tx_power > 0.0))
            bad("uav " + std::to_string(u.id) + ": tx_power must be > 0");
        if (finite(u.initial_position) && !s.in_area(u.initial_position))
            bad("uav " + std::to_string(u.id) + ": initial_position outside slot_bounds");
    }
    for (const auto& k : s.users) {
        if (!user_ids.insert(k.id).second)
            bad("duplicate user id " + std::to_string(k.id));
        if (!finite(k.position))
            bad("user " + std::to_string(k.id) + ": position not finite");
    }

    for (std::size_t a = 0; a < s.uavs.size(); ++a) {
        for (std::size_t b = a + 1; b < s.uavs.size(); ++b) {
            double d = distance(s.uavs[a].initial_position, s.uavs[b].initial_position);
            if (d < s.d_min)
                bad("uavs " + std::to_string(s.uavs[a].id) + " and " +
                    std::to_string(s.uavs[b].id) + ": initial separation below D_min");
        }
    }

    if (!(s.channel.ref_gain_rho > 0.0)) bad("channel.ref_gain_rho must be > 0");
    if (!(s.channel.rician_m >= 0.0)) bad("channel.rician_m must be >= 0");
    if (!(s.channel.noise_power > 0.0)) bad("channel.noise_power must be > 0");

    for (const auto& f : s.failures) {
        if (f.slot < 2 || f.slot > s.n_slots)
            bad("failure of uav " + std::to_string(f.uav_id) + ": failure slot out of range [2, " +
                std::to_string(s.n_slots) + "], got " + std::to_string(f.slot));
        if (s.uav_index(f.uav_id) < 0)
            bad("failure references unknown uav id " + std::to_string(f.uav_id));
    }
    // Failures only accumulate, so the end of the episode is the worst case.
    if (!s.uavs.empty() && s.alive_count(s.n_slots) == 0)
        bad("failures leave no UAV alive");

    return out;
}

Scenario validate_scenario(const Scenario& raw) {
    auto issues = scenario_violations(raw);
    if (!issues.empty()) throw ValidationError(std::move(issues));
    return raw;
}

}  // namespace uavnet
