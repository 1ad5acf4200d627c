#pragma once

#include "uavnet/planner.hpp"

namespace uavnet {

/// Baseline 1: UAVs hover at their anchors, users associate with the nearest
/// alive UAV (ties to the lowest id), every UAV splits its budget equally
/// among its associated users.
Plan nearest_equal_plan(const Scenario& scenario, Window window,
                        const std::vector<Vec2>& anchors,
                        const std::vector<std::uint8_t>& alive);

/// Baseline 2: association fixed by nearest-UAV at the anchors; one hover
/// position per UAV is optimized (slot-constant, reachable within the window),
/// movement slots interpolate from the anchor; bandwidth is then re-solved for
/// sum rate. Never worse than nearest_equal_plan on mean window sum rate.
PlanResult placement_plan(const Scenario& scenario, const ChannelRealization& realization,
                          Window window, const std::vector<Vec2>& anchors,
                          const std::vector<std::uint8_t>& alive,
                          const PlannerSettings& settings);

}  // namespace uavnet
