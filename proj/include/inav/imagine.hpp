#pragma once

#include <array>
#include <cstdint>

#include "inav/where2imagine.hpp"
#include "inav/world.hpp"

namespace inav {

enum class ImagineMode { Oracle, Degraded };

struct DegradationParams {
  double p_swap = 0.15;      // per-ray chance of a class swap
  double depth_jitter = 0.1; // multiplicative depth noise bound, in [0, 1)
};

struct ImaginedView {
  ViewObservation view;
  RelativeWaypoint source_waypoint;
  ImagineMode mode = ImagineMode::Oracle;
  Pose realized_pose;
};

// Body-frame displacement applied at `pose`; dtheta added to the heading.
// A blocked landing cell snaps to the nearest free cell's center.
Pose waypoint_to_pose(const GridWorld& world, const Pose& pose,
                      const RelativeWaypoint& waypoint);

// Oracle: the forward view the agent would capture after relocating to the
// waypoint. Degraded: the oracle view corrupted by a seeded stream — per
// ray, with probability p_swap the class becomes a uniformly random
// non-wall class, then depth is scaled by (1 + eps), eps uniform in
// [-depth_jitter, depth_jitter], clamped to (0, max range].
ImaginedView imagine_view(const GridWorld& world, const Pose& pose,
                          const RelativeWaypoint& waypoint, ImagineMode mode,
                          const DegradationParams& noise, std::uint64_t seed,
                          const RaycastParams& rp = RaycastParams{});

// The memory-free ablation fallback: 2.0 m along each panorama sector
// direction, dtheta aligned with the travel direction.
std::array<RelativeWaypoint, 6> fixed_radius_waypoints();

}  // namespace inav
