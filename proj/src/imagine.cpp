#include "inav/imagine.hpp"

#include <algorithm>
#include <cmath>

#include "inav/error.hpp"
#include "inav/rng.hpp"

namespace inav {

Pose waypoint_to_pose(const GridWorld& world, const Pose& pose,
                      const RelativeWaypoint& waypoint) {
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  Pose out;
  out.x = pose.x + waypoint.dy * c - waypoint.dx * s;
  out.y = pose.y + waypoint.dy * s + waypoint.dx * c;
  out.theta = wrap_two_pi(pose.theta + waypoint.dtheta);
  const Cell landing = world.cell_of(out.x, out.y);
  const bool inside = out.x >= 0.0 && out.x < world.width * world.resolution &&
                      out.y >= 0.0 && out.y < world.height * world.resolution;
  if (!inside || !world.is_free(landing)) {
    const Cell snapped = nearest_free_cell(world, out.x, out.y);
    const Pose center = world.center_pose(snapped, out.theta);
    out.x = center.x;
    out.y = center.y;
  }
  return out;
}

ImaginedView imagine_view(const GridWorld& world, const Pose& pose,
                          const RelativeWaypoint& waypoint, ImagineMode mode,
                          const DegradationParams& noise, std::uint64_t seed,
                          const RaycastParams& rp) {
  if (noise.p_swap < 0.0 || noise.p_swap > 1.0)
    throw ConfigError("imagine_view: p_swap must be in [0,1]");
  if (noise.depth_jitter < 0.0 || noise.depth_jitter >= 1.0)
    throw ConfigError("imagine_view: depth_jitter must be in [0,1)");

  ImaginedView out;
  out.source_waypoint = waypoint;
  out.mode = mode;
  out.realized_pose = waypoint_to_pose(world, pose, waypoint);
  out.view = raycast_view(world, out.realized_pose, 0.0, rp);

  if (mode == ImagineMode::Degraded) {
    Rng rng(Rng::mix(seed, 0xDE64));
    const int swap_range = std::max(1, world.num_classes - 1);
    for (Ray& r : out.view.rays) {
      if (rng.uniform01() < noise.p_swap)
        r.cls = 1 + static_cast<int>(rng.bounded(static_cast<std::uint32_t>(swap_range)));
      const double eps = rng.uniform(-noise.depth_jitter, noise.depth_jitter);
      r.depth = std::clamp(r.depth * (1.0 + eps), 1e-9, rp.max_range);
    }
  }
  return out;
}

std::array<RelativeWaypoint, 6> fixed_radius_waypoints() {
  const double s3 = std::sqrt(3.0);
  // (dx, dy) = 2 m along sector directions 0, 60, ..., 300 degrees;
  // exact constants keep opposite pairs bitwise negations.
  return {RelativeWaypoint{0.0, 2.0, 0.0},
          RelativeWaypoint{s3, 1.0, kPi / 3.0},
          RelativeWaypoint{s3, -1.0, 2.0 * kPi / 3.0},
          RelativeWaypoint{0.0, -2.0, kPi},
          RelativeWaypoint{-s3, -1.0, -2.0 * kPi / 3.0},
          RelativeWaypoint{-s3, 1.0, -kPi / 3.0}};
}

}  // namespace inav
