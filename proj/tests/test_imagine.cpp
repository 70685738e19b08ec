#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "inav/imagine.hpp"
#include "test_support.hpp"

using namespace inav;
using inav::testing::world_from_ascii;

namespace {

GridWorld open_room() {
  std::vector<std::string> rows;
  rows.push_back(std::string(24, '#'));
  for (int r = 0; r < 22; ++r) rows.push_back("#" + std::string(22, '.') + "#");
  rows.push_back(std::string(24, '#'));
  return world_from_ascii(rows);
}

}  // namespace

TEST_CASE("waypoint_to_pose follows the body-frame convention") {
  const GridWorld w = open_room();
  // forward 1 m at theta=0 lands +x
  const Pose p0 = waypoint_to_pose(w, Pose{2.0, 2.0, 0.0}, RelativeWaypoint{0, 1, 0});
  CHECK(p0.x == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(p0.y == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(p0.theta == doctest::Approx(0.0));
  // forward 1 m at theta=90 lands +y
  const Pose p1 =
      waypoint_to_pose(w, Pose{2.0, 2.0, kPi / 2.0}, RelativeWaypoint{0, 1, 0});
  CHECK(p1.x == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(p1.y == doctest::Approx(3.0).epsilon(1e-12));
  // lateral +1 m at theta=0 lands to the left (+y)
  const Pose p2 = waypoint_to_pose(w, Pose{2.0, 2.0, 0.0}, RelativeWaypoint{1, 0, 0});
  CHECK(p2.x == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(p2.y == doctest::Approx(3.0).epsilon(1e-12));
  // dtheta accumulates mod 2*pi
  const Pose p3 =
      waypoint_to_pose(w, Pose{2.0, 2.0, 5.8}, RelativeWaypoint{0, 0, 1.0});
  CHECK(p3.theta == doctest::Approx(wrap_two_pi(6.8)).epsilon(1e-12));
}

TEST_CASE("waypoint_to_pose inverts relative_between") {
  const GridWorld w = open_room();
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose from{rng.uniform(1.0, 5.0), rng.uniform(1.0, 5.0), rng.uniform(0, kTwoPi)};
    const Pose to{rng.uniform(1.0, 5.0), rng.uniform(1.0, 5.0), rng.uniform(0, kTwoPi)};
    const Pose back = waypoint_to_pose(w, from, relative_between(from, to));
    CHECK(back.x == doctest::Approx(to.x).epsilon(1e-9));
    CHECK(back.y == doctest::Approx(to.y).epsilon(1e-9));
    CHECK(back.theta == doctest::Approx(wrap_two_pi(to.theta)).epsilon(1e-9));
  }
}

TEST_CASE("waypoint landing in a wall snaps to the nearest free cell") {
  const GridWorld w = world_from_ascii({
      "#####",
      "#...#",
      "#####",
  });
  const Pose pose = w.center_pose({1, 1}, 0.0);
  const Pose out = waypoint_to_pose(w, pose, RelativeWaypoint{0, 2.5, 0});
  const Cell c = w.cell_of(out);
  CHECK(w.is_free(c));
  CHECK(c == Cell{3, 1});
  CHECK(out.x == doctest::Approx(w.center_pose(c).x));
}

TEST_CASE("zero-noise degraded output equals oracle output") {
  const GridWorld w = generate_world(31, GenParams{});
  Rng rng(2);
  const Pose pose = w.center_pose(random_free_cell(w, rng), kTurnRadians);
  const RelativeWaypoint wp{0.5, 1.5, 0.2};
  const ImaginedView oracle =
      imagine_view(w, pose, wp, ImagineMode::Oracle, DegradationParams{}, 99);
  const ImaginedView degraded =
      imagine_view(w, pose, wp, ImagineMode::Degraded, DegradationParams{0.0, 0.0}, 99);
  CHECK(oracle.view == degraded.view);
}

TEST_CASE("degraded imagination is deterministic per seed") {
  const GridWorld w = generate_world(31, GenParams{});
  Rng rng(5);
  const Pose pose = w.center_pose(random_free_cell(w, rng), 0.0);
  const RelativeWaypoint wp{0.0, 2.0, 0.0};
  const DegradationParams noise;
  const ImaginedView a = imagine_view(w, pose, wp, ImagineMode::Degraded, noise, 1234);
  const ImaginedView b = imagine_view(w, pose, wp, ImagineMode::Degraded, noise, 1234);
  CHECK(a.view == b.view);
  const ImaginedView c = imagine_view(w, pose, wp, ImagineMode::Degraded, noise, 1235);
  CHECK(a.view != c.view);
}

TEST_CASE("p_swap=1 swaps follow the documented seeded stream") {
  const GridWorld w = generate_world(31, GenParams{});
  Rng rng(6);
  const Pose pose = w.center_pose(random_free_cell(w, rng), 0.0);
  const RelativeWaypoint wp{0.0, 1.0, 0.0};
  const DegradationParams noise{1.0, 0.1};
  const std::uint64_t seed = 777;
  const ImaginedView oracle =
      imagine_view(w, pose, wp, ImagineMode::Oracle, DegradationParams{}, seed);
  const ImaginedView degraded =
      imagine_view(w, pose, wp, ImagineMode::Degraded, noise, seed);

  // replay the corruption stream against the oracle view
  Rng replay(Rng::mix(seed, 0xDE64));
  const RaycastParams rp;
  for (std::size_t k = 0; k < oracle.view.rays.size(); ++k) {
    Ray expected = oracle.view.rays[k];
    if (replay.uniform01() < noise.p_swap)
      expected.cls =
          1 + static_cast<int>(replay.bounded(static_cast<std::uint32_t>(w.num_classes - 1)));
    const double eps = replay.uniform(-noise.depth_jitter, noise.depth_jitter);
    expected.depth = std::clamp(expected.depth * (1.0 + eps), 1e-9, rp.max_range);
    CHECK(degraded.view.rays[k].cls == expected.cls);
    CHECK(degraded.view.rays[k].depth == expected.depth);
    CHECK(expected.cls >= 1);  // non-wall by construction
  }
}

TEST_CASE("oracle imagined view equals the physically relocated forward view") {
  GenParams p;
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const GridWorld w = generate_world(1000 + trial, p);
    const Pose pose = w.center_pose(random_free_cell(w, rng),
                                    rng.bounded(12) * kTurnRadians);
    const RelativeWaypoint wp{rng.uniform(-2, 2), rng.uniform(-2, 2),
                              rng.uniform(-0.5, 0.5)};
    const ImaginedView img =
        imagine_view(w, pose, wp, ImagineMode::Oracle, DegradationParams{}, 0);
    const ViewObservation relocated = raycast_view(w, img.realized_pose, 0.0);
    CHECK(img.view == relocated);
    CHECK(w.is_free(w.cell_of(img.realized_pose)));
  }
}

TEST_CASE("degradation respects depth bounds and ray structure") {
  const GridWorld w = generate_world(8, GenParams{});
  Rng rng(9);
  const RaycastParams rp;
  for (int trial = 0; trial < 50; ++trial) {
    const Pose pose = w.center_pose(random_free_cell(w, rng), rng.uniform(0, kTwoPi));
    const RelativeWaypoint wp{rng.uniform(-2, 2), rng.uniform(-2, 2), 0.0};
    const DegradationParams noise{rng.uniform(0, 1), rng.uniform(0, 0.9)};
    const ImaginedView a =
        imagine_view(w, pose, wp, ImagineMode::Degraded, noise, rng.next_u64());
    CHECK(a.view.rays.size() == static_cast<std::size_t>(rp.rays_per_view));
    const ImaginedView oracle =
        imagine_view(w, pose, wp, ImagineMode::Oracle, DegradationParams{}, 0);
    CHECK(a.view.heading == oracle.view.heading);
    for (const Ray& r : a.view.rays) {
      CHECK(r.depth > 0.0);
      CHECK(r.depth <= rp.max_range);
    }
  }
}

TEST_CASE("fixed-radius waypoints: six spokes, 2 m, opposite pairs cancel") {
  const auto wps = fixed_radius_waypoints();
  REQUIRE(wps.size() == 6);
  for (const RelativeWaypoint& w : wps)
    CHECK(std::hypot(w.dx, w.dy) == doctest::Approx(2.0).epsilon(1e-12));
  for (int i = 0; i < 6; ++i) {
    const RelativeWaypoint& a = wps[i];
    const RelativeWaypoint& b = wps[(i + 3) % 6];
    CHECK(a.dx + b.dx == 0.0);
    CHECK(a.dy + b.dy == 0.0);
    // headings align with the travel direction, 60 degrees apart
    const double dir_a = std::atan2(a.dx, a.dy);  // body frame: 0 = forward
    CHECK(wrap_pi(a.dtheta - dir_a) == doctest::Approx(0.0).epsilon(1e-9));
    const RelativeWaypoint& n = wps[(i + 1) % 6];
    const double dir_n = std::atan2(n.dx, n.dy);
    CHECK(std::abs(wrap_pi(dir_n - dir_a)) == doctest::Approx(kPi / 3.0).epsilon(1e-9));
  }
}
