#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "inav/observation.hpp"
#include "inav/rng.hpp"

namespace inav {

// Semantic class layout: 0 = wall (every blocked cell), 1 = floor,
// 2..C-1 = object classes. Object cells are traversable but stop rays,
// so goals stay reachable while remaining visible to the sensor.
constexpr int kWallClass = 0;
constexpr int kFloorClass = 1;
constexpr int kFirstObjectClass = 2;

constexpr double kStepMeters = 0.25;
constexpr double kTurnRadians = kPi / 6.0;  // 30 degrees

struct Cell {
  int x = 0;
  int y = 0;

  bool operator==(const Cell&) const = default;
};

struct Pose {
  double x = 0.0;      // meters, world frame
  double y = 0.0;
  double theta = 0.0;  // radians in [0, 2*pi)
};

enum class GoalKind { Category, Instance };

struct GoalSpec {
  GoalKind kind = GoalKind::Category;
  int category_id = kFirstObjectClass;  // for instance goals, the instance's class
  std::vector<Cell> goal_cells;         // cells occupied by goal objects
  ViewObservation instance_view;        // reference view, instance kind only
};

struct GenParams {
  int width = 48;
  int height = 48;
  int rooms = 6;
  int num_classes = 8;  // includes wall and floor
  int objects_per_class = 3;
  double door_extra_prob = 0.15;  // wall openings beyond the spanning tree
  double resolution = 0.25;       // meters per cell
  GoalKind goal_kind = GoalKind::Category;
  int goal_category = -1;  // -1: seeded random object class
};

struct GridWorld {
  int width = 0;
  int height = 0;
  double resolution = 0.25;
  std::vector<std::uint8_t> occupancy;  // row-major, 1 = blocked
  std::vector<int> semantics;           // row-major class ids in [0, num_classes)
  GoalSpec goal_spec;
  std::uint64_t rng_seed = 0;
  int num_classes = 2;  // derived on load, not serialized

  std::size_t idx(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + x;
  }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  bool is_blocked(int x, int y) const { return occupancy[idx(x, y)] != 0; }
  bool is_free(int x, int y) const { return occupancy[idx(x, y)] == 0; }
  bool is_free(Cell c) const { return is_free(c.x, c.y); }
  int class_at(int x, int y) const { return semantics[idx(x, y)]; }
  // Opaque cells terminate rays: walls plus object cells.
  bool is_opaque(int x, int y) const {
    return is_blocked(x, y) || class_at(x, y) >= kFirstObjectClass;
  }
  Cell cell_of(double wx, double wy) const;
  Cell cell_of(const Pose& p) const { return cell_of(p.x, p.y); }
  Pose center_pose(Cell c, double theta = 0.0) const {
    return Pose{(c.x + 0.5) * resolution, (c.y + 0.5) * resolution, theta};
  }
};

struct RaycastParams {
  int rays_per_view = 32;
  double fov = kPi / 3.0;  // 60 degrees
  double max_range = 5.0;  // meters
};

// Deterministic procedural world: rectangular rooms on a coarse lattice,
// 1-cell doors on a random spanning tree, uniform object scatter.
GridWorld generate_world(std::uint64_t seed, const GenParams& params);

// Shortest 4-connected free-cell path length in meters. nullopt when either
// endpoint is blocked or the pair is disconnected.
std::optional<double> geodesic_distance(const GridWorld& world, Cell a, Cell b);

// BFS step counts from all goal cells; -1 marks unreachable cells.
std::vector<int> goal_distance_field(const GridWorld& world);

// Meters from `from` to the nearest goal cell, nullopt if unreachable.
std::optional<double> geodesic_to_goal(const GridWorld& world, Cell from);

// 60-degree scan centered on pose.theta + heading_offset. Each ray reports
// the entry distance of the first opaque cell (clamped to max range) and
// that cell's class, or class 0 at max range.
ViewObservation raycast_view(const GridWorld& world, const Pose& pose,
                             double heading_offset,
                             const RaycastParams& rp = RaycastParams{});

// Free cell with minimum Euclidean center distance to the (clamped) point;
// ties break in row-major order. Throws GenerationError when no cell is free.
Cell nearest_free_cell(const GridWorld& world, double wx, double wy);

// Uniform over free cells; used for episode starts and demo sampling.
Cell random_free_cell(const GridWorld& world, Rng& rng);

// Free cell flanked by walls on both perpendicular sides (a door or a
// 1-cell corridor). The demo walker prefers these on shortest-path ties.
bool is_doorlike(const GridWorld& world, Cell c);

// Versioned JSON, byte-stable across save/load/save round trips.
std::string world_to_json(const GridWorld& world);
GridWorld world_from_json(const std::string& text);
void save_world(const GridWorld& world, const std::string& path);
GridWorld load_world(const std::string& path);

}  // namespace inav
