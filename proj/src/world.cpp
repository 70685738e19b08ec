#include "inav/world.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "inav/error.hpp"

namespace inav {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::array<Cell, 4> kNeighborSteps = {Cell{1, 0}, Cell{-1, 0},
                                                Cell{0, 1}, Cell{0, -1}};

}  // namespace

Cell GridWorld::cell_of(double wx, double wy) const {
  int cx = static_cast<int>(std::floor(wx / resolution));
  int cy = static_cast<int>(std::floor(wy / resolution));
  cx = std::clamp(cx, 0, width - 1);
  cy = std::clamp(cy, 0, height - 1);
  return Cell{cx, cy};
}

// ---------------------------------------------------------------------------
// Generation

namespace {

struct Slot {
  int x0, y0;  // interior top-left (cells)
  int w, h;    // interior size
};

void validate_params(const GenParams& p) {
  if (p.width < 16 || p.height < 16)
    throw GenerationError("generate_world: cell counts must be >= 16x16");
  if (p.rooms < 2) throw GenerationError("generate_world: room count must be >= 2");
  if (p.num_classes < 6)
    throw GenerationError("generate_world: object classes must be >= 6");
  if (p.objects_per_class < 1)
    throw GenerationError("generate_world: objects_per_class must be >= 1");
  if (p.resolution <= 0.0) throw GenerationError("generate_world: resolution must be > 0");
  if (p.door_extra_prob < 0.0 || p.door_extra_prob > 1.0)
    throw GenerationError("generate_world: door_extra_prob must be in [0,1]");
  if (p.goal_category >= 0 &&
      (p.goal_category < kFirstObjectClass || p.goal_category >= p.num_classes))
    throw GenerationError("generate_world: goal_category outside object class range");
}

// Reference view for instance goals: the closest free cell with line of
// sight onto the instance, facing it. Scan order is deterministic.
std::optional<ViewObservation> capture_instance_view(const GridWorld& world,
                                                     Cell target) {
  struct Candidate {
    double dist2;
    Cell cell;
  };
  std::vector<Candidate> candidates;
  const Pose target_center = world.center_pose(target);
  for (int y = 0; y < world.height; ++y) {
    for (int x = 0; x < world.width; ++x) {
      if (!world.is_free(x, y)) continue;
      if (x == target.x && y == target.y) continue;
      const Pose p = world.center_pose(Cell{x, y});
      const double dx = target_center.x - p.x;
      const double dy = target_center.y - p.y;
      const double d2 = dx * dx + dy * dy;
      const double d = std::sqrt(d2);
      if (d < 0.5 || d > 3.0) continue;
      candidates.push_back({d2, Cell{x, y}});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.dist2 < b.dist2; });
  for (const auto& cand : candidates) {
    const Pose from = world.center_pose(cand.cell);
    const double ang = std::atan2(target_center.y - from.y, target_center.x - from.x);
    Pose look{from.x, from.y, wrap_two_pi(ang)};
    ViewObservation view = raycast_view(world, look, 0.0);
    // Accept when the center rays actually hit the instance's class.
    bool hit = false;
    for (const Ray& r : view.rays) {
      if (r.cls == world.class_at(target.x, target.y)) {
        hit = true;
        break;
      }
    }
    if (hit) return view;
  }
  return std::nullopt;
}

}  // namespace

GridWorld generate_world(std::uint64_t seed, const GenParams& params) {
  validate_params(params);
  Rng rng(Rng::mix(seed, 0x5EED));

  GridWorld w;
  w.width = params.width;
  w.height = params.height;
  w.resolution = params.resolution;
  w.rng_seed = seed;
  w.num_classes = params.num_classes;
  w.occupancy.assign(static_cast<std::size_t>(w.width) * w.height, 1);
  w.semantics.assign(static_cast<std::size_t>(w.width) * w.height, kWallClass);

  // Room lattice. Slot interiors are separated by exactly one wall cell,
  // so a door is a single carved cell on the shared wall line.
  int rooms_x = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(params.rooms))));
  int rooms_y = (params.rooms + rooms_x - 1) / rooms_x;
  const int slot_w = (params.width - 1) / rooms_x;
  const int slot_h = (params.height - 1) / rooms_y;
  if (slot_w < 4 || slot_h < 4)
    throw GenerationError("generate_world: grid too small for requested room count");

  std::vector<Slot> slots;
  std::vector<int> slot_of_room;  // lattice index per used room
  for (int j = 0; j < rooms_y && static_cast<int>(slots.size()) < params.rooms; ++j) {
    for (int i = 0; i < rooms_x && static_cast<int>(slots.size()) < params.rooms; ++i) {
      slots.push_back(Slot{1 + i * slot_w, 1 + j * slot_h, slot_w - 1, slot_h - 1});
      slot_of_room.push_back(j * rooms_x + i);
    }
  }

  for (const Slot& s : slots) {
    for (int y = s.y0; y < s.y0 + s.h; ++y) {
      for (int x = s.x0; x < s.x0 + s.w; ++x) {
        w.occupancy[w.idx(x, y)] = 0;
        w.semantics[w.idx(x, y)] = kFloorClass;
      }
    }
  }

  // Adjacency edges between used rooms on the lattice.
  struct Edge {
    int a, b;
    bool horizontal;
  };
  std::vector<Edge> edges;
  auto room_at = [&](int li) -> int {
    for (std::size_t r = 0; r < slot_of_room.size(); ++r)
      if (slot_of_room[r] == li) return static_cast<int>(r);
    return -1;
  };
  for (std::size_t r = 0; r < slots.size(); ++r) {
    const int li = slot_of_room[r];
    const int i = li % rooms_x;
    const int j = li / rooms_x;
    if (i + 1 < rooms_x) {
      int nb = room_at(li + 1);
      if (nb >= 0) edges.push_back({static_cast<int>(r), nb, true});
    }
    if (j + 1 < rooms_y) {
      int nb = room_at(li + rooms_x);
      if (nb >= 0) edges.push_back({static_cast<int>(r), nb, false});
    }
  }
  if (edges.empty() && slots.size() > 1)
    throw GenerationError("generate_world: room lattice is disconnected");

  auto carve_door = [&](const Edge& e) {
    const Slot& a = slots[e.a];
    const Slot& b = slots[e.b];
    if (e.horizontal) {
      const int wall_x = a.x0 + a.w;  // == b.x0 - 1
      const int y = a.y0 + static_cast<int>(rng.bounded(static_cast<std::uint32_t>(a.h)));
      w.occupancy[w.idx(wall_x, y)] = 0;
      w.semantics[w.idx(wall_x, y)] = kFloorClass;
      (void)b;
    } else {
      const int wall_y = a.y0 + a.h;
      const int x = a.x0 + static_cast<int>(rng.bounded(static_cast<std::uint32_t>(a.w)));
      w.occupancy[w.idx(x, wall_y)] = 0;
      w.semantics[w.idx(x, wall_y)] = kFloorClass;
    }
  };

  // Random spanning tree (Prim) guarantees one connected free region.
  std::vector<bool> in_tree(slots.size(), false);
  in_tree[0] = true;
  std::vector<bool> edge_used(edges.size(), false);
  for (std::size_t added = 1; added < slots.size(); ++added) {
    std::vector<std::size_t> frontier;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      if (edge_used[k]) continue;
      if (in_tree[edges[k].a] != in_tree[edges[k].b]) frontier.push_back(k);
    }
    if (frontier.empty())
      throw GenerationError("generate_world: room lattice is disconnected");
    const std::size_t pick = frontier[rng.index(frontier.size())];
    edge_used[pick] = true;
    carve_door(edges[pick]);
    in_tree[edges[pick].a] = true;
    in_tree[edges[pick].b] = true;
  }
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (!edge_used[k] && rng.uniform01() < params.door_extra_prob) carve_door(edges[k]);
  }

  // Each object class clusters inside one seeded room, so rooms carry
  // distinct semantic signatures and revisits are recognizable from
  // features alone.
  auto place_object = [&](int cls, const Slot& s) -> bool {
    for (int tries = 0; tries < 256; ++tries) {
      const int x = s.x0 + static_cast<int>(rng.bounded(static_cast<std::uint32_t>(s.w)));
      const int y = s.y0 + static_cast<int>(rng.bounded(static_cast<std::uint32_t>(s.h)));
      if (w.is_free(x, y) && w.class_at(x, y) == kFloorClass) {
        w.semantics[w.idx(x, y)] = cls;
        return true;
      }
    }
    for (int y = 0; y < w.height; ++y)
      for (int x = 0; x < w.width; ++x)
        if (w.is_free(x, y) && w.class_at(x, y) == kFloorClass) {
          w.semantics[w.idx(x, y)] = cls;
          return true;
        }
    return false;
  };
  for (int cls = kFirstObjectClass; cls < params.num_classes; ++cls) {
    const Slot& home = slots[rng.index(slots.size())];
    for (int n = 0; n < params.objects_per_class; ++n) {
      if (!place_object(cls, home))
        throw GenerationError("generate_world: more objects than free cells");
    }
  }

  // Goal placement.
  GoalSpec goal;
  const int goal_class = params.goal_category >= 0
                             ? params.goal_category
                             : kFirstObjectClass +
                                   static_cast<int>(rng.bounded(static_cast<std::uint32_t>(
                                       params.num_classes - kFirstObjectClass)));
  goal.category_id = goal_class;
  std::vector<Cell> class_cells;
  for (int y = 0; y < w.height; ++y)
    for (int x = 0; x < w.width; ++x)
      if (w.class_at(x, y) == goal_class) class_cells.push_back(Cell{x, y});
  if (class_cells.empty())
    throw GenerationError("generate_world: goal class has no placed objects");

  if (params.goal_kind == GoalKind::Category) {
    goal.kind = GoalKind::Category;
    goal.goal_cells = class_cells;
  } else {
    goal.kind = GoalKind::Instance;
    // Try instances in seeded order until one offers a reference view.
    std::vector<Cell> order = class_cells;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.index(i)]);
    bool placed = false;
    for (const Cell& inst : order) {
      auto view = capture_instance_view(w, inst);
      if (view) {
        goal.goal_cells = {inst};
        goal.instance_view = *view;
        placed = true;
        break;
      }
    }
    if (!placed)
      throw GenerationError("generate_world: no instance with a valid reference view");
  }
  w.goal_spec = goal;
  return w;
}

// ---------------------------------------------------------------------------
// Geodesics

namespace {

std::vector<int> bfs_field(const GridWorld& world, const std::vector<Cell>& sources) {
  std::vector<int> dist(world.occupancy.size(), -1);
  std::deque<Cell> queue;
  for (const Cell& s : sources) {
    if (!world.in_bounds(s.x, s.y) || !world.is_free(s)) continue;
    if (dist[world.idx(s.x, s.y)] == 0) continue;
    dist[world.idx(s.x, s.y)] = 0;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    const int d = dist[world.idx(c.x, c.y)];
    for (const Cell& step : kNeighborSteps) {
      const int nx = c.x + step.x;
      const int ny = c.y + step.y;
      if (!world.in_bounds(nx, ny) || !world.is_free(nx, ny)) continue;
      if (dist[world.idx(nx, ny)] >= 0) continue;
      dist[world.idx(nx, ny)] = d + 1;
      queue.push_back(Cell{nx, ny});
    }
  }
  return dist;
}

}  // namespace

std::optional<double> geodesic_distance(const GridWorld& world, Cell a, Cell b) {
  if (!world.in_bounds(a.x, a.y) || !world.in_bounds(b.x, b.y)) return std::nullopt;
  if (!world.is_free(a) || !world.is_free(b)) return std::nullopt;
  if (a == b) return 0.0;
  const std::vector<int> dist = bfs_field(world, {a});
  const int steps = dist[world.idx(b.x, b.y)];
  if (steps < 0) return std::nullopt;
  return steps * world.resolution;
}

std::vector<int> goal_distance_field(const GridWorld& world) {
  return bfs_field(world, world.goal_spec.goal_cells);
}

std::optional<double> geodesic_to_goal(const GridWorld& world, Cell from) {
  if (!world.in_bounds(from.x, from.y) || !world.is_free(from)) return std::nullopt;
  const std::vector<int> dist = goal_distance_field(world);
  const int steps = dist[world.idx(from.x, from.y)];
  if (steps < 0) return std::nullopt;
  return steps * world.resolution;
}

// ---------------------------------------------------------------------------
// Raycasting

namespace {

Ray cast_single(const GridWorld& world, double ox, double oy, double angle,
                double max_range) {
  const double dirx = std::cos(angle);
  const double diry = std::sin(angle);
  const double res = world.resolution;

  int cx = static_cast<int>(std::floor(ox / res));
  int cy = static_cast<int>(std::floor(oy / res));

  const int step_x = dirx > 0.0 ? 1 : (dirx < 0.0 ? -1 : 0);
  const int step_y = diry > 0.0 ? 1 : (diry < 0.0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  double t_max_x = inf, t_delta_x = inf;
  double t_max_y = inf, t_delta_y = inf;
  if (step_x > 0) {
    t_max_x = ((cx + 1) * res - ox) / dirx;
    t_delta_x = res / dirx;
  } else if (step_x < 0) {
    t_max_x = (ox - cx * res) / -dirx;
    t_delta_x = res / -dirx;
  }
  if (step_y > 0) {
    t_max_y = ((cy + 1) * res - oy) / diry;
    t_delta_y = res / diry;
  } else if (step_y < 0) {
    t_max_y = (oy - cy * res) / -diry;
    t_delta_y = res / -diry;
  }

  // Amanatides-Woo traversal; the origin cell never counts as a hit.
  while (true) {
    double t;
    if (t_max_x <= t_max_y) {
      t = t_max_x;
      t_max_x += t_delta_x;
      cx += step_x;
    } else {
      t = t_max_y;
      t_max_y += t_delta_y;
      cy += step_y;
    }
    if (t >= max_range) return Ray{max_range, kWallClass};
    if (!world.in_bounds(cx, cy)) return Ray{std::max(t, 1e-9), kWallClass};
    if (world.is_opaque(cx, cy))
      return Ray{std::max(t, 1e-9), world.class_at(cx, cy)};
  }
}

}  // namespace

ViewObservation raycast_view(const GridWorld& world, const Pose& pose,
                             double heading_offset, const RaycastParams& rp) {
  ViewObservation view;
  const double center = pose.theta + heading_offset;
  view.heading = wrap_two_pi(center);
  view.rays.reserve(rp.rays_per_view);
  for (int k = 0; k < rp.rays_per_view; ++k) {
    // Midpoint spacing so six adjacent views tile the full circle.
    const double ang = center - rp.fov / 2.0 + (k + 0.5) * rp.fov / rp.rays_per_view;
    view.rays.push_back(cast_single(world, pose.x, pose.y, ang, rp.max_range));
  }
  return view;
}

Cell nearest_free_cell(const GridWorld& world, double wx, double wy) {
  const double max_x = world.width * world.resolution;
  const double max_y = world.height * world.resolution;
  wx = std::clamp(wx, 0.0, std::nexttoward(max_x, 0.0));
  wy = std::clamp(wy, 0.0, std::nexttoward(max_y, 0.0));

  double best = std::numeric_limits<double>::infinity();
  Cell best_cell{-1, -1};
  for (int y = 0; y < world.height; ++y) {
    for (int x = 0; x < world.width; ++x) {
      if (!world.is_free(x, y)) continue;
      const double cx = (x + 0.5) * world.resolution;
      const double cy = (y + 0.5) * world.resolution;
      const double d2 = (cx - wx) * (cx - wx) + (cy - wy) * (cy - wy);
      if (d2 < best) {
        best = d2;
        best_cell = Cell{x, y};
      }
    }
  }
  if (best_cell.x < 0) throw GenerationError("nearest_free_cell: world has no free cells");
  return best_cell;
}

Cell random_free_cell(const GridWorld& world, Rng& rng) {
  for (int tries = 0; tries < 1024; ++tries) {
    const int x = static_cast<int>(rng.bounded(static_cast<std::uint32_t>(world.width)));
    const int y = static_cast<int>(rng.bounded(static_cast<std::uint32_t>(world.height)));
    if (world.is_free(x, y)) return Cell{x, y};
  }
  for (int y = 0; y < world.height; ++y)
    for (int x = 0; x < world.width; ++x)
      if (world.is_free(x, y)) return Cell{x, y};
  throw GenerationError("random_free_cell: world has no free cells");
}

bool is_doorlike(const GridWorld& world, Cell c) {
  if (!world.in_bounds(c.x, c.y) || !world.is_free(c)) return false;
  auto blocked = [&](int x, int y) {
    return !world.in_bounds(x, y) || world.is_blocked(x, y);
  };
  const bool horizontal_gap = blocked(c.x, c.y - 1) && blocked(c.x, c.y + 1);
  const bool vertical_gap = blocked(c.x - 1, c.y) && blocked(c.x + 1, c.y);
  return horizontal_gap || vertical_gap;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

ordered_json view_to_json(const ViewObservation& v) {
  ordered_json j;
  j["heading"] = v.heading;
  j["timestep"] = v.timestep;
  ordered_json rays = ordered_json::array();
  for (const Ray& r : v.rays) rays.push_back({r.depth, r.cls});
  j["rays"] = std::move(rays);
  return j;
}

ViewObservation view_from_json(const ordered_json& j) {
  ViewObservation v;
  v.heading = j.at("heading").get<double>();
  v.timestep = j.at("timestep").get<int>();
  for (const auto& r : j.at("rays"))
    v.rays.push_back(Ray{r.at(0).get<double>(), r.at(1).get<int>()});
  return v;
}

}  // namespace

std::string world_to_json(const GridWorld& world) {
  ordered_json j;
  j["version"] = 1;
  j["seed"] = world.rng_seed;
  j["resolution"] = world.resolution;
  j["width"] = world.width;
  j["height"] = world.height;
  std::string bits(world.occupancy.size(), '0');
  for (std::size_t i = 0; i < world.occupancy.size(); ++i)
    if (world.occupancy[i]) bits[i] = '1';
  j["occupancy"] = std::move(bits);
  j["semantics"] = world.semantics;
  ordered_json goal;
  goal["kind"] = world.goal_spec.kind == GoalKind::Category ? "category" : "instance";
  goal["category_id"] = world.goal_spec.category_id;
  ordered_json cells = ordered_json::array();
  for (const Cell& c : world.goal_spec.goal_cells) cells.push_back({c.x, c.y});
  goal["goal_cells"] = std::move(cells);
  if (world.goal_spec.kind == GoalKind::Instance)
    goal["instance_view"] = view_to_json(world.goal_spec.instance_view);
  j["goal_spec"] = std::move(goal);
  return j.dump();
}

GridWorld world_from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  if (j.at("version").get<int>() != 1)
    throw IoError("world file: unsupported version");
  GridWorld w;
  w.rng_seed = j.at("seed").get<std::uint64_t>();
  w.resolution = j.at("resolution").get<double>();
  w.width = j.at("width").get<int>();
  w.height = j.at("height").get<int>();
  const std::string bits = j.at("occupancy").get<std::string>();
  if (bits.size() != static_cast<std::size_t>(w.width) * w.height)
    throw IoError("world file: occupancy size mismatch");
  w.occupancy.resize(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) w.occupancy[i] = bits[i] == '1' ? 1 : 0;
  w.semantics = j.at("semantics").get<std::vector<int>>();
  if (w.semantics.size() != w.occupancy.size())
    throw IoError("world file: semantics size mismatch");
  const auto& goal = j.at("goal_spec");
  w.goal_spec.kind = goal.at("kind").get<std::string>() == "instance"
                         ? GoalKind::Instance
                         : GoalKind::Category;
  w.goal_spec.category_id = goal.at("category_id").get<int>();
  for (const auto& c : goal.at("goal_cells"))
    w.goal_spec.goal_cells.push_back(Cell{c.at(0).get<int>(), c.at(1).get<int>()});
  if (w.goal_spec.kind == GoalKind::Instance)
    w.goal_spec.instance_view = view_from_json(goal.at("instance_view"));
  w.num_classes = *std::max_element(w.semantics.begin(), w.semantics.end()) + 1;
  return w;
}

void save_world(const GridWorld& world, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_world: cannot open " + path);
  out << world_to_json(world) << '\n';
}

GridWorld load_world(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_world: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return world_from_json(ss.str());
}

}  // namespace inav
