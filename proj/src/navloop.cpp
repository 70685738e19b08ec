#include "inav/navloop.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "inav/error.hpp"

namespace inav {

const char* action_name(Action a) {
  switch (a) {
    case Action::Stop: return "Stop";
    case Action::MoveAhead: return "MoveAhead";
    case Action::TurnLeft: return "TurnLeft";
    case Action::TurnRight: return "TurnRight";
  }
  return "?";
}

std::optional<Action> action_from_name(const std::string& name) {
  if (name == "Stop") return Action::Stop;
  if (name == "MoveAhead") return Action::MoveAhead;
  if (name == "TurnLeft") return Action::TurnLeft;
  if (name == "TurnRight") return Action::TurnRight;
  return std::nullopt;
}

std::pair<Pose, bool> apply_action(const GridWorld& world, const Pose& pose,
                                   Action action) {
  switch (action) {
    case Action::Stop:
      return {pose, false};
    case Action::TurnLeft:
      return {Pose{pose.x, pose.y, wrap_two_pi(pose.theta + kTurnRadians)}, false};
    case Action::TurnRight:
      return {Pose{pose.x, pose.y, wrap_two_pi(pose.theta - kTurnRadians)}, false};
    case Action::MoveAhead: {
      const double nx = pose.x + kStepMeters * std::cos(pose.theta);
      const double ny = pose.y + kStepMeters * std::sin(pose.theta);
      const int cx = static_cast<int>(std::floor(nx / world.resolution));
      const int cy = static_cast<int>(std::floor(ny / world.resolution));
      if (!world.in_bounds(cx, cy) || world.is_blocked(cx, cy))
        return {pose, true};
      return {Pose{nx, ny, pose.theta}, false};
    }
  }
  return {pose, false};
}

namespace {

constexpr double kReachThreshold = 0.25 - 1e-9;

int heading_units(double theta) {
  const int k = static_cast<int>(std::lround(theta / kTurnRadians));
  return ((k % 12) + 12) % 12;
}

int direction_units(Cell from, Cell to) {
  if (to.x > from.x) return 0;
  if (to.y > from.y) return 3;
  if (to.x < from.x) return 6;
  return 9;
}

int turn_delta(int from_units, int to_units) {
  int d = to_units - from_units;
  while (d > 6) d -= 12;
  while (d < -6) d += 12;
  return d;
}

}  // namespace

std::pair<std::vector<Action>, bool> point_goal_controller(const GridWorld& world,
                                                           const Pose& pose,
                                                           const Pose& target,
                                                           int budget) {
  if (budget < 1) throw ConfigError("point_goal_controller: budget must be >= 1");
  std::vector<Action> actions;
  const Cell target_cell = world.cell_of(target);

  // One distance field per invocation; the world never changes mid-call.
  std::vector<int> dist(world.occupancy.size(), -1);
  if (world.is_free(target_cell)) {
    std::vector<Cell> frontier = {target_cell};
    dist[world.idx(target_cell.x, target_cell.y)] = 0;
    std::size_t head = 0;
    while (head < frontier.size()) {
      const Cell c = frontier[head++];
      const int d = dist[world.idx(c.x, c.y)];
      const Cell steps[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
      for (const Cell& n : steps) {
        if (!world.in_bounds(n.x, n.y) || !world.is_free(n.x, n.y)) continue;
        if (dist[world.idx(n.x, n.y)] >= 0) continue;
        dist[world.idx(n.x, n.y)] = d + 1;
        frontier.push_back(n);
      }
    }
  }

  Pose cur = pose;
  while (true) {
    const double dx = target.x - cur.x;
    const double dy = target.y - cur.y;
    if (std::sqrt(dx * dx + dy * dy) < kReachThreshold) return {actions, true};
    if (static_cast<int>(actions.size()) >= budget) return {actions, false};

    const Cell cc = world.cell_of(cur);
    const int d = dist[world.idx(cc.x, cc.y)];
    if (d <= 0) return {actions, false};  // unreachable, or cell-level arrival

    const int cur_units = heading_units(cur.theta);
    const Cell steps[4] = {{cc.x + 1, cc.y}, {cc.x - 1, cc.y},
                           {cc.x, cc.y + 1}, {cc.x, cc.y - 1}};
    Cell next{-1, -1};
    int best_turn = 7;
    for (const Cell& n : steps) {
      if (!world.in_bounds(n.x, n.y) || !world.is_free(n.x, n.y)) continue;
      if (dist[world.idx(n.x, n.y)] != d - 1) continue;
      const int turns = std::abs(turn_delta(cur_units, direction_units(cc, n)));
      if (turns < best_turn) {
        best_turn = turns;
        next = n;
      }
    }
    if (next.x < 0) return {actions, false};

    const int delta = turn_delta(cur_units, direction_units(cc, next));
    Action a;
    if (delta == 0) a = Action::MoveAhead;
    else if (delta > 0) a = Action::TurnLeft;
    else a = Action::TurnRight;
    auto [moved, blocked] = apply_action(world, cur, a);
    if (blocked) return {actions, false};
    actions.push_back(a);
    cur = moved;
  }
}

namespace {

bool goal_visible(const Panorama& pano, int goal_class) {
  for (const ViewObservation& v : pano.views)
    for (const Ray& r : v.rays)
      if (r.cls == goal_class) return true;
  return false;
}

bool success_with(const GridWorld& world, const Pose& pose, const GoalSpec& goal,
                  const std::vector<int>& goal_field, const Panorama& pano) {
  const Cell c = world.cell_of(pose);
  const int steps = goal_field[world.idx(c.x, c.y)];
  if (steps < 0) return false;
  if (steps * world.resolution >= 1.0) return false;
  return goal_visible(pano, goal.category_id);
}

}  // namespace

bool check_success(const GridWorld& world, const Pose& pose, const GoalSpec& goal,
                   const RaycastParams& rp) {
  const std::vector<int> field = goal_distance_field(world);
  const Panorama pano = capture_panorama(world, pose, 0, rp);
  return success_with(world, pose, goal, field, pano);
}

namespace {

void validate_components(const Components& components) {
  const ComponentSpec& s = components.spec;
  if (s.imagination && s.where2imagine && !components.model.has_value())
    throw ConfigError("run_episode: where2imagine enabled without a trained model");
  if (s.planner == PlannerKind::Remote) validate_endpoint(s.endpoint);
  if (s.memory.mode == MemoryMode::Tiered) {
    if (!(s.memory.tau_distant <= s.memory.tau_medium &&
          s.memory.tau_medium <= s.memory.tau_recent))
      throw ConfigError("run_episode: memory thresholds must satisfy tau_d <= tau_m <= tau_r");
    if (s.memory.cap_recent < 1 || s.memory.cap_medium < 0)
      throw ConfigError("run_episode: memory capacities must satisfy N_r >= 1, N_m >= 0");
  }
}

}  // namespace

EpisodeResult run_episode(const GridWorld& world, const Components& components,
                          const EpisodeConfig& episode, std::uint64_t seed) {
  validate_components(components);
  const ComponentSpec& spec = components.spec;
  const RaycastParams& rp = episode.raycast;
  const EncoderConfig enc{world.num_classes, world.resolution, rp.max_range};

  Rng start_rng(Rng::mix(seed, 1));
  Rng planner_rng(Rng::mix(seed, 2));
  const std::uint64_t imagine_base = Rng::mix(seed, 3);

  EpisodeResult result;
  const Cell start_cell = random_free_cell(world, start_rng);
  Pose pose = world.center_pose(start_cell,
                                start_rng.bounded(12) * kTurnRadians);
  result.start_pose = pose;

  const std::vector<int> goal_field = goal_distance_field(world);
  {
    const int s = goal_field[world.idx(start_cell.x, start_cell.y)];
    result.shortest_length = s < 0 ? 0.0 : s * world.resolution;
  }
  const GoalDescriptor goal_desc = goal_descriptor(world.goal_spec, enc);

  std::vector<FrameRecord> history;
  auto record_frame = [&](const ViewObservation& forward, int timestep) {
    history.push_back(FrameRecord{encode_view(forward, enc), pose, timestep});
  };

  int steps = 0;
  while (true) {
    const Panorama pano = capture_panorama(world, pose, steps, rp);
    if (history.empty() || history.back().timestep < steps)
      record_frame(pano.views[0], steps);

    if (success_with(world, pose, world.goal_spec, goal_field, pano) &&
        steps < episode.max_steps) {
      ++steps;
      result.step_trace.push_back(StepRecord{steps, pose, Action::Stop, false});
      result.success = true;
      break;
    }
    if (steps >= episode.max_steps) break;

    // Planning cycle.
    CycleRecord cycle;
    cycle.cycle = static_cast<int>(result.cycles.size());
    cycle.step_at = steps;

    const FoveationMemory memory = build_memory(history, spec.memory);
    const std::vector<SnapshotEntry> snapshot = memory_snapshot(memory);

    std::array<ImaginedView, 6> imagined;
    if (spec.imagination) {
      // Per-view prediction: each waypoint is relative to its own sector's
      // frame, so the six proposals fan out with the panorama.
      const bool per_view = spec.where2imagine;
      if (per_view) {
        for (int i = 0; i < 6; ++i)
          cycle.waypoints[i] =
              predict_waypoint(*components.model, encode_view(pano.views[i], enc));
      } else {
        cycle.waypoints = fixed_radius_waypoints();
      }
      for (int i = 0; i < 6; ++i) {
        cycle.imagine_seeds[i] =
            Rng::mix(imagine_base, static_cast<std::uint64_t>(cycle.cycle) * 6 + i);
        const Pose frame =
            per_view ? Pose{pose.x, pose.y, wrap_two_pi(pose.theta + kPanoramaOffsets[i])}
                     : pose;
        imagined[i] = imagine_view(world, frame, cycle.waypoints[i], spec.imagine_mode,
                                   spec.noise, cycle.imagine_seeds[i], rp);
      }
    } else {
      // No imagination: score the current views, subgoal 2 m along the
      // chosen sector direction.
      cycle.waypoints = fixed_radius_waypoints();
      for (int i = 0; i < 6; ++i) {
        imagined[i].view = pano.views[i];
        imagined[i].source_waypoint = cycle.waypoints[i];
        imagined[i].mode = ImagineMode::Oracle;
        imagined[i].realized_pose = waypoint_to_pose(world, pose, cycle.waypoints[i]);
      }
    }

    switch (spec.planner) {
      case PlannerKind::Heuristic:
        cycle.decision = choose_heuristic(imagined, goal_desc, snapshot, enc, spec.lambda);
        break;
      case PlannerKind::Cheat:
        cycle.decision = choose_cheat(world, imagined);
        break;
      case PlannerKind::Random:
        cycle.decision = choose_random(planner_rng);
        break;
      case PlannerKind::Remote: {
        const PlannerDecision fallback =
            choose_heuristic(imagined, goal_desc, snapshot, enc, spec.lambda);
        const PromptPayload prompt = build_prompt(world.goal_spec, snapshot, imagined, enc);
        cycle.decision = query_remote(spec.endpoint, prompt, fallback, result.telemetry);
        break;
      }
    }
    result.cycles.push_back(cycle);

    const Pose target = imagined[cycle.decision.choice - 1].realized_pose;
    auto [actions, reached] = point_goal_controller(world, pose, target,
                                                    episode.controller_budget);
    (void)reached;
    if (actions.empty()) actions.push_back(Action::TurnLeft);  // step-progress guard

    for (Action a : actions) {
      if (steps >= episode.max_steps) break;
      auto [next_pose, blocked] = apply_action(world, pose, a);
      pose = next_pose;
      ++steps;
      if (a == Action::MoveAhead && !blocked) result.path_length += kStepMeters;
      result.step_trace.push_back(StepRecord{steps, pose, a, blocked});
      record_frame(raycast_view(world, pose, 0.0, rp), steps);
      // The stop oracle watches continuously: once the goal is in reach and
      // sight, the segment yields so the loop top can issue Stop.
      const Cell here = world.cell_of(pose);
      const int goal_steps = goal_field[world.idx(here.x, here.y)];
      if (goal_steps >= 0 && goal_steps * world.resolution < 1.0 &&
          goal_visible(capture_panorama(world, pose, steps, rp),
                       world.goal_spec.category_id))
        break;
    }
  }

  result.steps = steps;
  result.final_memory_size = build_memory(history, spec.memory).total();
  result.history = std::move(history);
  return result;
}

// ---------------------------------------------------------------------------
// Trace serialization and replay

const char* planner_kind_name(PlannerKind k) {
  switch (k) {
    case PlannerKind::Heuristic: return "heuristic";
    case PlannerKind::Remote: return "remote";
    case PlannerKind::Random: return "random";
    case PlannerKind::Cheat: return "cheat";
  }
  return "?";
}

std::optional<PlannerKind> planner_kind_from_name(const std::string& name) {
  if (name == "heuristic") return PlannerKind::Heuristic;
  if (name == "remote") return PlannerKind::Remote;
  if (name == "random") return PlannerKind::Random;
  if (name == "cheat") return PlannerKind::Cheat;
  return std::nullopt;
}

namespace {

using ordered_json = nlohmann::ordered_json;

const char* source_name(DecisionSource s) {
  switch (s) {
    case DecisionSource::Heuristic: return "heuristic";
    case DecisionSource::Remote: return "remote";
    case DecisionSource::Random: return "random";
    case DecisionSource::Fallback: return "fallback";
  }
  return "?";
}

const char* memory_mode_name(MemoryMode m) {
  switch (m) {
    case MemoryMode::None: return "none";
    case MemoryMode::Full: return "full";
    case MemoryMode::Tiered: return "tiered";
  }
  return "?";
}

MemoryMode memory_mode_from_name(const std::string& s) {
  if (s == "none") return MemoryMode::None;
  if (s == "full") return MemoryMode::Full;
  if (s == "tiered") return MemoryMode::Tiered;
  throw IoError("trace: unknown memory mode " + s);
}

ordered_json spec_to_json(const ComponentSpec& s) {
  ordered_json j;
  j["imagination"] = s.imagination;
  j["where2imagine"] = s.where2imagine;
  j["imagine_mode"] = s.imagine_mode == ImagineMode::Oracle ? "oracle" : "degraded";
  j["p_swap"] = s.noise.p_swap;
  j["depth_jitter"] = s.noise.depth_jitter;
  j["memory_mode"] = memory_mode_name(s.memory.mode);
  j["tau_r"] = s.memory.tau_recent;
  j["tau_m"] = s.memory.tau_medium;
  j["tau_d"] = s.memory.tau_distant;
  j["cap_recent"] = s.memory.cap_recent;
  j["cap_medium"] = s.memory.cap_medium;
  j["planner"] = planner_kind_name(s.planner);
  j["lambda"] = s.lambda;
  return j;
}

ComponentSpec spec_from_json(const ordered_json& j) {
  ComponentSpec s;
  s.imagination = j.at("imagination").get<bool>();
  s.where2imagine = j.at("where2imagine").get<bool>();
  s.imagine_mode = j.at("imagine_mode").get<std::string>() == "degraded"
                       ? ImagineMode::Degraded
                       : ImagineMode::Oracle;
  s.noise.p_swap = j.at("p_swap").get<double>();
  s.noise.depth_jitter = j.at("depth_jitter").get<double>();
  s.memory.mode = memory_mode_from_name(j.at("memory_mode").get<std::string>());
  s.memory.tau_recent = j.at("tau_r").get<double>();
  s.memory.tau_medium = j.at("tau_m").get<double>();
  s.memory.tau_distant = j.at("tau_d").get<double>();
  s.memory.cap_recent = j.at("cap_recent").get<int>();
  s.memory.cap_medium = j.at("cap_medium").get<int>();
  const auto kind = planner_kind_from_name(j.at("planner").get<std::string>());
  if (!kind) throw IoError("trace: unknown planner kind");
  s.planner = *kind;
  s.lambda = j.at("lambda").get<double>();
  return s;
}

}  // namespace

std::string component_spec_to_json(const ComponentSpec& spec) {
  return spec_to_json(spec).dump();
}

ComponentSpec component_spec_from_json(const std::string& text) {
  return spec_from_json(ordered_json::parse(text));
}

std::string trace_to_jsonl(const GridWorld& world, const ComponentSpec& spec,
                           const std::optional<Regressor>& model,
                           const EpisodeConfig& episode, std::uint64_t seed,
                           const EpisodeResult& result) {
  std::ostringstream out;
  ordered_json meta;
  meta["type"] = "meta";
  meta["version"] = 1;
  meta["seed"] = seed;
  meta["world"] = ordered_json::parse(world_to_json(world));
  meta["components"] = spec_to_json(spec);
  if (model.has_value())
    meta["model"] = ordered_json::parse(regressor_to_json(*model));
  meta["max_steps"] = episode.max_steps;
  meta["controller_budget"] = episode.controller_budget;
  meta["rays_per_view"] = episode.raycast.rays_per_view;
  meta["max_range"] = episode.raycast.max_range;
  out << meta.dump() << '\n';

  std::size_t step_idx = 0;
  auto emit_steps_until = [&](int limit) {
    while (step_idx < result.step_trace.size() &&
           result.step_trace[step_idx].step <= limit) {
      const StepRecord& sr = result.step_trace[step_idx];
      ordered_json j;
      j["type"] = "step";
      j["step"] = sr.step;
      j["pose"] = {sr.pose.x, sr.pose.y, sr.pose.theta};
      j["action"] = action_name(sr.action);
      j["blocked"] = sr.blocked;
      out << j.dump() << '\n';
      ++step_idx;
    }
  };

  for (const CycleRecord& c : result.cycles) {
    emit_steps_until(c.step_at);
    ordered_json j;
    j["type"] = "cycle";
    j["cycle"] = c.cycle;
    j["step"] = c.step_at;
    ordered_json wps = ordered_json::array();
    for (const RelativeWaypoint& w : c.waypoints)
      wps.push_back({w.dx, w.dy, w.dtheta});
    j["waypoints"] = std::move(wps);
    j["seeds"] = c.imagine_seeds;
    j["choice"] = c.decision.choice;
    j["source"] = source_name(c.decision.source);
    j["reason"] = c.decision.reason;
    out << j.dump() << '\n';
  }
  emit_steps_until(result.steps);

  ordered_json tail;
  tail["type"] = "result";
  tail["success"] = result.success ? 1 : 0;
  tail["path_length"] = result.path_length;
  tail["shortest_length"] = result.shortest_length;
  tail["steps"] = result.steps;
  tail["memory_size"] = result.final_memory_size;
  tail["remote_successes"] = result.telemetry.successes;
  tail["remote_fallbacks"] = result.telemetry.fallbacks;
  tail["remote_retries"] = result.telemetry.retries;
  out << tail.dump() << '\n';
  return out.str();
}

std::string replay_trace(const std::string& jsonl) {
  std::istringstream in(jsonl);
  std::string first;
  if (!std::getline(in, first)) throw IoError("replay: empty trace");
  const ordered_json meta = ordered_json::parse(first);
  if (meta.at("type").get<std::string>() != "meta" || meta.at("version").get<int>() != 1)
    throw IoError("replay: trace does not start with a v1 meta line");

  const GridWorld world = world_from_json(meta.at("world").dump());
  Components components;
  components.spec = spec_from_json(meta.at("components"));
  if (meta.contains("model"))
    components.model = regressor_from_json(meta.at("model").dump());
  EpisodeConfig episode;
  episode.max_steps = meta.at("max_steps").get<int>();
  episode.controller_budget = meta.at("controller_budget").get<int>();
  episode.raycast.rays_per_view = meta.at("rays_per_view").get<int>();
  episode.raycast.max_range = meta.at("max_range").get<double>();
  const std::uint64_t seed = meta.at("seed").get<std::uint64_t>();

  const EpisodeResult result = run_episode(world, components, episode, seed);
  return trace_to_jsonl(world, components.spec, components.model, episode, seed, result);
}

}  // namespace inav
