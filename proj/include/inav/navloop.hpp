#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "inav/imagine.hpp"
#include "inav/memory.hpp"
#include "inav/planner.hpp"
#include "inav/where2imagine.hpp"
#include "inav/world.hpp"

namespace inav {

enum class Action { Stop, MoveAhead, TurnLeft, TurnRight };

const char* action_name(Action a);
std::optional<Action> action_from_name(const std::string& name);

enum class PlannerKind { Heuristic, Remote, Random, Cheat };

struct ComponentSpec {
  bool imagination = true;
  bool where2imagine = true;
  ImagineMode imagine_mode = ImagineMode::Oracle;
  DegradationParams noise;
  MemoryConfig memory;
  PlannerKind planner = PlannerKind::Heuristic;
  double lambda = 0.3;
  RemoteEndpoint endpoint;  // remote planner only
};

struct Components {
  ComponentSpec spec;
  std::optional<Regressor> model;  // required when where2imagine is on
};

struct EpisodeConfig {
  int max_steps = 500;
  int controller_budget = 40;
  RaycastParams raycast;
};

struct StepRecord {
  int step = 0;  // 1-based, counts executed actions
  Pose pose;     // pose after the action
  Action action = Action::Stop;
  bool blocked = false;
};

struct CycleRecord {
  int cycle = 0;
  int step_at = 0;  // steps executed before this cycle
  std::array<RelativeWaypoint, 6> waypoints;
  std::array<std::uint64_t, 6> imagine_seeds{};
  PlannerDecision decision;
};

struct EpisodeResult {
  bool success = false;
  double path_length = 0.0;      // p_i, meters of executed forward motion
  double shortest_length = 0.0;  // l_i, start-to-nearest-goal geodesic
  int steps = 0;
  Pose start_pose;
  std::vector<StepRecord> step_trace;
  std::vector<CycleRecord> cycles;
  std::vector<FrameRecord> history;  // per-step forward-view features
  std::size_t final_memory_size = 0;
  RemoteTelemetry telemetry;
};

// MoveAhead advances 0.25 m along the heading unless the landing cell is
// blocked (pose unchanged, blocked=true); turns are +-30 degrees.
std::pair<Pose, bool> apply_action(const GridWorld& world, const Pose& pose,
                                   Action action);

// Replanning controller over the discrete action space toward the target's
// cell; reached when within 0.25 m. Never emits more than budget actions.
std::pair<std::vector<Action>, bool> point_goal_controller(const GridWorld& world,
                                                           const Pose& pose,
                                                           const Pose& target,
                                                           int budget = 40);

// Strictly-under-1-meter geodesic to the nearest goal cell AND at least one
// goal-class ray hit in the current panorama.
bool check_success(const GridWorld& world, const Pose& pose, const GoalSpec& goal,
                   const RaycastParams& rp = RaycastParams{});

EpisodeResult run_episode(const GridWorld& world, const Components& components,
                          const EpisodeConfig& episode, std::uint64_t seed);

// Self-contained JSONL trace: meta line (world, components, config, seed),
// interleaved cycle/step lines, result line. Re-running from the meta line
// reproduces the remaining lines byte for byte.
std::string trace_to_jsonl(const GridWorld& world, const ComponentSpec& spec,
                           const std::optional<Regressor>& model,
                           const EpisodeConfig& episode, std::uint64_t seed,
                           const EpisodeResult& result);

// Re-runs the episode recorded in `jsonl`; returns the recomputed trace.
std::string replay_trace(const std::string& jsonl);

std::string component_spec_to_json(const ComponentSpec& spec);
ComponentSpec component_spec_from_json(const std::string& text);

const char* planner_kind_name(PlannerKind k);
std::optional<PlannerKind> planner_kind_from_name(const std::string& name);

}  // namespace inav
