#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "inav/navloop.hpp"

namespace inav {

struct EpisodeRow {
  int index = 0;
  std::uint64_t world_seed = 0;
  std::uint64_t episode_seed = 0;
  int success = 0;
  double path_length = 0.0;
  double shortest_length = 0.0;
  int steps = 0;
  std::size_t memory_size = 0;
  int cycles = 0;
  int remote_successes = 0;
  int remote_fallbacks = 0;
  int remote_retries = 0;
};

// Mean of the per-episode success indicators. Throws on empty input.
double success_rate(const std::vector<EpisodeRow>& rows);

// (1/N) sum S_i * l_i / max(p_i, l_i); an episode with l_i = 0 contributes
// S_i. Throws on empty input or negative lengths.
double spl(const std::vector<EpisodeRow>& rows);

// Mean keyframe count at episode end.
double avg_memory_size(const std::vector<EpisodeRow>& rows);

struct RunReport {
  std::string config_id;
  std::string fingerprint;  // full config as a JSON string
  int episodes = 0;
  double sr = 0.0;
  double spl = 0.0;
  double avg_mem = 0.0;
  double remote_fallback_rate = 0.0;
  bool incomplete = false;
  std::vector<EpisodeRow> rows;
};

struct AblationCell {
  std::string id;
  ComponentSpec spec;
  GoalKind goal_kind = GoalKind::Category;
};

struct AblationSetup {
  GenParams gen;  // goal kind overridden per cell
  EpisodeConfig episode;
  int episodes_per_config = 100;
  std::uint64_t seed = 7;
  int workers = 1;
  std::optional<Regressor> model;
  std::atomic<bool>* interrupt = nullptr;  // optional cooperative stop
};

// Runs every cell over the same (world seed, episode seed) pairs so that
// ordering claims hold under paired comparison. Reports come back in cell
// order; episode rows in index order.
std::vector<RunReport> run_ablation(const std::vector<AblationCell>& cells,
                                    const AblationSetup& setup);

// The 7-row imagination/memory grid.
std::vector<AblationCell> table2_cells(GoalKind goal, const MemoryConfig& memory,
                                       const DegradationParams& noise);

// {none, full, uniform 0.8, selective 0.8/0.73/0.6} under degraded imagination.
std::vector<AblationCell> memory_grid_cells(GoalKind goal,
                                            const DegradationParams& noise);

// config_id,episodes,SR,SPL,avg_mem,remote_fallback_rate
std::string reports_to_csv(const std::vector<RunReport>& reports);
std::string report_to_json(const RunReport& report);

}  // namespace inav
