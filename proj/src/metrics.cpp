#include "inav/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "inav/error.hpp"

namespace inav {

double success_rate(const std::vector<EpisodeRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("success_rate: empty result set");
  double sum = 0.0;
  for (const EpisodeRow& r : rows) sum += r.success;
  return sum / static_cast<double>(rows.size());
}

double spl(const std::vector<EpisodeRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("spl: empty result set");
  double sum = 0.0;
  for (const EpisodeRow& r : rows) {
    if (r.path_length < 0.0 || r.shortest_length < 0.0)
      throw std::invalid_argument("spl: negative path length");
    if (r.success == 0) continue;
    if (r.shortest_length == 0.0) {
      sum += r.success;  // spawned at the goal
    } else {
      sum += r.success * r.shortest_length /
             std::max(r.path_length, r.shortest_length);
    }
  }
  return sum / static_cast<double>(rows.size());
}

double avg_memory_size(const std::vector<EpisodeRow>& rows) {
  if (rows.empty()) return 0.0;
  double sum = 0.0;
  for (const EpisodeRow& r : rows) sum += static_cast<double>(r.memory_size);
  return sum / static_cast<double>(rows.size());
}

namespace {

using ordered_json = nlohmann::ordered_json;

void validate_cell(const AblationCell& cell) {
  if (!cell.spec.imagination && cell.spec.where2imagine)
    throw ConfigError("ablation cell " + cell.id +
                      ": where2imagine requires imagination");
  if (!cell.spec.imagination && cell.spec.imagine_mode == ImagineMode::Degraded)
    throw ConfigError("ablation cell " + cell.id +
                      ": imagine mode set while imagination is off");
}

ordered_json gen_to_json(const GenParams& g) {
  ordered_json j;
  j["width"] = g.width;
  j["height"] = g.height;
  j["rooms"] = g.rooms;
  j["num_classes"] = g.num_classes;
  j["objects_per_class"] = g.objects_per_class;
  j["door_extra_prob"] = g.door_extra_prob;
  j["resolution"] = g.resolution;
  j["goal_kind"] = g.goal_kind == GoalKind::Category ? "category" : "instance";
  j["goal_category"] = g.goal_category;
  return j;
}

std::string fingerprint_of(const AblationCell& cell, const AblationSetup& setup) {
  ordered_json j;
  j["config_id"] = cell.id;
  j["components"] = ordered_json::parse(component_spec_to_json(cell.spec));
  j["goal_kind"] = cell.goal_kind == GoalKind::Category ? "category" : "instance";
  GenParams gen = setup.gen;
  gen.goal_kind = cell.goal_kind;
  j["gen"] = gen_to_json(gen);
  j["max_steps"] = setup.episode.max_steps;
  j["controller_budget"] = setup.episode.controller_budget;
  j["rays_per_view"] = setup.episode.raycast.rays_per_view;
  j["max_range"] = setup.episode.raycast.max_range;
  j["episodes"] = setup.episodes_per_config;
  j["seed"] = setup.seed;
  return j.dump();
}

}  // namespace

std::vector<RunReport> run_ablation(const std::vector<AblationCell>& cells,
                                    const AblationSetup& setup) {
  if (cells.empty()) throw ConfigError("run_ablation: no configurations");
  if (setup.episodes_per_config < 1)
    throw ConfigError("run_ablation: episodes_per_config must be >= 1");
  for (const AblationCell& cell : cells) {
    validate_cell(cell);
    if (cell.spec.imagination && cell.spec.where2imagine && !setup.model.has_value())
      throw ConfigError("ablation cell " + cell.id +
                        ": where2imagine enabled without a trained model");
  }

  const int n = setup.episodes_per_config;
  std::vector<std::uint64_t> world_seeds(n), episode_seeds(n);
  for (int i = 0; i < n; ++i) {
    world_seeds[i] = Rng::mix(setup.seed, 0xA000 + static_cast<std::uint64_t>(i));
    episode_seeds[i] = Rng::mix(setup.seed, 0xB000 + static_cast<std::uint64_t>(i));
  }

  // Shared, paired worlds per goal kind; immutable across all cells.
  std::map<GoalKind, std::vector<GridWorld>> worlds;
  for (const AblationCell& cell : cells) {
    if (worlds.count(cell.goal_kind)) continue;
    GenParams gen = setup.gen;
    gen.goal_kind = cell.goal_kind;
    std::vector<GridWorld>& list = worlds[cell.goal_kind];
    list.reserve(n);
    for (int i = 0; i < n; ++i) list.push_back(generate_world(world_seeds[i], gen));
  }

  std::vector<RunReport> reports;
  for (const AblationCell& cell : cells) {
    Components components;
    components.spec = cell.spec;
    if (cell.spec.imagination && cell.spec.where2imagine)
      components.model = setup.model;
    const std::vector<GridWorld>& cell_worlds = worlds.at(cell.goal_kind);

    std::vector<EpisodeRow> rows(n);
    std::vector<char> done(n, 0);
    std::atomic<int> next{0};
    bool interrupted = false;

    auto worker = [&]() {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        if (setup.interrupt != nullptr && setup.interrupt->load()) return;
        const EpisodeResult r =
            run_episode(cell_worlds[i], components, setup.episode, episode_seeds[i]);
        EpisodeRow row;
        row.index = i;
        row.world_seed = world_seeds[i];
        row.episode_seed = episode_seeds[i];
        row.success = r.success ? 1 : 0;
        row.path_length = r.path_length;
        row.shortest_length = r.shortest_length;
        row.steps = r.steps;
        row.memory_size = r.final_memory_size;
        row.cycles = static_cast<int>(r.cycles.size());
        row.remote_successes = r.telemetry.successes;
        row.remote_fallbacks = r.telemetry.fallbacks;
        row.remote_retries = r.telemetry.retries;
        rows[i] = row;
        done[i] = 1;
      }
    };

    const int workers = std::max(1, setup.workers);
    if (workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
      for (std::thread& t : pool) t.join();
    }

    std::vector<EpisodeRow> completed;
    completed.reserve(n);
    for (int i = 0; i < n; ++i) {
      if (done[i]) completed.push_back(rows[i]);
      else interrupted = true;
    }

    RunReport report;
    report.config_id = cell.id;
    report.fingerprint = fingerprint_of(cell, setup);
    report.episodes = static_cast<int>(completed.size());
    report.incomplete = interrupted;
    if (!completed.empty()) {
      report.sr = success_rate(completed);
      report.spl = spl(completed);
      report.avg_mem = avg_memory_size(completed);
      if (cell.spec.planner == PlannerKind::Remote) {
        long long decisions = 0, fallbacks = 0;
        for (const EpisodeRow& r : completed) {
          decisions += r.cycles;
          fallbacks += r.remote_fallbacks;
        }
        report.remote_fallback_rate =
            decisions > 0 ? static_cast<double>(fallbacks) / static_cast<double>(decisions)
                          : 0.0;
      }
    }
    report.rows = std::move(completed);
    reports.push_back(std::move(report));
    if (setup.interrupt != nullptr && setup.interrupt->load()) {
      // drain: later cells are not started
      for (std::size_t rest = reports.size(); rest < cells.size(); ++rest) {
        RunReport skipped;
        skipped.config_id = cells[rest].id;
        skipped.fingerprint = fingerprint_of(cells[rest], setup);
        skipped.incomplete = true;
        reports.push_back(std::move(skipped));
      }
      break;
    }
  }
  return reports;
}

std::vector<AblationCell> table2_cells(GoalKind goal, const MemoryConfig& memory,
                                       const DegradationParams& noise) {
  auto spec = [&](bool imagination, bool w2i, ImagineMode mode, bool with_memory) {
    ComponentSpec s;
    s.imagination = imagination;
    s.where2imagine = w2i;
    s.imagine_mode = mode;
    s.noise = noise;
    s.memory = with_memory ? memory : MemoryConfig::none();
    s.planner = PlannerKind::Heuristic;
    return s;
  };
  return {
      {"row1_no_imagination", spec(false, false, ImagineMode::Oracle, false), goal},
      {"row2_fixed_radius_oracle", spec(true, false, ImagineMode::Oracle, false), goal},
      {"row3_w2i_oracle", spec(true, true, ImagineMode::Oracle, false), goal},
      {"row4_w2i_oracle_memory", spec(true, true, ImagineMode::Oracle, true), goal},
      {"row5_fixed_radius_degraded", spec(true, false, ImagineMode::Degraded, false), goal},
      {"row6_w2i_degraded", spec(true, true, ImagineMode::Degraded, false), goal},
      {"row7_w2i_degraded_memory", spec(true, true, ImagineMode::Degraded, true), goal},
  };
}

std::vector<AblationCell> memory_grid_cells(GoalKind goal,
                                            const DegradationParams& noise) {
  auto spec = [&](const MemoryConfig& mem) {
    ComponentSpec s;
    s.imagination = true;
    s.where2imagine = true;
    s.imagine_mode = ImagineMode::Degraded;
    s.noise = noise;
    s.memory = mem;
    s.planner = PlannerKind::Heuristic;
    return s;
  };
  return {
      {"mem_none", spec(MemoryConfig::none()), goal},
      {"mem_full", spec(MemoryConfig::full()), goal},
      {"mem_uniform_08", spec(MemoryConfig::uniform(0.8)), goal},
      {"mem_selective", spec(MemoryConfig{}), goal},
  };
}

std::string reports_to_csv(const std::vector<RunReport>& reports) {
  std::string out = "config_id,episodes,SR,SPL,avg_mem,remote_fallback_rate\n";
  char buf[256];
  for (const RunReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%.6f,%.6f\n", r.config_id.c_str(),
                  r.episodes, r.sr, r.spl, r.avg_mem, r.remote_fallback_rate);
    out += buf;
  }
  return out;
}

std::string report_to_json(const RunReport& report) {
  ordered_json j;
  j["config_id"] = report.config_id;
  j["fingerprint"] = ordered_json::parse(report.fingerprint);
  j["episodes"] = report.episodes;
  j["SR"] = report.sr;
  j["SPL"] = report.spl;
  j["avg_mem"] = report.avg_mem;
  j["remote_fallback_rate"] = report.remote_fallback_rate;
  j["incomplete"] = report.incomplete;
  ordered_json rows = ordered_json::array();
  for (const EpisodeRow& r : report.rows) {
    ordered_json row;
    row["index"] = r.index;
    row["world_seed"] = r.world_seed;
    row["episode_seed"] = r.episode_seed;
    row["success"] = r.success;
    row["path_length"] = r.path_length;
    row["shortest_length"] = r.shortest_length;
    row["steps"] = r.steps;
    row["memory_size"] = r.memory_size;
    row["cycles"] = r.cycles;
    row["remote_fallbacks"] = r.remote_fallbacks;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j.dump();
}

}  // namespace inav
