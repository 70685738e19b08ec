// Operator entry point: world generation, demo collection, training,
// episode runs with trace output, ablation suites, memory inspection and
// trace replay. Logs go to stderr; data goes to files under --out.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "inav/error.hpp"
#include "inav/metrics.hpp"
#include "inav/run_config.hpp"

namespace fs = std::filesystem;
using namespace inav;

namespace {

std::atomic<bool> g_interrupt{false};

void on_sigint(int) { g_interrupt.store(true); }

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = ".";
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) {
    cfg = load_run_config(opts.config_path);
  }
  for (const std::string& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.apply(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "config file (key = value lines)");
  cmd->add_option("--set", opts.overrides, "override a config key, e.g. --set seed=9");
  cmd->add_option("--out", opts.out_dir, "output directory");
}

std::vector<GridWorld> generate_worlds(const RunConfig& cfg, int count,
                                       std::uint64_t base_seed) {
  std::vector<GridWorld> worlds;
  worlds.reserve(count);
  for (int i = 0; i < count; ++i)
    worlds.push_back(generate_world(base_seed + static_cast<std::uint64_t>(i), cfg.gen));
  return worlds;
}

Components components_for(const RunConfig& cfg, const std::string& model_path) {
  Components c;
  c.spec = cfg.components;
  if (c.spec.imagination && c.spec.where2imagine) {
    if (model_path.empty())
      throw ConfigError("where2imagine is enabled: --model checkpoint required");
    c.model = load_regressor(model_path);
  }
  return c;
}

int cmd_gen_worlds(const CommonOpts& opts, int count) {
  const RunConfig cfg = resolve_config(opts);
  fs::create_directories(opts.out_dir);
  for (int i = 0; i < count; ++i) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(i);
    const GridWorld w = generate_world(seed, cfg.gen);
    char name[32];
    std::snprintf(name, sizeof(name), "world_%04d.json", i);
    write_file(fs::path(opts.out_dir) / name, world_to_json(w) + "\n");
  }
  std::cerr << "gen-worlds: wrote " << count << " worlds to " << opts.out_dir << "\n";
  return 0;
}

int cmd_collect_demos(const CommonOpts& opts, const std::string& out_file) {
  const RunConfig cfg = resolve_config(opts);
  fs::create_directories(opts.out_dir);
  const std::vector<GridWorld> worlds = generate_worlds(cfg, cfg.demo_worlds, cfg.seed);
  const DemoSet demos =
      collect_demos(worlds, cfg.horizon_t, cfg.demo_walks, cfg.seed, cfg.raycast);
  save_demos(demos.samples, (fs::path(opts.out_dir) / out_file).string());
  std::cerr << "collect-demos: kept " << demos.stats.kept << " (depth-filtered "
            << demos.stats.depth_filtered << ", angle-filtered "
            << demos.stats.angle_filtered << ", skipped worlds "
            << demos.stats.skipped_worlds << ")\n";
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& demos_file,
              const std::string& model_file, const std::string& curve_file) {
  const RunConfig cfg = resolve_config(opts);
  fs::create_directories(opts.out_dir);
  const std::vector<DemoSample> demos =
      load_demos((fs::path(opts.out_dir) / demos_file).string());
  const TrainResult result = train_regressor(demos, cfg.train, cfg.seed);
  save_regressor(result.model, (fs::path(opts.out_dir) / model_file).string());
  std::string curve = "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_curve.size(); ++e) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu,%.9f\n", e, result.loss_curve[e]);
    curve += buf;
  }
  write_file(fs::path(opts.out_dir) / curve_file, curve);
  std::cerr << "train: " << demos.size() << " demos, initial loss "
            << result.loss_curve.front() << ", final loss " << result.loss_curve.back()
            << "\n";
  return 0;
}

int cmd_run_episode(const CommonOpts& opts, const std::string& world_file,
                    const std::string& model_path, const std::string& trace_file,
                    const std::string& embeddings_file) {
  const RunConfig cfg = resolve_config(opts);
  set_remote_inflight_cap(cfg.remote_max_inflight);
  const GridWorld world = world_file.empty()
                              ? generate_world(cfg.seed, cfg.gen)
                              : load_world(world_file);
  const Components components = components_for(cfg, model_path);
  const std::uint64_t episode_seed = Rng::mix(cfg.seed, 0xE9);
  const EpisodeResult result =
      run_episode(world, components, cfg.episode_config(), episode_seed);
  write_file(fs::path(opts.out_dir) / trace_file,
             trace_to_jsonl(world, components.spec, components.model,
                            cfg.episode_config(), episode_seed, result));
  if (!embeddings_file.empty()) {
    std::string dump;
    for (const FrameRecord& fr : result.history)
      dump += embedding_record(fr.timestep, fr.pose.theta, fr.feature) + "\n";
    write_file(fs::path(opts.out_dir) / embeddings_file, dump);
  }
  std::cerr << "run-episode: success=" << (result.success ? 1 : 0)
            << " steps=" << result.steps << " path=" << result.path_length
            << " shortest=" << result.shortest_length << "\n";
  return 0;
}

int cmd_ablate(const CommonOpts& opts, const std::string& grid,
               const std::string& model_path) {
  const RunConfig cfg = resolve_config(opts);
  set_remote_inflight_cap(cfg.remote_max_inflight);
  fs::create_directories(opts.out_dir);

  AblationSetup setup;
  setup.gen = cfg.gen;
  setup.episode = cfg.episode_config();
  setup.episodes_per_config = cfg.episodes;
  setup.seed = cfg.seed;
  setup.workers = cfg.workers;
  setup.interrupt = &g_interrupt;

  std::vector<RunReport> reports;
  if (grid == "table2" || grid == "memory") {
    if (!model_path.empty()) setup.model = load_regressor(model_path);
    const std::vector<AblationCell> cells =
        grid == "table2"
            ? table2_cells(cfg.gen.goal_kind, cfg.components.memory, cfg.components.noise)
            : memory_grid_cells(cfg.gen.goal_kind, cfg.components.noise);
    for (const AblationCell& c : cells) {
      if (c.spec.where2imagine && !setup.model.has_value())
        throw ConfigError("ablate: grid '" + grid + "' needs --model");
    }
    reports = run_ablation(cells, setup);
  } else if (grid == "tsweep") {
    for (int t = 8; t <= 15 && !g_interrupt.load(); ++t) {
      // Re-collect and re-train per horizon on a disjoint world stream.
      std::vector<GridWorld> train_worlds =
          generate_worlds(cfg, cfg.demo_worlds, Rng::mix(cfg.seed, 0x7731));
      const DemoSet demos =
          collect_demos(train_worlds, t, cfg.demo_walks, cfg.seed, cfg.raycast);
      const TrainResult trained = train_regressor(demos.samples, cfg.train, cfg.seed);
      AblationSetup sweep = setup;
      sweep.model = trained.model;
      ComponentSpec spec;
      spec.imagination = true;
      spec.where2imagine = true;
      spec.imagine_mode = ImagineMode::Oracle;
      spec.memory = MemoryConfig::none();
      spec.planner = PlannerKind::Heuristic;
      char id[16];
      std::snprintf(id, sizeof(id), "t%02d", t);
      std::vector<RunReport> one =
          run_ablation({AblationCell{id, spec, cfg.gen.goal_kind}}, sweep);
      reports.push_back(std::move(one.front()));
    }
  } else {
    throw ConfigError("ablate: unknown grid '" + grid + "' (table2|memory|tsweep)");
  }

  write_file(fs::path(opts.out_dir) / "report.csv", reports_to_csv(reports));
  for (const RunReport& r : reports)
    write_file(fs::path(opts.out_dir) / (r.config_id + ".json"),
               report_to_json(r) + "\n");
  std::cerr << "ablate: wrote " << reports.size() << " reports to " << opts.out_dir
            << (g_interrupt.load() ? " (incomplete)" : "") << "\n";
  return 0;
}

int cmd_mem_inspect(const CommonOpts& opts, const std::string& embeddings_file,
                    const std::string& out_file) {
  const RunConfig cfg = resolve_config(opts);
  const std::vector<EmbeddingRecord> records = load_embedding_dump(embeddings_file);
  std::vector<FrameRecord> history;
  std::vector<FeatureVector> features;
  for (const EmbeddingRecord& r : records) {
    history.push_back(FrameRecord{r.feature, Pose{0, 0, r.heading}, r.timestep});
    features.push_back(r.feature);
  }
  const MemoryConfig mem = cfg.components.memory.mode == MemoryMode::Tiered
                               ? cfg.components.memory
                               : MemoryConfig{};
  const FoveationMemory memory = build_memory(history, mem);

  nlohmann::ordered_json j;
  nlohmann::ordered_json segs = nlohmann::ordered_json::array();
  for (const Segment& s : segment_sequence(features, mem.tau_recent))
    segs.push_back({s.first, s.last});
  j["segments"] = std::move(segs);
  auto tier_list = [](const std::vector<Keyframe>& tier) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const Keyframe& k : tier) out.push_back(k.frame_index);
    return out;
  };
  j["keyframes"] = {{"distant", tier_list(memory.distant)},
                    {"medium", tier_list(memory.medium)},
                    {"recent", tier_list(memory.recent)}};
  j["total"] = memory.total();
  write_file(fs::path(opts.out_dir) / out_file, j.dump(2) + "\n");
  std::cerr << "mem-inspect: " << records.size() << " frames -> " << memory.total()
            << " keyframes\n";
  return 0;
}

int cmd_replay(const std::string& trace_file, const std::string& out_file) {
  const std::string original = read_file(trace_file);
  const std::string recomputed = replay_trace(original);
  if (!out_file.empty()) write_file(out_file, recomputed);
  if (recomputed != original) {
    std::cerr << "error: replay mismatch for " << trace_file << "\n";
    return 1;
  }
  std::cerr << "replay: trace matches\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_sigint);

  CLI::App app{"deterministic navigation simulator and evaluation harness"};
  app.require_subcommand(1);

  CommonOpts gen_opts;
  int gen_count = 10;
  CLI::App* gen = app.add_subcommand("gen-worlds", "generate procedural worlds");
  add_common(gen, gen_opts);
  gen->add_option("--count", gen_count, "number of worlds");

  CommonOpts demo_opts;
  std::string demo_out = "demos.jsonl";
  CLI::App* demo = app.add_subcommand("collect-demos", "collect oracle demonstrations");
  add_common(demo, demo_opts);
  demo->add_option("--file", demo_out, "output JSONL name");

  CommonOpts train_opts;
  std::string train_demos = "demos.jsonl", train_model = "model.json",
              train_curve = "loss_curve.csv";
  CLI::App* train = app.add_subcommand("train", "train the waypoint regressor");
  add_common(train, train_opts);
  train->add_option("--demos", train_demos, "demo JSONL name under --out");
  train->add_option("--model", train_model, "checkpoint name under --out");
  train->add_option("--curve", train_curve, "loss curve CSV name under --out");

  CommonOpts run_opts;
  std::string run_world, run_model, run_trace = "trace.jsonl", run_embeddings;
  CLI::App* run = app.add_subcommand("run-episode", "run one episode with trace output");
  add_common(run, run_opts);
  run->add_option("--world", run_world, "world JSON (generated from seed when absent)");
  run->add_option("--model", run_model, "regressor checkpoint");
  run->add_option("--trace", run_trace, "trace JSONL name under --out");
  run->add_option("--dump-embeddings", run_embeddings, "embedding JSONL name under --out");

  CommonOpts ablate_opts;
  std::string ablate_grid = "table2", ablate_model;
  CLI::App* ablate = app.add_subcommand("ablate", "run an ablation grid");
  add_common(ablate, ablate_opts);
  ablate->add_option("--grid", ablate_grid, "table2|memory|tsweep");
  ablate->add_option("--model", ablate_model, "regressor checkpoint");

  CommonOpts mem_opts;
  std::string mem_embeddings, mem_out = "memory.json";
  CLI::App* mem = app.add_subcommand("mem-inspect", "inspect memory built from a dump");
  add_common(mem, mem_opts);
  mem->add_option("--embeddings", mem_embeddings, "embedding JSONL path")->required();
  mem->add_option("--file", mem_out, "output JSON name under --out");

  std::string replay_file, replay_out;
  CLI::App* replay = app.add_subcommand("replay", "re-run a trace and compare");
  replay->add_option("--trace", replay_file, "trace JSONL path")->required();
  replay->add_option("--out", replay_out, "write the recomputed trace here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_worlds(gen_opts, gen_count);
    if (demo->parsed()) return cmd_collect_demos(demo_opts, demo_out);
    if (train->parsed()) return cmd_train(train_opts, train_demos, train_model, train_curve);
    if (run->parsed())
      return cmd_run_episode(run_opts, run_world, run_model, run_trace, run_embeddings);
    if (ablate->parsed()) return cmd_ablate(ablate_opts, ablate_grid, ablate_model);
    if (mem->parsed()) return cmd_mem_inspect(mem_opts, mem_embeddings, mem_out);
    if (replay->parsed()) return cmd_replay(replay_file, replay_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
