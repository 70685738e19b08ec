#include "inav/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "inav/error.hpp"

namespace inav {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects an integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects a number, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const std::uint64_t out = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects an unsigned integer, got '" + v + "'");
  }
}

bool to_flag(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("config: " + key + " expects on/off, got '" + v + "'");
}

}  // namespace

void RunConfig::apply(const std::string& key, const std::string& value) {
  if (key == "config_version") {
    if (to_int(key, value) != 1) throw ConfigError("config: unsupported config_version");
  } else if (key == "world.width") {
    gen.width = to_int(key, value);
  } else if (key == "world.height") {
    gen.height = to_int(key, value);
  } else if (key == "world.rooms") {
    gen.rooms = to_int(key, value);
  } else if (key == "world.classes") {
    gen.num_classes = to_int(key, value);
  } else if (key == "world.objects_per_class") {
    gen.objects_per_class = to_int(key, value);
  } else if (key == "world.door_extra_prob") {
    gen.door_extra_prob = to_double(key, value);
  } else if (key == "world.resolution") {
    gen.resolution = to_double(key, value);
  } else if (key == "goal.kind") {
    if (value == "category") gen.goal_kind = GoalKind::Category;
    else if (value == "instance") gen.goal_kind = GoalKind::Instance;
    else throw ConfigError("config: goal.kind expects category|instance");
  } else if (key == "goal.category") {
    gen.goal_category = to_int(key, value);
  } else if (key == "rays.per_view") {
    raycast.rays_per_view = to_int(key, value);
  } else if (key == "rays.max_range") {
    raycast.max_range = to_double(key, value);
  } else if (key == "imagination") {
    components.imagination = to_flag(key, value);
  } else if (key == "where2imagine") {
    components.where2imagine = to_flag(key, value);
  } else if (key == "imagine.mode") {
    if (value == "oracle") components.imagine_mode = ImagineMode::Oracle;
    else if (value == "degraded") components.imagine_mode = ImagineMode::Degraded;
    else throw ConfigError("config: imagine.mode expects oracle|degraded");
    imagine_mode_explicit = true;
  } else if (key == "imagine.p_swap") {
    components.noise.p_swap = to_double(key, value);
  } else if (key == "imagine.depth_jitter") {
    components.noise.depth_jitter = to_double(key, value);
  } else if (key == "memory.mode") {
    if (value == "none") components.memory.mode = MemoryMode::None;
    else if (value == "full") components.memory.mode = MemoryMode::Full;
    else if (value == "tiered") components.memory.mode = MemoryMode::Tiered;
    else throw ConfigError("config: memory.mode expects none|full|tiered");
  } else if (key == "memory.tau_r") {
    components.memory.tau_recent = to_double(key, value);
  } else if (key == "memory.tau_m") {
    components.memory.tau_medium = to_double(key, value);
  } else if (key == "memory.tau_d") {
    components.memory.tau_distant = to_double(key, value);
  } else if (key == "memory.cap_recent") {
    components.memory.cap_recent = to_int(key, value);
  } else if (key == "memory.cap_medium") {
    components.memory.cap_medium = to_int(key, value);
  } else if (key == "planner.kind") {
    const auto kind = planner_kind_from_name(value);
    if (!kind) throw ConfigError("config: planner.kind expects heuristic|remote|random|cheat");
    components.planner = *kind;
  } else if (key == "planner.lambda") {
    components.lambda = to_double(key, value);
  } else if (key == "remote.url") {
    components.endpoint.base_url = value;
  } else if (key == "remote.path") {
    components.endpoint.path = value;
  } else if (key == "remote.model") {
    components.endpoint.model = value;
  } else if (key == "remote.timeout_s") {
    components.endpoint.timeout_s = to_double(key, value);
  } else if (key == "remote.retries") {
    components.endpoint.max_retries = to_int(key, value);
  } else if (key == "remote.backoff_s") {
    components.endpoint.backoff_s = to_double(key, value);
  } else if (key == "remote.api_key_env") {
    components.endpoint.api_key_env = value;
  } else if (key == "remote.max_inflight") {
    remote_max_inflight = to_int(key, value);
  } else if (key == "episodes") {
    episodes = to_int(key, value);
  } else if (key == "episode.max_steps") {
    max_steps = to_int(key, value);
  } else if (key == "episode.controller_budget") {
    controller_budget = to_int(key, value);
  } else if (key == "horizon_t") {
    horizon_t = to_int(key, value);
  } else if (key == "seed") {
    seed = to_u64(key, value);
  } else if (key == "workers") {
    workers = to_int(key, value);
  } else if (key == "train.learning_rate") {
    train.learning_rate = to_double(key, value);
  } else if (key == "train.batch_size") {
    train.batch_size = to_int(key, value);
  } else if (key == "train.epochs") {
    train.epochs = to_int(key, value);
  } else if (key == "train.hidden_dim") {
    train.hidden_dim = to_int(key, value);
  } else if (key == "demos.worlds") {
    demo_worlds = to_int(key, value);
  } else if (key == "demos.walks") {
    demo_walks = to_int(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

void RunConfig::validate() const {
  if (gen.width < 16 || gen.height < 16)
    throw ConfigError("config: world must be at least 16x16 cells");
  if (gen.rooms < 2) throw ConfigError("config: world.rooms must be >= 2");
  if (gen.num_classes < 6) throw ConfigError("config: world.classes must be >= 6");
  if (gen.resolution <= 0.0) throw ConfigError("config: world.resolution must be > 0");
  if (raycast.rays_per_view < 1) throw ConfigError("config: rays.per_view must be >= 1");
  if (raycast.max_range <= 0.0) throw ConfigError("config: rays.max_range must be > 0");
  if (!components.imagination && imagine_mode_explicit)
    throw ConfigError("config: imagine.mode set while imagination is off");
  if (!components.imagination && components.where2imagine)
    throw ConfigError("config: where2imagine requires imagination");
  if (components.noise.p_swap < 0.0 || components.noise.p_swap > 1.0)
    throw ConfigError("config: imagine.p_swap must be in [0,1]");
  if (components.noise.depth_jitter < 0.0 || components.noise.depth_jitter >= 1.0)
    throw ConfigError("config: imagine.depth_jitter must be in [0,1)");
  if (components.memory.mode == MemoryMode::Tiered) {
    const MemoryConfig& m = components.memory;
    if (!(m.tau_distant <= m.tau_medium && m.tau_medium <= m.tau_recent))
      throw ConfigError("config: memory thresholds must satisfy tau_d <= tau_m <= tau_r");
    if (m.cap_recent < 1 || m.cap_medium < 0)
      throw ConfigError("config: memory capacities must satisfy N_r >= 1, N_m >= 0");
  }
  if (components.planner == PlannerKind::Remote) validate_endpoint(components.endpoint);
  if (episodes < 1) throw ConfigError("config: episodes must be >= 1");
  if (max_steps < 1) throw ConfigError("config: episode.max_steps must be >= 1");
  if (controller_budget < 1)
    throw ConfigError("config: episode.controller_budget must be >= 1");
  if (horizon_t < 1) throw ConfigError("config: horizon_t must be >= 1");
  if (workers < 1) throw ConfigError("config: workers must be >= 1");
  if (remote_max_inflight < 1)
    throw ConfigError("config: remote.max_inflight must be >= 1");
  if (train.learning_rate <= 0.0 || train.batch_size < 1 || train.epochs < 1 ||
      train.hidden_dim < 1)
    throw ConfigError("config: invalid training hyperparameters");
  if (demo_worlds < 1 || demo_walks < 1)
    throw ConfigError("config: demos.worlds and demos.walks must be >= 1");
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  bool versioned = false;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + " is not key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config: line " + std::to_string(line_no) + " is not key = value");
    if (!seen.insert(key).second)
      throw ConfigError("config: duplicate key '" + key + "'");
    if (key == "config_version") versioned = true;
    cfg.apply(key, value);
  }
  if (!versioned) throw ConfigError("config: missing config_version");
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace inav
