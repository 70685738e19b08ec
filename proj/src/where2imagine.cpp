#include "inav/where2imagine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "inav/error.hpp"
#include "inav/rng.hpp"

namespace inav {

RelativeWaypoint relative_between(const Pose& from, const Pose& to) {
  const double dxw = to.x - from.x;
  const double dyw = to.y - from.y;
  const double c = std::cos(from.theta);
  const double s = std::sin(from.theta);
  RelativeWaypoint w;
  w.dy = dxw * c + dyw * s;   // along heading
  w.dx = -dxw * s + dyw * c;  // left of heading
  w.dtheta = wrap_pi(to.theta - from.theta);
  return w;
}

// ---------------------------------------------------------------------------
// Oracle demonstrations

namespace {

// Headings stay on the 30-degree lattice; positions on cell centers. The
// walker is synthetic ground truth, so poses are kept exact rather than
// integrated through apply_action.
Pose lattice_pose(const GridWorld& world, Cell c, int theta_units) {
  const int k = ((theta_units % 12) + 12) % 12;
  return world.center_pose(c, wrap_two_pi(k * kTurnRadians));
}

int direction_units(Cell from, Cell to) {
  if (to.x > from.x) return 0;   // +x
  if (to.y > from.y) return 3;   // +y
  if (to.x < from.x) return 6;   // -x
  return 9;                      // -y
}

}  // namespace

std::optional<std::vector<Pose>> oracle_walk(const GridWorld& world, Cell start,
                                             Cell goal) {
  if (!world.in_bounds(start.x, start.y) || !world.in_bounds(goal.x, goal.y))
    return std::nullopt;
  if (!world.is_free(start) || !world.is_free(goal)) return std::nullopt;

  // Distance-to-goal field, then greedy descent with door preference.
  std::vector<int> dist(world.occupancy.size(), -1);
  {
    std::vector<Cell> frontier = {goal};
    dist[world.idx(goal.x, goal.y)] = 0;
    std::size_t head = 0;
    while (head < frontier.size()) {
      const Cell c = frontier[head++];
      const int d = dist[world.idx(c.x, c.y)];
      const Cell steps[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
      for (const Cell& n : steps) {
        if (!world.in_bounds(n.x, n.y) || !world.is_free(n)) continue;
        if (dist[world.idx(n.x, n.y)] >= 0) continue;
        dist[world.idx(n.x, n.y)] = d + 1;
        frontier.push_back(n);
      }
    }
  }
  if (dist[world.idx(start.x, start.y)] < 0) return std::nullopt;

  std::vector<Cell> cells = {start};
  Cell cur = start;
  while (!(cur == goal)) {
    const int d = dist[world.idx(cur.x, cur.y)];
    const Cell steps[4] = {{cur.x + 1, cur.y}, {cur.x - 1, cur.y},
                           {cur.x, cur.y + 1}, {cur.x, cur.y - 1}};
    Cell next{-1, -1};
    bool next_door = false;
    for (const Cell& n : steps) {
      if (!world.in_bounds(n.x, n.y) || !world.is_free(n)) continue;
      if (dist[world.idx(n.x, n.y)] != d - 1) continue;
      const bool door = is_doorlike(world, n);
      if (next.x < 0 || (door && !next_door)) {
        next = n;
        next_door = door;
      }
    }
    cells.push_back(next);
    cur = next;
  }

  std::vector<Pose> poses;
  int theta = cells.size() > 1 ? direction_units(cells[0], cells[1]) : 0;
  poses.push_back(lattice_pose(world, cells[0], theta));
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const int desired = direction_units(cells[i - 1], cells[i]);
    int delta = desired - theta;
    while (delta > 6) delta -= 12;
    while (delta < -6) delta += 12;
    const int step = delta > 0 ? 1 : -1;
    for (int k = 0; k != delta; k += step) {
      theta += step;
      poses.push_back(lattice_pose(world, cells[i - 1], theta));
    }
    poses.push_back(lattice_pose(world, cells[i], theta));
  }
  return poses;
}

DemoSet make_samples_from_path(const GridWorld& world, const std::vector<Pose>& poses,
                               int horizon_T, const EncoderConfig& enc,
                               const RaycastParams& rp) {
  DemoSet out;
  if (horizon_T < 1) throw ConfigError("make_samples_from_path: horizon must be >= 1");
  for (std::size_t t = 0; t + static_cast<std::size_t>(horizon_T) < poses.size(); ++t) {
    const ViewObservation forward = raycast_view(world, poses[t], 0.0, rp);
    if (mean_depth(forward) < 0.3) {
      ++out.stats.depth_filtered;
      continue;
    }
    const RelativeWaypoint label = relative_between(poses[t], poses[t + horizon_T]);
    if (std::abs(label.dtheta) > kTurnRadians + 1e-12) {
      ++out.stats.angle_filtered;
      continue;
    }
    DemoSample s;
    s.feature = encode_view(forward, enc);
    s.label = label;
    s.world_seed = world.rng_seed;
    s.timestep = static_cast<int>(t);
    out.samples.push_back(std::move(s));
    ++out.stats.kept;
  }
  return out;
}

DemoSet collect_demos(const std::vector<GridWorld>& worlds, int horizon_T,
                      int n_per_world, std::uint64_t seed, const RaycastParams& rp) {
  if (worlds.empty()) throw ConfigError("collect_demos: no worlds");
  if (horizon_T < 1) throw ConfigError("collect_demos: horizon must be >= 1");
  DemoSet out;
  for (std::size_t wi = 0; wi < worlds.size(); ++wi) {
    const GridWorld& world = worlds[wi];
    EncoderConfig enc{world.num_classes, world.resolution, rp.max_range};
    Rng rng(Rng::mix(seed, 0xD390 + wi));
    int walks = 0;
    for (int k = 0; k < n_per_world; ++k) {
      std::optional<std::vector<Pose>> walk;
      for (int attempt = 0; attempt < 16 && !walk; ++attempt) {
        const Cell start = random_free_cell(world, rng);
        const Cell goal = random_free_cell(world, rng);
        const auto d = geodesic_distance(world, start, goal);
        if (!d || *d < 1.0) continue;
        walk = oracle_walk(world, start, goal);
      }
      if (!walk) continue;
      ++walks;
      DemoSet part = make_samples_from_path(world, *walk, horizon_T, enc, rp);
      out.stats.kept += part.stats.kept;
      out.stats.depth_filtered += part.stats.depth_filtered;
      out.stats.angle_filtered += part.stats.angle_filtered;
      for (DemoSample& s : part.samples) out.samples.push_back(std::move(s));
    }
    if (walks == 0) ++out.stats.skipped_worlds;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Regressor

std::array<double, 3> Regressor::forward(const std::vector<double>& x) const {
  std::array<double, 3> y = {b2[0], b2[1], b2[2]};
  std::vector<double> h(static_cast<std::size_t>(hidden_dim));
  for (int j = 0; j < hidden_dim; ++j) {
    double a = b1[j];
    for (int i = 0; i < in_dim; ++i) a += w1[static_cast<std::size_t>(j) * in_dim + i] * x[i];
    h[j] = std::tanh(a);
  }
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < hidden_dim; ++j)
      y[k] += w2[static_cast<std::size_t>(k) * hidden_dim + j] * h[j];
  return y;
}

Regressor init_regressor(int in_dim, int hidden_dim, std::uint64_t seed) {
  if (in_dim < 1 || hidden_dim < 1)
    throw ConfigError("init_regressor: dimensions must be positive");
  Regressor m;
  m.in_dim = in_dim;
  m.hidden_dim = hidden_dim;
  m.w1.resize(static_cast<std::size_t>(hidden_dim) * in_dim);
  m.b1.assign(static_cast<std::size_t>(hidden_dim), 0.0);
  m.w2.resize(static_cast<std::size_t>(3) * hidden_dim);
  m.b2.assign(3, 0.0);
  Rng rng(Rng::mix(seed, 0x1217));
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (double& w : m.w1) w = rng.uniform(-s1, s1);
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (double& w : m.w2) w = rng.uniform(-s2, s2);
  return m;
}

namespace {

struct Gradients {
  std::vector<double> w1, b1, w2, b2;

  explicit Gradients(const Regressor& m)
      : w1(m.w1.size(), 0.0), b1(m.b1.size(), 0.0), w2(m.w2.size(), 0.0), b2(3, 0.0) {}

  void zero() {
    std::fill(w1.begin(), w1.end(), 0.0);
    std::fill(b1.begin(), b1.end(), 0.0);
    std::fill(w2.begin(), w2.end(), 0.0);
    std::fill(b2.begin(), b2.end(), 0.0);
  }
};

// Accumulates d(‖y - label‖² * scale)/dθ into g; returns the unscaled
// squared error of this sample.
double backprop_sample(const Regressor& m, const std::vector<double>& x,
                       const RelativeWaypoint& label, double scale, Gradients& g) {
  std::vector<double> h(static_cast<std::size_t>(m.hidden_dim));
  for (int j = 0; j < m.hidden_dim; ++j) {
    double a = m.b1[j];
    for (int i = 0; i < m.in_dim; ++i)
      a += m.w1[static_cast<std::size_t>(j) * m.in_dim + i] * x[i];
    h[j] = std::tanh(a);
  }
  std::array<double, 3> y = {m.b2[0], m.b2[1], m.b2[2]};
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < m.hidden_dim; ++j)
      y[k] += m.w2[static_cast<std::size_t>(k) * m.hidden_dim + j] * h[j];

  const std::array<double, 3> target = {label.dx, label.dy, label.dtheta};
  std::array<double, 3> err;
  double sq = 0.0;
  for (int k = 0; k < 3; ++k) {
    err[k] = y[k] - target[k];
    sq += err[k] * err[k];
  }

  std::array<double, 3> gy;
  for (int k = 0; k < 3; ++k) gy[k] = 2.0 * err[k] * scale;
  for (int k = 0; k < 3; ++k) {
    g.b2[k] += gy[k];
    for (int j = 0; j < m.hidden_dim; ++j)
      g.w2[static_cast<std::size_t>(k) * m.hidden_dim + j] += gy[k] * h[j];
  }
  for (int j = 0; j < m.hidden_dim; ++j) {
    double gh = 0.0;
    for (int k = 0; k < 3; ++k)
      gh += gy[k] * m.w2[static_cast<std::size_t>(k) * m.hidden_dim + j];
    const double gpre = gh * (1.0 - h[j] * h[j]);
    g.b1[j] += gpre;
    for (int i = 0; i < m.in_dim; ++i)
      g.w1[static_cast<std::size_t>(j) * m.in_dim + i] += gpre * x[i];
  }
  return sq;
}

void apply_step(Regressor& m, const Gradients& g, double lr) {
  for (std::size_t i = 0; i < m.w1.size(); ++i) m.w1[i] -= lr * g.w1[i];
  for (std::size_t i = 0; i < m.b1.size(); ++i) m.b1[i] -= lr * g.b1[i];
  for (std::size_t i = 0; i < m.w2.size(); ++i) m.w2[i] -= lr * g.w2[i];
  for (std::size_t i = 0; i < m.b2.size(); ++i) m.b2[i] -= lr * g.b2[i];
}

}  // namespace

TrainResult train_regressor(const std::vector<DemoSample>& demos,
                            const TrainHyper& hyper, std::uint64_t seed) {
  if (demos.empty()) throw ConfigError("train_regressor: empty demo set");
  if (hyper.batch_size < 1 || hyper.epochs < 1 || hyper.hidden_dim < 1)
    throw ConfigError("train_regressor: invalid hyperparameters");
  if (static_cast<int>(demos.size()) < 10 * hyper.batch_size)
    throw ConfigError("train_regressor: need at least 10 batches of demos");
  const int dim = static_cast<int>(demos.front().feature.values.size());
  for (const DemoSample& d : demos)
    if (static_cast<int>(d.feature.values.size()) != dim)
      throw ConfigError("train_regressor: inconsistent feature dimensions");

  TrainResult result;
  result.model = init_regressor(dim, hyper.hidden_dim, seed);
  Regressor& m = result.model;
  Rng shuffle_rng(Rng::mix(seed, 0x5AFF1E));

  auto mean_loss = [&]() {
    double sq = 0.0;
    for (const DemoSample& s : demos) {
      const std::array<double, 3> y = m.forward(s.feature.values);
      const double e0 = y[0] - s.label.dx;
      const double e1 = y[1] - s.label.dy;
      const double e2 = y[2] - s.label.dtheta;
      sq += e0 * e0 + e1 * e1 + e2 * e2;
    }
    return sq / static_cast<double>(demos.size());
  };

  std::vector<std::size_t> order(demos.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Gradients grads(m);

  // curve[0] is the untrained loss; curve[e+1] the loss after epoch e.
  result.loss_curve.push_back(mean_loss());
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.index(i)]);
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t batch = std::min<std::size_t>(hyper.batch_size, order.size() - pos);
      grads.zero();
      const double scale = 1.0 / static_cast<double>(batch);
      for (std::size_t b = 0; b < batch; ++b) {
        const DemoSample& s = demos[order[pos + b]];
        backprop_sample(m, s.feature.values, s.label, scale, grads);
      }
      apply_step(m, grads, hyper.learning_rate);
      pos += batch;
    }
    const double epoch_loss = mean_loss();
    if (!std::isfinite(epoch_loss))
      throw TrainingDivergence(
          "train_regressor: loss diverged at epoch " + std::to_string(epoch), epoch);
    result.loss_curve.push_back(epoch_loss);
  }
  return result;
}

RelativeWaypoint predict_waypoint(const Regressor& model, const FeatureVector& feature) {
  if (static_cast<int>(feature.values.size()) != model.in_dim)
    throw std::invalid_argument("predict_waypoint: feature dimension mismatch");
  const std::array<double, 3> y = model.forward(feature.values);
  RelativeWaypoint w{y[0], y[1], std::clamp(y[2], -kTurnRadians, kTurnRadians)};
  const double r = std::hypot(w.dx, w.dy);
  if (r > model.max_step_radius) {
    const double k = model.max_step_radius / r;
    w.dx *= k;
    w.dy *= k;
  }
  return w;
}

double gradient_check(const Regressor& model, const DemoSample& sample) {
  Regressor m = model;
  Gradients analytic(m);
  backprop_sample(m, sample.feature.values, sample.label, 1.0, analytic);

  auto loss_at = [&]() {
    const std::array<double, 3> y = m.forward(sample.feature.values);
    const std::array<double, 3> target = {sample.label.dx, sample.label.dy,
                                          sample.label.dtheta};
    double sq = 0.0;
    for (int k = 0; k < 3; ++k) sq += (y[k] - target[k]) * (y[k] - target[k]);
    return sq;
  };

  const double step = 1e-5;
  double worst = 0.0;
  auto check_block = [&](std::vector<double>& params, const std::vector<double>& grads) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + step;
      const double up = loss_at();
      params[i] = saved - step;
      const double down = loss_at();
      params[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(grads[i]), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(grads[i] - numeric) / denom);
    }
  };
  check_block(m.w1, analytic.w1);
  check_block(m.b1, analytic.b1);
  check_block(m.w2, analytic.w2);
  check_block(m.b2, analytic.b2);
  return worst;
}

// ---------------------------------------------------------------------------
// Serialization

std::string regressor_to_json(const Regressor& model) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["dims"] = {model.in_dim, model.hidden_dim, 3};
  j["activation"] = "tanh";
  j["max_step_radius"] = model.max_step_radius;
  j["w1"] = model.w1;
  j["b1"] = model.b1;
  j["w2"] = model.w2;
  j["b2"] = model.b2;
  return j.dump();
}

Regressor regressor_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.at("version").get<int>() != 1) throw IoError("checkpoint: unsupported version");
  if (j.at("activation").get<std::string>() != "tanh")
    throw IoError("checkpoint: unsupported activation");
  Regressor m;
  const auto dims = j.at("dims").get<std::vector<int>>();
  if (dims.size() != 3 || dims[2] != 3) throw IoError("checkpoint: bad dims");
  m.in_dim = dims[0];
  m.hidden_dim = dims[1];
  m.max_step_radius = j.at("max_step_radius").get<double>();
  m.w1 = j.at("w1").get<std::vector<double>>();
  m.b1 = j.at("b1").get<std::vector<double>>();
  m.w2 = j.at("w2").get<std::vector<double>>();
  m.b2 = j.at("b2").get<std::vector<double>>();
  if (m.w1.size() != static_cast<std::size_t>(m.in_dim) * m.hidden_dim ||
      m.b1.size() != static_cast<std::size_t>(m.hidden_dim) ||
      m.w2.size() != static_cast<std::size_t>(3) * m.hidden_dim || m.b2.size() != 3)
    throw IoError("checkpoint: parameter array size mismatch");
  return m;
}

void save_regressor(const Regressor& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_regressor: cannot open " + path);
  out << regressor_to_json(model) << '\n';
}

Regressor load_regressor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_regressor: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return regressor_from_json(ss.str());
}

void save_demos(const std::vector<DemoSample>& demos, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_demos: cannot open " + path);
  for (const DemoSample& d : demos) {
    nlohmann::ordered_json j;
    j["feature"] = d.feature.values;
    j["label"] = {{"dx", d.label.dx}, {"dy", d.label.dy}, {"dtheta", d.label.dtheta}};
    j["world_seed"] = d.world_seed;
    j["timestep"] = d.timestep;
    out << j.dump() << '\n';
  }
}

std::vector<DemoSample> load_demos(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_demos: cannot open " + path);
  std::vector<DemoSample> demos;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    DemoSample d;
    d.feature.values = j.at("feature").get<std::vector<double>>();
    d.label.dx = j.at("label").at("dx").get<double>();
    d.label.dy = j.at("label").at("dy").get<double>();
    d.label.dtheta = j.at("label").at("dtheta").get<double>();
    d.world_seed = j.at("world_seed").get<std::uint64_t>();
    d.timestep = j.at("timestep").get<int>();
    demos.push_back(std::move(d));
  }
  return demos;
}

}  // namespace inav
