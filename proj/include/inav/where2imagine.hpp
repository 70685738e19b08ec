#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "inav/percept.hpp"
#include "inav/world.hpp"

namespace inav {

// Displacement in the body frame of the originating pose: dy runs along the
// heading, dx along the left-hand lateral axis, dtheta is the heading change.
struct RelativeWaypoint {
  double dx = 0.0;      // meters, lateral (left positive)
  double dy = 0.0;      // meters, longitudinal (forward positive)
  double dtheta = 0.0;  // radians in (-pi, pi]
};

constexpr double kMaxStepRadius = 3.0;  // meters, prediction clamp

// Expresses `to` in the body frame of `from`.
RelativeWaypoint relative_between(const Pose& from, const Pose& to);

struct DemoSample {
  FeatureVector feature;
  RelativeWaypoint label;
  std::uint64_t world_seed = 0;
  int timestep = 0;
};

struct CollectStats {
  int kept = 0;
  int depth_filtered = 0;
  int angle_filtered = 0;
  int skipped_worlds = 0;
};

struct DemoSet {
  std::vector<DemoSample> samples;
  CollectStats stats;
};

// Shortest-path pose sequence from start to goal, one pose per primitive
// action (turns included). Prefers door-like cells on shortest-path ties.
// nullopt when the pair is blocked or disconnected.
std::optional<std::vector<Pose>> oracle_walk(const GridWorld& world, Cell start,
                                             Cell goal);

// Pairs each walk step's forward-view feature with the pose T actions ahead,
// dropping samples that fail the mean-depth (>= 0.3 m) or angle (|dtheta|
// <= 30 degrees) filters.
DemoSet make_samples_from_path(const GridWorld& world, const std::vector<Pose>& poses,
                               int horizon_T, const EncoderConfig& enc,
                               const RaycastParams& rp = RaycastParams{});

// n_per_world seeded (start, goal) walks per world.
DemoSet collect_demos(const std::vector<GridWorld>& worlds, int horizon_T,
                      int n_per_world, std::uint64_t seed,
                      const RaycastParams& rp = RaycastParams{});

// One hidden layer, tanh activation, linear 3-way output.
struct Regressor {
  int in_dim = 0;
  int hidden_dim = 0;
  std::vector<double> w1;  // hidden_dim x in_dim, row-major
  std::vector<double> b1;
  std::vector<double> w2;  // 3 x hidden_dim, row-major
  std::vector<double> b2;
  double max_step_radius = kMaxStepRadius;

  std::array<double, 3> forward(const std::vector<double>& x) const;
};

Regressor init_regressor(int in_dim, int hidden_dim, std::uint64_t seed);

struct TrainHyper {
  double learning_rate = 0.03;
  int batch_size = 32;
  int epochs = 150;
  int hidden_dim = 32;
};

struct TrainResult {
  Regressor model;
  // entry 0 is the untrained loss; entry e+1 the dataset loss after epoch e
  std::vector<double> loss_curve;
};

// Minibatch gradient descent on the mean squared waypoint error. Throws
// TrainingDivergence when the loss stops being finite.
TrainResult train_regressor(const std::vector<DemoSample>& demos,
                            const TrainHyper& hyper, std::uint64_t seed);

// Forward pass with the output clamps: |dtheta| <= 30 degrees and
// displacement radius <= max_step_radius.
RelativeWaypoint predict_waypoint(const Regressor& model, const FeatureVector& feature);

// Max relative error between analytic gradients and central finite
// differences (step 1e-5) over every parameter, for the single-sample loss.
double gradient_check(const Regressor& model, const DemoSample& sample);

// Checkpoint: versioned JSON of layer dims + row-major parameter arrays.
std::string regressor_to_json(const Regressor& model);
Regressor regressor_from_json(const std::string& text);
void save_regressor(const Regressor& model, const std::string& path);
Regressor load_regressor(const std::string& path);

void save_demos(const std::vector<DemoSample>& demos, const std::string& path);
std::vector<DemoSample> load_demos(const std::string& path);

}  // namespace inav
