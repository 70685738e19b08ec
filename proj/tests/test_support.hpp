#pragma once

// Shared fixtures for the test binaries. Kept independent of the library's
// generation code so hand-built worlds exercise exactly what a test states.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "inav/memory.hpp"
#include "inav/percept.hpp"
#include "inav/rng.hpp"
#include "inav/world.hpp"

namespace inav::testing {

// Builds a world from ascii rows: '#' wall, '.' floor, digits 2-9 object
// classes. Row 0 is the top (highest y) so fixtures read naturally.
inline GridWorld world_from_ascii(const std::vector<std::string>& rows,
                                  double resolution = 0.25, int num_classes = 8) {
  GridWorld w;
  w.height = static_cast<int>(rows.size());
  w.width = static_cast<int>(rows.front().size());
  w.resolution = resolution;
  w.num_classes = num_classes;
  w.occupancy.assign(static_cast<std::size_t>(w.width) * w.height, 0);
  w.semantics.assign(static_cast<std::size_t>(w.width) * w.height, kFloorClass);
  for (int r = 0; r < w.height; ++r) {
    const std::string& row = rows[r];
    const int y = w.height - 1 - r;
    for (int x = 0; x < w.width; ++x) {
      const char c = row[x];
      if (c == '#') {
        w.occupancy[w.idx(x, y)] = 1;
        w.semantics[w.idx(x, y)] = kWallClass;
      } else if (c >= '2' && c <= '9') {
        w.semantics[w.idx(x, y)] = c - '0';
      }
    }
  }
  return w;
}

inline void set_category_goal(GridWorld& w, int category) {
  w.goal_spec.kind = GoalKind::Category;
  w.goal_spec.category_id = category;
  w.goal_spec.goal_cells.clear();
  for (int y = 0; y < w.height; ++y)
    for (int x = 0; x < w.width; ++x)
      if (w.class_at(x, y) == category) w.goal_spec.goal_cells.push_back(Cell{x, y});
}

// A view with identical rays everywhere; handy for encoder fixtures.
inline ViewObservation uniform_view(int rays, double depth, int cls) {
  ViewObservation v;
  v.rays.assign(static_cast<std::size_t>(rays), Ray{depth, cls});
  return v;
}

// Unit 2D features with prescribed consecutive cosine similarities.
inline std::vector<FeatureVector> features_with_consecutive_sims(
    const std::vector<double>& sims) {
  std::vector<FeatureVector> out;
  double angle = 0.0;
  out.push_back(FeatureVector{{1.0, 0.0}});
  for (double s : sims) {
    angle += std::acos(s);
    out.push_back(FeatureVector{{std::cos(angle), std::sin(angle)}});
  }
  return out;
}

inline FeatureVector random_unit_feature(Rng& rng, std::size_t dim) {
  FeatureVector f;
  f.values.resize(dim);
  double norm2 = 0.0;
  while (norm2 == 0.0) {
    for (double& v : f.values) v = rng.uniform(-1.0, 1.0);
    norm2 = 0.0;
    for (double v : f.values) norm2 += v * v;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : f.values) v *= inv;
  return f;
}

// 500-frame room-switching trajectory in feature space: within-room jitter
// keeps consecutive similarity mostly between the medium and recent
// thresholds, room switches break far below the distant threshold.
inline std::vector<FeatureVector> synthetic_room_trajectory(std::uint64_t seed,
                                                            int frames = 500,
                                                            std::size_t dim = 8) {
  Rng rng(seed);
  std::vector<FeatureVector> out;
  std::size_t room_axis = 0;
  int until_switch = 30 + static_cast<int>(rng.bounded(40));
  FeatureVector base;
  base.values.assign(dim, 0.0);
  base.values[room_axis] = 1.0;
  for (int t = 0; t < frames; ++t) {
    if (until_switch-- <= 0) {
      room_axis = (room_axis + 1 + rng.bounded(static_cast<std::uint32_t>(dim - 1))) % dim;
      base.values.assign(dim, 0.0);
      base.values[room_axis] = 1.0;
      until_switch = 30 + static_cast<int>(rng.bounded(40));
    }
    FeatureVector f = base;
    for (std::size_t i = 0; i < dim; ++i) f.values[i] += rng.uniform(-0.35, 0.35);
    double norm2 = 0.0;
    for (double v : f.values) norm2 += v * v;
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : f.values) v *= inv;
    out.push_back(std::move(f));
  }
  return out;
}

// Brute-force reference segmenter: precompute all consecutive similarities,
// then split on s <= tau. Deliberately structured unlike the library sweep.
inline std::vector<std::vector<int>> brute_force_segments(
    const std::vector<FeatureVector>& features, double tau) {
  std::vector<std::vector<int>> out;
  if (features.empty()) return out;
  std::vector<double> sims;
  for (std::size_t i = 0; i + 1 < features.size(); ++i)
    sims.push_back(cosine_similarity(features[i], features[i + 1]));
  std::vector<int> current = {0};
  for (std::size_t i = 0; i < sims.size(); ++i) {
    if (sims[i] > tau) {
      current.push_back(static_cast<int>(i) + 1);
    } else {
      out.push_back(current);
      current = {static_cast<int>(i) + 1};
    }
  }
  out.push_back(current);
  return out;
}

// Independent keyframe pick: first minimum of the squared distance to the
// segment mean. Squared distance is the comparison key so exact ties (the
// two frames of a 2-frame segment) resolve to the earlier frame here and
// in the library alike.
inline int brute_force_keyframe(const std::vector<FeatureVector>& features,
                                const std::vector<int>& segment) {
  const std::size_t dim = features.front().values.size();
  std::vector<double> mean(dim, 0.0);
  for (int idx : segment)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += features[idx].values[d];
  for (double& v : mean) v /= static_cast<double>(segment.size());
  int best = segment.front();
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int idx : segment) {
    double d2 = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = features[idx].values[d] - mean[d];
      d2 += diff * diff;
    }
    if (d2 < best_d2) {
      best_d2 = d2;
      best = idx;
    }
  }
  return best;
}

}  // namespace inav::testing
