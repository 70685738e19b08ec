#pragma once

#include <string>
#include <vector>

#include "inav/observation.hpp"
#include "inav/world.hpp"

namespace inav {

// Unit-L2 embedding of a view, or the all-zero sentinel for empty input.
struct FeatureVector {
  std::vector<double> values;

  bool is_zero() const;
  double norm() const;

  bool operator==(const FeatureVector&) const = default;
};

struct EncoderConfig {
  int num_classes = 8;
  double resolution = 0.25;  // inverse-depth weight floor
  double max_range = 5.0;

  int dim() const { return num_classes + 4; }
};

// Six raycast views at fixed 60-degree offsets, stamped with `timestep`.
Panorama capture_panorama(const GridWorld& world, const Pose& pose, int timestep = 0,
                          const RaycastParams& rp = RaycastParams{});

// Layout: [per-class inverse-depth-weighted hit histogram (num_classes);
// mean depth; min depth; max depth; max-range ray fraction], L2-normalized.
FeatureVector encode_view(const ViewObservation& view, const EncoderConfig& cfg);

// Same components before normalization; exposed for fixture tests.
std::vector<double> encode_view_raw(const ViewObservation& view, const EncoderConfig& cfg);

double mean_depth(const ViewObservation& view);

// JSONL embedding dump, one record per frame:
// {"timestep":..,"heading":..,"values":[..]}
std::string embedding_record(int timestep, double heading, const FeatureVector& f);

struct EmbeddingRecord {
  int timestep = 0;
  double heading = 0.0;
  FeatureVector feature;
};
std::vector<EmbeddingRecord> load_embedding_dump(const std::string& path);

}  // namespace inav
