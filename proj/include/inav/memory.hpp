#pragma once

#include <string>
#include <vector>

#include "inav/percept.hpp"
#include "inav/world.hpp"

namespace inav {

// Maximal run of consecutive frames whose pairwise similarity stays above
// the segmentation threshold.
struct Segment {
  int first = 0;  // global frame indices, inclusive
  int last = 0;

  int size() const { return last - first + 1; }
};

struct Keyframe {
  int frame_index = 0;
  FeatureVector feature;
  Pose pose_at_capture;
};

enum class MemoryMode { None, Full, Tiered };

struct MemoryConfig {
  MemoryMode mode = MemoryMode::Tiered;
  double tau_recent = 0.8;
  double tau_medium = 0.73;
  double tau_distant = 0.6;
  int cap_recent = 15;
  int cap_medium = 10;

  static MemoryConfig none() { return MemoryConfig{MemoryMode::None, 0, 0, 0, 0, 0}; }
  static MemoryConfig full() { return MemoryConfig{MemoryMode::Full, 0, 0, 0, 0, 0}; }
  static MemoryConfig uniform(double tau) {
    return MemoryConfig{MemoryMode::Tiered, tau, tau, tau, 15, 10};
  }
};

struct FoveationMemory {
  std::vector<Keyframe> recent;   // temporally latest, ascending order
  std::vector<Keyframe> medium;
  std::vector<Keyframe> distant;  // earliest, unbounded
  MemoryConfig config;

  std::size_t total() const { return recent.size() + medium.size() + distant.size(); }
};

struct FrameRecord {
  FeatureVector feature;
  Pose pose;
  int timestep = 0;
};

enum class Tier { Distant, Medium, Recent };

struct SnapshotEntry {
  Tier tier = Tier::Distant;
  int frame_index = 0;
  FeatureVector feature;
  Pose pose;
};

// dot(a,b)/(|a||b|), clamped to [-1,1]; 0 when either operand is the zero
// sentinel. Throws std::invalid_argument on dimension mismatch.
double cosine_similarity(const FeatureVector& a, const FeatureVector& b);

// Splits the sequence at every consecutive pair with similarity <= tau.
std::vector<Segment> segment_sequence(const std::vector<FeatureVector>& features,
                                      double tau);

// Index of the frame closest to the segment's mean feature; ties go to the
// earliest frame. Throws std::invalid_argument on empty input.
std::size_t select_keyframe(const std::vector<FeatureVector>& segment_features);

FeatureVector segment_centroid(const std::vector<FeatureVector>& segment_features);

// Backward sweep from the latest frame: recent tier segments with
// tau_recent until cap_recent keyframes exist, medium continues with
// tau_medium until cap_medium, distant covers all earlier frames with
// tau_distant. A tier always finishes its current segment before closing.
FoveationMemory build_memory(const std::vector<FrameRecord>& history,
                             const MemoryConfig& cfg);

// Temporally ascending distant -> medium -> recent concatenation.
std::vector<SnapshotEntry> memory_snapshot(const FoveationMemory& memory);

const char* tier_name(Tier t);

}  // namespace inav
