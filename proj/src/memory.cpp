#include "inav/memory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "inav/error.hpp"

namespace inav {

double cosine_similarity(const FeatureVector& a, const FeatureVector& b) {
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<Segment> segment_sequence(const std::vector<FeatureVector>& features,
                                      double tau) {
  std::vector<Segment> segments;
  if (features.empty()) return segments;
  int first = 0;
  for (int i = 0; i + 1 < static_cast<int>(features.size()); ++i) {
    if (cosine_similarity(features[i], features[i + 1]) <= tau) {
      segments.push_back(Segment{first, i});
      first = i + 1;
    }
  }
  segments.push_back(Segment{first, static_cast<int>(features.size()) - 1});
  return segments;
}

FeatureVector segment_centroid(const std::vector<FeatureVector>& segment_features) {
  if (segment_features.empty())
    throw std::invalid_argument("segment_centroid: empty segment");
  FeatureVector mu;
  mu.values.assign(segment_features.front().values.size(), 0.0);
  for (const FeatureVector& f : segment_features) {
    if (f.values.size() != mu.values.size())
      throw std::invalid_argument("segment_centroid: dimension mismatch");
    for (std::size_t i = 0; i < mu.values.size(); ++i) mu.values[i] += f.values[i];
  }
  for (double& v : mu.values) v /= static_cast<double>(segment_features.size());
  return mu;
}

std::size_t select_keyframe(const std::vector<FeatureVector>& segment_features) {
  if (segment_features.empty())
    throw std::invalid_argument("select_keyframe: empty segment");
  const FeatureVector mu = segment_centroid(segment_features);
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < segment_features.size(); ++j) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < mu.values.size(); ++i) {
      const double d = segment_features[j].values[i] - mu.values[i];
      d2 += d * d;
    }
    if (d2 < best_d2) {
      best_d2 = d2;
      best = j;
    }
  }
  return best;
}

namespace {

Keyframe make_keyframe(const std::vector<FrameRecord>& history, int first, int last) {
  std::vector<FeatureVector> feats;
  feats.reserve(static_cast<std::size_t>(last - first + 1));
  for (int i = first; i <= last; ++i) feats.push_back(history[i].feature);
  const int pick = first + static_cast<int>(select_keyframe(feats));
  return Keyframe{history[pick].timestep, history[pick].feature, history[pick].pose};
}

// Largest j <= end such that frames [j..end] form one segment under tau.
int segment_start_backward(const std::vector<FrameRecord>& history, int end, double tau) {
  int j = end;
  while (j > 0 && cosine_similarity(history[j - 1].feature, history[j].feature) > tau)
    --j;
  return j;
}

}  // namespace

FoveationMemory build_memory(const std::vector<FrameRecord>& history,
                             const MemoryConfig& cfg) {
  FoveationMemory mem;
  mem.config = cfg;
  if (cfg.mode == MemoryMode::None || history.empty()) return mem;

  if (cfg.mode == MemoryMode::Full) {
    // Full retention keeps every frame; the unbounded tier holds them.
    for (const FrameRecord& fr : history)
      mem.distant.push_back(Keyframe{fr.timestep, fr.feature, fr.pose});
    return mem;
  }

  if (!(cfg.tau_distant <= cfg.tau_medium && cfg.tau_medium <= cfg.tau_recent))
    throw ConfigError("build_memory: thresholds must satisfy tau_d <= tau_m <= tau_r");
  if (cfg.cap_recent < 1 || cfg.cap_medium < 0)
    throw ConfigError("build_memory: capacities must satisfy N_r >= 1, N_m >= 0");

  int pos = static_cast<int>(history.size()) - 1;

  auto sweep_tier = [&](double tau, int quota, std::vector<Keyframe>& out) {
    while (pos >= 0 && static_cast<int>(out.size()) < quota) {
      const int first = segment_start_backward(history, pos, tau);
      out.push_back(make_keyframe(history, first, pos));
      pos = first - 1;
    }
    std::reverse(out.begin(), out.end());
  };

  sweep_tier(cfg.tau_recent, cfg.cap_recent, mem.recent);
  sweep_tier(cfg.tau_medium, cfg.cap_medium, mem.medium);
  while (pos >= 0) {
    const int first = segment_start_backward(history, pos, cfg.tau_distant);
    mem.distant.push_back(make_keyframe(history, first, pos));
    pos = first - 1;
  }
  std::reverse(mem.distant.begin(), mem.distant.end());
  return mem;
}

std::vector<SnapshotEntry> memory_snapshot(const FoveationMemory& memory) {
  std::vector<SnapshotEntry> out;
  out.reserve(memory.total());
  auto append = [&](const std::vector<Keyframe>& tier, Tier label) {
    for (const Keyframe& k : tier)
      out.push_back(SnapshotEntry{label, k.frame_index, k.feature, k.pose_at_capture});
  };
  append(memory.distant, Tier::Distant);
  append(memory.medium, Tier::Medium);
  append(memory.recent, Tier::Recent);
  return out;
}

const char* tier_name(Tier t) {
  switch (t) {
    case Tier::Distant: return "distant";
    case Tier::Medium: return "medium";
    case Tier::Recent: return "recent";
  }
  return "?";
}

}  // namespace inav
