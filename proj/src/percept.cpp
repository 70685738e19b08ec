#include "inav/percept.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "inav/error.hpp"

namespace inav {

bool FeatureVector::is_zero() const {
  for (double v : values)
    if (v != 0.0) return false;
  return true;
}

double FeatureVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

Panorama capture_panorama(const GridWorld& world, const Pose& pose, int timestep,
                          const RaycastParams& rp) {
  Panorama pano;
  pano.timestep = timestep;
  for (std::size_t i = 0; i < kPanoramaOffsets.size(); ++i) {
    pano.views[i] = raycast_view(world, pose, kPanoramaOffsets[i], rp);
    pano.views[i].timestep = timestep;
  }
  return pano;
}

std::vector<double> encode_view_raw(const ViewObservation& view, const EncoderConfig& cfg) {
  std::vector<double> raw(static_cast<std::size_t>(cfg.dim()), 0.0);
  if (view.rays.empty()) return raw;

  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  int at_max = 0;
  for (const Ray& r : view.rays) {
    const int cls = std::clamp(r.cls, 0, cfg.num_classes - 1);
    raw[cls] += 1.0 / std::max(r.depth, cfg.resolution);
    sum += r.depth;
    lo = std::min(lo, r.depth);
    hi = std::max(hi, r.depth);
    if (r.depth >= cfg.max_range - 1e-12) ++at_max;
  }
  const std::size_t n = view.rays.size();
  raw[cfg.num_classes + 0] = sum / static_cast<double>(n);
  raw[cfg.num_classes + 1] = lo;
  raw[cfg.num_classes + 2] = hi;
  raw[cfg.num_classes + 3] = static_cast<double>(at_max) / static_cast<double>(n);
  return raw;
}

FeatureVector encode_view(const ViewObservation& view, const EncoderConfig& cfg) {
  FeatureVector f;
  f.values = encode_view_raw(view, cfg);
  double s = 0.0;
  for (double v : f.values) s += v * v;
  if (s > 0.0) {
    const double inv = 1.0 / std::sqrt(s);
    for (double& v : f.values) v *= inv;
  }
  return f;
}

double mean_depth(const ViewObservation& view) {
  if (view.rays.empty()) return 0.0;
  double sum = 0.0;
  for (const Ray& r : view.rays) sum += r.depth;
  return sum / static_cast<double>(view.rays.size());
}

std::string embedding_record(int timestep, double heading, const FeatureVector& f) {
  nlohmann::ordered_json j;
  j["timestep"] = timestep;
  j["heading"] = heading;
  j["values"] = f.values;
  return j.dump();
}

std::vector<EmbeddingRecord> load_embedding_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_embedding_dump: cannot open " + path);
  std::vector<EmbeddingRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    EmbeddingRecord rec;
    rec.timestep = j.at("timestep").get<int>();
    rec.heading = j.at("heading").get<double>();
    rec.feature.values = j.at("values").get<std::vector<double>>();
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace inav
