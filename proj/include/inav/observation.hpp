#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace inav {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// Wraps an angle into [0, 2*pi).
inline double wrap_two_pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

// Wraps an angle into (-pi, pi].
inline double wrap_pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a <= -kPi) a += kTwoPi;
  if (a > kPi) a -= kTwoPi;
  return a;
}

inline double deg_to_rad(double d) { return d * kPi / 180.0; }

struct Ray {
  double depth = 0.0;  // meters, always in (0, max_range]
  int cls = 0;         // semantic class of the hit cell, 0 at max range

  bool operator==(const Ray&) const = default;
};

// One 60-degree egocentric scan: fixed ray count, depth + class per ray.
struct ViewObservation {
  std::vector<Ray> rays;
  double heading = 0.0;  // absolute, radians in [0, 2*pi)
  int timestep = 0;

  bool operator==(const ViewObservation&) const = default;
};

// Six views at heading offsets 0, 60, ..., 300 degrees.
struct Panorama {
  std::array<ViewObservation, 6> views;
  int timestep = 0;
};

inline constexpr std::array<double, 6> kPanoramaOffsets = {
    0.0,          kPi / 3.0,       2.0 * kPi / 3.0,
    kPi,          4.0 * kPi / 3.0, 5.0 * kPi / 3.0};

}  // namespace inav
