#pragma once

#include <cstdint>
#include <string>

#include "inav/navloop.hpp"

namespace inav {

// Flat key=value experiment record. Unknown keys, duplicate keys and
// invalid combinations are rejected before any work starts.
struct RunConfig {
  GenParams gen;
  RaycastParams raycast;
  ComponentSpec components;
  bool imagine_mode_explicit = false;
  int max_steps = 500;
  int controller_budget = 40;
  int episodes = 100;
  std::uint64_t seed = 7;
  int horizon_t = 11;
  int workers = 1;
  int remote_max_inflight = 4;
  TrainHyper train;
  int demo_worlds = 12;
  int demo_walks = 10;

  EpisodeConfig episode_config() const {
    return EpisodeConfig{max_steps, controller_budget, raycast};
  }

  // Single key assignment; throws ConfigError on unknown keys or bad values.
  void apply(const std::string& key, const std::string& value);
  // Cross-field checks; throws ConfigError.
  void validate() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

}  // namespace inav
