#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "inav/imagine.hpp"
#include "inav/memory.hpp"
#include "inav/percept.hpp"

namespace inav {

struct GoalDescriptor {
  GoalKind kind = GoalKind::Category;
  FeatureVector vector;  // unit norm
};

enum class DecisionSource { Heuristic, Remote, Random, Fallback };

struct PlannerDecision {
  int choice = 1;  // in [1, 6]
  std::string reason;
  DecisionSource source = DecisionSource::Heuristic;
};

// Text protocol payload: goal statement, tiered memory summaries in
// snapshot order, six option summaries labeled A-F.
struct PromptPayload {
  std::string goal_text;
  std::vector<std::string> memory_lines;
  std::array<std::string, 6> option_lines;

  std::string text() const;
};

// Category goals become a normalized one-hot over the class slots of the
// feature layout; instance goals embed the reference view.
GoalDescriptor goal_descriptor(const GoalSpec& goal, const EncoderConfig& enc);

// score(view) = cos(feature, goal) - lambda * max over memory keyframes of
// cos(feature, keyframe); exposed for the argmax-invariance property test.
std::array<double, 6> heuristic_scores(const std::array<ImaginedView, 6>& imagined,
                                       const GoalDescriptor& goal,
                                       const std::vector<SnapshotEntry>& memory,
                                       const EncoderConfig& enc, double lambda);

PlannerDecision choose_heuristic(const std::array<ImaginedView, 6>& imagined,
                                 const GoalDescriptor& goal,
                                 const std::vector<SnapshotEntry>& memory,
                                 const EncoderConfig& enc, double lambda = 0.3);

// Evaluation oracle: the option whose realized pose is geodesically
// closest to the goal.
PlannerDecision choose_cheat(const GridWorld& world,
                             const std::array<ImaginedView, 6>& imagined);

PlannerDecision choose_random(Rng& rng);

PromptPayload build_prompt(const GoalSpec& goal, const std::vector<SnapshotEntry>& memory,
                           const std::array<ImaginedView, 6>& imagined,
                           const EncoderConfig& enc);

// First JSON object embedded in the text, with keys "Reason" and "Choice"
// (letter A-F). nullopt on any malformed reply.
std::optional<PlannerDecision> parse_decision(const std::string& text);

// The reply format the protocol asks the remote model to produce.
std::string render_decision(const PlannerDecision& decision);

char option_letter(int choice);

struct RemoteEndpoint {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  std::string path = "/v1/chat/completions";
  std::string model = "default";
  std::string api_key_env = "IMAGINENAV_API_KEY";
  double timeout_s = 30.0;
  int max_retries = 2;
  double backoff_s = 0.25;
};

struct RemoteTelemetry {
  int successes = 0;
  int fallbacks = 0;
  int retries = 0;
};

// Global cap on concurrent remote requests across episodes.
void set_remote_inflight_cap(int cap);

// Chat-completion style POST with bounded timeout and retries. Transport,
// HTTP and parse failures all resolve to `fallback` tagged
// DecisionSource::Fallback; the call never throws mid-episode.
PlannerDecision query_remote(const RemoteEndpoint& endpoint, const PromptPayload& payload,
                             const PlannerDecision& fallback, RemoteTelemetry& telemetry);

// Throws ConfigError when the endpoint cannot be used at all.
void validate_endpoint(const RemoteEndpoint& endpoint);

}  // namespace inav
