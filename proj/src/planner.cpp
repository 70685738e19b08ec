#include "inav/planner.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "inav/error.hpp"

namespace inav {

namespace {

std::string class_name(int cls) {
  if (cls == kWallClass) return "wall";
  if (cls == kFloorClass) return "floor";
  return "object-" + std::to_string(cls);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Up to three classes by descending histogram weight, class id on ties.
std::string dominant_classes(const std::vector<double>& values, int num_classes) {
  std::vector<std::pair<double, int>> weighted;
  for (int c = 0; c < num_classes; ++c)
    if (values[c] > 0.0) weighted.push_back({values[c], c});
  std::stable_sort(weighted.begin(), weighted.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (weighted.empty()) return "nothing";
  std::string out;
  for (std::size_t i = 0; i < weighted.size() && i < 3; ++i) {
    if (i) out += ", ";
    out += class_name(weighted[i].second);
  }
  return out;
}

}  // namespace

char option_letter(int choice) { return static_cast<char>('A' + choice - 1); }

GoalDescriptor goal_descriptor(const GoalSpec& goal, const EncoderConfig& enc) {
  GoalDescriptor d;
  d.kind = goal.kind;
  if (goal.kind == GoalKind::Category) {
    d.vector.values.assign(static_cast<std::size_t>(enc.dim()), 0.0);
    if (goal.category_id < 0 || goal.category_id >= enc.num_classes)
      throw ConfigError("goal_descriptor: category id outside class range");
    d.vector.values[goal.category_id] = 1.0;
  } else {
    d.vector = encode_view(goal.instance_view, enc);
  }
  return d;
}

std::array<double, 6> heuristic_scores(const std::array<ImaginedView, 6>& imagined,
                                       const GoalDescriptor& goal,
                                       const std::vector<SnapshotEntry>& memory,
                                       const EncoderConfig& enc, double lambda) {
  std::array<double, 6> scores{};
  for (std::size_t i = 0; i < 6; ++i) {
    const FeatureVector f = encode_view(imagined[i].view, enc);
    const double goal_term = cosine_similarity(f, goal.vector);
    double revisit = 0.0;
    for (const SnapshotEntry& k : memory)
      revisit = std::max(revisit, cosine_similarity(f, k.feature));
    scores[i] = goal_term - lambda * revisit;
  }
  return scores;
}

PlannerDecision choose_heuristic(const std::array<ImaginedView, 6>& imagined,
                                 const GoalDescriptor& goal,
                                 const std::vector<SnapshotEntry>& memory,
                                 const EncoderConfig& enc, double lambda) {
  std::array<double, 6> goal_terms{};
  std::array<double, 6> revisit_terms{};
  for (std::size_t i = 0; i < 6; ++i) {
    const FeatureVector f = encode_view(imagined[i].view, enc);
    goal_terms[i] = cosine_similarity(f, goal.vector);
    for (const SnapshotEntry& k : memory)
      revisit_terms[i] = std::max(revisit_terms[i], cosine_similarity(f, k.feature));
  }
  int best = 0;
  double best_score = goal_terms[0] - lambda * revisit_terms[0];
  for (int i = 1; i < 6; ++i) {
    const double score = goal_terms[i] - lambda * revisit_terms[i];
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  PlannerDecision d;
  d.choice = best + 1;
  d.source = DecisionSource::Heuristic;
  d.reason = std::string("option ") + option_letter(d.choice) + ": goal " +
             fmt(goal_terms[best]) + ", revisit " + fmt(revisit_terms[best]) +
             ", score " + fmt(best_score);
  return d;
}

PlannerDecision choose_cheat(const GridWorld& world,
                             const std::array<ImaginedView, 6>& imagined) {
  const std::vector<int> field = goal_distance_field(world);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 6; ++i) {
    const Cell c = world.cell_of(imagined[i].realized_pose);
    const int steps = field[world.idx(c.x, c.y)];
    const double d = steps < 0 ? std::numeric_limits<double>::infinity()
                               : steps * world.resolution;
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  PlannerDecision d;
  d.choice = best + 1;
  d.source = DecisionSource::Heuristic;
  d.reason = std::string("option ") + option_letter(d.choice) +
             ": geodesic to goal " + fmt(best_d);
  return d;
}

PlannerDecision choose_random(Rng& rng) {
  PlannerDecision d;
  d.choice = 1 + static_cast<int>(rng.bounded(6));
  d.source = DecisionSource::Random;
  d.reason = "random choice";
  return d;
}

std::string PromptPayload::text() const {
  std::string out;
  out += "You are guiding a navigation agent searching an indoor scene.\n";
  out += "Goal: " + goal_text + "\n";
  out += "Memory of prior observations (oldest first):\n";
  if (memory_lines.empty()) {
    out += "  no prior observations\n";
  } else {
    for (const std::string& line : memory_lines) out += "  " + line + "\n";
  }
  out += "Candidate views:\n";
  for (const std::string& line : option_lines) out += "  " + line + "\n";
  out +=
      "Pick the option most likely to lead to the goal. Reply with a JSON "
      "object holding exactly two keys: \"Reason\" (short text) and "
      "\"Choice\" (one letter A-F).\n";
  return out;
}

PromptPayload build_prompt(const GoalSpec& goal, const std::vector<SnapshotEntry>& memory,
                           const std::array<ImaginedView, 6>& imagined,
                           const EncoderConfig& enc) {
  PromptPayload p;
  if (goal.kind == GoalKind::Category) {
    p.goal_text = "find any " + class_name(goal.category_id) + " instance";
  } else {
    const std::vector<double> raw = encode_view_raw(goal.instance_view, enc);
    p.goal_text = "find the specific " + class_name(goal.category_id) +
                  " instance from a reference view seeing: " +
                  dominant_classes(raw, enc.num_classes);
  }
  for (const SnapshotEntry& k : memory) {
    std::string line = std::string("[") + tier_name(k.tier) + "] t=" +
                       std::to_string(k.frame_index) + " sees: " +
                       dominant_classes(k.feature.values, enc.num_classes);
    p.memory_lines.push_back(std::move(line));
  }
  for (std::size_t i = 0; i < 6; ++i) {
    const std::vector<double> raw = encode_view_raw(imagined[i].view, enc);
    const ViewObservation& v = imagined[i].view;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const Ray& r : v.rays) {
      lo = std::min(lo, r.depth);
      hi = std::max(hi, r.depth);
    }
    p.option_lines[i] = std::string("Option ") + option_letter(static_cast<int>(i) + 1) +
                        ": sees " + dominant_classes(raw, enc.num_classes) +
                        "; depth mean " + fmt(mean_depth(v)) + " m, min " + fmt(lo) +
                        " m, max " + fmt(hi) + " m";
  }
  return p;
}

// ---------------------------------------------------------------------------
// Decision protocol

namespace {

// Candidate end of the JSON object starting at `start`, respecting strings
// and escapes; npos when unbalanced.
std::size_t balanced_end(const std::string& text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}') {
      --depth;
      if (depth == 0) return i;
    }
  }
  return std::string::npos;
}

}  // namespace

std::optional<PlannerDecision> parse_decision(const std::string& text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    const std::size_t end = balanced_end(text, i);
    if (end == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(text.substr(i, end - i + 1));
    } catch (const nlohmann::json::exception&) {
      continue;
    }
    if (!obj.is_object()) continue;
    // First syntactically valid object decides; missing keys are an error.
    if (!obj.contains("Reason") || !obj.contains("Choice")) return std::nullopt;
    if (!obj["Reason"].is_string() || !obj["Choice"].is_string()) return std::nullopt;
    std::string choice = obj["Choice"].get<std::string>();
    choice.erase(std::remove_if(choice.begin(), choice.end(),
                                [](unsigned char c) { return std::isspace(c); }),
                 choice.end());
    if (choice.size() != 1) return std::nullopt;
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(choice[0])));
    if (c < 'A' || c > 'F') return std::nullopt;
    PlannerDecision d;
    d.choice = c - 'A' + 1;
    d.reason = obj["Reason"].get<std::string>();
    d.source = DecisionSource::Remote;
    return d;
  }
  return std::nullopt;
}

std::string render_decision(const PlannerDecision& decision) {
  nlohmann::ordered_json j;
  j["Reason"] = decision.reason;
  j["Choice"] = std::string(1, option_letter(decision.choice));
  return j.dump();
}

// ---------------------------------------------------------------------------
// Remote transport

namespace {

std::mutex g_inflight_mutex;
std::condition_variable g_inflight_cv;
int g_inflight_cap = 4;
int g_inflight = 0;

struct InflightGuard {
  InflightGuard() {
    std::unique_lock<std::mutex> lock(g_inflight_mutex);
    g_inflight_cv.wait(lock, [] { return g_inflight < g_inflight_cap; });
    ++g_inflight;
  }
  ~InflightGuard() {
    {
      std::lock_guard<std::mutex> lock(g_inflight_mutex);
      --g_inflight;
    }
    g_inflight_cv.notify_one();
  }
};

}  // namespace

void set_remote_inflight_cap(int cap) {
  std::lock_guard<std::mutex> lock(g_inflight_mutex);
  g_inflight_cap = std::max(1, cap);
  g_inflight_cv.notify_all();
}

void validate_endpoint(const RemoteEndpoint& endpoint) {
  if (endpoint.base_url.empty())
    throw ConfigError("remote planner: endpoint URL is not configured");
  if (endpoint.base_url.rfind("http://", 0) != 0)
    throw ConfigError("remote planner: only http:// endpoints are supported");
  if (endpoint.timeout_s <= 0.0)
    throw ConfigError("remote planner: timeout must be positive");
  if (endpoint.max_retries < 0)
    throw ConfigError("remote planner: retries must be >= 0");
}

PlannerDecision query_remote(const RemoteEndpoint& endpoint, const PromptPayload& payload,
                             const PlannerDecision& fallback, RemoteTelemetry& telemetry) {
  InflightGuard guard;

  nlohmann::ordered_json body;
  body["model"] = endpoint.model;
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "user"}, {"content", payload.text()}}});
  const std::string body_text = body.dump();

  httplib::Headers headers;
  if (const char* key = std::getenv(endpoint.api_key_env.c_str());
      key != nullptr && key[0] != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const auto timeout =
      std::chrono::milliseconds(static_cast<long long>(endpoint.timeout_s * 1000.0));
  for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
    if (attempt > 0) {
      ++telemetry.retries;
      const double backoff = endpoint.backoff_s * static_cast<double>(1 << (attempt - 1));
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<long long>(backoff * 1000.0)));
    }
    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(endpoint.path, headers, body_text, "application/json");
    if (!res || res->status != 200) continue;

    std::string content = res->body;
    try {
      const auto reply = nlohmann::json::parse(res->body);
      if (reply.contains("choices") && reply["choices"].is_array() &&
          !reply["choices"].empty()) {
        const auto& msg = reply["choices"][0].at("message").at("content");
        if (msg.is_string()) content = msg.get<std::string>();
      }
    } catch (const nlohmann::json::exception&) {
      // fall through with the raw body
    }
    if (auto decision = parse_decision(content)) {
      ++telemetry.successes;
      decision->source = DecisionSource::Remote;
      return *decision;
    }
  }
  ++telemetry.fallbacks;
  PlannerDecision d = fallback;
  d.source = DecisionSource::Fallback;
  return d;
}

}  // namespace inav
