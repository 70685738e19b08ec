#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "inav/error.hpp"
#include "inav/planner.hpp"
#include "test_support.hpp"

using namespace inav;
using inav::testing::uniform_view;
using inav::testing::world_from_ascii;

namespace {

const EncoderConfig kEnc{8, 0.25, 5.0};

std::array<ImaginedView, 6> imagined_from_views(const std::array<ViewObservation, 6>& views) {
  std::array<ImaginedView, 6> out;
  for (int i = 0; i < 6; ++i) {
    out[i].view = views[i];
    out[i].mode = ImagineMode::Oracle;
  }
  return out;
}

// Wraps a decision JSON the way a chat-completion endpoint would.
std::string chat_reply(const std::string& content) {
  nlohmann::ordered_json j;
  j["choices"] = {{{"message", {{"role", "assistant"}, {"content", content}}}}};
  return j.dump();
}

struct MockServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit MockServer(httplib::Server::Handler handler) {
    server.Post("/v1/chat/completions", std::move(handler));
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~MockServer() {
    server.stop();
    thread.join();
  }
  RemoteEndpoint endpoint() const {
    RemoteEndpoint e;
    e.base_url = "http://127.0.0.1:" + std::to_string(port);
    e.timeout_s = 0.25;
    e.max_retries = 2;
    e.backoff_s = 0.01;
    return e;
  }
};

PlannerDecision heuristic_fallback() {
  PlannerDecision d;
  d.choice = 2;
  d.reason = "fallback fixture";
  d.source = DecisionSource::Heuristic;
  return d;
}

}  // namespace

TEST_CASE("goal_descriptor builds unit one-hots and instance embeddings") {
  GoalSpec cat;
  cat.kind = GoalKind::Category;
  cat.category_id = 3;
  const GoalDescriptor d = goal_descriptor(cat, kEnc);
  CHECK(d.vector.norm() == doctest::Approx(1.0));
  CHECK(d.vector.values[3] == 1.0);

  GoalSpec other = cat;
  other.category_id = 5;
  CHECK(cosine_similarity(d.vector, goal_descriptor(other, kEnc).vector) == 0.0);

  GoalSpec inst;
  inst.kind = GoalKind::Instance;
  inst.category_id = 4;
  inst.instance_view = uniform_view(32, 1.5, 4);
  const GoalDescriptor di = goal_descriptor(inst, kEnc);
  CHECK(di.vector == encode_view(inst.instance_view, kEnc));
}

TEST_CASE("choose_heuristic picks the unique goal-bearing view") {
  std::array<ViewObservation, 6> views;
  for (int i = 0; i < 6; ++i) views[i] = uniform_view(32, 4.0, kWallClass);
  views[3] = uniform_view(32, 1.0, 5);
  GoalSpec goal;
  goal.kind = GoalKind::Category;
  goal.category_id = 5;
  const PlannerDecision d = choose_heuristic(imagined_from_views(views),
                                             goal_descriptor(goal, kEnc), {}, kEnc);
  CHECK(d.choice == 4);
  CHECK(d.source == DecisionSource::Heuristic);
  CHECK(d.reason.find("goal") != std::string::npos);
}

TEST_CASE("choose_heuristic breaks full ties toward option 1") {
  std::array<ViewObservation, 6> views;
  for (int i = 0; i < 6; ++i) views[i] = uniform_view(32, 3.0, 2);
  GoalSpec goal;
  goal.kind = GoalKind::Category;
  goal.category_id = 5;
  const PlannerDecision d = choose_heuristic(imagined_from_views(views),
                                             goal_descriptor(goal, kEnc), {}, kEnc);
  CHECK(d.choice == 1);
}

TEST_CASE("memory penalty matches hand-computed scores on the revisit fixture") {
  // option 1 matches the goal but is already in memory; option 2 is a
  // weaker novel view. lambda=0.3 keeps the perfect goal match on top,
  // which is exactly what the hand-computed scores say.
  std::array<ViewObservation, 6> views;
  for (int i = 0; i < 6; ++i) views[i] = uniform_view(32, 4.0, kWallClass);
  ViewObservation strong = uniform_view(32, 1.0, 5);
  ViewObservation weaker = uniform_view(32, 1.0, 5);
  for (int k = 0; k < 24; ++k) weaker.rays[k] = Ray{1.0, 2};  // dilute the goal class
  views[0] = strong;
  views[1] = weaker;

  GoalSpec goal;
  goal.kind = GoalKind::Category;
  goal.category_id = 5;
  const GoalDescriptor gd = goal_descriptor(goal, kEnc);

  std::vector<SnapshotEntry> memory = {
      SnapshotEntry{Tier::Recent, 7, encode_view(strong, kEnc), Pose{}}};

  const auto scores = heuristic_scores(imagined_from_views(views), gd, memory, kEnc, 0.3);
  const double g1 = cosine_similarity(encode_view(strong, kEnc), gd.vector);
  const double g2 = cosine_similarity(encode_view(weaker, kEnc), gd.vector);
  const double m2 = cosine_similarity(encode_view(weaker, kEnc), encode_view(strong, kEnc));
  CHECK(scores[0] == doctest::Approx(g1 - 0.3 * 1.0).epsilon(1e-9));
  CHECK(scores[1] == doctest::Approx(g2 - 0.3 * m2).epsilon(1e-9));
  REQUIRE(scores[0] > scores[1]);
  const PlannerDecision d =
      choose_heuristic(imagined_from_views(views), gd, memory, kEnc, 0.3);
  CHECK(d.choice == 1);
}

TEST_CASE("memory penalty steers away from remembered views when no goal is visible") {
  std::array<ViewObservation, 6> views;
  for (int i = 0; i < 6; ++i) views[i] = uniform_view(32, 2.0, 2);
  views[1] = uniform_view(32, 2.0, 3);  // the only novel direction

  GoalSpec goal;
  goal.kind = GoalKind::Category;
  goal.category_id = 5;  // absent from every view
  const GoalDescriptor gd = goal_descriptor(goal, kEnc);

  std::vector<SnapshotEntry> memory = {
      SnapshotEntry{Tier::Recent, 3, encode_view(views[0], kEnc), Pose{}}};
  const PlannerDecision with_memory =
      choose_heuristic(imagined_from_views(views), gd, memory, kEnc, 0.3);
  CHECK(with_memory.choice == 2);
  const PlannerDecision without =
      choose_heuristic(imagined_from_views(views), gd, {}, kEnc, 0.3);
  CHECK(without.choice == 1);  // plain tie-break when nothing is remembered
}

TEST_CASE("argmax is invariant to a constant shift of all scores") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::array<double, 6> scores;
    for (double& s : scores) s = rng.uniform(-1, 1);
    const double shift = rng.uniform(-10, 10);
    int a = 0, b = 0;
    for (int i = 1; i < 6; ++i) {
      if (scores[i] > scores[a]) a = i;
      if (scores[i] + shift > scores[b] + shift) b = i;
    }
    CHECK(a == b);
  }
}

TEST_CASE("choose_cheat picks the geodesically closest option") {
  GridWorld w = world_from_ascii({
      "#########",
      "#.......#",
      "#.......#",
      "#......5#",
      "#########",
  });
  inav::testing::set_category_goal(w, 5);
  std::array<ImaginedView, 6> imagined;
  for (int i = 0; i < 6; ++i) imagined[i].realized_pose = w.center_pose({1, 1});
  imagined[4].realized_pose = w.center_pose({6, 3});
  const PlannerDecision d = choose_cheat(w, imagined);
  CHECK(d.choice == 5);
}

TEST_CASE("build_prompt carries options, memory and the reply contract") {
  std::array<ViewObservation, 6> views;
  for (int i = 0; i < 6; ++i) views[i] = uniform_view(8, 2.0, 2 + (i % 3));
  GoalSpec goal;
  goal.kind = GoalKind::Category;
  goal.category_id = 6;
  const PromptPayload empty_mem = build_prompt(goal, {}, imagined_from_views(views), kEnc);
  const std::string text = empty_mem.text();
  for (char opt : {'A', 'B', 'C', 'D', 'E', 'F'})
    CHECK(text.find(std::string("Option ") + opt) != std::string::npos);
  CHECK(text.find("no prior observations") != std::string::npos);
  CHECK(text.find("\"Reason\"") != std::string::npos);
  CHECK(text.find("\"Choice\"") != std::string::npos);

  // byte-identical for identical inputs
  CHECK(build_prompt(goal, {}, imagined_from_views(views), kEnc).text() == text);

  std::vector<SnapshotEntry> memory = {
      SnapshotEntry{Tier::Distant, 4, encode_view(views[0], kEnc), Pose{}}};
  const std::string with_mem = build_prompt(goal, memory, imagined_from_views(views), kEnc).text();
  CHECK(with_mem.find("[distant] t=4") != std::string::npos);
}

TEST_CASE("parse_decision handles the protocol fixtures") {
  const auto ok = parse_decision(R"({"Reason":"door ahead","Choice":"C"})");
  REQUIRE(ok.has_value());
  CHECK(ok->choice == 3);
  CHECK(ok->reason == "door ahead");

  CHECK(!parse_decision(R"({"Reason":"x","Choice":"Z"})").has_value());
  CHECK(!parse_decision(R"({"Choice":"A"})").has_value());
  CHECK(!parse_decision("no json here").has_value());
  CHECK(!parse_decision("{broken json").has_value());

  const auto wrapped = parse_decision(
      "Thinking it over... the answer is {\"Reason\":\"open space\",\"Choice\":\"f\"} done");
  REQUIRE(wrapped.has_value());
  CHECK(wrapped->choice == 6);
}

TEST_CASE("render and parse are inverse on the choice") {
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    PlannerDecision d;
    d.choice = 1 + static_cast<int>(rng.bounded(6));
    d.reason = "quoted \"stuff\" and braces {} " + std::to_string(trial);
    const auto back = parse_decision(render_decision(d));
    REQUIRE(back.has_value());
    CHECK(back->choice == d.choice);
    CHECK(back->reason == d.reason);
  }
}

TEST_CASE("query_remote parses a valid mock reply") {
  MockServer mock([](const httplib::Request&, httplib::Response& res) {
    res.set_content(chat_reply(R"({"Reason":"corridor","Choice":"E"})"), "application/json");
  });
  RemoteTelemetry tel;
  const PlannerDecision d =
      query_remote(mock.endpoint(), PromptPayload{}, heuristic_fallback(), tel);
  CHECK(d.choice == 5);
  CHECK(d.source == DecisionSource::Remote);
  CHECK(tel.successes == 1);
  CHECK(tel.fallbacks == 0);
}

TEST_CASE("query_remote falls back on malformed replies") {
  MockServer mock([](const httplib::Request&, httplib::Response& res) {
    res.set_content("gibberish without a decision", "text/plain");
  });
  RemoteTelemetry tel;
  const PlannerDecision d =
      query_remote(mock.endpoint(), PromptPayload{}, heuristic_fallback(), tel);
  CHECK(d.choice == 2);
  CHECK(d.source == DecisionSource::Fallback);
  CHECK(tel.fallbacks == 1);
  CHECK(tel.successes == 0);
}

TEST_CASE("query_remote retries through two timeouts then succeeds") {
  std::atomic<int> calls{0};
  MockServer mock([&calls](const httplib::Request&, httplib::Response& res) {
    const int n = ++calls;
    if (n <= 2) std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(chat_reply(R"({"Reason":"late","Choice":"A"})"), "application/json");
  });
  RemoteTelemetry tel;
  const PlannerDecision d =
      query_remote(mock.endpoint(), PromptPayload{}, heuristic_fallback(), tel);
  CHECK(d.choice == 1);
  CHECK(d.source == DecisionSource::Remote);
  CHECK(tel.retries == 2);
  CHECK(tel.successes == 1);
  CHECK(calls.load() >= 3);
}

TEST_CASE("endpoint validation fails fast on misconfiguration") {
  RemoteEndpoint none;
  CHECK_THROWS_AS(validate_endpoint(none), ConfigError);
  RemoteEndpoint https;
  https.base_url = "https://example.invalid";
  CHECK_THROWS_AS(validate_endpoint(https), ConfigError);
  RemoteEndpoint ok;
  ok.base_url = "http://127.0.0.1:9";
  CHECK_NOTHROW(validate_endpoint(ok));
}
