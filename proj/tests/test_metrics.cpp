#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <stdexcept>

#include "inav/error.hpp"
#include "inav/metrics.hpp"
#include "test_support.hpp"

using namespace inav;

namespace {

EpisodeRow row(int success, double p, double l) {
  EpisodeRow r;
  r.success = success;
  r.path_length = p;
  r.shortest_length = l;
  return r;
}

AblationSetup tiny_setup(std::uint64_t seed) {
  AblationSetup s;
  s.gen.width = 24;
  s.gen.height = 24;
  s.gen.rooms = 2;
  s.gen.objects_per_class = 2;
  s.episodes_per_config = 4;
  s.seed = seed;
  s.episode.max_steps = 120;
  return s;
}

}  // namespace

TEST_CASE("success_rate basics") {
  CHECK(success_rate({row(1, 1, 1), row(1, 1, 1)}) == 1.0);
  CHECK(success_rate({row(1, 1, 1), row(0, 1, 1), row(1, 1, 1), row(0, 1, 1)}) == 0.5);
  CHECK(success_rate({row(0, 1, 1)}) == 0.0);
  CHECK_THROWS_AS(success_rate({}), std::invalid_argument);
}

TEST_CASE("spl fixtures") {
  CHECK(spl({row(1, 3.5, 3.5)}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(spl({row(0, 9.0, 2.0)}) == 0.0);
  // mixed case: S=1 with l=4, p=5 plus one failure -> 0.4
  CHECK(spl({row(1, 5.0, 4.0), row(0, 2.0, 2.0)}) == doctest::Approx(0.4).epsilon(1e-9));
  // l = 0 convention: the episode contributes its success indicator
  CHECK(spl({row(1, 0.0, 0.0)}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(spl({row(1, 2.5, 0.0)}) == doctest::Approx(1.0).epsilon(1e-9));
  // detour shorter than l is impossible, but max() guards p < l anyway
  CHECK(spl({row(1, 1.0, 2.0)}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(spl({}), std::invalid_argument);
  CHECK_THROWS_AS(spl({row(1, -1.0, 2.0)}), std::invalid_argument);
}

TEST_CASE("spl never exceeds success rate") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EpisodeRow> rows;
    const int n = 1 + static_cast<int>(rng.bounded(20));
    for (int i = 0; i < n; ++i)
      rows.push_back(row(static_cast<int>(rng.bounded(2)), rng.uniform(0, 10),
                         rng.uniform(0, 10)));
    CHECK(spl(rows) <= success_rate(rows) + 1e-12);
    CHECK(spl(rows) >= 0.0);
  }
}

TEST_CASE("avg_memory_size basics") {
  std::vector<EpisodeRow> rows(3);
  rows[0].memory_size = 0;
  rows[1].memory_size = 10;
  rows[2].memory_size = 20;
  CHECK(avg_memory_size(rows) == doctest::Approx(10.0));
}

TEST_CASE("run_ablation rejects invalid combinations") {
  AblationSetup setup = tiny_setup(1);
  ComponentSpec bad;
  bad.imagination = false;
  bad.imagine_mode = ImagineMode::Degraded;
  CHECK_THROWS_AS(run_ablation({AblationCell{"bad", bad, GoalKind::Category}}, setup),
                  ConfigError);

  ComponentSpec w2i_without_imagination;
  w2i_without_imagination.imagination = false;
  w2i_without_imagination.where2imagine = true;
  w2i_without_imagination.imagine_mode = ImagineMode::Oracle;
  CHECK_THROWS_AS(
      run_ablation({AblationCell{"bad2", w2i_without_imagination, GoalKind::Category}},
                   setup),
      ConfigError);

  ComponentSpec needs_model;
  needs_model.imagination = true;
  needs_model.where2imagine = true;
  CHECK_THROWS_AS(
      run_ablation({AblationCell{"no_model", needs_model, GoalKind::Category}}, setup),
      ConfigError);
}

TEST_CASE("run_ablation produces paired, reproducible reports") {
  AblationSetup setup = tiny_setup(33);
  ComponentSpec a;
  a.imagination = true;
  a.where2imagine = false;
  a.planner = PlannerKind::Cheat;
  a.memory = MemoryConfig::none();
  ComponentSpec b = a;
  b.planner = PlannerKind::Random;

  const std::vector<AblationCell> cells = {{"cheat", a, GoalKind::Category},
                                           {"random", b, GoalKind::Category}};
  const auto reports = run_ablation(cells, setup);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].config_id == "cheat");
  CHECK(reports[0].episodes == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(reports[0].rows[i].world_seed == reports[1].rows[i].world_seed);
    CHECK(reports[0].rows[i].episode_seed == reports[1].rows[i].episode_seed);
  }

  const auto again = run_ablation(cells, setup);
  CHECK(reports_to_csv(reports) == reports_to_csv(again));
  CHECK(report_to_json(reports[0]) == report_to_json(again[0]));
}

TEST_CASE("csv schema is fixed") {
  RunReport r;
  r.config_id = "demo";
  r.fingerprint = "{}";
  r.episodes = 2;
  r.sr = 0.5;
  r.spl = 0.25;
  r.avg_mem = 12.5;
  const std::string csv = reports_to_csv({r});
  CHECK(csv.find("config_id,episodes,SR,SPL,avg_mem,remote_fallback_rate\n") == 0);
  CHECK(csv.find("demo,2,0.500000,0.250000,12.500000,0.000000\n") != std::string::npos);
}

TEST_CASE("table2 grid has the seven ablation rows") {
  const auto cells = table2_cells(GoalKind::Category, MemoryConfig{}, DegradationParams{});
  REQUIRE(cells.size() == 7);
  CHECK(!cells[0].spec.imagination);
  CHECK(!cells[0].spec.where2imagine);
  CHECK(cells[1].spec.imagination);
  CHECK(!cells[1].spec.where2imagine);
  CHECK(cells[2].spec.where2imagine);
  CHECK(cells[3].spec.memory.mode == MemoryMode::Tiered);
  CHECK(cells[4].spec.imagine_mode == ImagineMode::Degraded);
  CHECK(cells[6].spec.memory.mode == MemoryMode::Tiered);
  int degraded = 0;
  for (const auto& c : cells)
    if (c.spec.imagine_mode == ImagineMode::Degraded) ++degraded;
  CHECK(degraded == 3);
}

TEST_CASE("memory grid covers the four retention schemes") {
  const auto cells = memory_grid_cells(GoalKind::Category, DegradationParams{});
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].spec.memory.mode == MemoryMode::None);
  CHECK(cells[1].spec.memory.mode == MemoryMode::Full);
  CHECK(cells[2].spec.memory.mode == MemoryMode::Tiered);
  CHECK(cells[2].spec.memory.tau_recent == cells[2].spec.memory.tau_distant);
  CHECK(cells[3].spec.memory.tau_recent == 0.8);
  CHECK(cells[3].spec.memory.tau_medium == 0.73);
  CHECK(cells[3].spec.memory.tau_distant == 0.6);
}
