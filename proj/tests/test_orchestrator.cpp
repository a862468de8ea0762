#include <doctest.h>

#include <map>
#include <random>

#include "oracles.hpp"
#include "scenarios.hpp"
#include "twinfuse/faults.hpp"
#include "twinfuse/orchestrator.hpp"

using namespace twinfuse;

namespace {

using S = SensorStatus;

double line(std::size_t i) { return 20.0 + 0.01 * static_cast<double>(i); }

ScenarioConfig line_config() {
  ScenarioConfig cfg;
  cfg.lookback_n = 5;
  cfg.threshold = {1.0, ThresholdMode::absolute};
  cfg.twin.kind = TwinKind::additive_seasonal;
  cfg.twin.train_len = 40;
  cfg.twin.seasonal_period_s = 3600;
  cfg.twin.fourier_order = 1;
  cfg.run_len = 100;
  return cfg;
}

bool same_transition(const Transition& t, std::size_t cycle, std::size_t sensor, S from, S to,
                     const std::string& reason) {
  return t.cycle == cycle && t.sensor == sensor && t.from == from && t.to == to &&
         t.reason == reason;
}

// Replays the transition log and checks it against every cycle's statuses.
// Repairs recorded at cycle k apply before that cycle's window; all other
// transitions recorded at cycle k apply after it.
void check_consistent(const ScenarioReport& r) {
  Statuses st{S::Live, S::Live, S::Live};
  std::size_t next = 0;
  const auto apply = [&](const Transition& t) {
    CHECK(is_legal_transition(t.from, t.to));
    CHECK(t.from != t.to);
    CHECK(st[t.sensor] == t.from);
    if (t.from == S::Dropped) CHECK(t.reason == "repair");
    st[t.sensor] = t.to;
  };
  for (const auto& c : r.cycles) {
    while (next < r.transitions.size() && r.transitions[next].cycle < c.cycle_index)
      apply(r.transitions[next++]);
    while (next < r.transitions.size() && r.transitions[next].cycle == c.cycle_index &&
           r.transitions[next].reason == "repair")
      apply(r.transitions[next++]);
    CHECK(c.statuses == st);

    std::size_t participating = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const RowSource expect = st[s] == S::Live              ? RowSource::physical
                               : st[s] == S::TwinSubstituted ? RowSource::twin
                                                             : RowSource::excluded;
      CHECK(c.sources[s] == expect);
      if (expect != RowSource::excluded) ++participating;
    }
    CHECK(c.participation == participating);
  }
  for (; next < r.transitions.size(); ++next) apply(r.transitions[next]);
}

ScenarioConfig random_config(std::mt19937_64& rng) {
  ScenarioConfig cfg;
  cfg.lookback_n = 1 + rng() % 8;
  cfg.threshold = {0.5 + static_cast<double>(rng() % 30) / 10.0, ThresholdMode::absolute};
  cfg.patience = 1 + rng() % 3;
  cfg.twin.kind = static_cast<TwinKind>(rng() % 3);
  cfg.twin.fourier_order = 1 + static_cast<int>(rng() % 2);
  cfg.twin.train_len = 30 + rng() % 40;
  cfg.twin.seasonal_period_s = 60 * static_cast<std::int64_t>(10 + rng() % 50);
  cfg.run_len = 40 + rng() % 120;
  cfg.seed = rng();
  if (rng() % 2) cfg.repair_after_s = 60 * static_cast<std::int64_t>(rng() % 40);
  const std::size_t len = cfg.twin.train_len + cfg.run_len;
  const std::size_t faults = rng() % 4;
  for (std::size_t f = 0; f < faults; ++f) {
    FaultSpec spec;
    spec.kind = static_cast<FaultKind>(rng() % 4);
    spec.start_idx = rng() % len;
    spec.duration = 1 + rng() % (len - spec.start_idx);
    spec.soft = {static_cast<SoftModeKind>(rng() % 3), static_cast<double>(rng() % 20) - 5.0};
    spec.probability = 0.1 + static_cast<double>(rng() % 80) / 100.0;
    cfg.fault_specs.push_back({static_cast<std::size_t>(rng() % 3), spec});
  }
  return cfg;
}

std::array<UniformTrace, 3> random_traces(std::mt19937_64& rng, std::size_t len) {
  const double amp = static_cast<double>(rng() % 5);
  const double slope = static_cast<double>(rng() % 3) / 100.0;
  return scenario::noisy_triple(
      len, [&](std::size_t i) { return 10.0 + slope * static_cast<double>(i) + amp * std::sin(0.05 * static_cast<double>(i)); },
      0.2, rng());
}

}  // namespace

TEST_SUITE("orchestrator") {

TEST_CASE("without faults the runner is plain triplicated fusion") {
  const auto cfg = line_config();
  const auto clean = scenario::triple(140, line);
  const auto r = run_scenario(cfg, clean);
  CHECK(r.transitions.empty());
  REQUIRE(r.cycles.size() == 20);
  for (const auto& c : r.cycles) {
    CHECK(c.participation == 3);
    CHECK(c.flags.total() == 0);
    std::vector<std::vector<double>> rows(3);
    for (std::size_t s = 0; s < 3; ++s)
      for (const auto& rd : c.rows[s]) rows[s].push_back(rd.value);
    CHECK(c.composite == doctest::Approx(oracle::grand_mean(rows)).epsilon(1e-12));
  }
  CHECK(*r.metric("fused_mae") < 1e-12);
  CHECK_FALSE(r.failure);
}

TEST_CASE("a hard fault hands the row to the twin from the next cycle") {
  auto cfg = line_config();
  cfg.fault_specs.push_back({0, {FaultKind::hard, 40, 100}});
  const auto r = run_scenario(cfg, scenario::triple(140, line));

  REQUIRE(r.transitions.size() == 1);
  CHECK(same_transition(r.transitions[0], 0, 0, S::Live, S::TwinSubstituted, "anomaly"));
  REQUIRE(r.cycles.size() == 20);

  const auto& first = r.cycles[0];
  CHECK(first.sources[0] == RowSource::physical);
  CHECK(first.flags.count(0) == 5);
  // Bootstrap: missing readings take the mean of the present ones.
  double mean = 0;
  for (std::size_t i = 40; i < 45; ++i) mean += line(i) / 5;
  CHECK(first.composite == doctest::Approx(mean).epsilon(1e-12));

  for (std::size_t k = 1; k < 20; ++k) {
    const auto& c = r.cycles[k];
    CHECK(c.sources[0] == RowSource::twin);
    CHECK(c.participation == 3);
    CHECK(c.flags.total() == 0);
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(c.elementwise[j] - line(c.start_index + j)) < 1e-6);
  }
  CHECK(*r.metric("twin_span0_start_cycle", 0) == 1);
  CHECK(*r.metric("twin_span0_cycles", 0) == 19);
  CHECK(*r.metric("twin_span0_tracking_s", 0) == 19 * 5 * 60);
  CHECK(*r.metric("twin_mae", 0) < 1e-6);
  check_consistent(r);
}

TEST_CASE("a diverging twin is dropped after patience cycles") {
  const auto cfg = scenario::divergence_config();
  const auto r = run_scenario(cfg, scenario::triple(220, scenario::ramp));
  REQUIRE(r.transitions.size() == 2);
  CHECK(same_transition(r.transitions[0], 0, 0, S::Live, S::TwinSubstituted, "anomaly"));
  CHECK(same_transition(r.transitions[1], 2, 0, S::TwinSubstituted, S::Dropped, "divergence"));
  CHECK(r.cycles[1].flags.count(0) == 5);
  CHECK(r.cycles[2].flags.count(0) == 5);
  for (std::size_t k = 3; k < r.cycles.size(); ++k) {
    CHECK(r.cycles[k].participation == 2);
    CHECK(r.cycles[k].sources[0] == RowSource::excluded);
  }
  check_consistent(r);
}

TEST_CASE("patience one drops on the first flagged twin cycle") {
  auto cfg = scenario::divergence_config();
  cfg.patience = 1;
  const auto r = run_scenario(cfg, scenario::triple(220, scenario::ramp));
  REQUIRE(r.transitions.size() == 2);
  CHECK(r.transitions[1].cycle == 1);
}

TEST_CASE("assemble_window") {
  const auto phys = scenario::triple(30, scenario::ramp);
  TwinSettings settings;
  settings.kind = TwinKind::kalman;
  settings.train_len = 10;
  std::vector<Reading> r(10, Reading::of(4.0));
  const auto twin = fit(make_trace("t", SensorKind::synthetic, {0}, 60, r), settings);

  SUBCASE("all physical") {
    const auto w = assemble_window({RowSource::physical, RowSource::physical, RowSource::physical},
                                   phys, {}, 10, 5);
    CHECK(w.participation() == 3);
    CHECK(w.timestamps.front().seconds == 600);
    CHECK(w.rows[1][4].value == 14.0);
  }
  SUBCASE("twin row holds forecasts") {
    const auto w = assemble_window({RowSource::twin, RowSource::physical, RowSource::physical}, phys,
                                   {twin, std::nullopt, std::nullopt}, 10, 5);
    for (const auto& rd : w.rows[0]) CHECK(rd == Reading::of(4.0));
    CHECK(w.participation() == 3);
  }
  SUBCASE("excluded row leaves a two-row grand mean") {
    const auto w = assemble_window({RowSource::physical, RowSource::excluded, RowSource::physical},
                                   phys, {}, 10, 5);
    CHECK(w.participation() == 2);
    CHECK_FALSE(w.participating[1]);
    const auto [out, state] = fusion_cycle(w, {}, {100.0, ThresholdMode::absolute});
    CHECK(out.composite == doctest::Approx(oracle::grand_mean({{10, 11, 12, 13, 14}, {10, 11, 12, 13, 14}})));
    CHECK(out.corrected[1].empty());
  }
  SUBCASE("twin row without a model is rejected") {
    CHECK_THROWS(assemble_window({RowSource::twin, RowSource::physical, RowSource::physical}, phys,
                                 {}, 10, 5));
  }
  SUBCASE("windows past the trace end are rejected") {
    CHECK_THROWS_AS(assemble_window({RowSource::physical, RowSource::physical, RowSource::physical},
                                    phys, {}, 28, 5),
                    std::out_of_range);
  }
}

TEST_CASE("the legal transition graph") {
  CHECK(is_legal_transition(S::Live, S::TwinSubstituted));
  CHECK(is_legal_transition(S::TwinSubstituted, S::Dropped));
  CHECK(is_legal_transition(S::Dropped, S::Live));
  CHECK_FALSE(is_legal_transition(S::Live, S::Dropped));
  CHECK_FALSE(is_legal_transition(S::Dropped, S::TwinSubstituted));
  CHECK_FALSE(is_legal_transition(S::UnderRepair, S::TwinSubstituted));
  CHECK_FALSE(is_legal_transition(S::UnderRepair, S::Dropped));
}

TEST_CASE("a repair brings the sensor back and cuts the fault short") {
  auto cfg = line_config();
  cfg.fault_specs.push_back({0, {FaultKind::hard, 40, 100}});
  cfg.repair_after_s = 10 * 60;
  const auto r = run_scenario(cfg, scenario::triple(140, line));
  REQUIRE(r.transitions.size() == 2);
  CHECK(same_transition(r.transitions[1], 2, 0, S::TwinSubstituted, S::Live, "repair"));
  for (std::size_t k = 2; k < r.cycles.size(); ++k) {
    CHECK(r.cycles[k].sources[0] == RowSource::physical);
    for (const auto& rd : r.cycles[k].rows[0]) CHECK(rd.present);
  }
  check_consistent(r);
}

TEST_CASE("a repaired sensor regains a twin after train_len fresh points") {
  auto cfg = line_config();
  cfg.run_len = 200;
  cfg.fault_specs.push_back({0, {FaultKind::hard, 40, 5}});
  cfg.repair_after_s = 5 * 60;
  // A second fault lands once the refit has had enough fresh data.
  cfg.fault_specs.push_back({0, {FaultKind::hard, 140, 20}});
  const auto r = run_scenario(cfg, scenario::triple(240, line));
  REQUIRE(r.transitions.size() >= 3);
  CHECK(same_transition(r.transitions[1], 1, 0, S::TwinSubstituted, S::Live, "repair"));
  CHECK(same_transition(r.transitions[2], 20, 0, S::Live, S::TwinSubstituted, "anomaly"));

  // Too early: the cold twin cannot take over, so the sensor goes for repair.
  cfg.fault_specs[1].spec.start_idx = 60;
  const auto early = run_scenario(cfg, scenario::triple(240, line));
  REQUIRE(early.transitions.size() >= 3);
  CHECK(same_transition(early.transitions[2], 4, 0, S::Live, S::UnderRepair, "anomaly_no_twin"));
}

TEST_CASE("two rows with an anomaly keep one row at random") {
  auto cfg = scenario::divergence_config();
  cfg.run_len = 60;
  cfg.fault_specs[0].spec.duration = 60;
  cfg.fault_specs.push_back({1, {FaultKind::transient, 150, 5, {SoftModeKind::stuck, -500.0}}});
  std::map<std::size_t, int> dropped;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    cfg.seed = seed;
    const auto r = run_scenario(cfg, scenario::triple(180, scenario::ramp));
    REQUIRE(r.transitions.size() == 3);
    const auto& t = r.transitions[2];
    CHECK(t.cycle == 6);
    CHECK(t.reason == "random_selection");
    CHECK(t.to == S::UnderRepair);
    ++dropped[t.sensor];
    CHECK(r.cycles[7].participation == 1);
    check_consistent(r);

    const auto again = run_scenario(cfg, scenario::triple(180, scenario::ramp));
    CHECK(again.transitions[2].sensor == t.sensor);
  }
  CHECK(dropped[1] > 0);
  CHECK(dropped[2] > 0);
}

TEST_CASE("losing the last row is a total failure") {
  auto cfg = scenario::divergence_config();
  cfg.fault_specs.push_back({1, {FaultKind::hard, 145, 75}});
  cfg.fault_specs.push_back({2, {FaultKind::hard, 145, 75}});
  const auto r = run_scenario(cfg, scenario::triple(220, scenario::ramp));
  REQUIRE(r.failure);
  CHECK(r.failure->cycle == 7);
  CHECK(r.cycles.size() == 7);
  CHECK(*r.metric("total_failure_cycle") == 7);
  REQUIRE(r.transitions.size() == 4);
  CHECK(r.transitions[2].reason == "random_selection");
  CHECK(r.transitions[3].reason == "sole_row_anomaly");
  CHECK(r.transitions[3].cycle == 6);
  check_consistent(r);
}

TEST_CASE("readings of a substituted sensor never reach the output") {
  auto cfg = line_config();
  cfg.fault_specs.push_back({0, {FaultKind::soft, 60, 80, {SoftModeKind::offset, 50.0}}});
  const auto clean = scenario::triple(140, line);
  // Flagged in cycle 4, substituted from cycle 5 (index 65); perturb from there.
  auto perturbed = clean;
  for (std::size_t i = 65; i < 140; ++i) perturbed[0].readings[i].value += 1000.0 * std::sin(i);
  const auto a = run_scenario(cfg, clean, clean[1]);
  const auto b = run_scenario(cfg, perturbed, clean[1]);
  REQUIRE(a.transitions.size() == 1);
  CHECK(a.transitions[0].to == S::TwinSubstituted);
  REQUIRE(a.cycles.size() == b.cycles.size());
  for (std::size_t k = 0; k < a.cycles.size(); ++k) {
    CHECK(a.cycles[k].composite == b.cycles[k].composite);
    CHECK(a.cycles[k].elementwise == b.cycles[k].elementwise);
    CHECK(a.cycles[k].statuses == b.cycles[k].statuses);
  }
  CHECK(a.transitions.size() == b.transitions.size());
  CHECK(*a.metric("fused_rmse") == *b.metric("fused_rmse"));
}

TEST_CASE("invalid scenarios are rejected up front") {
  auto cfg = line_config();
  CHECK_THROWS_AS(run_scenario(cfg, scenario::triple(100, line)), std::invalid_argument);
  cfg.fault_specs.push_back({0, {FaultKind::hard, 130, 20}});
  CHECK_THROWS_AS(run_scenario(cfg, scenario::triple(140, line)), FaultBoundsError);
  auto misaligned = scenario::triple(140, line);
  misaligned[2].interval_s = 30;
  CHECK_THROWS_AS(run_scenario(line_config(), misaligned), AlignmentError);
  cfg = line_config();
  cfg.lookback_n = 0;
  CHECK_THROWS_AS(run_scenario(cfg, scenario::triple(140, line)), ConfigError);
}

TEST_CASE("random scenarios keep a consistent, deterministic lifecycle") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 150; ++trial) {
    const auto cfg = random_config(rng);
    const auto traces = random_traces(rng, cfg.twin.train_len + cfg.run_len);
    const auto r = run_scenario(cfg, traces);
    check_consistent(r);

    const std::size_t cycles = cfg.run_len / cfg.lookback_n;
    if (r.failure) {
      CHECK(r.cycles.size() == r.failure->cycle);
    } else {
      CHECK(r.cycles.size() == cycles);
    }
    for (const auto& c : r.cycles) {
      CHECK(c.elementwise.size() == cfg.lookback_n);
      CHECK(std::isfinite(c.composite));
    }

    const auto again = run_scenario(cfg, traces);
    REQUIRE(again.cycles.size() == r.cycles.size());
    CHECK(again.transitions.size() == r.transitions.size());
    for (std::size_t k = 0; k < r.cycles.size(); ++k)
      CHECK(again.cycles[k].composite == r.cycles[k].composite);
  }
}

}  // TEST_SUITE
