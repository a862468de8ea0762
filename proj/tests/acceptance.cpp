// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "scenarios.hpp"
#include "twinfuse/cli/commands.hpp"
#include "twinfuse/fusion.hpp"
#include "twinfuse/orchestrator.hpp"
#include "twinfuse/twin.hpp"

using namespace twinfuse;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double daily(std::size_t i) {
  return 20.0 + 5.0 * std::sin(2 * std::numbers::pi * static_cast<double>(i % 1440) / 1440.0);
}

Outcome worked_cycle_one() {
  const Matrix m = {{7, 8, 8, 7, 6}, {6, 7, 8, 8, 7}, {7, 6, 7, 8, 8}};
  const auto f = fuse(m);
  const std::vector<double> expect = {20.0 / 3, 7, 23.0 / 3, 23.0 / 3, 7};
  double worst = std::abs(f.composite - 7.2);
  for (std::size_t j = 0; j < 5; ++j) worst = std::max(worst, std::abs(f.elementwise[j] - expect[j]));
  return {worst <= 1e-9, fmt("composite %.12g", f.composite) + fmt(", max error %.3g", worst)};
}

Outcome worked_cycle_two() {
  const auto w = window_from_values({{7, 8, 8, 7, 6}, {6, 0, 0, 8, 7}, {7, 6, 7, 8, 8}});
  const auto [out, next] = fusion_cycle(w, {7.2, 1}, {3.0, ThresholdMode::absolute});
  const std::vector<double> row = {6, 7.2, 7.2, 8, 7};
  const std::vector<double> tmr = {20.0 / 3, 21.2 / 3, 7.4, 23.0 / 3, 7};
  double worst = std::abs(out.composite - 7.16);
  for (std::size_t j = 0; j < 5; ++j) {
    worst = std::max(worst, std::abs(out.corrected[1][j] - row[j]));
    worst = std::max(worst, std::abs(out.elementwise[j] - tmr[j]));
  }
  const bool flags_ok = out.flags.total() == 2 && out.flags.flags[1][1] && out.flags.flags[1][2];
  return {worst <= 1e-9 && flags_ok && next.last_composite == out.composite,
          fmt("composite %.12g", out.composite) + fmt(", max error %.3g", worst)};
}

Outcome constant_fixed_point() {
  ScenarioConfig cfg;
  cfg.twin.train_len = 100;
  cfg.twin.seasonal_period_s = 3600;
  cfg.twin.fourier_order = 1;
  cfg.run_len = 500;
  std::size_t bad = 0, cycles = 0;
  bool all_live = true;
  for (double c : {0.1, 7.0, -3.3, 21.37, 1e6 / 3}) {
    const auto r = run_scenario(cfg, scenario::triple(600, [c](std::size_t) { return c; }));
    all_live = all_live && r.transitions.empty() && !r.failure;
    for (const auto& cyc : r.cycles) {
      ++cycles;
      if (cyc.composite != c) ++bad;
      for (auto st : cyc.statuses) all_live = all_live && st == SensorStatus::Live;
    }
  }
  return {bad == 0 && all_live && cycles == 500,
          std::to_string(cycles) + " cycles, " + std::to_string(bad) + " inexact"};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(20240301);
  std::uniform_real_distribution<double> val(-50.0, 50.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    Matrix m(3, std::vector<double>(n));
    for (auto& row : m)
      for (auto& v : row) v = val(rng);
    worst = std::max(worst, std::abs(fuse(m).composite - oracle::grand_mean(m)));
  }
  return {worst <= 1e-12, fmt("max error %.3g over 1000 windows", worst)};
}

Outcome twin_exactness() {
  const auto gen = [](double t) { return oracle::line_sinusoid(t, 18.0, 3e-5, 4.0, 86400, 1.1); };
  const std::int64_t start = 1078099200;
  std::vector<Reading> r(5760);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = Reading::of(gen(static_cast<double>(start + 60 * static_cast<std::int64_t>(i))));
  TwinSettings s;  // additive, 4 days, K = 3
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = fit(make_trace("x", SensorKind::synthetic, {start}, 60, r), s);
  const auto f = predict_grid(model, {start + 5760 * 60}, 1440);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double mae = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    mae += std::abs(f.values[i] - gen(static_cast<double>(f.timestamps[i].seconds))) / 1440.0;
  return {mae < 1e-6 && secs < 1.0, fmt("MAE %.3g", mae) + fmt(", %.3f s", secs)};
}

Outcome fault_bridging() {
  ScenarioConfig cfg;
  cfg.threshold = {1.5, ThresholdMode::absolute};
  cfg.twin.train_len = 5760;
  cfg.run_len = 4320;
  const std::size_t len = cfg.twin.train_len + cfg.run_len;
  const double sigma = 0.2;
  const auto traces = scenario::noisy_triple(len, daily, sigma, 77);
  const auto truth = scenario::by_index("truth", len, daily);
  const std::size_t begin = cfg.twin.train_len + 1440, end = begin + 1440;

  const auto baseline = run_scenario(cfg, traces, truth);
  cfg.fault_specs.push_back({0, {FaultKind::hard, begin, 1440}});
  const auto faulted = run_scenario(cfg, traces, truth);

  bool substituted = false;
  for (const auto& t : faulted.transitions)
    substituted = substituted || (t.sensor == 0 && t.to == SensorStatus::TwinSubstituted);
  const double base = fused_error(baseline, truth, begin, end).rmse;
  const double with_fault = fused_error(faulted, truth, begin, end).rmse;
  return {substituted && !faulted.failure && with_fault <= 2.0 * base,
          fmt("fault RMSE %.4g", with_fault) + fmt(" vs baseline %.4g", base) +
              fmt(" (ratio %.3f)", with_fault / base)};
}

json ramp_config() {
  json sensors = json::array();
  for (int s = 0; s < 3; ++s) sensors.push_back({{"id", "s" + std::to_string(s)}});
  return {
      {"lookback_n", 5},
      {"threshold", {{"value", 30.0}, {"mode", "absolute"}}},
      {"patience", 2},
      {"twin", {{"kind", "naive"}, {"train_len", 120}, {"seasonal_period_s", 3600}, {"fourier_order", 1}}},
      {"faults", json::array({{{"sensor", 0}, {"kind", "hard"}, {"start_idx", 120}, {"duration", 100}}})},
      {"run_len", 100},
      {"traces",
       {{"interval_s", 60},
        {"signal", {{"type", "linear"}, {"intercept", 0.0}, {"slope", 1.0 / 60.0}}},
        {"sensors", sensors}}},
  };
}

// Hand trace: the signal equals the grid index and the naive twin repeats
// the previous hour, so twin rows sit 60 below the truth. Cycle 0 sees the
// missing readings and substitutes; cycles 1 and 2 flag all five twin
// readings (|x - ref| > 30); the second consecutive flagged cycle is the
// divergence event, so the drop is logged at cycle 2 and cycle 3 onward
// fuses two rows.
Outcome divergence_dropout(const fs::path& work) {
  const auto cfg = work / "divergence.json";
  std::ofstream(cfg) << ramp_config().dump(2);
  std::ostringstream out, err;
  const int code = cli::cmd_run({{cfg}, work / "divergence", std::nullopt}, out, err);
  if (code != cli::kOk) return {false, "run exited with " + std::to_string(code) + ": " + err.str()};

  const std::string transitions = slurp(work / "divergence" / "transitions.csv");
  const bool logged = transitions ==
                      "cycle,sensor,from,to,reason\n"
                      "0,0,Live,TwinSubstituted,anomaly\n"
                      "2,0,TwinSubstituted,Dropped,divergence\n";
  std::istringstream lines(slurp(work / "divergence" / "trace.jsonl"));
  std::string line;
  std::size_t cycles = 0, two_row = 0;
  while (std::getline(lines, line)) {
    const auto rec = json::parse(line);
    if (rec["cycle_index"].get<std::size_t>() >= 3 && rec["participation"] == 2 &&
        rec["sources"][0] == "excluded")
      ++two_row;
    ++cycles;
  }
  return {logged && cycles == 20 && two_row == 17,
          std::string(logged ? "drop at cycle 2" : "unexpected transitions") + ", " +
              std::to_string(two_row) + "/17 later cycles with 2 rows"};
}

Outcome multi_fault_masking() {
  ScenarioConfig cfg;
  cfg.threshold = {1.0, ThresholdMode::absolute};
  cfg.twin.train_len = 2880;
  cfg.run_len = 1440;
  const std::size_t len = cfg.twin.train_len + cfg.run_len;
  const std::size_t hard_at = cfg.twin.train_len + 50;
  const std::size_t burst_at = cfg.twin.train_len + 1002;
  cfg.fault_specs.push_back({0, {FaultKind::hard, hard_at, len - hard_at}});
  cfg.fault_specs.push_back({1, {FaultKind::transient, burst_at, 12, {SoftModeKind::stuck, 0.0}}});
  const auto clean = scenario::triple(len, daily);
  const auto r = run_scenario(cfg, clean, clean[2]);

  std::size_t outside = 0;
  for (const auto& c : r.cycles) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t j = 0; j < c.timestamps.size(); ++j) {
      lo = std::min(lo, clean[2].readings[c.start_index + j].value);
      hi = std::max(hi, clean[2].readings[c.start_index + j].value);
    }
    if (c.composite < lo || c.composite > hi) ++outside;
  }
  bool s0_twin = false, s1_flagged = false;
  for (const auto& t : r.transitions) {
    s0_twin = s0_twin || (t.sensor == 0 && t.to == SensorStatus::TwinSubstituted);
    s1_flagged = s1_flagged || t.sensor == 1;
  }
  const bool ok = !r.failure && outside == 0 && s0_twin && s1_flagged && r.cycles.size() == 288;
  return {ok, std::to_string(r.cycles.size()) + " cycles, " + std::to_string(outside) +
                  " composites outside the clean window range"};
}

Outcome determinism(const fs::path& work) {
  auto doc = ramp_config();
  doc["seed"] = 12345;
  for (int s = 0; s < 3; ++s) {
    doc["traces"]["sensors"][s]["noise_sd"] = 0.7;
    doc["traces"]["sensors"][s]["noise_seed"] = 900 + s;
  }
  doc["faults"].push_back({{"sensor", 1}, {"kind", "intermittent"}, {"start_idx", 150}, {"duration", 60},
                           {"mode", "offset"}, {"param", 80.0}, {"probability", 0.4}});
  doc["repair_after_s"] = 1800;
  const auto cfg = work / "determinism.json";
  std::ofstream(cfg) << doc.dump(2);
  std::ostringstream out, err;
  const int a = cli::cmd_run({{cfg}, work / "det_a", std::nullopt}, out, err);
  const int b = cli::cmd_run({{cfg}, work / "det_b", std::nullopt}, out, err);
  std::size_t same = 0;
  for (const char* f : {"trace.jsonl", "metrics.csv", "transitions.csv"}) {
    const auto x = slurp(work / "det_a" / f);
    if (!x.empty() && x == slurp(work / "det_b" / f)) ++same;
  }
  return {a == b && a != cli::kUsage && same == 3, std::to_string(same) + "/3 files identical"};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "twinfuse_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"worked example, first cycle", worked_cycle_one},
      {"worked example, second cycle", worked_cycle_two},
      {"constant traces are a fixed point", constant_fixed_point},
      {"fusion matches brute-force grand mean", oracle_equivalence},
      {"additive twin reproduces line plus harmonic", twin_exactness},
      {"twin bridges a one-day hard fault", fault_bridging},
      {"diverging twin is dropped", [&] { return divergence_dropout(work); }},
      {"hard and transient faults are masked", multi_fault_masking},
      {"runs are byte-identical", [&] { return determinism(work); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %zu  %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
