#pragma once

// Scenario runner for a triplicated sensor with one digital twin per sensor.
//
// Each fusion cycle covers `lookback_n` grid points. The statuses in force at
// the start of a cycle decide where each row comes from; transitions decided
// from that cycle's flags take effect from the next cycle.
//
//   Live            -> TwinSubstituted  anomaly, twin available
//   Live            -> UnderRepair      anomaly without a usable twin, or
//                                       left out by random selection
//   TwinSubstituted -> Dropped          twin diverged for `patience` cycles
//   TwinSubstituted -> UnderRepair      left out by random selection
//   any             -> Live             repair event
//
// With only two rows left, any anomaly keeps one of them at random
// (seeded) until a repair. A flagged sole row leaves fusion, and the next
// cycle without rows ends the run as a total failure.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "twinfuse/detector.hpp"
#include "twinfuse/fusion.hpp"
#include "twinfuse/model.hpp"
#include "twinfuse/twin.hpp"

namespace twinfuse {

enum class SensorStatus { Live, TwinSubstituted, Dropped, UnderRepair };
enum class RowSource { physical, twin, excluded };

std::string to_string(SensorStatus status);
std::string to_string(RowSource source);

bool is_legal_transition(SensorStatus from, SensorStatus to);

using Statuses = std::array<SensorStatus, 3>;
using Sources = std::array<RowSource, 3>;

struct CycleRecord {
  std::size_t cycle_index = 0;
  std::size_t start_index = 0;  // grid index of the first timestamp
  std::vector<Timestamp> timestamps;
  Statuses statuses{};
  Sources sources{};
  std::vector<std::vector<Reading>> rows;  // the readings fed to fusion
  AnomalyFlags flags;
  std::vector<double> elementwise;
  double composite = 0.0;
  std::size_t participation = 0;
};

struct Transition {
  std::size_t cycle = 0;
  std::size_t sensor = 0;
  SensorStatus from = SensorStatus::Live;
  SensorStatus to = SensorStatus::Live;
  std::string reason;
};

struct Metric {
  std::string name;
  std::optional<std::size_t> sensor;
  double value = 0.0;
};

struct TotalFailure {
  std::size_t cycle = 0;
  std::string reason;
};

struct ScenarioReport {
  Timestamp grid_start;
  std::int64_t interval_s = 60;
  std::vector<CycleRecord> cycles;
  std::vector<Transition> transitions;
  std::vector<Metric> metrics;
  std::optional<TotalFailure> failure;

  std::optional<double> metric(const std::string& name,
                               std::optional<std::size_t> sensor = std::nullopt) const;
};

/// Builds one cycle's window from the current sources. Physical rows copy
/// `physical[s]` over [first, first + n); twin rows are forecasts; excluded
/// rows are marked non-participating. Twin rows require a model.
TriadWindow assemble_window(const Sources& sources, const std::array<UniformTrace, 3>& physical,
                            const std::array<std::optional<TwinModel>, 3>& twins,
                            std::size_t first, std::size_t n);

/// Runs the full lifecycle over clean traces that hold
/// twin.train_len + run_len grid points. Twins train on the first
/// train_len points; fusion cycles cover the rest. `truth` is the
/// reference for the fused-output metrics; when omitted it is the
/// per-point mean of the clean traces.
ScenarioReport run_scenario(const ScenarioConfig& cfg, const std::array<UniformTrace, 3>& clean,
                            const std::optional<UniformTrace>& truth = std::nullopt);

struct ErrorSummary {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;
};

/// Elementwise fused output against `truth` over grid indices
/// [begin, end). Positions without a present truth value are skipped.
ErrorSummary fused_error(const ScenarioReport& report, const UniformTrace& truth, std::size_t begin,
                         std::size_t end);

}  // namespace twinfuse
