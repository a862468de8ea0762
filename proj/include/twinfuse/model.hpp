#pragma once

// Core value types shared across the twinfuse library.
//
// Everything here is an immutable-by-convention value type; none of it holds
// interior mutable state, so instances can be copied freely across threads.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace twinfuse {

/// Integer seconds since an arbitrary (non-negative) epoch.
struct Timestamp {
  std::int64_t seconds = 0;

  friend constexpr auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

/// A single sensor sample. `value` is meaningless when `present` is false.
struct Reading {
  double value = 0.0;
  bool present = false;

  static constexpr Reading of(double v) { return {v, true}; }
  static constexpr Reading missing() { return {0.0, false}; }

  friend constexpr bool operator==(const Reading& a, const Reading& b) {
    if (a.present != b.present) return false;
    return !a.present || a.value == b.value;
  }
};

enum class SensorKind { temperature, humidity, light, voltage, synthetic };

std::string to_string(SensorKind kind);
/// Throws UsageError for unknown names.
SensorKind sensor_kind_from_string(const std::string& name);

/// A per-sensor series on a fixed grid: readings[i] is sampled at
/// start + i * interval_s.
struct UniformTrace {
  std::string sensor_id;
  SensorKind kind = SensorKind::synthetic;
  Timestamp start;
  std::int64_t interval_s = 60;
  std::vector<Reading> readings;

  std::size_t size() const { return readings.size(); }
  Timestamp time_at(std::size_t idx) const {
    return {start.seconds + static_cast<std::int64_t>(idx) * interval_s};
  }
};

/// Builds a trace and checks interval_s > 0 and readings non-empty.
UniformTrace make_trace(std::string sensor_id, SensorKind kind, Timestamp start,
                        std::int64_t interval_s, std::vector<Reading> readings);

/// One fusion cycle's worth of readings: rows[s][j] is sensor s at
/// timestamps[j]. Rows whose `participating` flag is false are carried for
/// shape only and are ignored by detection and fusion.
struct TriadWindow {
  std::vector<Timestamp> timestamps;
  std::vector<std::vector<Reading>> rows;
  std::vector<bool> participating;

  std::size_t length() const { return timestamps.size(); }
  std::size_t row_count() const { return rows.size(); }
  std::size_t participation() const;
};

/// Window over M fully-participating rows. Throws std::invalid_argument if
/// row lengths disagree with the timestamps or N == 0.
TriadWindow make_window(std::vector<Timestamp> timestamps,
                        std::vector<std::vector<Reading>> rows);

/// Convenience for tests and demos: rows of plain values, all present,
/// timestamps 0..N-1 at one-second spacing.
TriadWindow window_from_values(const std::vector<std::vector<double>>& rows);

enum class ThresholdMode { absolute, relative };

struct Threshold {
  double value = 1.0;
  ThresholdMode mode = ThresholdMode::absolute;

  /// Allowed deviation around `reference`.
  double band(double reference) const;
};

enum class TwinKind { additive_seasonal, kalman, naive };

std::string to_string(TwinKind kind);
TwinKind twin_kind_from_string(const std::string& name);

struct TwinSettings {
  TwinKind kind = TwinKind::additive_seasonal;
  std::size_t train_len = 5760;  // four days at one-minute cadence
  std::int64_t seasonal_period_s = 86400;
  int fourier_order = 3;
  // Kalman noise variances; derived from the training window when unset.
  std::optional<double> process_var;
  std::optional<double> observation_var;
};

enum class FaultKind { hard, soft, intermittent, transient };

std::string to_string(FaultKind kind);
FaultKind fault_kind_from_string(const std::string& name);

enum class SoftModeKind { stuck, offset, scale };

/// How an erroneous reading is derived from the true one.
struct SoftMode {
  SoftModeKind kind = SoftModeKind::stuck;
  double param = 0.0;  // stuck value, additive delta, or scale factor

  double apply(double truth) const;
};

std::string to_string(SoftModeKind kind);
SoftModeKind soft_mode_kind_from_string(const std::string& name);

/// A single fault episode on one trace. `duration` is in grid points;
/// `probability` is used by intermittent faults only.
struct FaultSpec {
  FaultKind kind = FaultKind::hard;
  std::size_t start_idx = 0;
  std::size_t duration = 1;
  SoftMode soft;
  double probability = 0.5;
};

struct SensorFault {
  std::size_t sensor = 0;
  FaultSpec spec;
};

struct ScenarioConfig {
  std::size_t lookback_n = 5;
  Threshold threshold{1.0, ThresholdMode::absolute};
  std::size_t patience = 2;
  TwinSettings twin;
  // Fault start indices address the full trace (training span included).
  std::vector<SensorFault> fault_specs;
  std::optional<std::int64_t> repair_after_s;
  std::uint64_t seed = 0;
  std::size_t run_len = 1440;
  // Tolerance for twin tracking metrics; defaults to an absolute threshold.
  std::optional<double> tracking_tol;
};

/// One violated invariant. `field` names the offending config key.
struct ConfigIssue {
  std::string field;
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Returns cfg unchanged when every invariant holds, otherwise throws a
/// ConfigError listing every violation.
ScenarioConfig validate_config(const ScenarioConfig& cfg);

/// Splits three aligned traces into consecutive tumbling windows of
/// `lookback_n` points; a trailing partial window is dropped.
std::vector<TriadWindow> align_triads(const UniformTrace& a, const UniformTrace& b,
                                      const UniformTrace& c, std::size_t lookback_n);

}  // namespace twinfuse
