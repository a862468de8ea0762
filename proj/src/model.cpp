#include "twinfuse/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace twinfuse {

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
  std::ostringstream os;
  os << "invalid config:";
  for (const auto& issue : issues) os << "\n  " << issue.field << ": " << issue.message;
  return os.str();
}

template <typename Enum, std::size_t K>
Enum lookup(const std::string& name, const std::pair<const char*, Enum> (&table)[K],
            const char* what) {
  for (const auto& [key, value] : table) {
    if (name == key) return value;
  }
  throw UsageError("unknown " + std::string(what) + " '" + name + "'");
}

constexpr std::pair<const char*, SensorKind> kSensorKinds[] = {
    {"temperature", SensorKind::temperature}, {"humidity", SensorKind::humidity},
    {"light", SensorKind::light},             {"voltage", SensorKind::voltage},
    {"synthetic", SensorKind::synthetic},
};

constexpr std::pair<const char*, TwinKind> kTwinKinds[] = {
    {"additive_seasonal", TwinKind::additive_seasonal},
    {"kalman", TwinKind::kalman},
    {"naive", TwinKind::naive},
};

constexpr std::pair<const char*, FaultKind> kFaultKinds[] = {
    {"hard", FaultKind::hard},
    {"soft", FaultKind::soft},
    {"intermittent", FaultKind::intermittent},
    {"transient", FaultKind::transient},
};

constexpr std::pair<const char*, SoftModeKind> kSoftModes[] = {
    {"stuck", SoftModeKind::stuck},
    {"offset", SoftModeKind::offset},
    {"scale", SoftModeKind::scale},
};

template <typename Enum, std::size_t K>
std::string name_of(Enum value, const std::pair<const char*, Enum> (&table)[K]) {
  for (const auto& [key, v] : table) {
    if (v == value) return key;
  }
  return "?";
}

}  // namespace

std::string to_string(SensorKind kind) { return name_of(kind, kSensorKinds); }
SensorKind sensor_kind_from_string(const std::string& name) {
  return lookup(name, kSensorKinds, "sensor kind");
}
std::string to_string(TwinKind kind) { return name_of(kind, kTwinKinds); }
TwinKind twin_kind_from_string(const std::string& name) {
  return lookup(name, kTwinKinds, "twin kind");
}
std::string to_string(FaultKind kind) { return name_of(kind, kFaultKinds); }
FaultKind fault_kind_from_string(const std::string& name) {
  return lookup(name, kFaultKinds, "fault kind");
}
std::string to_string(SoftModeKind kind) { return name_of(kind, kSoftModes); }
SoftModeKind soft_mode_kind_from_string(const std::string& name) {
  return lookup(name, kSoftModes, "soft mode");
}

UniformTrace make_trace(std::string sensor_id, SensorKind kind, Timestamp start,
                        std::int64_t interval_s, std::vector<Reading> readings) {
  if (interval_s <= 0) throw std::invalid_argument("trace interval_s must be > 0");
  if (readings.empty()) throw std::invalid_argument("trace must contain at least one reading");
  if (start.seconds < 0) throw std::invalid_argument("trace start must be non-negative");
  return UniformTrace{std::move(sensor_id), kind, start, interval_s, std::move(readings)};
}

std::size_t TriadWindow::participation() const {
  return static_cast<std::size_t>(std::count(participating.begin(), participating.end(), true));
}

TriadWindow make_window(std::vector<Timestamp> timestamps,
                        std::vector<std::vector<Reading>> rows) {
  if (timestamps.empty()) throw std::invalid_argument("window length must be >= 1");
  for (const auto& row : rows) {
    if (row.size() != timestamps.size())
      throw std::invalid_argument("window rows must match the timestamp count");
  }
  std::vector<bool> participating(rows.size(), true);
  return TriadWindow{std::move(timestamps), std::move(rows), std::move(participating)};
}

TriadWindow window_from_values(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.empty() ? 0 : rows.front().size();
  std::vector<Timestamp> ts(n);
  for (std::size_t j = 0; j < n; ++j) ts[j] = {static_cast<std::int64_t>(j)};
  std::vector<std::vector<Reading>> readings;
  readings.reserve(rows.size());
  for (const auto& row : rows) {
    std::vector<Reading> r;
    r.reserve(row.size());
    for (double v : row) r.push_back(Reading::of(v));
    readings.push_back(std::move(r));
  }
  return make_window(std::move(ts), std::move(readings));
}

double Threshold::band(double reference) const {
  return mode == ThresholdMode::absolute ? value : value * std::abs(reference);
}

double SoftMode::apply(double truth) const {
  switch (kind) {
    case SoftModeKind::stuck: return param;
    case SoftModeKind::offset: return truth + param;
    case SoftModeKind::scale: return truth * param;
  }
  return truth;
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

ScenarioConfig validate_config(const ScenarioConfig& cfg) {
  std::vector<ConfigIssue> issues;
  auto fail = [&](std::string field, std::string message) {
    issues.push_back({std::move(field), std::move(message)});
  };

  if (cfg.lookback_n < 1) fail("lookback_n", "lookback_n must be ≥ 1");
  if (!(std::isfinite(cfg.threshold.value) && cfg.threshold.value > 0.0))
    fail("threshold.value", "threshold must be a positive finite number");
  if (cfg.patience < 1) fail("patience", "patience must be ≥ 1");
  if (cfg.run_len < 1) fail("run_len", "run_len must be ≥ 1");
  if (cfg.twin.seasonal_period_s <= 0)
    fail("twin.seasonal_period_s", "seasonal_period_s must be > 0");
  if (cfg.twin.fourier_order < 1) {
    fail("twin.fourier_order", "fourier_order_k must be ≥ 1");
  } else if (cfg.twin.train_len < 2 * static_cast<std::size_t>(cfg.twin.fourier_order) + 2) {
    fail("twin.train_len", "train length too short for K (need ≥ 2K+2 points)");
  }
  if (cfg.twin.process_var && !(*cfg.twin.process_var > 0.0))
    fail("twin.process_var", "process variance must be > 0");
  if (cfg.twin.observation_var && !(*cfg.twin.observation_var > 0.0))
    fail("twin.observation_var", "observation variance must be > 0");
  if (cfg.repair_after_s && *cfg.repair_after_s <= 0)
    fail("repair_after_s", "repair_after_s must be > 0");
  if (cfg.tracking_tol && !(*cfg.tracking_tol > 0.0))
    fail("tracking_tol", "tracking_tol must be > 0");

  for (std::size_t i = 0; i < cfg.fault_specs.size(); ++i) {
    const auto& f = cfg.fault_specs[i];
    const std::string prefix = "faults[" + std::to_string(i) + "].";
    if (f.sensor > 2) fail(prefix + "sensor", "sensor index must be in {0,1,2}");
    if (f.spec.duration < 1) fail(prefix + "duration", "duration must be ≥ 1");
    if (f.spec.kind == FaultKind::intermittent &&
        !(f.spec.probability > 0.0 && f.spec.probability < 1.0))
      fail(prefix + "probability", "probability must lie in (0,1)");
    if (!std::isfinite(f.spec.soft.param)) fail(prefix + "soft.param", "soft parameter must be finite");
  }

  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

std::vector<TriadWindow> align_triads(const UniformTrace& a, const UniformTrace& b,
                                      const UniformTrace& c, std::size_t lookback_n) {
  if (lookback_n < 1) throw std::invalid_argument("lookback_n must be >= 1");
  const UniformTrace* traces[] = {&a, &b, &c};
  for (std::size_t i = 1; i < 3; ++i) {
    const auto& t = *traces[i];
    if (t.start != a.start || t.interval_s != a.interval_s || t.size() != a.size()) {
      std::ostringstream os;
      os << "trace '" << t.sensor_id << "' (index " << i << ") is misaligned with '"
         << a.sensor_id << "': start " << t.start.seconds << " vs " << a.start.seconds
         << ", interval " << t.interval_s << " vs " << a.interval_s << ", length " << t.size()
         << " vs " << a.size();
      throw AlignmentError(os.str());
    }
  }

  const std::size_t count = a.size() / lookback_n;
  std::vector<TriadWindow> windows;
  windows.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t first = w * lookback_n;
    std::vector<Timestamp> ts(lookback_n);
    for (std::size_t j = 0; j < lookback_n; ++j) ts[j] = a.time_at(first + j);
    std::vector<std::vector<Reading>> rows;
    rows.reserve(3);
    for (const auto* t : traces) {
      rows.emplace_back(t->readings.begin() + static_cast<std::ptrdiff_t>(first),
                        t->readings.begin() + static_cast<std::ptrdiff_t>(first + lookback_n));
    }
    windows.push_back(make_window(std::move(ts), std::move(rows)));
  }
  return windows;
}

}  // namespace twinfuse
