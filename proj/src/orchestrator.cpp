#include "twinfuse/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "twinfuse/faults.hpp"

namespace twinfuse {

namespace {

constexpr std::uint64_t kSelectionStream = 0x9E3779B97F4A7C15ULL;

std::uint64_t fault_seed(std::uint64_t seed, std::size_t fault_idx) {
  return seed + 0xD1B54A32D192ED03ULL * (fault_idx + 1);
}

UniformTrace slice(const UniformTrace& t, std::size_t begin, std::size_t end) {
  UniformTrace out;
  out.sensor_id = t.sensor_id;
  out.kind = t.kind;
  out.start = t.time_at(begin);
  out.interval_s = t.interval_s;
  out.readings.assign(t.readings.begin() + static_cast<std::ptrdiff_t>(begin),
                      t.readings.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

UniformTrace mean_trace(const std::array<UniformTrace, 3>& clean) {
  UniformTrace out = clean[0];
  out.sensor_id = "mean";
  for (std::size_t i = 0; i < out.size(); ++i) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& t : clean) {
      if (t.readings[i].present) {
        sum += t.readings[i].value;
        ++n;
      }
    }
    out.readings[i] = n ? Reading::of(sum / static_cast<double>(n)) : Reading::missing();
  }
  return out;
}

struct Accumulator {
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  std::size_t n = 0;

  void add(double err) {
    abs_sum += std::abs(err);
    sq_sum += err * err;
    ++n;
  }
  ErrorSummary summary() const {
    if (n == 0) return {};
    return {abs_sum / static_cast<double>(n), std::sqrt(sq_sum / static_cast<double>(n)), n};
  }
};

// Per-sensor bookkeeping while the scenario runs.
struct SensorSlot {
  SensorStatus status = SensorStatus::Live;
  std::optional<TwinModel> twin;       // empty while cold
  std::size_t cold_since = 0;          // grid index where fresh readings start
  std::vector<AnomalyFlags> twin_history;
};

class Runner {
 public:
  Runner(const ScenarioConfig& cfg, const std::array<UniformTrace, 3>& clean)
      : cfg_(cfg), clean_(clean), physical_(clean), rng_(cfg.seed ^ kSelectionStream) {}

  ScenarioReport run(const std::optional<UniformTrace>& truth);

 private:
  void inject_faults();
  void train_twins();
  void apply_repairs(std::size_t cycle, std::size_t first);
  void transition(std::size_t cycle, std::size_t sensor, SensorStatus to, std::string reason);
  void decide_transitions(std::size_t cycle, const Sources& sources, const AnomalyFlags& flags);
  void refresh_twins(std::size_t first, std::size_t end, const AnomalyFlags& flags,
                     const Statuses& before);
  void compute_metrics(const UniformTrace& truth);

  const ScenarioConfig& cfg_;
  const std::array<UniformTrace, 3>& clean_;
  std::array<UniformTrace, 3> physical_;
  std::array<SensorSlot, 3> slots_;
  std::vector<std::pair<std::size_t, std::size_t>> repairs_;  // (grid index, sensor)
  std::size_t next_repair_ = 0;
  std::mt19937_64 rng_;
  ScenarioReport report_;
};

void Runner::inject_faults() {
  for (std::size_t i = 0; i < cfg_.fault_specs.size(); ++i) {
    const auto& [sensor, original] = cfg_.fault_specs[i];
    FaultSpec spec = original;
    if (cfg_.repair_after_s) {
      const auto restored = repair_index(spec, *cfg_.repair_after_s, physical_[sensor].interval_s);
      spec.duration = std::min(spec.duration, restored - spec.start_idx);
      repairs_.emplace_back(restored, sensor);
    }
    physical_[sensor] = inject(physical_[sensor], spec, fault_seed(cfg_.seed, i)).first;
  }
  std::stable_sort(repairs_.begin(), repairs_.end());
}

void Runner::train_twins() {
  const auto train_len = cfg_.twin.train_len;
  for (std::size_t s = 0; s < 3; ++s) {
    try {
      slots_[s].twin = fit(slice(physical_[s], 0, train_len), cfg_.twin);
    } catch (const UnderdeterminedFit&) {
      slots_[s].twin.reset();
      slots_[s].cold_since = 0;
    }
  }
}

void Runner::transition(std::size_t cycle, std::size_t sensor, SensorStatus to,
                        std::string reason) {
  auto& slot = slots_[sensor];
  if (slot.status == to) return;
  if (!is_legal_transition(slot.status, to))
    throw std::logic_error("illegal transition " + to_string(slot.status) + " -> " + to_string(to));
  report_.transitions.push_back({cycle, sensor, slot.status, to, std::move(reason)});
  slot.status = to;
  slot.twin_history.clear();
}

void Runner::apply_repairs(std::size_t cycle, std::size_t first) {
  while (next_repair_ < repairs_.size() && repairs_[next_repair_].first <= first) {
    const auto [idx, sensor] = repairs_[next_repair_++];
    auto& slot = slots_[sensor];
    if (slot.status == SensorStatus::Live) continue;
    transition(cycle, sensor, SensorStatus::Live, "repair");
    // A repaired or replaced device gets a fresh model.
    slot.twin.reset();
    slot.cold_since = idx;
  }
}

void Runner::decide_transitions(std::size_t cycle, const Sources& sources,
                                const AnomalyFlags& flags) {
  std::vector<std::size_t> rows;
  for (std::size_t s = 0; s < 3; ++s) {
    if (sources[s] == RowSource::excluded) continue;
    rows.push_back(s);
    if (sources[s] == RowSource::twin) slots_[s].twin_history.push_back(flags);
  }
  const bool anomaly = std::any_of(rows.begin(), rows.end(), [&](auto s) { return flags.any(s); });
  if (!anomaly) return;

  if (rows.size() >= 3) {
    for (const auto s : rows) {
      auto& slot = slots_[s];
      if (slot.status == SensorStatus::Live && flags.any(s)) {
        if (slot.twin) {
          transition(cycle, s, SensorStatus::TwinSubstituted, "anomaly");
        } else {
          transition(cycle, s, SensorStatus::UnderRepair, "anomaly_no_twin");
        }
      } else if (slot.status == SensorStatus::TwinSubstituted &&
                 divergence_event(slot.twin_history, s, cfg_.patience)) {
        transition(cycle, s, SensorStatus::Dropped, "divergence");
      }
    }
  } else if (rows.size() == 2) {
    // No majority: keep one of the two rows at random until a repair.
    const std::size_t keep = rows[rng_() >> 63];
    const std::size_t drop = rows[0] == keep ? rows[1] : rows[0];
    transition(cycle, drop, SensorStatus::UnderRepair, "random_selection");
  } else {
    const auto s = rows.front();
    transition(cycle, s,
               slots_[s].status == SensorStatus::TwinSubstituted ? SensorStatus::Dropped
                                                                 : SensorStatus::UnderRepair,
               "sole_row_anomaly");
  }
}

void Runner::refresh_twins(std::size_t first, std::size_t end, const AnomalyFlags& flags,
                           const Statuses& before) {
  const auto train_len = cfg_.twin.train_len;
  for (std::size_t s = 0; s < 3; ++s) {
    auto& slot = slots_[s];
    if (before[s] != SensorStatus::Live || slot.status != SensorStatus::Live || flags.any(s))
      continue;
    if (slot.twin) {
      std::vector<TwinSample> fresh;
      for (std::size_t i = first; i < end; ++i) {
        const Reading& r = physical_[s].readings[i];
        if (r.present) fresh.push_back({physical_[s].time_at(i), r.value});
      }
      if (!fresh.empty()) slot.twin = update_many(*slot.twin, fresh);
    } else if (end - slot.cold_since >= train_len) {
      try {
        slot.twin = fit(slice(physical_[s], end - train_len, end), cfg_.twin);
      } catch (const UnderdeterminedFit&) {
        // Stay cold until enough present readings accumulate.
      }
    }
  }
}

ScenarioReport Runner::run(const std::optional<UniformTrace>& truth) {
  const auto n = cfg_.lookback_n;
  const auto train_len = cfg_.twin.train_len;
  report_.grid_start = clean_[0].start;
  report_.interval_s = clean_[0].interval_s;

  inject_faults();
  train_twins();

  FusionState state;
  const std::size_t cycles = cfg_.run_len / n;
  for (std::size_t k = 0; k < cycles; ++k) {
    const std::size_t first = train_len + k * n;
    apply_repairs(k, first);

    Sources sources{};
    Statuses statuses{};
    std::array<std::optional<TwinModel>, 3> twins;
    for (std::size_t s = 0; s < 3; ++s) {
      statuses[s] = slots_[s].status;
      switch (slots_[s].status) {
        case SensorStatus::Live: sources[s] = RowSource::physical; break;
        case SensorStatus::TwinSubstituted:
          sources[s] = RowSource::twin;
          twins[s] = slots_[s].twin;
          break;
        default: sources[s] = RowSource::excluded; break;
      }
    }

    TriadWindow window = assemble_window(sources, physical_, twins, first, n);
    if (window.participation() == 0) {
      report_.failure = TotalFailure{k, "no participating rows"};
      break;
    }

    FusionOutput out;
    try {
      std::tie(out, state) = fusion_cycle(window, state, cfg_.threshold);
    } catch (const UnfusableCycle& e) {
      report_.failure = TotalFailure{k, e.what()};
      break;
    }

    CycleRecord rec;
    rec.cycle_index = k;
    rec.start_index = first;
    rec.timestamps = window.timestamps;
    rec.statuses = statuses;
    rec.sources = sources;
    rec.rows = window.rows;
    rec.flags = out.flags;
    rec.elementwise = out.elementwise;
    rec.composite = out.composite;
    rec.participation = window.participation();
    report_.cycles.push_back(std::move(rec));

    decide_transitions(k, sources, out.flags);
    refresh_twins(first, first + n, out.flags, statuses);
  }

  compute_metrics(truth ? *truth : mean_trace(clean_));
  return std::move(report_);
}

void Runner::compute_metrics(const UniformTrace& truth) {
  auto& m = report_.metrics;
  const std::size_t end = cfg_.twin.train_len + cfg_.run_len;
  const auto fused = fused_error(report_, truth, cfg_.twin.train_len, end);
  m.push_back({"cycles", std::nullopt, static_cast<double>(report_.cycles.size())});
  m.push_back({"fused_mae", std::nullopt, fused.mae});
  m.push_back({"fused_rmse", std::nullopt, fused.rmse});
  m.push_back({"transitions", std::nullopt, static_cast<double>(report_.transitions.size())});
  if (report_.failure)
    m.push_back({"total_failure_cycle", std::nullopt, static_cast<double>(report_.failure->cycle)});

  std::optional<double> tol = cfg_.tracking_tol;
  if (!tol && cfg_.threshold.mode == ThresholdMode::absolute) tol = cfg_.threshold.value;

  // Contiguous runs of cycles where a sensor's row came from its twin.
  for (std::size_t s = 0; s < 3; ++s) {
    Accumulator all;
    std::size_t span_id = 0;
    std::size_t k = 0;
    const auto& cycles = report_.cycles;
    while (k < cycles.size()) {
      if (cycles[k].sources[s] != RowSource::twin) {
        ++k;
        continue;
      }
      const std::size_t span_begin = k;
      Accumulator acc;
      Forecast forecast;
      while (k < cycles.size() && cycles[k].sources[s] == RowSource::twin) {
        const auto& c = cycles[k];
        for (std::size_t j = 0; j < c.timestamps.size(); ++j) {
          forecast.timestamps.push_back(c.timestamps[j]);
          forecast.values.push_back(c.rows[s][j].value);
          const Reading& r = clean_[s].readings[c.start_index + j];
          if (r.present) {
            acc.add(c.rows[s][j].value - r.value);
            all.add(c.rows[s][j].value - r.value);
          }
        }
        ++k;
      }
      const std::string prefix = "twin_span" + std::to_string(span_id++) + "_";
      const auto e = acc.summary();
      m.push_back({prefix + "start_cycle", s, static_cast<double>(span_begin)});
      m.push_back({prefix + "cycles", s, static_cast<double>(k - span_begin)});
      m.push_back({prefix + "mae", s, e.mae});
      m.push_back({prefix + "rmse", s, e.rmse});
      if (tol) {
        m.push_back({prefix + "tracking_s", s,
                     static_cast<double>(tracking_duration(forecast, clean_[s], *tol))});
      }
    }
    if (all.n > 0) {
      const auto e = all.summary();
      m.push_back({"twin_mae", s, e.mae});
      m.push_back({"twin_rmse", s, e.rmse});
    }
  }
}

}  // namespace

std::string to_string(SensorStatus status) {
  switch (status) {
    case SensorStatus::Live: return "Live";
    case SensorStatus::TwinSubstituted: return "TwinSubstituted";
    case SensorStatus::Dropped: return "Dropped";
    case SensorStatus::UnderRepair: return "UnderRepair";
  }
  return "?";
}

std::string to_string(RowSource source) {
  switch (source) {
    case RowSource::physical: return "physical";
    case RowSource::twin: return "twin";
    case RowSource::excluded: return "excluded";
  }
  return "?";
}

bool is_legal_transition(SensorStatus from, SensorStatus to) {
  using S = SensorStatus;
  if (from == to) return true;
  switch (from) {
    case S::Live: return to == S::TwinSubstituted || to == S::UnderRepair;
    case S::TwinSubstituted: return to == S::Dropped || to == S::Live || to == S::UnderRepair;
    case S::Dropped: return to == S::Live;
    case S::UnderRepair: return to == S::Live;
  }
  return false;
}

std::optional<double> ScenarioReport::metric(const std::string& name,
                                             std::optional<std::size_t> sensor) const {
  for (const auto& m : metrics) {
    if (m.name == name && m.sensor == sensor) return m.value;
  }
  return std::nullopt;
}

TriadWindow assemble_window(const Sources& sources, const std::array<UniformTrace, 3>& physical,
                            const std::array<std::optional<TwinModel>, 3>& twins,
                            std::size_t first, std::size_t n) {
  std::vector<Timestamp> ts(n);
  for (std::size_t j = 0; j < n; ++j) ts[j] = physical[0].time_at(first + j);

  TriadWindow window;
  window.timestamps = ts;
  window.rows.resize(3);
  window.participating.assign(3, false);
  for (std::size_t s = 0; s < 3; ++s) {
    auto& row = window.rows[s];
    switch (sources[s]) {
      case RowSource::physical:
        if (first + n > physical[s].size())
          throw std::out_of_range("window runs past the end of trace " + physical[s].sensor_id);
        row.assign(physical[s].readings.begin() + static_cast<std::ptrdiff_t>(first),
                   physical[s].readings.begin() + static_cast<std::ptrdiff_t>(first + n));
        window.participating[s] = true;
        break;
      case RowSource::twin: {
        if (!twins[s]) throw std::invalid_argument("twin row requested without a twin model");
        const auto forecast = predict(*twins[s], ts);
        row.reserve(n);
        for (double v : forecast.values) row.push_back(Reading::of(v));
        window.participating[s] = true;
        break;
      }
      case RowSource::excluded:
        row.assign(n, Reading::missing());
        break;
    }
  }
  return window;
}

ScenarioReport run_scenario(const ScenarioConfig& cfg, const std::array<UniformTrace, 3>& clean,
                            const std::optional<UniformTrace>& truth) {
  validate_config(cfg);
  const auto needed = cfg.twin.train_len + cfg.run_len;
  for (std::size_t s = 0; s < 3; ++s) {
    const auto& t = clean[s];
    if (t.start != clean[0].start || t.interval_s != clean[0].interval_s ||
        t.size() != clean[0].size()) {
      throw AlignmentError("trace '" + t.sensor_id + "' is misaligned with '" +
                           clean[0].sensor_id + "'");
    }
    if (t.size() < needed) {
      throw std::invalid_argument("trace '" + t.sensor_id + "' has " + std::to_string(t.size()) +
                                  " points; scenario needs train_len + run_len = " +
                                  std::to_string(needed));
    }
  }
  for (const auto& f : cfg.fault_specs) {
    if (f.spec.start_idx + f.spec.duration > clean[f.sensor].size())
      throw FaultBoundsError("fault window exceeds trace length");
  }
  if (truth && (truth->start != clean[0].start || truth->interval_s != clean[0].interval_s ||
                truth->size() < needed)) {
    throw AlignmentError("ground-truth trace is misaligned with the sensor traces");
  }
  return Runner(cfg, clean).run(truth);
}

ErrorSummary fused_error(const ScenarioReport& report, const UniformTrace& truth, std::size_t begin,
                         std::size_t end) {
  Accumulator acc;
  for (const auto& c : report.cycles) {
    for (std::size_t j = 0; j < c.elementwise.size(); ++j) {
      const std::size_t idx = c.start_index + j;
      if (idx < begin || idx >= end || idx >= truth.size()) continue;
      const Reading& r = truth.readings[idx];
      if (r.present) acc.add(c.elementwise[j] - r.value);
    }
  }
  return acc.summary();
}

}  // namespace twinfuse
