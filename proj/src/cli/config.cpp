#include "twinfuse/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

namespace twinfuse::cli {

namespace {

using nlohmann::json;

// Collects problems while walking the document so one error lists them all.
class Reader {
 public:
  void fail(std::string field, std::string message) {
    issues_.push_back({std::move(field), std::move(message)});
  }

  void only_keys(const json& obj, const std::string& where, std::set<std::string> allowed) {
    for (const auto& [key, _] : obj.items()) {
      if (!allowed.count(key)) fail(where.empty() ? key : where + "." + key, "unknown key");
    }
  }

  const json* object(const json& parent, const std::string& key, const std::string& field) {
    if (!parent.contains(key)) return nullptr;
    const auto& v = parent.at(key);
    if (!v.is_object()) {
      fail(field, "expected an object");
      return nullptr;
    }
    return &v;
  }

  template <typename T>
  std::optional<T> get(const json& obj, const std::string& key, const std::string& field) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    const auto& v = obj.at(key);
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return bad<T>(field, "expected a string");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) return bad<T>(field, "expected a number");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        return bad<T>(field, "expected a non-negative integer");
    } else {
      if (!v.is_number_integer()) return bad<T>(field, "expected an integer");
    }
    return v.get<T>();
  }

  template <typename T>
  void read(const json& obj, const std::string& key, const std::string& field, T& out) {
    if (auto v = get<T>(obj, key, field)) out = *v;
  }

  template <typename Enum, typename Fn>
  void read_enum(const json& obj, const std::string& key, const std::string& field, Enum& out,
                 Fn&& parse) {
    if (auto name = get<std::string>(obj, key, field)) {
      try {
        out = parse(*name);
      } catch (const UsageError& e) {
        fail(field, e.what());
      }
    }
  }

  void finish() {
    if (!issues_.empty()) throw ConfigError(std::move(issues_));
  }

 private:
  template <typename T>
  std::optional<T> bad(const std::string& field, const char* msg) {
    fail(field, msg);
    return std::nullopt;
  }

  std::vector<ConfigIssue> issues_;
};

ThresholdMode threshold_mode_from_string(const std::string& name) {
  if (name == "absolute") return ThresholdMode::absolute;
  if (name == "relative") return ThresholdMode::relative;
  throw UsageError("unknown threshold mode '" + name + "'");
}

void read_twin(Reader& r, const json& obj, TwinSettings& twin) {
  r.only_keys(obj, "twin",
              {"kind", "train_len", "seasonal_period_s", "fourier_order", "process_var",
               "observation_var"});
  r.read_enum(obj, "kind", "twin.kind", twin.kind, twin_kind_from_string);
  r.read(obj, "train_len", "twin.train_len", twin.train_len);
  r.read(obj, "seasonal_period_s", "twin.seasonal_period_s", twin.seasonal_period_s);
  r.read(obj, "fourier_order", "twin.fourier_order", twin.fourier_order);
  twin.process_var = r.get<double>(obj, "process_var", "twin.process_var");
  twin.observation_var = r.get<double>(obj, "observation_var", "twin.observation_var");
}

void read_faults(Reader& r, const json& arr, std::vector<SensorFault>& out) {
  if (!arr.is_array()) {
    r.fail("faults", "expected an array");
    return;
  }
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string at = "faults[" + std::to_string(i) + "]";
    const auto& f = arr[i];
    if (!f.is_object()) {
      r.fail(at, "expected an object");
      continue;
    }
    r.only_keys(f, at, {"sensor", "kind", "start_idx", "duration", "mode", "param", "probability"});
    SensorFault sf;
    r.read(f, "sensor", at + ".sensor", sf.sensor);
    r.read_enum(f, "kind", at + ".kind", sf.spec.kind, fault_kind_from_string);
    r.read(f, "start_idx", at + ".start_idx", sf.spec.start_idx);
    r.read(f, "duration", at + ".duration", sf.spec.duration);
    r.read_enum(f, "mode", at + ".mode", sf.spec.soft.kind, soft_mode_kind_from_string);
    r.read(f, "param", at + ".param", sf.spec.soft.param);
    r.read(f, "probability", at + ".probability", sf.spec.probability);
    if (!f.contains("kind")) r.fail(at + ".kind", "required");
    if (!f.contains("sensor")) r.fail(at + ".sensor", "required");
    out.push_back(sf);
  }
}

void read_signal(Reader& r, const json& obj, SignalSpec& sig) {
  r.only_keys(obj, "traces.signal",
              {"type", "value", "intercept", "slope", "amplitude", "period_s", "phase"});
  r.read(obj, "type", "traces.signal.type", sig.type);
  r.read(obj, "value", "traces.signal.value", sig.value);
  r.read(obj, "intercept", "traces.signal.intercept", sig.intercept);
  r.read(obj, "slope", "traces.signal.slope", sig.slope);
  r.read(obj, "amplitude", "traces.signal.amplitude", sig.amplitude);
  r.read(obj, "period_s", "traces.signal.period_s", sig.period_s);
  r.read(obj, "phase", "traces.signal.phase", sig.phase);
  static const std::set<std::string> types{"constant", "linear", "sinusoid", "line_sinusoid"};
  if (!types.count(sig.type)) r.fail("traces.signal.type", "unknown signal type '" + sig.type + "'");
  if (sig.period_s <= 0) r.fail("traces.signal.period_s", "period_s must be > 0");
}

void read_traces(Reader& r, const json& obj, const std::filesystem::path& base, TraceSpec& spec) {
  r.only_keys(obj, "traces", {"interval_s", "start", "signal", "sensors"});
  r.read(obj, "interval_s", "traces.interval_s", spec.interval_s);
  spec.start = r.get<std::int64_t>(obj, "start", "traces.start");
  if (spec.interval_s <= 0) r.fail("traces.interval_s", "interval_s must be > 0");
  if (spec.start && *spec.start < 0) r.fail("traces.start", "start must be non-negative");
  if (const auto* sig = r.object(obj, "signal", "traces.signal")) read_signal(r, *sig, spec.signal);

  for (std::size_t s = 0; s < 3; ++s) spec.sensors[s].id = "sensor" + std::to_string(s);
  if (!obj.contains("sensors")) return;
  const auto& arr = obj.at("sensors");
  if (!arr.is_array() || arr.size() != 3) {
    r.fail("traces.sensors", "expected an array of exactly 3 sensors");
    return;
  }
  for (std::size_t s = 0; s < 3; ++s) {
    const std::string at = "traces.sensors[" + std::to_string(s) + "]";
    const auto& o = arr[s];
    if (!o.is_object()) {
      r.fail(at, "expected an object");
      continue;
    }
    r.only_keys(o, at,
                {"id", "noise_sd", "noise_seed", "offset", "file", "mote", "channel", "policy"});
    auto& src = spec.sensors[s];
    r.read(o, "id", at + ".id", src.id);
    r.read(o, "noise_sd", at + ".noise_sd", src.noise_sd);
    r.read(o, "noise_seed", at + ".noise_seed", src.noise_seed);
    r.read(o, "offset", at + ".offset", src.offset);
    if (!(src.noise_sd >= 0.0)) r.fail(at + ".noise_sd", "noise_sd must be >= 0");
    if (auto file = r.get<std::string>(o, "file", at + ".file")) {
      std::filesystem::path p(*file);
      src.file = p.is_relative() ? base / p : p;
    }
    r.read(o, "mote", at + ".mote", src.mote);
    r.read_enum(o, "channel", at + ".channel", src.channel, sensor_kind_from_string);
    r.read_enum(o, "policy", at + ".policy", src.policy, resample_policy_from_string);
    if (src.file && src.channel == SensorKind::synthetic)
      r.fail(at + ".channel", "file sources need a physical channel");
  }
}

}  // namespace

double SignalSpec::at(Timestamp t, Timestamp start) const {
  if (type == "constant") return value;
  const double dt = static_cast<double>(t.seconds - start.seconds);
  double y = intercept;
  if (type == "linear" || type == "line_sinusoid") y += slope * dt;
  if (type == "sinusoid" || type == "line_sinusoid") {
    std::int64_t r = t.seconds % period_s;
    const double ph = static_cast<double>(r) / static_cast<double>(period_s);
    y += amplitude * std::sin(2.0 * std::numbers::pi * ph + phase);
  }
  return y;
}

FileConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError(std::vector<ConfigIssue>{{"", "config must be a JSON object"}});
  Reader r;
  FileConfig fc;
  auto& sc = fc.scenario;

  r.only_keys(doc, "",
              {"lookback_n", "threshold", "patience", "twin", "faults", "repair_after_s", "seed",
               "run_len", "tracking_tol", "traces", "twin_eval"});
  if (auto n = r.get<std::int64_t>(doc, "lookback_n", "lookback_n")) {
    if (*n < 1) {
      r.fail("lookback_n", "lookback_n must be ≥ 1");
    } else {
      sc.lookback_n = static_cast<std::size_t>(*n);
    }
  }
  if (const auto* th = r.object(doc, "threshold", "threshold")) {
    r.only_keys(*th, "threshold", {"value", "mode"});
    r.read(*th, "value", "threshold.value", sc.threshold.value);
    r.read_enum(*th, "mode", "threshold.mode", sc.threshold.mode, threshold_mode_from_string);
  }
  r.read(doc, "patience", "patience", sc.patience);
  if (const auto* tw = r.object(doc, "twin", "twin")) read_twin(r, *tw, sc.twin);
  if (doc.contains("faults")) read_faults(r, doc.at("faults"), sc.fault_specs);
  sc.repair_after_s = r.get<std::int64_t>(doc, "repair_after_s", "repair_after_s");
  r.read(doc, "seed", "seed", sc.seed);
  r.read(doc, "run_len", "run_len", sc.run_len);
  sc.tracking_tol = r.get<double>(doc, "tracking_tol", "tracking_tol");
  if (const auto* tr = r.object(doc, "traces", "traces")) read_traces(r, *tr, base_dir, fc.traces);
  if (const auto* te = r.object(doc, "twin_eval", "twin_eval")) {
    r.only_keys(*te, "twin_eval", {"sensor", "horizon", "tolerance"});
    TwinEvalSpec ev;
    r.read(*te, "sensor", "twin_eval.sensor", ev.sensor);
    r.read(*te, "horizon", "twin_eval.horizon", ev.horizon);
    r.read(*te, "tolerance", "twin_eval.tolerance", ev.tolerance);
    if (ev.sensor > 2) r.fail("twin_eval.sensor", "sensor index must be in {0,1,2}");
    if (ev.horizon < 1) r.fail("twin_eval.horizon", "horizon must be ≥ 1");
    if (!(ev.tolerance > 0.0)) r.fail("twin_eval.tolerance", "tolerance must be > 0");
    fc.twin_eval = ev;
  }
  r.finish();

  validate_config(sc);
  return fc;
}

FileConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

Traces build_traces(const TraceSpec& spec, std::size_t len) {
  Traces out;
  const bool synthetic = std::none_of(spec.sensors.begin(), spec.sensors.end(),
                                      [](const SensorSource& s) { return s.file.has_value(); });
  std::array<std::optional<std::vector<Sample>>, 3> samples;
  std::int64_t start = spec.start.value_or(0);

  if (!synthetic) {
    for (std::size_t s = 0; s < 3; ++s) {
      const auto& src = spec.sensors[s];
      if (!src.file) throw UsageError("mixing file and synthetic sensors is not supported");
      std::ifstream in(*src.file);
      if (!in) throw UsageError("cannot open dataset file: " + src.file->string());
      samples[s] = parse_log(in, src.mote, src.channel).samples;
    }
    if (!spec.start) {
      // Earliest grid point at which every sensor has reported.
      double latest_first = 0.0;
      for (const auto& s : samples) latest_first = std::max(latest_first, s->front().t);
      start = static_cast<std::int64_t>(std::ceil(latest_first));
    }
  }

  const Timestamp t0{start};
  for (std::size_t s = 0; s < 3; ++s) {
    const auto& src = spec.sensors[s];
    if (samples[s]) {
      out.sensors[s] = resample(*samples[s], t0, spec.interval_s, len, src.policy, src.id, src.channel);
      continue;
    }
    std::mt19937_64 rng(src.noise_seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<Reading> readings(len);
    for (std::size_t i = 0; i < len; ++i) {
      const Timestamp t{start + static_cast<std::int64_t>(i) * spec.interval_s};
      double v = spec.signal.at(t, t0) + src.offset;
      if (src.noise_sd > 0.0) v += src.noise_sd * noise(rng);
      readings[i] = Reading::of(v);
    }
    out.sensors[s] = make_trace(src.id, SensorKind::synthetic, t0, spec.interval_s, std::move(readings));
  }

  if (synthetic) {
    std::vector<Reading> truth(len);
    for (std::size_t i = 0; i < len; ++i)
      truth[i] = Reading::of(spec.signal.at({start + static_cast<std::int64_t>(i) * spec.interval_s}, t0));
    out.truth = make_trace("truth", SensorKind::synthetic, t0, spec.interval_s, std::move(truth));
  }
  return out;
}

}  // namespace twinfuse::cli
