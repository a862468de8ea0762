#pragma once

// Scenario config files (JSON). One file fully determines a run; see
// docs/config.md for the schema.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "twinfuse/ingest.hpp"
#include "twinfuse/model.hpp"

namespace twinfuse::cli {

/// Deterministic signal: intercept + slope*(t - start) +
/// amplitude*sin(2π t / period_s + phase). `constant` reads `value`.
struct SignalSpec {
  std::string type = "constant";  // constant | linear | sinusoid | line_sinusoid
  double value = 0.0;
  double intercept = 0.0;
  double slope = 0.0;  // per second
  double amplitude = 0.0;
  std::int64_t period_s = 86400;
  double phase = 0.0;

  double at(Timestamp t, Timestamp start) const;
};

struct SensorSource {
  std::string id;
  // Synthetic: the shared signal plus N(0, noise_sd^2) noise and an offset.
  double noise_sd = 0.0;
  std::uint64_t noise_seed = 0;
  double offset = 0.0;
  // File-backed when set.
  std::optional<std::filesystem::path> file;
  int mote = 0;
  SensorKind channel = SensorKind::temperature;
  ResamplePolicy policy = ResamplePolicy::locf;
};

struct TraceSpec {
  std::int64_t interval_s = 60;
  std::optional<std::int64_t> start;
  SignalSpec signal;
  std::array<SensorSource, 3> sensors;
};

struct TwinEvalSpec {
  std::size_t sensor = 0;
  std::size_t horizon = 1440;
  double tolerance = 1.0;
};

struct FileConfig {
  ScenarioConfig scenario;
  TraceSpec traces;
  std::optional<TwinEvalSpec> twin_eval;
};

/// Parses and validates. Throws ConfigError / UsageError on bad input.
FileConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
FileConfig load_config(const std::filesystem::path& path);

struct Traces {
  std::array<UniformTrace, 3> sensors;
  std::optional<UniformTrace> truth;  // noiseless signal for synthetic sources
};

/// Materialises `len` grid points per sensor. Throws UsageError when a
/// data file is missing.
Traces build_traces(const TraceSpec& spec, std::size_t len);

}  // namespace twinfuse::cli
