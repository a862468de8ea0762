#pragma once

// Forecasting digital twins.
//
// A twin is fitted on the trailing `train_len` grid points of a sensor's
// history (missing readings are skipped), can forecast any later grid
// timestamps, and is refreshed with new readings while its sensor is healthy.
//
// Three model classes share that contract:
//
//   additive_seasonal  least squares on  a + b*t + sum_k c_k cos(2πkt/P) + d_k sin(2πkt/P)
//   kalman             local-level filter; forecasts are flat at the level
//   naive              repeats the mean profile of the most recent period P

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "twinfuse/model.hpp"

namespace twinfuse {

struct TwinSample {
  Timestamp t;
  double value = 0.0;
};

struct AdditiveFit {
  Timestamp origin;      // trend is measured from here
  double intercept = 0;  // value at origin
  double slope = 0;      // value per second
  std::vector<double> cos_coef;  // k = 1..K
  std::vector<double> sin_coef;
  double residual_sd = 0;
};

struct KalmanFit {
  double level = 0;
  double variance = 0;
  double process_var = 0;
  double observation_var = 0;
};

struct NaiveFit {
  double last_value = 0;
  // Mean of the last period, indexed by grid phase; empty where unseen.
  std::vector<std::optional<double>> profile;
};

struct TwinModel {
  TwinSettings settings;
  std::int64_t interval_s = 60;
  Timestamp fitted_through;
  // Present readings within the trailing train_len grid points.
  std::deque<TwinSample> window;
  std::variant<AdditiveFit, KalmanFit, NaiveFit> state;

  TwinKind kind() const { return settings.kind; }
};

struct Forecast {
  std::vector<Timestamp> timestamps;
  std::vector<double> values;
};

class UnderdeterminedFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TemporalOrderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

TwinModel fit(const UniformTrace& history, const TwinSettings& settings);

Forecast predict(const TwinModel& model, std::span<const Timestamp> timestamps);

/// `count` consecutive grid timestamps starting at `first`.
Forecast predict_grid(const TwinModel& model, Timestamp first, std::size_t count);

/// Appends one healthy reading. Additive and naive twins refit over the
/// updated window; the Kalman twin runs one filter step (plus predict-only
/// steps for any grid points skipped since fitted_through).
TwinModel update(const TwinModel& model, TwinSample reading);

/// Same as repeated update() but refits once at the end.
TwinModel update_many(const TwinModel& model, std::span<const TwinSample> readings);

/// Length in seconds of the longest forecast prefix that stays within `tol`
/// of every present truth reading. The forecast must sit on truth's grid.
std::int64_t tracking_duration(const Forecast& forecast, const UniformTrace& truth, double tol);

}  // namespace twinfuse
