#include "twinfuse/twin.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>

namespace twinfuse {

namespace {

// Fraction of the seasonal period elapsed at t, computed in integers so the
// phase is exact regardless of how large t is.
double phase_of(Timestamp t, std::int64_t period_s) {
  std::int64_t r = t.seconds % period_s;
  if (r < 0) r += period_s;
  return static_cast<double>(r) / static_cast<double>(period_s);
}

std::size_t phase_bucket(Timestamp t, std::int64_t period_s, std::int64_t interval_s) {
  std::int64_t r = t.seconds % period_s;
  if (r < 0) r += period_s;
  return static_cast<std::size_t>(r / interval_s);
}

std::size_t bucket_count(std::int64_t period_s, std::int64_t interval_s) {
  return static_cast<std::size_t>((period_s + interval_s - 1) / interval_s);
}

template <typename Row>
void fill_basis(Row&& row, Timestamp t, const Timestamp origin,
                std::int64_t period_s, int order) {
  const double period = static_cast<double>(period_s);
  row(0) = 1.0;
  row(1) = static_cast<double>(t.seconds - origin.seconds) / period;
  const double angle = 2.0 * std::numbers::pi * phase_of(t, period_s);
  for (int k = 1; k <= order; ++k) {
    row(2 * k) = std::cos(k * angle);
    row(2 * k + 1) = std::sin(k * angle);
  }
}

AdditiveFit fit_additive(const std::deque<TwinSample>& window, const TwinSettings& settings) {
  const int order = settings.fourier_order;
  const auto params = static_cast<Eigen::Index>(2 * order + 2);
  const auto n = static_cast<Eigen::Index>(window.size());
  if (order < 1) throw UnderdeterminedFit("additive twin needs fourier_order >= 1");
  if (n < params) {
    throw UnderdeterminedFit("additive twin needs at least " + std::to_string(params) +
                             " present readings, got " + std::to_string(n));
  }

  const Timestamp origin = window.front().t;
  Eigen::MatrixXd design(n, params);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = window[static_cast<std::size_t>(i)];
    fill_basis(design.row(i), s.t, origin, settings.seasonal_period_s, order);
    y(i) = s.value;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < params) {
    throw UnderdeterminedFit("additive twin design is rank deficient (rank " +
                             std::to_string(qr.rank()) + " of " + std::to_string(params) + ")");
  }
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd residual = y - design * beta;

  AdditiveFit out;
  out.origin = origin;
  out.intercept = beta(0);
  out.slope = beta(1) / static_cast<double>(settings.seasonal_period_s);
  for (int k = 1; k <= order; ++k) {
    out.cos_coef.push_back(beta(2 * k));
    out.sin_coef.push_back(beta(2 * k + 1));
  }
  out.residual_sd = std::sqrt(residual.squaredNorm() / static_cast<double>(n));
  return out;
}

double eval_additive(const AdditiveFit& fit, std::int64_t period_s, Timestamp t) {
  double v = fit.intercept + fit.slope * static_cast<double>(t.seconds - fit.origin.seconds);
  const double angle = 2.0 * std::numbers::pi * phase_of(t, period_s);
  for (std::size_t k = 1; k <= fit.cos_coef.size(); ++k) {
    v += fit.cos_coef[k - 1] * std::cos(static_cast<double>(k) * angle) +
         fit.sin_coef[k - 1] * std::sin(static_cast<double>(k) * angle);
  }
  return v;
}

// One local-level step: predict-only when `obs` is empty.
void kalman_step(KalmanFit& kf, std::optional<double> obs) {
  kf.variance += kf.process_var;
  if (!obs) return;
  const double gain = kf.variance / (kf.variance + kf.observation_var);
  kf.level += gain * (*obs - kf.level);
  kf.variance *= (1.0 - gain);
}

std::int64_t grid_steps(Timestamp from, Timestamp to, std::int64_t interval_s) {
  return (to.seconds - from.seconds) / interval_s;
}

KalmanFit fit_kalman(const std::deque<TwinSample>& window, const TwinSettings& settings,
                     std::int64_t interval_s, Timestamp fitted_through) {
  if (window.empty()) throw UnderdeterminedFit("kalman twin needs at least one present reading");

  double r = 0.0;
  if (settings.observation_var) {
    r = *settings.observation_var;
  } else if (window.size() >= 3) {
    // Sample variance of first differences.
    std::vector<double> diffs;
    diffs.reserve(window.size() - 1);
    for (std::size_t i = 1; i < window.size(); ++i)
      diffs.push_back(window[i].value - window[i - 1].value);
    double mean = 0.0;
    for (double d : diffs) mean += d;
    mean /= static_cast<double>(diffs.size());
    for (double d : diffs) r += (d - mean) * (d - mean);
    r /= static_cast<double>(diffs.size() - 1);
  }
  if (!(r > 0.0)) r = 1e-6;
  const double q = settings.process_var.value_or(r / 10.0);

  KalmanFit kf{window.front().value, r, q, r};
  for (std::size_t i = 1; i < window.size(); ++i) {
    const auto gap = grid_steps(window[i - 1].t, window[i].t, interval_s);
    for (std::int64_t s = 1; s < gap; ++s) kalman_step(kf, std::nullopt);
    kalman_step(kf, window[i].value);
  }
  const auto tail = grid_steps(window.back().t, fitted_through, interval_s);
  for (std::int64_t s = 0; s < tail; ++s) kalman_step(kf, std::nullopt);
  return kf;
}

NaiveFit fit_naive(const std::deque<TwinSample>& window, const TwinSettings& settings,
                   std::int64_t interval_s, Timestamp fitted_through) {
  if (window.empty()) throw UnderdeterminedFit("naive twin needs at least one present reading");
  const std::int64_t period = settings.seasonal_period_s;
  const std::size_t buckets = bucket_count(period, interval_s);

  std::vector<double> sum(buckets, 0.0);
  std::vector<std::size_t> count(buckets, 0);
  for (const auto& s : window) {
    if (s.t.seconds <= fitted_through.seconds - period) continue;
    const auto b = phase_bucket(s.t, period, interval_s);
    sum[b] += s.value;
    ++count[b];
  }

  NaiveFit out;
  out.last_value = window.back().value;
  out.profile.resize(buckets);
  for (std::size_t b = 0; b < buckets; ++b) {
    if (count[b] > 0) out.profile[b] = sum[b] / static_cast<double>(count[b]);
  }
  return out;
}

void refit(TwinModel& model) {
  switch (model.settings.kind) {
    case TwinKind::additive_seasonal:
      model.state = fit_additive(model.window, model.settings);
      break;
    case TwinKind::kalman:
      model.state = fit_kalman(model.window, model.settings, model.interval_s, model.fitted_through);
      break;
    case TwinKind::naive:
      model.state = fit_naive(model.window, model.settings, model.interval_s, model.fitted_through);
      break;
  }
}

void evict_stale(TwinModel& model) {
  const auto span = static_cast<std::int64_t>(model.settings.train_len) - 1;
  const std::int64_t oldest = model.fitted_through.seconds - span * model.interval_s;
  while (!model.window.empty() && model.window.front().t.seconds < oldest) model.window.pop_front();
}

void append(TwinModel& model, TwinSample reading) {
  if (reading.t <= model.fitted_through) {
    throw TemporalOrderError("twin update at t=" + std::to_string(reading.t.seconds) +
                             " is not after fitted_through=" +
                             std::to_string(model.fitted_through.seconds));
  }
  if (!std::isfinite(reading.value)) throw std::invalid_argument("twin update value must be finite");
  if (model.kind() == TwinKind::kalman) {
    auto& kf = std::get<KalmanFit>(model.state);
    const auto gap = grid_steps(model.fitted_through, reading.t, model.interval_s);
    for (std::int64_t s = 1; s < gap; ++s) kalman_step(kf, std::nullopt);
    kalman_step(kf, reading.value);
  }
  model.window.push_back(reading);
  model.fitted_through = reading.t;
  evict_stale(model);
}

}  // namespace

TwinModel fit(const UniformTrace& history, const TwinSettings& settings) {
  if (history.interval_s <= 0) throw std::invalid_argument("history interval_s must be > 0");
  if (history.readings.empty()) throw UnderdeterminedFit("twin history is empty");
  if (settings.train_len < 1) throw std::invalid_argument("train_len must be >= 1");
  if (settings.seasonal_period_s <= 0) throw std::invalid_argument("seasonal period must be > 0");

  TwinModel model;
  model.settings = settings;
  model.interval_s = history.interval_s;
  model.fitted_through = history.time_at(history.size() - 1);
  const std::size_t first =
      history.size() > settings.train_len ? history.size() - settings.train_len : 0;
  for (std::size_t i = first; i < history.size(); ++i) {
    const Reading& r = history.readings[i];
    if (r.present) model.window.push_back({history.time_at(i), r.value});
  }
  refit(model);
  return model;
}

Forecast predict(const TwinModel& model, std::span<const Timestamp> timestamps) {
  Forecast out;
  out.timestamps.assign(timestamps.begin(), timestamps.end());
  out.values.reserve(timestamps.size());
  for (const Timestamp t : timestamps) {
    if (t < model.fitted_through) {
      throw TemporalOrderError("forecast requested at t=" + std::to_string(t.seconds) +
                               " before fitted_through=" +
                               std::to_string(model.fitted_through.seconds));
    }
    double v = 0.0;
    if (const auto* add = std::get_if<AdditiveFit>(&model.state)) {
      v = eval_additive(*add, model.settings.seasonal_period_s, t);
    } else if (const auto* kf = std::get_if<KalmanFit>(&model.state)) {
      v = kf->level;
    } else {
      const auto& nf = std::get<NaiveFit>(model.state);
      const auto& slot =
          nf.profile[phase_bucket(t, model.settings.seasonal_period_s, model.interval_s)];
      v = slot.value_or(nf.last_value);
    }
    out.values.push_back(v);
  }
  return out;
}

Forecast predict_grid(const TwinModel& model, Timestamp first, std::size_t count) {
  std::vector<Timestamp> ts(count);
  for (std::size_t i = 0; i < count; ++i)
    ts[i] = {first.seconds + static_cast<std::int64_t>(i) * model.interval_s};
  return predict(model, ts);
}

TwinModel update(const TwinModel& model, TwinSample reading) {
  return update_many(model, std::span<const TwinSample>(&reading, 1));
}

TwinModel update_many(const TwinModel& model, std::span<const TwinSample> readings) {
  TwinModel next = model;
  for (const auto& r : readings) append(next, r);
  if (!readings.empty() && next.kind() != TwinKind::kalman) refit(next);
  return next;
}

std::int64_t tracking_duration(const Forecast& forecast, const UniformTrace& truth, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("tracking tolerance must be > 0");
  if (forecast.timestamps.size() != forecast.values.size())
    throw AlignmentError("forecast timestamps and values differ in length");
  if (forecast.timestamps.empty()) return 0;

  const auto offset = forecast.timestamps.front().seconds - truth.start.seconds;
  if (offset < 0 || offset % truth.interval_s != 0)
    throw AlignmentError("forecast does not start on the truth grid");
  const auto first = static_cast<std::size_t>(offset / truth.interval_s);
  if (first + forecast.timestamps.size() > truth.size())
    throw AlignmentError("forecast runs past the end of the truth trace");

  std::size_t steps = 0;
  for (std::size_t i = 0; i < forecast.timestamps.size(); ++i) {
    if (forecast.timestamps[i] != truth.time_at(first + i))
      throw AlignmentError("forecast timestamps are not on the truth grid");
    const Reading& r = truth.readings[first + i];
    if (r.present && !(std::abs(forecast.values[i] - r.value) <= tol)) break;
    ++steps;
  }
  return static_cast<std::int64_t>(steps) * truth.interval_s;
}

}  // namespace twinfuse
