#include "twinfuse/fusion.hpp"

#include <cmath>

namespace twinfuse {

namespace {

void require_shape(const TriadWindow& window, const AnomalyFlags& flags) {
  if (flags.flags.size() != window.row_count())
    throw std::invalid_argument("flags and window disagree on row count");
  for (const auto& row : flags.flags) {
    if (row.size() != window.length())
      throw std::invalid_argument("flags and window disagree on length");
  }
}

}  // namespace

Matrix auto_correct(const TriadWindow& window, const AnomalyFlags& flags,
                    const FusionState& state) {
  require_shape(window, flags);

  std::optional<double> replacement = state.last_composite;
  if (!replacement) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < window.row_count(); ++s) {
      if (!window.participating[s]) continue;
      for (std::size_t j = 0; j < window.length(); ++j) {
        const Reading& r = window.rows[s][j];
        if (r.present && !flags.flags[s][j]) {
          sum += r.value;
          ++count;
        }
      }
    }
    if (count == 0)
      throw UnfusableCycle("every reading in cycle " + std::to_string(state.cycle_index) +
                           " is flagged and no previous composite exists");
    replacement = sum / static_cast<double>(count);
  }

  Matrix corrected(window.row_count());
  for (std::size_t s = 0; s < window.row_count(); ++s) {
    if (!window.participating[s]) continue;
    auto& out = corrected[s];
    out.resize(window.length());
    for (std::size_t j = 0; j < window.length(); ++j) {
      const Reading& r = window.rows[s][j];
      out[j] = (r.present && !flags.flags[s][j]) ? r.value : *replacement;
    }
  }
  return corrected;
}

Fused fuse(const Matrix& corrected) {
  std::size_t n = 0;
  std::size_t rows = 0;
  for (const auto& row : corrected) {
    if (row.empty()) continue;
    if (rows == 0) {
      n = row.size();
    } else if (row.size() != n) {
      throw std::invalid_argument("fuse: rows differ in length");
    }
    ++rows;
  }
  if (rows == 0) throw std::invalid_argument("fuse: no participating rows");

  // Means are taken as offsets from the first value, so identical inputs
  // come back bit for bit.
  const std::vector<double>* anchor = nullptr;
  for (const auto& row : corrected) {
    if (!row.empty()) {
      anchor = &row;
      break;
    }
  }

  Fused out;
  out.elementwise.assign(n, 0.0);
  for (const auto& row : corrected) {
    if (row.empty() || &row == anchor) continue;
    for (std::size_t j = 0; j < n; ++j) out.elementwise[j] += row[j] - (*anchor)[j];
  }
  for (std::size_t j = 0; j < n; ++j)
    out.elementwise[j] = (*anchor)[j] + out.elementwise[j] / static_cast<double>(rows);

  double spread = 0.0;
  for (double v : out.elementwise) spread += v - out.elementwise.front();
  out.composite = out.elementwise.front() + spread / static_cast<double>(n);
  return out;
}

std::pair<FusionOutput, FusionState> fusion_cycle(const TriadWindow& window,
                                                  const FusionState& state,
                                                  const Threshold& threshold) {
  FusionOutput out;
  out.flags = check(window, state.last_composite, threshold);
  out.corrected = auto_correct(window, out.flags, state);
  auto fused = fuse(out.corrected);
  out.elementwise = std::move(fused.elementwise);
  out.composite = fused.composite;

  FusionState next{out.composite, state.cycle_index + 1};
  return {std::move(out), next};
}

}  // namespace twinfuse
