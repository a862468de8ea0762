#include "twinfuse/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace twinfuse {

bool AnomalyFlags::any(std::size_t row) const {
  const auto& r = flags.at(row);
  return std::find(r.begin(), r.end(), true) != r.end();
}

std::size_t AnomalyFlags::count(std::size_t row) const {
  const auto& r = flags.at(row);
  return static_cast<std::size_t>(std::count(r.begin(), r.end(), true));
}

std::size_t AnomalyFlags::total() const {
  std::size_t n = 0;
  for (std::size_t s = 0; s < flags.size(); ++s) n += count(s);
  return n;
}

AnomalyFlags check(const TriadWindow& window, std::optional<double> reference,
                   const Threshold& threshold) {
  if (!(threshold.value > 0.0)) throw std::invalid_argument("threshold must be > 0");

  AnomalyFlags out;
  out.flags.assign(window.row_count(), std::vector<bool>(window.length(), false));
  const double band = reference ? threshold.band(*reference) : 0.0;

  for (std::size_t s = 0; s < window.row_count(); ++s) {
    if (!window.participating[s]) continue;
    for (std::size_t j = 0; j < window.length(); ++j) {
      const Reading& r = window.rows[s][j];
      if (!r.present) {
        out.flags[s][j] = true;
      } else if (reference) {
        out.flags[s][j] = std::abs(r.value - *reference) > band;
      }
    }
  }
  return out;
}

bool divergence_event(std::span<const AnomalyFlags> history, std::size_t sensor,
                      std::size_t patience) {
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (history.size() < patience) return false;
  const auto recent = history.last(patience);
  return std::all_of(recent.begin(), recent.end(),
                     [sensor](const AnomalyFlags& f) { return f.any(sensor); });
}

}  // namespace twinfuse
