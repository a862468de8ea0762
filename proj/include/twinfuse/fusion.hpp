#pragma once

// TMR data fusion: readings flagged by the detector are replaced with the
// previous cycle's composite, the rows are averaged position by position,
// and the mean of those averages becomes the new composite.
//
// The arithmetic works for any number of rows M >= 1. An empty row in a
// corrected matrix stands for a sensor that does not participate.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "twinfuse/detector.hpp"
#include "twinfuse/model.hpp"

namespace twinfuse {

using Matrix = std::vector<std::vector<double>>;

struct FusionState {
  std::optional<double> last_composite;
  std::uint64_t cycle_index = 0;
};

struct Fused {
  std::vector<double> elementwise;
  double composite = 0.0;
};

struct FusionOutput {
  std::vector<double> elementwise;
  double composite = 0.0;
  Matrix corrected;
  AnomalyFlags flags;
};

/// Raised when a cycle has nothing trustworthy to average: every reading is
/// flagged and there is no earlier composite to substitute.
class UnfusableCycle : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Replaces flagged or missing readings with state.last_composite (or, on
/// the very first cycle, with the grand mean of the unflagged readings).
Matrix auto_correct(const TriadWindow& window, const AnomalyFlags& flags,
                    const FusionState& state);

/// Mean of each column over the non-empty rows, then the mean of those.
Fused fuse(const Matrix& corrected);

/// One full cycle: check against the last composite, correct, fuse.
std::pair<FusionOutput, FusionState> fusion_cycle(const TriadWindow& window,
                                                  const FusionState& state,
                                                  const Threshold& threshold);

}  // namespace twinfuse
