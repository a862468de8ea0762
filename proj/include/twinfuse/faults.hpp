#pragma once

// Fault injection for the four classic sensor fault classes:
//
//   hard         the sensor stops responding (readings become missing)
//   soft         every reading in the episode is wrong (stuck / offset / scale)
//   intermittent each step of the episode is wrong with probability p
//   transient    a soft fault that only lasts a short episode
//
// Intermittent faults draw from std::mt19937_64 seeded with the caller's
// seed; a step is faulty when (draw >> 11) * 2^-53 < p. The mapping is
// spelled out so masks stay reproducible for a given seed.

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "twinfuse/model.hpp"

namespace twinfuse {

/// flags[i] is true exactly where the injected trace differs from the input
/// (value or presence).
struct FaultMask {
  std::vector<bool> flags;

  std::size_t count() const;
};

class FaultBoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

std::pair<UniformTrace, FaultMask> inject(const UniformTrace& trace, const FaultSpec& spec,
                                          std::uint64_t seed);

/// Grid index at which the physical sensor counts as restored:
/// start_idx + ceil(repair_after_s / interval_s).
std::size_t repair_index(const FaultSpec& spec, std::int64_t repair_after_s,
                         std::int64_t interval_s);

}  // namespace twinfuse
