#include "twinfuse/faults.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace twinfuse {

namespace {

double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::size_t FaultMask::count() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
}

std::pair<UniformTrace, FaultMask> inject(const UniformTrace& trace, const FaultSpec& spec,
                                          std::uint64_t seed) {
  if (spec.start_idx > trace.size() || spec.duration > trace.size() - spec.start_idx) {
    throw FaultBoundsError("fault window [" + std::to_string(spec.start_idx) + ", " +
                           std::to_string(spec.start_idx + spec.duration) +
                           ") exceeds trace '" + trace.sensor_id + "' of length " +
                           std::to_string(trace.size()));
  }
  if (spec.kind == FaultKind::intermittent &&
      !(spec.probability > 0.0 && spec.probability < 1.0)) {
    throw std::invalid_argument("intermittent fault probability must lie in (0,1)");
  }
  if (!std::isfinite(spec.soft.param)) throw std::invalid_argument("soft parameter must be finite");

  UniformTrace out = trace;
  FaultMask mask{std::vector<bool>(trace.size(), false)};
  std::mt19937_64 rng(seed);

  for (std::size_t i = spec.start_idx; i < spec.start_idx + spec.duration; ++i) {
    Reading& r = out.readings[i];
    switch (spec.kind) {
      case FaultKind::hard:
        r = Reading::missing();
        break;
      case FaultKind::soft:
      case FaultKind::transient:
        if (r.present) r.value = spec.soft.apply(r.value);
        break;
      case FaultKind::intermittent:
        // Draw on every step so the mask does not depend on the data.
        if (unit_draw(rng) < spec.probability && r.present) r.value = spec.soft.apply(r.value);
        break;
    }
    mask.flags[i] = !(r == trace.readings[i]);
  }
  return {std::move(out), std::move(mask)};
}

std::size_t repair_index(const FaultSpec& spec, std::int64_t repair_after_s,
                         std::int64_t interval_s) {
  if (repair_after_s < 0) throw std::invalid_argument("repair_after_s must be >= 0");
  if (interval_s <= 0) throw std::invalid_argument("interval_s must be > 0");
  const auto steps = (repair_after_s + interval_s - 1) / interval_s;
  return spec.start_idx + static_cast<std::size_t>(steps);
}

}  // namespace twinfuse
