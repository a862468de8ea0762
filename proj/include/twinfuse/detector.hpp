#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "twinfuse/model.hpp"

namespace twinfuse {

/// Per-reading anomaly marks for one window; flags[s][j] mirrors
/// window.rows[s][j]. Non-participating rows are never flagged.
struct AnomalyFlags {
  std::vector<std::vector<bool>> flags;

  bool any(std::size_t row) const;
  std::size_t count(std::size_t row) const;
  std::size_t total() const;
};

/// Flags every missing reading, and every present reading whose distance
/// from `reference` strictly exceeds the threshold band. Without a
/// reference only missing readings are flagged.
AnomalyFlags check(const TriadWindow& window, std::optional<double> reference,
                   const Threshold& threshold);

/// True iff `sensor` has at least one flag in each of the last `patience`
/// entries of `history` (oldest first). Fewer entries than `patience`
/// never triggers.
bool divergence_event(std::span<const AnomalyFlags> history, std::size_t sensor,
                      std::size_t patience);

}  // namespace twinfuse
