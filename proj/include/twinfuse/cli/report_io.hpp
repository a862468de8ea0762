#pragma once

// Serialisation of scenario reports. Numbers use the shortest decimal form
// that round-trips, so identical runs give byte-identical files.
//
//   trace.jsonl      one JSON object per fusion cycle
//   metrics.csv      metric,sensor,value   (sensor "all" for run-wide values)
//   transitions.csv  cycle,sensor,from,to,reason

#include <filesystem>
#include <string>

#include "twinfuse/orchestrator.hpp"

namespace twinfuse::cli {

std::string format_number(double v);

std::string trace_jsonl(const ScenarioReport& report);
std::string metrics_csv(const std::vector<Metric>& metrics);
std::string transitions_csv(const ScenarioReport& report);

/// Writes `contents` to a sibling temp file, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace twinfuse::cli
