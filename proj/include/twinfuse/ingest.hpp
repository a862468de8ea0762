#pragma once

// Intel-Berkeley-style sensor logs:
//
//   date time epoch moteid temperature humidity light voltage
//   2004-03-01 00:00:07.5 123 7 19.5 38.2 45.0 2.68
//
// Columns are whitespace separated; comma-separated rows are accepted too
// (empty fields allowed between commas). Timestamps come from the date and
// time columns, interpreted as UTC. The "epoch" column is the dataset's
// sequence number and is ignored.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "twinfuse/model.hpp"

namespace twinfuse {

struct RawRecord {
  double timestamp = 0.0;
  int mote_id = 0;
  std::optional<double> temperature;
  std::optional<double> humidity;
  std::optional<double> light;
  std::optional<double> voltage;

  std::optional<double> channel(SensorKind kind) const;
};

/// Parses one log line. Returns nullopt for blank or malformed rows.
std::optional<RawRecord> parse_record(std::string_view line);

struct Sample {
  double t = 0.0;
  double value = 0.0;
};

struct ParseResult {
  std::vector<Sample> samples;  // strictly increasing in t
  std::size_t skipped = 0;      // malformed rows
};

class EmptyInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Extracts one mote's channel. Duplicate timestamps keep the last row.
/// Throws EmptyInputError when nothing usable remains and UsageError for a
/// non-physical channel.
ParseResult parse_log(std::istream& in, int mote_id, SensorKind channel);
ParseResult parse_log(std::string_view text, int mote_id, SensorKind channel);

enum class ResamplePolicy { locf, linear };

ResamplePolicy resample_policy_from_string(const std::string& name);

/// Projects sorted samples onto start + i*interval_s for i < len. Grid points
/// before the first sample are missing. Under `linear`, points after the last
/// sample hold the last value.
UniformTrace resample(const std::vector<Sample>& samples, Timestamp start, std::int64_t interval_s,
                      std::size_t len, ResamplePolicy policy, std::string sensor_id = {},
                      SensorKind kind = SensorKind::synthetic);

}  // namespace twinfuse
