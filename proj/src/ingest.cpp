#include "twinfuse/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <sstream>

namespace twinfuse {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  if (line.find(',') != std::string_view::npos) {
    std::size_t pos = 0;
    while (true) {
      const auto next = line.find(',', pos);
      out.push_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
      if (next == std::string_view::npos) break;
      pos = next + 1;
    }
    return out;
  }
  std::size_t pos = 0;
  while (pos < line.size()) {
    pos = line.find_first_not_of(" \t\r", pos);
    if (pos == std::string_view::npos) break;
    const auto end = line.find_first_of(" \t\r", pos);
    out.push_back(line.substr(pos, end == std::string_view::npos ? end : end - pos));
    pos = end;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

// "YYYY-MM-DD" + "HH:MM:SS[.frac]" -> seconds since 1970-01-01 UTC.
std::optional<double> parse_datetime(std::string_view date, std::string_view time) {
  if (date.size() != 10 || date[4] != '-' || date[7] != '-') return std::nullopt;
  const auto y = parse_number<int>(date.substr(0, 4));
  const auto m = parse_number<unsigned>(date.substr(5, 2));
  const auto d = parse_number<unsigned>(date.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*m},
                                        std::chrono::day{*d}};
  if (!ymd.ok()) return std::nullopt;

  if (time.size() < 8 || time[2] != ':' || time[5] != ':') return std::nullopt;
  const auto hh = parse_number<int>(time.substr(0, 2));
  const auto mm = parse_number<int>(time.substr(3, 2));
  const auto ss = parse_number<double>(time.substr(6));
  if (!hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss < 0.0 || *ss >= 61.0) return std::nullopt;

  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<double>(days) * 86400.0 + *hh * 3600.0 + *mm * 60.0 + *ss;
}

std::optional<double> optional_field(const std::vector<std::string_view>& fields, std::size_t i,
                                     bool& bad) {
  if (i >= fields.size() || fields[i].empty()) return std::nullopt;
  auto v = parse_number<double>(fields[i]);
  if (!v || !std::isfinite(*v)) {
    bad = true;
    return std::nullopt;
  }
  return v;
}

}  // namespace

std::optional<double> RawRecord::channel(SensorKind kind) const {
  switch (kind) {
    case SensorKind::temperature: return temperature;
    case SensorKind::humidity: return humidity;
    case SensorKind::light: return light;
    case SensorKind::voltage: return voltage;
    case SensorKind::synthetic: break;
  }
  return std::nullopt;
}

std::optional<RawRecord> parse_record(std::string_view line) {
  const auto fields = split_fields(line);
  if (fields.size() < 5) return std::nullopt;

  RawRecord rec;
  const auto ts = parse_datetime(fields[0], fields[1]);
  const auto mote = parse_number<int>(fields[3]);
  if (!ts || !mote) return std::nullopt;
  rec.timestamp = *ts;
  rec.mote_id = *mote;

  bool bad = false;
  rec.temperature = optional_field(fields, 4, bad);
  rec.humidity = optional_field(fields, 5, bad);
  rec.light = optional_field(fields, 6, bad);
  rec.voltage = optional_field(fields, 7, bad);
  if (bad || fields.size() > 8) return std::nullopt;
  if (!rec.temperature && !rec.humidity && !rec.light && !rec.voltage) return std::nullopt;
  return rec;
}

ParseResult parse_log(std::istream& in, int mote_id, SensorKind channel) {
  if (channel == SensorKind::synthetic)
    throw UsageError("channel must be one of temperature, humidity, light, voltage");

  ParseResult result;
  std::size_t parsed = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto rec = parse_record(line);
    if (!rec) {
      ++result.skipped;
      continue;
    }
    ++parsed;
    if (rec->mote_id != mote_id) continue;
    if (const auto v = rec->channel(channel)) result.samples.push_back({rec->timestamp, *v});
  }

  if (parsed == 0)
    throw EmptyInputError("no parseable rows (" + std::to_string(result.skipped) + " skipped)");
  if (result.samples.empty())
    throw EmptyInputError("no " + to_string(channel) + " readings for mote " +
                          std::to_string(mote_id));

  // Stable sort keeps file order among equal timestamps; the last one wins.
  std::stable_sort(result.samples.begin(), result.samples.end(),
                   [](const Sample& a, const Sample& b) { return a.t < b.t; });
  std::vector<Sample> dedup;
  dedup.reserve(result.samples.size());
  for (const auto& s : result.samples) {
    if (!dedup.empty() && dedup.back().t == s.t) {
      dedup.back() = s;
    } else {
      dedup.push_back(s);
    }
  }
  result.samples = std::move(dedup);
  return result;
}

ParseResult parse_log(std::string_view text, int mote_id, SensorKind channel) {
  std::istringstream in{std::string(text)};
  return parse_log(in, mote_id, channel);
}

ResamplePolicy resample_policy_from_string(const std::string& name) {
  if (name == "locf") return ResamplePolicy::locf;
  if (name == "linear") return ResamplePolicy::linear;
  throw UsageError("unknown resample policy '" + name + "'");
}

UniformTrace resample(const std::vector<Sample>& samples, Timestamp start, std::int64_t interval_s,
                      std::size_t len, ResamplePolicy policy, std::string sensor_id,
                      SensorKind kind) {
  if (interval_s <= 0) throw std::invalid_argument("interval_s must be > 0");
  if (len < 1) throw std::invalid_argument("len must be >= 1");

  std::vector<Reading> readings(len, Reading::missing());
  auto it = samples.begin();  // first sample with t > grid time
  for (std::size_t i = 0; i < len; ++i) {
    const double t = static_cast<double>(start.seconds + static_cast<std::int64_t>(i) * interval_s);
    while (it != samples.end() && it->t <= t) ++it;
    if (it == samples.begin()) continue;  // before the first observation
    const Sample& lo = *(it - 1);
    if (policy == ResamplePolicy::locf || lo.t == t || it == samples.end()) {
      readings[i] = Reading::of(lo.value);
    } else {
      const Sample& hi = *it;
      const double w = (t - lo.t) / (hi.t - lo.t);
      readings[i] = Reading::of(lo.value + w * (hi.value - lo.value));
    }
  }
  return make_trace(std::move(sensor_id), kind, start, interval_s, std::move(readings));
}

}  // namespace twinfuse
