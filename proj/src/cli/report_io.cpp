#include "twinfuse/cli/report_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace twinfuse::cli {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf.data(), ptr);
}

std::string trace_jsonl(const ScenarioReport& report) {
  std::string out;
  for (const auto& c : report.cycles) {
    json rec;
    rec["cycle_index"] = c.cycle_index;
    rec["start_index"] = c.start_index;
    json ts = json::array();
    for (const auto t : c.timestamps) ts.push_back(t.seconds);
    rec["timestamps"] = std::move(ts);
    json statuses = json::array();
    json sources = json::array();
    json rows = json::array();
    for (std::size_t s = 0; s < 3; ++s) {
      statuses.push_back(to_string(c.statuses[s]));
      sources.push_back(to_string(c.sources[s]));
      json row = json::array();
      if (c.sources[s] != RowSource::excluded) {
        for (const auto& r : c.rows[s]) row.push_back(r.present ? json(r.value) : json(nullptr));
      }
      rows.push_back(std::move(row));
    }
    rec["statuses"] = std::move(statuses);
    rec["sources"] = std::move(sources);
    rec["participation"] = c.participation;
    rec["rows"] = std::move(rows);
    rec["flags"] = c.flags.flags;
    rec["elementwise"] = c.elementwise;
    rec["composite"] = c.composite;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::string metrics_csv(const std::vector<Metric>& metrics) {
  std::ostringstream os;
  os << "metric,sensor,value\n";
  for (const auto& m : metrics) {
    os << m.name << ',' << (m.sensor ? std::to_string(*m.sensor) : std::string("all")) << ','
       << format_number(m.value) << '\n';
  }
  return os.str();
}

std::string transitions_csv(const ScenarioReport& report) {
  std::ostringstream os;
  os << "cycle,sensor,from,to,reason\n";
  for (const auto& t : report.transitions) {
    os << t.cycle << ',' << t.sensor << ',' << to_string(t.from) << ',' << to_string(t.to) << ','
       << t.reason << '\n';
  }
  return os.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << contents;
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace twinfuse::cli
