#include "duality/lab/result.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "duality/lab/config.hpp"
#include "json.hpp"

#ifndef DUALITY_LAB_VERSION
#define DUALITY_LAB_VERSION "unknown"
#endif

namespace duality::lab {

ResultRow ResultRow::exact(std::string metric, double value) { return {std::move(metric), value, 0.0, value, value, 0}; }

ResultRow ResultRow::of(std::string metric, const core::Estimate& e) {
  return {std::move(metric), e.value, e.stderr_, e.ci_low(), e.ci_high(), e.n};
}

bool RunResult::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

void RunResult::check_rows() {
  std::size_t bad = 0;
  std::string first;
  for (const auto& r : rows) {
    const bool ok = std::isfinite(r.value) && std::isfinite(r.stderr_) && r.stderr_ >= 0.0 && r.ci_low <= r.value &&
                    r.value <= r.ci_high;
    if (!ok && bad++ == 0) first = r.metric;
  }
  check("rows have ci_low <= value <= ci_high", bad == 0, bad ? std::to_string(bad) + " bad rows, first " + first : "");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, p);
}

std::string point_name(const std::string& series, double x) { return series + "@" + format_number(x); }

std::string to_csv(const std::vector<ResultRow>& rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += r.metric + ',' + format_number(r.value) + ',' + format_number(r.stderr_) + ',' + format_number(r.ci_low) +
           ',' + format_number(r.ci_high) + ',' + std::to_string(r.n_samples) + '\n';
  }
  return out;
}

namespace {

double parse_double(const std::string& s) {
  if (s == "nan") return NAN;
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw std::runtime_error("bad number '" + s + "' in results");
  return v;
}

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

}  // namespace

std::string to_json(const RunResult& r) {
  nlohmann::ordered_json j;
  j["experiment"] = r.experiment;
  j["config_hash"] = hash_hex(r.config_hash);
  j["version"] = r.version;
  j["wall_seconds"] = r.wall_seconds;
  j["seed"] = r.seed;
  j["replicates"] = r.replicates;
  j["params"] = r.params;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    j["rows"].push_back({{"metric_name", row.metric},
                         {"value", number(row.value)},
                         {"stderr", number(row.stderr_)},
                         {"ci_low", number(row.ci_low)},
                         {"ci_high", number(row.ci_high)},
                         {"n_samples", row.n_samples}});
  }
  j["checks"] = nlohmann::json::array();
  for (const auto& c : r.checks) j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["passed"] = r.passed();
  return j.dump(2) + "\n";
}

std::vector<ResultRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("not a results.csv file (bad header)");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw std::runtime_error("malformed results row: " + line);
    rows.push_back({f[0], parse_double(f[1]), parse_double(f[2]), parse_double(f[3]), parse_double(f[4]),
                    static_cast<std::size_t>(std::stoull(f[5]))});
  }
  return rows;
}

std::vector<ResultRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

void write_result_files(const RunResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << content;
  };
  put("results.csv", to_csv(r.rows));
  put("results.json", to_json(r));
  for (const auto& [name, content] : r.attachments) put(name, content);
}

std::string artifact_version() { return DUALITY_LAB_VERSION; }

}  // namespace duality::lab
