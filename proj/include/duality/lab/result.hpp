#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "duality/core/stats.hpp"

namespace duality::lab {

// One line of results.csv. Exact quantities have stderr 0, a degenerate CI
// and n_samples 0. Metrics named "series@x" are points of a curve.
struct ResultRow {
  std::string metric;
  double value = 0.0;
  double stderr_ = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_samples = 0;

  static ResultRow exact(std::string metric, double value);
  static ResultRow of(std::string metric, const core::Estimate& e);
  bool operator==(const ResultRow&) const = default;
};

// A declared invariant of the experiment; a failed one makes `run` exit 2.
struct Check {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct RunResult {
  std::string experiment;
  std::vector<ResultRow> rows;
  std::vector<Check> checks;
  // Extra files written next to results.csv (e.g. particles.csv).
  std::map<std::string, std::string> attachments;

  // Metadata; only the JSON file carries it.
  std::uint64_t config_hash = 0;
  std::string version;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::size_t replicates = 0;
  std::map<std::string, std::string> params;

  void add(std::string metric, double exact_value) { rows.push_back(ResultRow::exact(std::move(metric), exact_value)); }
  void add(std::string metric, const core::Estimate& e) { rows.push_back(ResultRow::of(std::move(metric), e)); }
  void check(std::string name, bool passed, std::string detail = {}) {
    checks.push_back({std::move(name), passed, std::move(detail)});
  }
  bool passed() const;
  // Adds checks that every row is finite with ci_low <= value <= ci_high.
  void check_rows();
};

// Shortest round-trip decimal form; locale independent.
std::string format_number(double v);
// "series@x" metric name.
std::string point_name(const std::string& series, double x);

inline constexpr const char* kCsvHeader = "metric_name,value,stderr,ci_low,ci_high,n_samples";

std::string to_csv(const std::vector<ResultRow>& rows);
std::string to_json(const RunResult& r);
std::vector<ResultRow> parse_csv(const std::string& text);
std::vector<ResultRow> read_csv(const std::filesystem::path& path);

// Writes results.csv, results.json and the attachments into dir.
void write_result_files(const RunResult& r, const std::filesystem::path& dir);

// Artifact version baked in at configure time (git describe).
std::string artifact_version();

}  // namespace duality::lab
