#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "duality/core/parallel.hpp"
#include "duality/lab/registry.hpp"
#include "duality/lab/result.hpp"

namespace duality::lab {

inline constexpr int kCriteria = 20;
inline constexpr std::uint64_t kAcceptanceSeed = 20240611;

struct AcceptanceOptions {
  std::uint64_t seed = kAcceptanceSeed;
  int workers = core::default_workers();
  // Multiplies every replicate count (at least min(N, 50) are kept). The
  // tolerances are calibrated for scale 1.
  double scale = 1.0;
  std::vector<int> only;  // empty: all criteria
  std::filesystem::path golden_dir;
  bool update_golden = false;
  std::ostream* progress = nullptr;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  std::vector<ResultRow> rows;
  double seconds = 0.0;
};

std::string criterion_title(int id);
CriterionResult run_criterion(int id, const AcceptanceOptions& opt);
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt);
// "[PASS] 01 title: detail"
std::string format_line(const CriterionResult& r, bool with_time = true);

// Golden directory compiled in from the source tree.
std::filesystem::path default_golden_dir();

// Registry entry "acceptance_suite".
Experiment acceptance_experiment();

}  // namespace duality::lab
