#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "duality/lab/plot.hpp"
#include "duality/lab/registry.hpp"

namespace duality::lab {

int run_to_directory(const ExperimentConfig& c, int workers, std::ostream& log) {
  RunResult r;
  try {
    r = run_experiment(c, workers);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::logic_error& e) {
    // ParameterError, PreconditionError, DomainError, SizeError, RangeError
    log << "invalid parameters: " << e.what() << "\n";
    return 1;
  }

  const std::filesystem::path dir = c.output_dir;
  write_result_files(r, dir);
  const auto title = r.experiment + " (seed " + std::to_string(r.seed) + ")";
  try {
    const std::string svg = plot_svg(r.rows, PlotKind::curve, title);
    std::filesystem::create_directories(dir / "plots");
    std::ofstream(dir / "plots" / "curve.svg") << svg;
  } catch (const PlotError&) {
    // no curve-shaped rows
  }
  if (const auto it = r.attachments.find("particles.csv"); it != r.attachments.end()) {
    std::filesystem::create_directories(dir / "plots");
    std::ofstream(dir / "plots" / "fan.svg") << fan_svg(it->second, title);
  }

  log << r.experiment << ": " << r.rows.size() << " rows written to " << dir.string() << " (" << r.wall_seconds
      << " s)\n";
  for (const auto& ch : r.checks) {
    if (!ch.passed) log << "invariant failed: " << ch.name << (ch.detail.empty() ? "" : " (" + ch.detail + ")") << "\n";
  }
  return r.passed() ? 0 : 2;
}

}  // namespace duality::lab
