// duality-lab: run configured experiments, list them, plot results and run
// the acceptance suite. DUALITY_LAB_THREADS sets the worker count.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "duality/core/parallel.hpp"
#include "duality/lab/acceptance.hpp"
#include "duality/lab/plot.hpp"
#include "duality/lab/registry.hpp"

namespace fs = std::filesystem;
using namespace duality;

namespace {

int cmd_run(const std::string& path, const std::optional<std::uint64_t>& seed) {
  lab::ExperimentConfig c;
  try {
    c = lab::load_config(path);
  } catch (const lab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  if (seed) c.seed = *seed;
  return lab::run_to_directory(c, core::default_workers(), std::cerr);
}

int cmd_list(const std::string& schema) {
  if (schema.empty()) {
    lab::print_registry(std::cout);
    return 0;
  }
  try {
    std::cout << lab::schema_config(lab::find_experiment(schema));
  } catch (const lab::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw lab::PlotError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_plot(const std::string& result, const std::string& kind_name, const std::string& out_path) {
  try {
    const auto kind = lab::plot_kind_from_string(kind_name);
    fs::path in = result;
    const fs::path dir = fs::is_directory(in) ? in : in.parent_path();
    std::string svg;
    if (kind == lab::PlotKind::fan) {
      const fs::path csv = fs::is_directory(in) || in.filename() == "results.csv" ? dir / "particles.csv" : in;
      if (!fs::exists(csv)) throw lab::PlotError("fan plots need " + csv.string());
      svg = lab::fan_svg(slurp(csv), csv.parent_path().filename().string());
    } else {
      const fs::path csv = fs::is_directory(in) ? in / "results.csv" : in;
      std::vector<lab::ResultRow> rows;
      try {
        rows = lab::parse_csv(slurp(csv));
      } catch (const std::runtime_error& e) {
        throw lab::PlotError(e.what());
      }
      svg = lab::plot_svg(rows, kind, csv.parent_path().filename().string());
    }
    const fs::path out = out_path.empty() ? dir / "plots" / (kind_name + ".svg") : fs::path(out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream(out) << svg;
    std::cerr << "wrote " << out.string() << "\n";
    return 0;
  } catch (const lab::PlotError& e) {
    std::cerr << "plot error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_accept(std::uint64_t seed, double scale, const std::vector<int>& only, bool update_golden) {
  lab::AcceptanceOptions opt;
  opt.seed = seed;
  opt.scale = scale;
  opt.only = only;
  opt.update_golden = update_golden;
  opt.progress = &std::cout;
  for (int id : only) {
    if (id < 1 || id > lab::kCriteria) {
      std::cerr << "no criterion " << id << "\n";
      return 1;
    }
  }
  std::size_t failed = 0;
  for (const auto& r : lab::run_acceptance(opt)) failed += !r.passed;
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << "\n";
  return failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seeded Monte Carlo experiments for voter, symbiotic branching and annihilating particle dualities"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--seed", seed, "override the config seed");

  std::string schema;
  auto* list = app.add_subcommand("list", "list experiments and their parameters");
  list->add_option("--schema", schema, "print a config template for one experiment");

  std::string result, kind, out;
  auto* plot = app.add_subcommand("plot", "draw an SVG from a result directory or results.csv");
  plot->add_option("result", result, "result directory, results.csv or particles.csv")->required();
  plot->add_option("--kind", kind, "histogram, curve or fan")->required();
  plot->add_option("--out", out, "output file (default <dir>/plots/<kind>.svg)");

  std::uint64_t accept_seed = lab::kAcceptanceSeed;
  double scale = 1.0;
  std::vector<int> only;
  bool update_golden = false;
  auto* accept = app.add_subcommand("accept", "run the acceptance suite");
  accept->add_option("--seed", accept_seed, "master seed");
  accept->add_option("--scale", scale, "sample size multiplier");
  accept->add_option("--criteria", only, "criterion numbers to run")->delimiter(',');
  accept->add_flag("--update-golden", update_golden, "rewrite golden files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (*run) return cmd_run(config_path, seed);
  if (*list) return cmd_list(schema);
  if (*plot) return cmd_plot(result, kind, out);
  if (*accept) return cmd_accept(accept_seed, scale, only, update_golden);
  return 1;
}
