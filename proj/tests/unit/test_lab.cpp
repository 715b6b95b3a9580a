#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "duality/lab/acceptance.hpp"
#include "duality/lab/config.hpp"
#include "duality/lab/plot.hpp"
#include "duality/lab/registry.hpp"

using namespace duality;
using namespace duality::lab;
namespace fs = std::filesystem;

namespace {

std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("duality_lab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI, returning its exit status and combined output.
std::pair<int, std::string> cli(const std::string& args) {
  const std::string cmd = std::string(DUALITY_LAB_EXE) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf;
  while (std::fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config_string(
      "# voter run\n"
      "experiment = check_voter_duality\n"
      "seed = 42   # trailing comment\n"
      "replicates = 500\n"
      "output_dir = \"out dir\"\n"
      "\n"
      "[check_voter_duality]\n"
      "A = 2, 3\n"
      "t = \"1.5\"\n");
  CHECK(c.experiment == "check_voter_duality");
  CHECK(c.seed == 42);
  CHECK(c.replicates == 500);
  CHECK(c.output_dir == "out dir");
  CHECK(c.params.at("A") == "2, 3");
  CHECK(c.params.at("t") == "1.5");
  CHECK(parse_config_string(format_config(c)) == c);

  auto key_of = [](const std::string& text) {
    try {
      parse_config_string(text);
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<no error>");
  };
  CHECK(key_of("seed = 1\n") == "experiment");
  CHECK(key_of("experiment = x\ncolour = 2\n") == "colour");
  CHECK(key_of("experiment = x\nseed = -4\n") == "seed");
  CHECK(key_of("experiment = x\nseed = 1\nseed = 2\n") == "seed");
  CHECK(key_of("experiment = x\nreplicates = 0\n") == "replicates");
  CHECK(key_of("experiment = x\n[params]\nA = 1\nA = 2\n") == "A");
  CHECK_THROWS_AS(parse_config_string("experiment = x\n[other]\nA = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_string("experiment = x\njunk\n"), ConfigError);
}

TEST_CASE("config hash") {
  ExperimentConfig c;
  c.experiment = "check_voter_duality";
  c.params = {{"A", "2, 3"}, {"t", "1"}};
  const auto h = config_hash(c);
  CHECK(config_hash(c) == h);
  CHECK(hash_hex(h).size() == 16);
  auto d = c;
  d.output_dir = "elsewhere";
  CHECK(config_hash(d) == h);
  d = c;
  d.seed = 2;
  CHECK(config_hash(d) != h);
  d = c;
  d.replicates = 7;
  CHECK(config_hash(d) != h);
  d = c;
  d.params["t"] = "2";
  CHECK(config_hash(d) != h);
  d = c;
  d.experiment = "exact_oracle";
  CHECK(config_hash(d) != h);
  // Values are canonicalised before hashing, so "1" and "1.0" agree.
  ExperimentConfig a = c, b = c;
  a.params["t"] = "1.0";
  a.replicates = b.replicates = 50;
  CHECK(run_experiment(a, 1).config_hash == run_experiment(b, 1).config_hash);
}

TEST_CASE("registry") {
  std::set<std::string> names;
  for (const auto& e : registry()) {
    CHECK(names.insert(e.name).second);
    CHECK(static_cast<bool>(e.run));
  }
  const std::set<std::string> ops = {
      "sample_poisson_events", "gaussian_pair", "bridge_crossing_prob", "build_graphical", "evolve_voter",
      "trace_dual", "check_voter_duality", "interface_of", "evolve_interface_walks", "parity_duality_check",
      "exact_oracle", "clustering_curve", "step_sbm", "heaviside_init", "interface_region",
      "self_duality_functional", "check_self_duality", "martingale_residual", "separation_stat", "rescaling_check",
      "critical_curve", "moment_growth_experiment", "simulate_coloured_dual", "check_moment_duality",
      "evolve_colour_measure", "k_infinity_apply", "evolve_colour_measure_infinite", "check_coalescing_duality",
      "check_annihilating_moment_duality", "step_particles", "simulate_abm_colouring", "continuous_voter",
      "simulate_interface_sde", "entrance_law_experiment", "estimate_npoint_density", "entrance_consistency_check",
      "thinning_experiment", "acceptance_suite"};
  CHECK(names == ops);
  std::ostringstream os;
  print_registry(os);
  CHECK(os.str().find("check_voter_duality") != std::string::npos);
  CHECK_THROWS_AS(find_experiment("no_such_thing"), ConfigError);

  // Every schema template parses back and validates.
  for (const auto& e : registry()) {
    CAPTURE(e.name);
    const auto c = parse_config_string(schema_config(e));
    CHECK(c.experiment == e.name);
    const auto p = validate_params(e, c.params);
    CHECK(p.values().size() == e.params.size());
  }
}

TEST_CASE("parameter validation") {
  const auto& e = find_experiment("check_voter_duality");
  try {
    validate_params(e, {{"A", "2, 3"}});
    FAIL("missing t accepted");
  } catch (const ConfigError& err) {
    CHECK(err.key() == "t");
    CHECK(std::string(err.what()).find("'t'") != std::string::npos);
  }
  CHECK_THROWS_AS(validate_params(e, {{"A", "2, 3"}, {"t", "soon"}}), ConfigError);
  CHECK_THROWS_AS(validate_params(e, {{"A", "2, -3"}, {"t", "1"}}), ConfigError);
  CHECK_THROWS_AS(validate_params(e, {{"A", "2"}, {"t", "1"}, {"typo", "1"}}), ConfigError);
  const auto p = validate_params(e, {{"A", "[2,3]"}, {"t", "+1.50"}});
  CHECK(p.text("A") == "2, 3");
  CHECK(p.text("t") == "1.5");
  CHECK(p.count("L") == 8);
  const auto& m = find_experiment("step_particles");
  CHECK_THROWS_AS(validate_params(m, {{"mode", "sticky"}}), ConfigError);
  CHECK(validate_params(find_experiment("check_annihilating_moment_duality"), {{"x", "0"}, {"t", "1"}}).real("gamma") ==
        INFINITY);
}

TEST_CASE("result rows and files") {
  RunResult r;
  r.add("exact", 0.5);
  r.add(point_name("curve", 0.1), core::Estimate{1.0, 0.1, 10});
  CHECK(r.rows[0].ci_low == 0.5);
  CHECK(r.rows[1].metric == "curve@0.1");
  CHECK(r.rows[1].ci_low < 1.0);
  r.check_rows();
  CHECK(r.passed());
  CHECK(parse_csv(to_csv(r.rows)) == r.rows);
  r.rows.push_back({"broken", 1.0, 0.0, 2.0, 3.0, 1});
  r.check_rows();
  CHECK_FALSE(r.passed());
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1e-300) == "1e-300");
  CHECK_THROWS(parse_csv("a,b\n"));
}

TEST_CASE("determinism across runs and worker counts") {
  for (const std::string name : {"check_voter_duality", "step_sbm", "step_particles", "evolve_colour_measure"}) {
    CAPTURE(name);
    ExperimentConfig c = parse_config_string(schema_config(find_experiment(name)));
    c.replicates = 60;
    c.seed = 99;
    const auto a = to_csv(run_experiment(c, 1).rows);
    const auto b = to_csv(run_experiment(c, 1).rows);
    const auto w = to_csv(run_experiment(c, 4).rows);
    CHECK(a == b);
    CHECK(a == w);
    c.seed = 100;
    CHECK(to_csv(run_experiment(c, 4).rows) != a);
  }
}

TEST_CASE("every experiment runs at small scale") {
  for (const auto& e : registry()) {
    if (e.name == "acceptance_suite") continue;
    CAPTURE(e.name);
    ExperimentConfig c = parse_config_string(schema_config(e));
    c.replicates = 20;
    const auto r = run_experiment(c, 2);
    CHECK_FALSE(r.rows.empty());
    for (const auto& ch : r.checks) {
      CAPTURE(ch.name);
      CHECK(ch.passed);
    }
  }
}

TEST_CASE("run writes files and exit codes") {
  const auto dir = scratch("run");
  ExperimentConfig c = parse_config_string(schema_config(find_experiment("step_particles")));
  c.replicates = 30;
  c.output_dir = (dir / "a").string();
  std::ostringstream log;
  CHECK(run_to_directory(c, 2, log) == 0);
  CHECK(fs::exists(dir / "a" / "results.csv"));
  CHECK(fs::exists(dir / "a" / "results.json"));
  CHECK(fs::exists(dir / "a" / "particles.csv"));
  CHECK(fs::exists(dir / "a" / "plots" / "curve.svg"));
  CHECK(fs::exists(dir / "a" / "plots" / "fan.svg"));
  const auto json = slurp(dir / "a" / "results.json");
  CHECK(json.find("\"config_hash\"") != std::string::npos);
  CHECK(json.find("\"wall_seconds\"") != std::string::npos);
  CHECK(slurp(dir / "a" / "results.csv").find("wall") == std::string::npos);

  c.output_dir = (dir / "b").string();
  CHECK(run_to_directory(c, 1, log) == 0);
  CHECK(slurp(dir / "a" / "results.csv") == slurp(dir / "b" / "results.csv"));
  CHECK(slurp(dir / "a" / "particles.csv") == slurp(dir / "b" / "particles.csv"));

  c.params.erase("mode");
  c.params["dt"] = "fast";
  std::ostringstream err;
  CHECK(run_to_directory(c, 1, err) == 1);
  CHECK(err.str().find("'dt'") != std::string::npos);

  ExperimentConfig bad = c;
  bad.experiment = "nope";
  CHECK(run_to_directory(bad, 1, err) == 1);

  // A library precondition is reported as a configuration problem.
  ExperimentConfig pre = parse_config_string(schema_config(find_experiment("check_moment_duality")));
  pre.params["x"] = "1, 2, 3, 4, 5";
  pre.params["colours"] = "11111";
  pre.output_dir = (dir / "c").string();
  CHECK(run_to_directory(pre, 1, err) == 1);
}

TEST_CASE("plots") {
  std::vector<ResultRow> rows = {ResultRow::exact("scalar", 1.0)};
  CHECK_THROWS_AS(plot_svg({}, PlotKind::curve, "x"), PlotError);
  CHECK_THROWS_AS(plot_svg(rows, PlotKind::curve, "x"), PlotError);
  CHECK_THROWS_AS(plot_kind_from_string("pie"), PlotError);

  for (double x : {0.0, 1.0, 2.0}) rows.push_back(ResultRow::of(point_name("m", x), core::Estimate{x, 0.1, 100}));
  const auto curve = plot_svg(rows, PlotKind::curve, "t");
  CHECK(curve.rfind("<svg", 0) == 0);
  CHECK(count_of(curve, "class=\"ci-band\"") == 1);
  CHECK(count_of(curve, "class=\"series\"") == 1);
  std::vector<ResultRow> exact = {ResultRow::exact("e@0", 1.0), ResultRow::exact("e@1", 2.0)};
  CHECK(count_of(plot_svg(exact, PlotKind::curve, "t"), "ci-band") == 0);
  CHECK(count_of(plot_svg(rows, PlotKind::histogram, "t"), "class=\"bar\"") == 3);

  // Fan plot of 20 annihilating Brownian motions.
  ExperimentConfig c = parse_config_string(schema_config(find_experiment("step_particles")));
  c.replicates = 5;
  const auto r = run_experiment(c, 1);
  const auto& csv = r.attachments.at("particles.csv");
  const auto fan = fan_svg(csv, "fan");
  CHECK(count_of(fan, "class=\"particle\"") == 20);
  // Dead particles end at their last row.
  CHECK(csv.find(",0\n") != std::string::npos);
  CHECK_THROWS_AS(fan_svg("time,id,position,alive\n", "x"), PlotError);
}

TEST_CASE("acceptance plumbing") {
  CHECK(criterion_title(1) == "voter duality");
  CHECK(criterion_title(20) == "determinism");
  AcceptanceOptions opt;
  opt.scale = 0.01;
  opt.workers = 2;
  const auto a = run_criterion(11, opt);
  CHECK(a.passed);
  CHECK(format_line(a).rfind("[PASS] 11 K-infinity algebra", 0) == 0);
  opt.workers = 1;
  CHECK(to_csv(run_criterion(2, opt).rows) == to_csv(run_criterion(2, AcceptanceOptions{opt}).rows));
}

TEST_CASE("command line") {
  const auto dir = scratch("cli");
  auto [code, out] = cli("list");
  CHECK(code == 0);
  CHECK(out.find("check_voter_duality") != std::string::npos);

  std::tie(code, out) = cli("list --schema exact_oracle");
  CHECK(code == 0);
  CHECK(parse_config_string(out).experiment == "exact_oracle");

  {
    std::ofstream cfg(dir / "missing.cfg");
    cfg << "experiment = check_voter_duality\noutput_dir = " << (dir / "m").string() << "\n[params]\nA = 2, 3\n";
  }
  std::tie(code, out) = cli((dir / "missing.cfg").string());
  CHECK(code != 0);
  std::tie(code, out) = cli("run " + (dir / "missing.cfg").string());
  CHECK(code == 1);
  CHECK(out.find("'t'") != std::string::npos);

  {
    std::ofstream cfg(dir / "ok.cfg");
    cfg << "experiment = clustering_curve\nreplicates = 40\noutput_dir = " << (dir / "ok").string()
        << "\n[params]\nt_grid = 1, 2, 5\n";
  }
  std::tie(code, out) = cli("run " + (dir / "ok.cfg").string() + " --seed 5");
  CHECK(code == 0);
  const auto first = slurp(dir / "ok" / "results.csv");
  std::tie(code, out) = cli("run " + (dir / "ok.cfg").string() + " --seed 5");
  CHECK(slurp(dir / "ok" / "results.csv") == first);

  std::tie(code, out) = cli("plot " + (dir / "ok").string() + " --kind curve");
  CHECK(code == 0);
  CHECK(fs::exists(dir / "ok" / "plots" / "curve.svg"));
  std::tie(code, out) = cli("plot " + (dir / "ok").string() + " --kind fan");
  CHECK(code == 1);

  {
    std::ofstream empty(dir / "empty.csv");
    empty << kCsvHeader << "\n";
  }
  std::tie(code, out) = cli("plot " + (dir / "empty.csv").string() + " --kind histogram");
  CHECK(code == 1);
}
