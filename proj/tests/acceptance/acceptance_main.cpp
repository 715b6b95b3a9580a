// Acceptance suite: one pass/fail line per criterion.
#include <iostream>

#include "CLI11.hpp"
#include "duality/lab/acceptance.hpp"

int main(int argc, char** argv) {
  using namespace duality;
  CLI::App app{"acceptance suite"};
  lab::AcceptanceOptions opt;
  app.add_option("--seed", opt.seed, "master seed");
  app.add_option("--scale", opt.scale, "sample size multiplier");
  app.add_option("--criteria", opt.only, "criterion numbers")->delimiter(',');
  app.add_flag("--update-golden", opt.update_golden, "rewrite golden files");
  CLI11_PARSE(app, argc, argv);

  opt.progress = &std::cout;
  std::cout << "acceptance: seed " << opt.seed << ", scale " << opt.scale << ", " << opt.workers << " workers"
            << std::endl;
  int failed = 0;
  for (const auto& r : lab::run_acceptance(opt)) failed += !r.passed;
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
