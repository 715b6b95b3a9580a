#include <cmath>
#include <vector>

#include "doctest.h"
#include "duality/core/error.hpp"
#include "duality/voter/voter.hpp"

using namespace duality;
using namespace duality::voter;
using core::Rng;

namespace {

// Frozen from an independent dense matrix-exponential computation.
constexpr double kGoldenL6 = 0.20604966460848945;  // (1,1,1,0,0,0), E[eta(0) eta(3)], t = 1
constexpr double kGoldenAlt = 0.34574958742517614;  // alternating L = 8, A = {2,3}, t = 1
const double kGoldenHeaviside[8] = {0.7318729101823792,  0.9315287423901693,  0.9315287423901691,
                                    0.7318729101823793,  0.26812708981762057, 0.06847125760983079,
                                    0.06847125760983082, 0.2681270898176207};

core::McConfig mc(std::uint64_t seed, std::size_t n) {
  core::McConfig c;
  c.seed = seed;
  c.replicates = n;
  return c;
}

}  // namespace

TEST_CASE("graphical construction") {
  Rng rng(1, 0);
  CHECK(build_graphical(10, 0.0, rng).arrows.empty());
  CHECK_THROWS_AS(build_graphical(2, 1.0, rng), ParameterError);

  std::vector<double> counts;
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto log = build_graphical(10, 10.0, Rng(2, i));
    counts.push_back(double(log.arrows.size()));
    for (std::size_t k = 0; k < log.arrows.size(); ++k) {
      const auto& a = log.arrows[k];
      const std::size_t d = (a.to + 10 - a.from) % 10;
      REQUIRE((d == 1 || d == 9));
      if (k > 0) REQUIRE(log.arrows[k - 1].time <= a.time);
    }
  }
  const auto e = core::estimate_mean(counts);
  CHECK(std::abs(e.value - 100.0) < 3.0 * std::sqrt(100.0 / 1000.0));

  const auto a = build_graphical(6, 5.0, Rng(3, 3));
  const auto b = build_graphical(6, 5.0, Rng(3, 3));
  REQUIRE(a.arrows.size() == b.arrows.size());
  for (std::size_t k = 0; k < a.arrows.size(); ++k) CHECK(a.arrows[k].time == b.arrows[k].time);
}

TEST_CASE("voter evolution") {
  const auto log = build_graphical(8, 5.0, Rng(4, 0));
  CHECK(evolve_voter(SpinField::constant(8, 1), log, 5.0) == SpinField::constant(8, 1));
  CHECK(evolve_voter(SpinField::constant(8, 0), log, 3.0) == SpinField::constant(8, 0));
  CHECK(evolve_voter(SpinField::heaviside(8), log, 0.0) == SpinField::heaviside(8));
  CHECK_THROWS_AS(evolve_voter(SpinField::heaviside(8), log, 5.5), RangeError);
  CHECK_THROWS_AS(SpinField({0, 2, 1}), ParameterError);
}

TEST_CASE("exact oracle") {
  const SpinField h6({1, 1, 1, 0, 0, 0});
  CHECK(exact_oracle(h6, {0, 3}, 1.0) == doctest::Approx(kGoldenL6).epsilon(1e-9));
  CHECK(exact_oracle(h6, {0, 1}, 0.0) == 1.0);
  CHECK(exact_oracle(h6, {0, 3}, 0.0) == 0.0);
  CHECK(exact_oracle(SpinField::constant(7, 1), {0, 2, 5}, 2.3) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(exact_oracle(SpinField::alternating(8), {2, 3}, 1.0) == doctest::Approx(kGoldenAlt).epsilon(1e-9));
  for (std::size_t x = 0; x < 8; ++x)
    CHECK(exact_oracle(SpinField::heaviside(8), {x}, 1.0) == doctest::Approx(kGoldenHeaviside[x]).epsilon(1e-9));
  CHECK_THROWS_AS(exact_oracle(SpinField::constant(13, 1), {0}, 1.0), SizeError);
}

TEST_CASE("voter one-point law against oracle") {
  const auto eta0 = SpinField::heaviside(8);
  constexpr std::size_t N = 100000;
  std::vector<double> ones(8, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    const auto eta = evolve_voter(eta0, build_graphical(8, 1.0, Rng(5, i)), 1.0);
    for (std::size_t x = 0; x < 8; ++x) ones[x] += eta[x];
  }
  for (std::size_t x = 0; x < 8; ++x) {
    const double p = ones[x] / N, q = kGoldenHeaviside[x];
    CHECK(std::abs(p - q) < 4.0 * std::sqrt(q * (1 - q) / N));
    CHECK(std::abs(p - q) < 0.01);
  }
}

TEST_CASE("dual tracing") {
  ArrowLog empty{8, 1.0, {}};
  CHECK(trace_dual(empty, 1.0, {5, 1}) == std::vector<std::size_t>{1, 5});
  CHECK_THROWS_AS(trace_dual(empty, 1.0, {}), ParameterError);

  SUBCASE("pathwise duality on every log") {
    const auto eta0 = SpinField::alternating(8);
    std::vector<std::size_t> all = {0, 1, 2, 3, 4, 5, 6, 7};
    for (std::size_t i = 0; i < 1000; ++i) {
      const auto log = build_graphical(8, 2.0, Rng(6, i));
      const auto eta = evolve_voter(eta0, log, 1.3);
      const auto dual = trace_dual_paths(log, 1.3, all);
      for (std::size_t x = 0; x < 8; ++x) REQUIRE(eta[x] == eta0[dual[x]]);
    }
  }

  SUBCASE("single walker is a rate-1 random walk") {
    constexpr std::size_t L = 8, N = 20000;
    const double t = 1.5;
    std::vector<double> probs(L, 0.0);
    for (int k = -60; k <= 60; ++k)
      probs[static_cast<std::size_t>(((k % int(L)) + int(L)) % int(L))] +=
          std::exp(-t) * std::cyl_bessel_i(double(std::abs(k)), t);
    std::vector<std::size_t> hist(L, 0), hist_direct(L, 0);
    for (std::size_t i = 0; i < N; ++i) {
      ++hist[trace_dual(build_graphical(L, t, Rng(7, i)), t, {0})[0]];
      Rng w(8, i);
      ++hist_direct[simulate_coalescing_walks(L, {0}, t, w)[0]];
    }
    CHECK(core::chi2_goodness_of_fit(hist, probs).p_value > 0.01);
    CHECK(core::chi2_goodness_of_fit(hist_direct, probs).p_value > 0.01);
  }
}

TEST_CASE("voter duality two-sided") {
  SUBCASE("constant one") {
    const auto r = check_voter_duality(SpinField::constant(8, 1), {1, 4}, 1.0, mc(9, 200));
    CHECK(r.lhs.value == 1.0);
    CHECK(r.rhs.value == 1.0);
  }
  SUBCASE("single site") {
    const auto r = check_voter_duality(SpinField::heaviside(8), {3}, 1.0, mc(10, 20000));
    CHECK(core::z_distance(r.lhs, kGoldenHeaviside[3]) < 3.0);
    CHECK(core::z_distance(r.rhs, kGoldenHeaviside[3]) < 3.0);
  }
  SUBCASE("alternating pair") {
    const auto r = check_voter_duality(SpinField::alternating(8), {2, 3}, 1.0, mc(11, 20000));
    CHECK(core::cis_overlap(r.lhs, r.rhs));
    CHECK(core::z_distance(r.lhs, kGoldenAlt) < 3.0);
    CHECK(core::z_distance(r.rhs, kGoldenAlt) < 3.0);
  }
}

TEST_CASE("interfaces") {
  CHECK(interface_of(SpinField::constant(8, 0)).empty());
  CHECK(interface_of(SpinField::heaviside(8)) == InterfaceSet{3, 7});
  CHECK(count_in_interval({3, 7}, 8, 2, 5) == 1);
  CHECK(count_in_interval({3, 7}, 8, 6, 2) == 1);
  CHECK(count_in_interval({3, 7}, 8, 0, 7) == 1);

  SUBCASE("pathwise interface coupling") {
    const auto eta0 = SpinField::heaviside(8);
    const auto I0 = interface_of(eta0);
    Rng cfg(12, 0);
    for (std::size_t i = 0; i < 1000; ++i) {
      const auto log = build_graphical(8, 2.0, Rng(12, i));
      SpinField e(std::vector<std::uint8_t>(8));
      for (auto& s : e.spins) s = static_cast<std::uint8_t>(cfg.below(2));
      REQUIRE(evolve_interface_walks(interface_of(e), 8, log, 2.0) == interface_of(evolve_voter(e, log, 2.0)));
      REQUIRE(evolve_interface_walks(I0, 8, log, 2.0) == interface_of(evolve_voter(eta0, log, 2.0)));
    }
  }

  SUBCASE("empty and monotone") {
    const auto log = build_graphical(10, 50.0, Rng(13, 0));
    CHECK(evolve_interface_walks({}, 10, log, 50.0).empty());
    InterfaceSet I0 = {4, 5};
    std::size_t prev = 2;
    for (double t = 0.0; t <= 50.0; t += 0.5) {
      const auto I = evolve_interface_walks(I0, 10, log, t);
      CHECK(I.size() % 2 == 0);
      CHECK(I.size() <= prev);
      prev = I.size();
    }
    CHECK(prev == 0);
    Rng w(13, 1);
    CHECK(simulate_annihilating_walks(10, I0, 200.0, w).empty());
  }
}

TEST_CASE("parity duality") {
  SUBCASE("consensus") {
    const auto r = parity_duality_check(SpinField::constant(8, 1), 1, 5, 1.0, mc(14, 100));
    CHECK(r.lhs.value == 1.0);
    CHECK(r.rhs.value == 1.0);
  }
  SUBCASE("adjacent sites, single block") {
    const auto eta0 = SpinField::heaviside(8);
    const double exact = exact_agreement(eta0, 3, 4, 1.0);
    const auto r = parity_duality_check(eta0, 3, 4, 1.0, mc(15, 20000));
    CHECK(core::cis_overlap(r.lhs, r.rhs));
    CHECK(core::z_distance(r.lhs, exact) < 3.0);
    CHECK(core::z_distance(r.rhs, exact) < 3.0);
  }
  CHECK_THROWS_AS(parity_duality_check(SpinField::heaviside(8), 4, 3, 1.0, mc(1, 1)), ParameterError);
}

TEST_CASE("clustering") {
  CHECK(meeting_probability(16, 4, 0.0) == 0.0);
  CHECK(meeting_probability(16, 0, 0.3) == 1.0);
  CHECK(meeting_probability(16, 4, 2000.0) == doctest::Approx(1.0).epsilon(1e-9));
  // Short times: P(meet by t) from distance 1 is about t (first jump at rate 2, half go inward).
  CHECK(meeting_probability(16, 1, 1e-4) == doctest::Approx(1e-4).epsilon(1e-3));

  const auto eta0 = SpinField::heaviside(16);
  std::vector<double> grid = {0.0, 5.0, 20.0, 50.0, 100.0, 200.0};
  const auto same = clustering_curve(eta0, 3, 3, grid, mc(16, 200));
  for (const auto& e : same.agree) CHECK(e.value == 1.0);

  const auto c = clustering_curve(eta0, 6, 10, grid, mc(17, 3000));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CHECK(c.agree[g].value + 3.0 * c.agree[g].stderr_ >= c.lower_bound[g]);
    if (g > 0) {
      const double se = std::hypot(c.agree[g].stderr_, c.agree[g - 1].stderr_);
      CHECK(c.agree[g].value >= c.agree[g - 1].value - 3.0 * se);
    }
  }
  CHECK(c.agree.back().value >= 0.95);
}
