#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "duality/core/error.hpp"
#include "duality/interface/interface.hpp"

using namespace duality;
using namespace duality::interface;
using core::Rng;

namespace {

core::McConfig mc(std::uint64_t seed, std::size_t n) {
  core::McConfig c;
  c.seed = seed;
  c.replicates = n;
  return c;
}

double normal_cdf(double x, double t) { return 0.5 * std::erfc(-x / std::sqrt(2.0 * t)); }

double binomial_z(double hits, double n, double p) { return std::abs(hits / n - p) / std::sqrt(p * (1 - p) / n); }

}  // namespace

TEST_CASE("particle system basics") {
  auto s = ParticleSystem1D::make(Domain::line(), Mode::coalescing, {0.5, -1.0, 0.5, 2.0});
  CHECK(s.x == std::vector<double>{-1.0, 0.5, 2.0});
  CHECK(s.family_of(4)[2] == s.family_of(4)[0]);
  auto a = ParticleSystem1D::make(Domain::torus(1.0), Mode::annihilating, {0.2, 0.2, 0.2, 1.7});
  CHECK(a.count() == 2);
  CHECK(a.x[1] == doctest::Approx(0.7));
  CHECK_THROWS_AS(ParticleSystem1D::make(Domain::line(), Mode::delayed_annihilating, {0.0}, 0.0), ParameterError);
  CHECK(pair_survival(0.0, 1.0) == 0.0);
  CHECK(pair_survival(1.0, 0.0) == 1.0);

  SUBCASE("single particle is Brownian") {
    constexpr std::size_t N = 10000;
    double m2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      Rng r(1, i);
      auto p = ParticleSystem1D::make(Domain::line(), Mode::annihilating, {0.0});
      run_particles(p, 0.01, 1.0, r);
      m2 += p.x[0] * p.x[0];
    }
    CHECK(std::abs(m2 / N - 1.0) < 3.0 * std::sqrt(2.0 / N));
  }

  SUBCASE("invariants along paths") {
    for (auto mode : {Mode::coalescing, Mode::annihilating, Mode::delayed_coalescing, Mode::delayed_annihilating}) {
      for (std::size_t i = 0; i < 50; ++i) {
        Rng r(2, i);
        std::vector<double> start;
        for (int k = 0; k < 11; ++k) start.push_back(0.09 * k);
        auto p = ParticleSystem1D::make(Domain::torus(1.0), mode, start, 50.0, 0.01);
        std::size_t prev = p.count();
        for (int k = 0; k < 100; ++k) {
          step_particles(p, 1e-3, r);
          p.validate();
          REQUIRE(p.count() <= prev);
          if (mode == Mode::annihilating || mode == Mode::delayed_annihilating) REQUIRE(p.count() % 2 == 1);
          prev = p.count();
        }
      }
    }
  }
}

TEST_CASE("two-particle closed forms") {
  constexpr std::size_t N = 10000;
  const double d = 0.5, t = 1.0;
  for (double dt : {1e-2, 1e-3}) {
    double alive = 0.0, merged = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      Rng r(3, i);
      auto a = ParticleSystem1D::make(Domain::line(), Mode::annihilating, {0.0, d});
      run_particles(a, dt, t, r);
      alive += a.count() == 2;
      Rng q(4, i);
      auto c = ParticleSystem1D::make(Domain::line(), Mode::coalescing, {0.0, d});
      run_particles(c, dt, t, q);
      merged += c.count() == 1;
    }
    const double p = pair_survival(d, t);
    CHECK(binomial_z(alive, N, p) < 3.0);
    CHECK(binomial_z(merged, N, 1.0 - p) < 3.0);
  }

  SUBCASE("delayed annihilation approaches the instantaneous one") {
    double slow = 0.0, fast = 0.0;
    for (std::size_t i = 0; i < 4000; ++i) {
      Rng r(5, i), q(5, i);
      auto a = ParticleSystem1D::make(Domain::line(), Mode::delayed_annihilating, {0.0, d}, 1.0, 0.01);
      auto b = ParticleSystem1D::make(Domain::line(), Mode::delayed_annihilating, {0.0, d}, 1000.0, 0.01);
      run_particles(a, 1e-3, t, r);
      run_particles(b, 1e-3, t, q);
      slow += a.count() == 2;
      fast += b.count() == 2;
    }
    CHECK(slow / 4000 > pair_survival(d, t) + 0.1);
    CHECK(std::abs(fast / 4000 - pair_survival(d, t)) < 0.05);
  }
}

TEST_CASE("profiles") {
  const auto step = PiecewiseConstantProfile::step(0.0, 1.0, 0.0);
  CHECK(step(-0.1) == 1.0);
  CHECK(step(0.1) == 0.0);
  CHECK(step.heat(-0.3, 0.0) == 1.0);
  CHECK(std::abs(step.heat(0.4, 0.7) - normal_cdf(-0.4, 0.7)) < 1e-12);
  PiecewiseConstantProfile w{{-1.0, 0.5}, {2.0, 0.5, 3.0}};
  const double h = 1e-5;
  CHECK(std::abs(w.heat_dx(0.2, 0.3) - (w.heat(0.2 + h, 0.3) - w.heat(0.2 - h, 0.3)) / (2 * h)) < 1e-6);
  CHECK(w.heat(1e6, 1.0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(PiecewiseConstantProfile({{1.0, 0.0}, {1, 2, 3}}).validate(), ParameterError);
}

TEST_CASE("annihilating colouring") {
  const auto u0 = PiecewiseConstantProfile::step(0.0, 1.0, 0.0);
  const auto v0 = PiecewiseConstantProfile::step(0.0, 0.0, 1.0);
  const std::vector<double> grid = {-2.0, -0.5, 0.0, 0.5, 2.0};

  SUBCASE("single interface is a Brownian motion") {
    std::vector<double> pos;
    for (std::size_t i = 0; i < 2000; ++i) {
      Rng r(6, i);
      const auto c = simulate_abm_colouring(u0, v0, 1.0, 1e-3, grid, r);
      REQUIRE(c.state.interfaces.count() == 1);
      pos.push_back(c.state.interfaces.x[0]);
      for (std::size_t k = 0; k < grid.size(); ++k) {
        REQUIRE(c.u_hat[k] * c.v_hat[k] == 0.0);
        REQUIRE(std::abs(c.u_hat[k] + c.v_hat[k] - 1.0) < 1e-12);
      }
    }
    CHECK(core::ks_one_sample(pos, [](double x) { return normal_cdf(x, 1.0); }).p_value > 0.01);
  }
  SUBCASE("no interfaces") {
    Rng r(7, 0);
    const auto w = PiecewiseConstantProfile::step(0.0, 1.0, 3.0);
    const auto c = simulate_abm_colouring(w, PiecewiseConstantProfile::constant(0.0), 0.5, 1e-3, grid, r);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(c.u_hat[k] == doctest::Approx(w.heat(grid[k], 0.5)).epsilon(1e-12));
      CHECK(c.v_hat[k] == 0.0);
    }
  }
  SUBCASE("two interfaces survive with the pair probability") {
    const PiecewiseConstantProfile a{{0.0, 0.6}, {1.0, 0.0, 1.0}}, b{{0.0, 0.6}, {0.0, 1.0, 0.0}};
    constexpr std::size_t N = 5000;
    double both = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      Rng r(8, i);
      both += simulate_abm_colouring(a, b, 0.5, 1e-3, grid, r).state.interfaces.count() == 2;
    }
    CHECK(binomial_z(both, N, pair_survival(0.6, 0.5)) < 3.0);
  }
  Rng r(9, 0);
  CHECK_THROWS_AS(simulate_abm_colouring(u0, u0, 1.0, 1e-3, grid, r), PreconditionError);
  CHECK_THROWS_AS(simulate_abm_colouring(u0, PiecewiseConstantProfile::step(0.5, 0.0, 1.0), 1.0, 1e-3, grid, r),
                  PreconditionError);
}

TEST_CASE("interface sde") {
  const auto grid = sde_time_grid(1.0, 0.01);
  CHECK(grid.front() == 0.0);
  CHECK(grid[1] == 1e-4);
  CHECK(grid.back() == 1.0);

  SUBCASE("flat w is Brownian") {
    std::vector<double> end;
    for (std::size_t i = 0; i < 2000; ++i) {
      Rng r(10, i);
      end.push_back(simulate_interface_sde(0.0, PiecewiseConstantProfile::constant(2.0), 0.01, 1.0, r).back());
    }
    CHECK(core::ks_one_sample(end, [](double x) { return normal_cdf(x, 1.0); }).p_value > 0.01);
  }
  SUBCASE("symmetric w gives a symmetric law") {
    const PiecewiseConstantProfile w{{-0.5, 0.5}, {3.0, 1.0, 3.0}};
    std::vector<double> end;
    double m3 = 0.0, m2 = 0.0;
    constexpr std::size_t N = 4000;
    for (std::size_t i = 0; i < N; ++i) {
      Rng r(11, i);
      const double x = simulate_interface_sde(0.0, w, 0.01, 1.0, r).back();
      m2 += x * x;
      m3 += x * x * x;
    }
    const double skew = (m3 / N) / std::pow(m2 / N, 1.5);
    CHECK(std::abs(skew) < 3.0 * std::sqrt(15.0 / N));
  }
  SUBCASE("marginal law is the heat ratio") {
    const auto u0 = PiecewiseConstantProfile::step(0.0, 1.0, 0.0);
    const auto w0 = PiecewiseConstantProfile::step(0.0, 1.0, 2.0);
    std::vector<double> end;
    for (std::size_t i = 0; i < 5000; ++i) {
      Rng r(12, i);
      end.push_back(simulate_interface_sde(0.0, w0, 0.01, 1.0, r).back());
    }
    const auto cdf = [&](double x) { return 1.0 - u0.heat(x, 1.0) / w0.heat(x, 1.0); };
    CHECK(core::ks_one_sample(end, cdf).p_value > 0.01);
  }
  Rng r(13, 0);
  CHECK_THROWS_AS(simulate_interface_sde(0.0, PiecewiseConstantProfile::step(0.0, 0.0, 1.0), 0.01, 1.0, r),
                  PreconditionError);
}

TEST_CASE("continuous voter") {
  Rng r(14, 0);
  const auto all = continuous_voter([](double) { return 1.0; }, {0.0, 0.3, 2.0}, 1.0, 1e-3, r);
  CHECK(all == std::vector<std::uint8_t>{1, 1, 1});
  const auto twice = continuous_voter([](double) { return 0.5; }, {0.7, 0.7}, 1.0, 1e-3, r);
  CHECK(twice[0] == twice[1]);

  constexpr std::size_t N = 20000;
  const auto u0 = PiecewiseConstantProfile::step(0.0, 1.0, 0.0);
  double one = 0.0, pair = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    Rng q(15, i);
    one += continuous_voter(u0, {0.3}, 0.5, 1e-2, q)[0];
    Rng s(16, i);
    const auto t = continuous_voter([](double) { return 0.5; }, {0.0, 0.4}, 0.5, 1e-2, s);
    pair += t[0] * t[1];
  }
  CHECK(binomial_z(one, N, u0.heat(0.3, 0.5)) < 3.0);
  const double coal = 1.0 - pair_survival(0.4, 0.5);
  CHECK(binomial_z(pair, N, 0.5 * coal + 0.25 * (1.0 - coal)) < 3.0);
}

TEST_CASE("entrance laws") {
  Rng r(17, 0);
  CHECK(entrance_positions(EntranceInit::lattice, 10, 1.0, r).size() == 10);
  CHECK(entrance_positions(EntranceInit::paired_square, 10, 1.0, r)[1] == doctest::Approx(0.01));
  bool dropped = false;
  const auto odd = entrance_positions(EntranceInit::lattice, 7, 1.0, r, &dropped);
  CHECK(dropped);
  CHECK(odd.size() == 6);
  CHECK(entrance_init_from_string("paired_quarter") == EntranceInit::paired_quarter);
  CHECK_THROWS_AS(entrance_init_from_string("grid"), ParameterError);

  const auto rows = entrance_law_experiment(EntranceInit::paired_square, 1.0, {10, 40}, {0.05, 0.1}, 1e-3, mc(18, 400));
  REQUIRE(rows.size() == 4);
  CHECK(rows[1].count.value < rows[0].count.value + 1e-12);
  CHECK(rows[3].count.value < rows[1].count.value);
  for (const auto& row : rows)
    for (auto c : row.counts) CHECK(c % 2 == 0);

  SUBCASE("split runs match direct runs") {
    const auto c = entrance_consistency_check(EntranceInit::lattice, 40, 1.0, 0.05, 0.1, 1e-3, mc(19, 2000));
    CHECK(c.counts_chi2.p_value > 0.01);
    CHECK(c.gaps_ks.p_value > 0.01);
    CHECK(c.shift < c.ci_width);
  }
}

TEST_CASE("densities and thinning") {
  const auto at0 = estimate_npoint_density(EntranceInit::lattice, 10, 1.0, 0.0, {0.3}, 0.01, 1e-3, mc(20, 50));
  CHECK(at0.atomic);
  CHECK(at0.coarse.density.value == doctest::Approx(1.0 / 0.02));

  const auto one = estimate_npoint_density(EntranceInit::lattice, 40, 1.0, 0.1, {0.5}, 0.004, 1e-3, mc(21, 5000));
  const auto two = estimate_npoint_density(EntranceInit::lattice, 40, 1.0, 0.1, {0.5, 0.51}, 0.004, 1e-3, mc(21, 5000));
  CHECK_THROWS_AS(estimate_npoint_density(EntranceInit::lattice, 40, 1.0, 0.1, {0.5, 0.51}, 0.006, 1e-3, mc(1, 1)),
                  ParameterError);
  CHECK_FALSE(one.atomic);
  CHECK(two.coarse.density.value < 0.5 * one.coarse.density.value * one.coarse.density.value);

  const auto th = thinning_experiment(EntranceInit::lattice, 40, 1.0, {0.0, 0.1}, 1e-3, mc(22, 500));
  CHECK(th[0].ratio.value == 1.0);
  CHECK(th[1].ratio.value < 1.0);
  CHECK(th[1].ratio.value > 0.0);
}

TEST_CASE("snapshots") {
  Rng r(23, 0);
  auto sys = ParticleSystem1D::make(Domain::torus(1.0), Mode::annihilating, {0.1, 0.12, 0.5, 0.8});
  const auto snaps = record_trajectories(sys, 1e-3, 0.05, 10, r);
  CHECK(snaps.front().x.size() == 4);
  CHECK(snaps.back().time == doctest::Approx(0.05));
  CHECK(snaps.size() == 6);
  std::ostringstream os;
  write_particle_csv(os, snaps);
  CHECK(os.str().rfind("time,id,position,alive\n", 0) == 0);
}
