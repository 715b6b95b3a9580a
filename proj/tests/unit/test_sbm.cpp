#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "duality/core/ctmc.hpp"
#include "duality/core/error.hpp"
#include "duality/sbm/sbm.hpp"

using namespace duality;
using namespace duality::sbm;
using core::Rng;

namespace {

core::McConfig mc(std::uint64_t seed, std::size_t n) {
  core::McConfig c;
  c.seed = seed;
  c.replicates = n;
  return c;
}

FieldPair torus(std::size_t L, double dx, std::vector<double> u, std::vector<double> v) {
  FieldPair s;
  s.dx = dx;
  s.boundary = Boundary::periodic;
  s.u = std::move(u);
  s.v = std::move(v);
  (void)L;
  return s;
}

FieldPair wavy(std::size_t L, double dx) {
  std::vector<double> u(L), v(L);
  for (std::size_t i = 0; i < L; ++i) {
    const double a = 2.0 * std::numbers::pi * double(i) / double(L);
    u[i] = 1.0 + 0.5 * std::sin(a);
    v[i] = 1.0 + 0.5 * std::cos(a);
  }
  return torus(L, dx, u, v);
}

// e^{tΔ/2} f on the periodic lattice: Δ/2 generates a walk jumping to each
// neighbour at rate 1/(2 dx²).
std::vector<double> heat_semigroup(const std::vector<double>& f, double dx, double t) {
  const std::size_t L = f.size();
  std::vector<core::Transition> tr;
  for (std::size_t i = 0; i < L; ++i) {
    tr.push_back({i, (i + 1) % L, 0.5 / (dx * dx)});
    tr.push_back({i, (i + L - 1) % L, 0.5 / (dx * dx)});
  }
  return core::SparseGenerator(L, tr).expectation(f, t, 1e-14);
}

}  // namespace

TEST_CASE("parameter validation") {
  SbmParams p{-0.5, 1.0, 0.04, 0.25};
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p.dt = 0.03125;
  CHECK_NOTHROW(p.validate());
  p.rho = -1.2;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  FieldPair bad = wavy(8, 0.25);
  bad.u[3] = -0.1;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("noise vanishes without the other type") {
  const std::size_t L = 16;
  FieldPair s = wavy(L, 0.25);
  std::fill(s.v.begin(), s.v.end(), 0.0);
  const auto u0 = s.u;
  SbmParams p{0.3, 5.0, 0.01, 0.25};
  Rng rng(1, 1);
  run_sbm(s, p, 1.0, rng);
  const auto heat = heat_flow(u0, Boundary::periodic, 0.25, 0.01, 100);
  const auto exact = heat_semigroup(u0, 0.25, 1.0);
  double err = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    CHECK(s.u[i] == doctest::Approx(heat[i]).epsilon(1e-13));
    CHECK(s.v[i] == 0.0);
    err = std::max(err, std::abs(s.u[i] - exact[i]));
  }
  // O(dt) agreement with the semigroup; halving dt roughly halves the error.
  const auto half = heat_flow(u0, Boundary::periodic, 0.25, 0.005, 200);
  double err_half = 0.0;
  for (std::size_t i = 0; i < L; ++i) err_half = std::max(err_half, std::abs(half[i] - exact[i]));
  CHECK(err < 10 * 0.01);
  CHECK(err_half < 0.6 * err);
}

TEST_CASE("zero branching rate is heat flow for both types") {
  FieldPair s = heaviside_init(21, 0.25);
  const auto u0 = s.u, v0 = s.v;
  SbmParams p{-0.5, 0.0, 0.02, 0.25};
  Rng rng(2, 2);
  run_sbm(s, p, 0.5, rng);
  const auto hu = heat_flow(u0, Boundary::zero_flux, 0.25, 0.02, 25);
  const auto hv = heat_flow(v0, Boundary::zero_flux, 0.25, 0.02, 25);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.u[i] == doctest::Approx(hu[i]).epsilon(1e-13));
    CHECK(s.v[i] == doctest::Approx(hv[i]).epsilon(1e-13));
  }
  // zero-flux heat flow conserves mass
  double m0 = 0, m1 = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    m0 += u0[i];
    m1 += hu[i];
  }
  CHECK(m1 == doctest::Approx(m0).epsilon(1e-13));
}

TEST_CASE("first moment follows the discrete heat flow") {
  const std::size_t L = 64, N = 4000;
  const FieldPair init = wavy(L, 0.25);
  SbmParams p{-0.5, 1.0, 0.01, 0.25};
  std::vector<std::vector<double>> cols(L);
  PathLedger total;
  for (std::size_t i = 0; i < N; ++i) {
    FieldPair s = init;
    Rng rng(3, i);
    run_sbm(s, p, 0.5, rng, &total);
    for (std::size_t x = 0; x < L; ++x) cols[x].push_back(s.u[x]);
  }
  const auto heat = heat_flow(init.u, Boundary::periodic, 0.25, 0.01, 50);
  double worst = 0.0;
  for (std::size_t x = 0; x < L; ++x) worst = std::max(worst, core::z_distance(core::estimate_mean(cols[x]), heat[x]));
  CHECK(worst < 4.0);
  CHECK(total.clamp_rate() < 0.01);
  for (std::size_t i = 0; i < L; ++i) CHECK(total.lambda[i] > 0.0);
}

TEST_CASE("rho = -1 conserves u + v up to clamping") {
  const FieldPair init = heaviside_init(33, 0.25);
  std::vector<double> w0(init.size());
  for (std::size_t i = 0; i < init.size(); ++i) w0[i] = init.u[i] + init.v[i];
  SbmParams p{-1.0, 4.0, 0.01, 0.25};
  const auto heat = heat_flow(w0, Boundary::zero_flux, 0.25, 0.01, 100);
  for (std::size_t k = 0; k < 100; ++k) {
    FieldPair s = init;
    PathLedger led;
    Rng rng(4, k);
    std::vector<double> prev_lambda(init.size(), 0.0);
    for (int n = 0; n < 100; ++n) {
      step_sbm(s, p, rng, &led);
      for (std::size_t i = 0; i < s.size(); ++i) {
        REQUIRE(s.u[i] >= 0.0);
        REQUIRE(s.v[i] >= 0.0);
        REQUIRE(led.lambda[i] >= prev_lambda[i]);
      }
      prev_lambda = led.lambda;
    }
    double dev = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) dev = std::max(dev, std::abs(s.u[i] + s.v[i] - heat[i]));
    CHECK(dev <= 10.0 * led.clamp_mass + 1e-10);
  }
}

TEST_CASE("heaviside initial condition") {
  const auto h = heaviside_init(9, 0.25);
  std::size_t twos = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double w = h.u[i] + h.v[i];
    CHECK((w == 1.0 || w == 2.0));
    if (w == 2.0) {
      ++twos;
      CHECK(i == h.origin);
      CHECK(h.x(i) == 0.0);
    }
  }
  CHECK(twos == 1);
  double mu = 0, mv = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    mu += h.u[i];
    mv += h.v[i];
  }
  CHECK(mu == mv);
  const auto r = interface_region(h);
  REQUIRE(r);
  CHECK(r->first == h.origin);
  CHECK(r->second == h.origin);

  FieldPair only_u = h;
  std::fill(only_u.u.begin(), only_u.u.end(), 1.0);
  std::fill(only_u.v.begin(), only_u.v.end(), 0.0);
  CHECK_FALSE(interface_region(only_u));

  FieldPair abut = h;
  abut.v[h.origin] = 0.0;
  const auto ra = interface_region(abut);
  REQUIRE(ra);
  CHECK(ra->second - ra->first == 1);
  abut.u[h.origin] = 0.0;
  CHECK_FALSE(interface_region(abut));
}

TEST_CASE("interface width grows sublinearly") {
  const FieldPair init = heaviside_init(129, 0.25);
  SbmParams p{-0.9, 10.0, 0.001, 0.25};
  p.positivity = Positivity::truncate;
  std::vector<double> w2, w8;
  for (std::size_t k = 0; k < 60; ++k) {
    FieldPair s = init;
    Rng rng(5, k);
    run_sbm(s, p, 2.0, rng);
    auto r = interface_region(s);
    w2.push_back(r ? double(r->second - r->first + 1) : 0.0);
    run_sbm(s, p, 6.0, rng);
    r = interface_region(s);
    w8.push_back(r ? double(r->second - r->first + 1) : 0.0);
  }
  auto median = [](std::vector<double> x) {
    std::sort(x.begin(), x.end());
    return x[x.size() / 2];
  };
  MESSAGE("median widths " << median(w2) << " " << median(w8));
  CHECK(median(w8) < 2.0 * median(w2));
  CHECK(median(w8) < 100.0);
}

TEST_CASE("self-duality functional") {
  FieldPair mu = torus(4, 0.5, {0.2, 1.0, 0.5, 0.0}, {0.3, 0.0, 0.7, 1.1});
  FieldPair test = torus(4, 0.5, {1.0, 0.5, 0.0, 0.25}, {0.0, 0.4, 0.9, 0.3});
  // Independent direct summation.
  const auto f = self_duality_functional(mu, test, -0.5);
  CHECK(f.real() == doctest::Approx(0.15067583995089637).epsilon(1e-13));
  CHECK(f.imag() == doctest::Approx(0.012547795508983446).epsilon(1e-12));

  FieldPair zero = torus(4, 0.5, std::vector<double>(4, 0.0), std::vector<double>(4, 0.0));
  CHECK(self_duality_functional(zero, test, -0.5) == std::complex<double>(1.0, 0.0));

  double s = 0, d = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    s += (mu.u[i] + mu.v[i]) * (test.u[i] + test.v[i]) * 0.5;
    d += (mu.u[i] - mu.v[i]) * (test.u[i] - test.v[i]) * 0.5;
  }
  const auto f0 = self_duality_functional(mu, test, 0.0);
  CHECK(std::abs(f0 - std::exp(std::complex<double>(-s, d))) < 1e-15);
  CHECK(self_duality_functional(mu, test, 0.0) == self_duality_functional(test, mu, 0.0));

  CHECK_THROWS_AS(self_duality_functional(mu, test, 1.0), DomainError);
  CHECK_THROWS_AS(self_duality_functional(mu, test, -1.0), DomainError);

  Rng rng(6, 0);
  for (int k = 0; k < 200; ++k) {
    FieldPair a = torus(4, 0.5, std::vector<double>(4), std::vector<double>(4));
    FieldPair b = a;
    for (std::size_t i = 0; i < 4; ++i) {
      a.u[i] = 3 * rng.uniform();
      a.v[i] = 3 * rng.uniform();
      b.u[i] = 3 * rng.uniform();
      b.v[i] = 3 * rng.uniform();
    }
    CHECK(std::abs(self_duality_functional(a, b, 2 * rng.uniform() - 1)) <= 1.0);
  }
}


namespace {

// Strictly positive profiles of comparable size for both types. With
// amplitude c = sqrt(0.03) the pairing is O(1), so F is neither 0 nor 1.
FieldPair balanced(std::size_t L, double phase) {
  const double c = std::sqrt(0.03);
  FieldPair s = torus(L, 0.25, std::vector<double>(L), std::vector<double>(L));
  for (std::size_t i = 0; i < L; ++i) {
    const double a = 2.0 * std::numbers::pi * double(i) / double(L) + phase;
    s.u[i] = c * (1.0 + 0.6 * std::sin(a));
    s.v[i] = c * (1.0 - 0.6 * std::sin(a));
  }
  return s;
}

}  // namespace

TEST_CASE("self-duality two-sided") {
  const std::size_t L = 32;
  const FieldPair init = balanced(L, 0.0);
  const FieldPair test = balanced(L, 0.5);
  SbmParams p{-0.5, 1.0, 0.01, 0.25};

  SUBCASE("t = 0") {
    const auto r = check_self_duality(init, test, p, 0.0, mc(7, 3));
    const auto f = self_duality_functional(init, test, p.rho);
    CHECK(r.lhs.re.value == doctest::Approx(f.real()).epsilon(1e-14));
    CHECK(r.rhs.re.value == doctest::Approx(f.real()).epsilon(1e-14));
    CHECK(r.lhs.im.value == doctest::Approx(f.imag()).epsilon(1e-14));
    CHECK(r.rhs.im.value == doctest::Approx(f.imag()).epsilon(1e-14));
  }
  SUBCASE("zero test functions") {
    FieldPair zero = torus(L, 0.25, std::vector<double>(L, 0.0), std::vector<double>(L, 0.0));
    const auto r = check_self_duality(init, zero, p, 0.25, mc(8, 10));
    CHECK(r.lhs.re.value == 1.0);
    CHECK(r.rhs.re.value == 1.0);
    CHECK(r.lhs.im.value == 0.0);
  }
  SUBCASE("monte carlo") {
    const auto r = check_self_duality(init, test, p, 0.25, mc(9, 3000));
    CHECK(core::cis_overlap(r.lhs.re, r.rhs.re));
    CHECK(core::cis_overlap(r.lhs.im, r.rhs.im));
    CHECK(r.clamp_rate < 0.01);
  }
}

TEST_CASE("martingale residual") {
  const std::size_t L = 32;
  const FieldPair init = balanced(L, 0.0);
  const FieldPair test = balanced(L, 0.5);
  SbmParams p{-0.5, 1.0, 0.01, 0.25};
  const auto zero = martingale_residual(init, test, p, 0.0, mc(10, 5));
  CHECK(zero.re.value == 0.0);
  CHECK(zero.im.value == 0.0);

  // At dt = 0.01 the mass added by clamping biases the residual by several
  // standard errors at this sample size; dt / 16 removes it.
  SbmParams fine = p;
  fine.dt = p.dt / 16.0;
  const auto r = martingale_residual(init, test, fine, 0.25, mc(11, 2000));
  CHECK(std::abs(r.re.value) < 3.0 * r.re.stderr_);
  CHECK(std::abs(r.im.value) < 3.0 * r.im.stderr_);

  // Disjoint test supports: the Λ term vanishes.
  FieldPair disjoint = torus(L, 0.25, std::vector<double>(L, 0.0), std::vector<double>(L, 0.0));
  for (std::size_t i = 2; i <= 8; ++i) disjoint.u[i] = 0.2;
  for (std::size_t i = 18; i <= 26; ++i) disjoint.v[i] = 0.15;
  SbmParams small = p;
  small.gamma = 0.1;
  const auto d = martingale_residual(init, disjoint, small, 0.25, mc(12, 2000));
  CHECK(std::abs(d.re.value) < 3.0 * d.re.stderr_);
  CHECK(std::abs(d.im.value) < 3.0 * d.im.stderr_);
}

TEST_CASE("separation of types") {
  SUBCASE("far apart") {
    FieldPair s = torus(64, 0.25, std::vector<double>(64, 0.0), std::vector<double>(64, 0.0));
    for (std::size_t i = 0; i < 4; ++i) {
      s.u[i] = 1.0;
      s.v[32 + i] = 1.0;
    }
    SbmParams p{-0.5, 1.0, 0.01, 0.25};
    p.positivity = Positivity::truncate;
    const auto r = separation_stat(s, p, {1.0, 10.0}, 0.05, 2, 0.01, mc(13, 50));
    for (const auto& pt : r) CHECK(pt.uv.value < 1e-6);
  }
  SUBCASE("rho = -1 bound") {
    // u + v stays at heat flow of 1 plus whatever clamping added, so
    // u v <= ((u + v) / 2)^2 <= (1 + clamp mass)^2 / 4.
    FieldPair s = heaviside_init(33, 0.25);
    s.v[s.origin] = 0.0;
    SbmParams p{-1.0, 3.0, 0.01, 0.25};
    for (std::size_t k = 0; k < 50; ++k) {
      FieldPair w = s;
      PathLedger led;
      Rng rng(14, k);
      for (int n = 0; n < 50; ++n) {
        step_sbm(w, p, rng, &led);
        const double bound = 0.25 * (1.0 + led.clamp_mass) * (1.0 + led.clamp_mass) + 1e-12;
        for (std::size_t i = 0; i < w.size(); ++i) REQUIRE(w.u[i] * w.v[i] <= bound);
      }
    }
  }
}

TEST_CASE("rescaling") {
  const FieldPair init = heaviside_init(41, 0.25);
  SbmParams p{-0.5, 0.0, 0.01, 0.25};
  const auto det = rescaling_check(init, p, 2, 0.25, 22, mc(15, 5));
  CHECK(det.coarse.value == doctest::Approx(det.fine.value).epsilon(1e-12));
  p.gamma = 1.0;
  const auto same = rescaling_check(init, p, 1, 0.25, 22, mc(16, 500));
  CHECK(same.ks.p_value > 0.01);
  const auto r = rescaling_check(init, p, 2, 0.25, 22, mc(17, 1000));
  CHECK(r.ks.p_value > 0.01);
}

TEST_CASE("critical curve") {
  CHECK(critical_curve(0.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(std::abs(critical_curve(-1.0 / std::sqrt(2.0)) - 4.0) < 1e-12);
  CHECK(std::isinf(critical_curve(-1.0)));
  CHECK(critical_curve(-0.5) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(critical_curve(0.5) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK_THROWS_AS(critical_curve(1.0), DomainError);
}

TEST_CASE("first moment of constant data stays at 1") {
  SbmParams p{-0.5, 1.0, 0.01, 0.25};
  p.positivity = Positivity::truncate;
  const auto c = moment_growth_experiment(p, 1.0, 32, {0.5, 1.0, 2.0, 4.0}, 0.0, mc(18, 300));
  for (const auto& e : c.moment) CHECK(core::z_distance(e, 1.0) < 3.5);
  CHECK(c.clamp_rate == 0.0);
}

TEST_CASE("truncated noise keeps the exact mean") {
  const std::size_t L = 16, N = 4000;
  const FieldPair init = heaviside_init(L, 0.25);
  SbmParams p{0.3, 6.0, 0.01, 0.25};
  p.positivity = Positivity::truncate;
  std::vector<std::vector<double>> cols(L);
  PathLedger led;
  for (std::size_t i = 0; i < N; ++i) {
    FieldPair s = init;
    Rng rng(19, i);
    run_sbm(s, p, 0.3, rng, &led);
    for (std::size_t x = 0; x < L; ++x) cols[x].push_back(s.u[x]);
  }
  CHECK(led.clamps == 0);
  CHECK(led.truncations > 0);
  const auto heat = heat_flow(init.u, Boundary::zero_flux, 0.25, 0.01, 30);
  for (std::size_t x = 0; x < L; ++x) CHECK(core::z_distance(core::estimate_mean(cols[x]), heat[x]) < 4.0);
}

TEST_CASE("exact second moment") {
  // Zero branching: the second moment of constant data stays 1.
  const auto flat = second_moment_exact(0.3, 0.0, 0.25, 16, {1.0, 5.0});
  CHECK(flat[0] == doctest::Approx(1.0).epsilon(1e-12));
  // Short time: a(0) grows like 1 + (γ/dx) t.
  const auto early = second_moment_exact(-0.5, 1.0, 0.25, 32, {1e-4});
  CHECK(early[0] == doctest::Approx(1.0 + 4.0 * 1e-4).epsilon(1e-6));
  // Values frozen from an independent LSODA solve.
  const auto a = second_moment_exact(-0.5, 1.0, 0.25, 32, {1.0, 10.0, 50.0});
  CHECK(a[0] == doctest::Approx(1.4584).epsilon(1e-4));
  CHECK(a[1] == doctest::Approx(2.0808).epsilon(1e-4));
  CHECK(a[2] == doctest::Approx(2.8556).epsilon(1e-4));
  const auto b = second_moment_exact(0.5, 1.0, 0.25, 32, {50.0});
  CHECK(b[0] == doctest::Approx(247.3701).epsilon(1e-4));
}

TEST_CASE("csv export") {
  const auto h = heaviside_init(5, 0.5);
  std::ostringstream os;
  write_field_csv(os, h, {0, 0.1, 0.2, 0.3, 0.4});
  const auto text = os.str();
  CHECK(text.rfind("site,x,u,v,Lambda\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);
  CHECK(text.find("2,0,1,1,0.2") != std::string::npos);
}
