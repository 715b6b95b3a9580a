#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "duality/core/ctmc.hpp"
#include "duality/core/error.hpp"
#include "duality/core/parallel.hpp"
#include "duality/core/processes.hpp"
#include "duality/core/rng.hpp"
#include "duality/core/stats.hpp"

using namespace duality;
using namespace duality::core;

TEST_CASE("rng streams are addressable and reproducible") {
  Rng a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) REQUIRE(a() == b());

  Rng c(42, 7);
  Rng child1 = c.split(3);
  for (int i = 0; i < 10; ++i) c();
  Rng child2 = c.split(3);
  for (int i = 0; i < 100; ++i) REQUIRE(child1() == child2());
}

TEST_CASE("distinct streams are uncorrelated") {
  constexpr int n = 100000;
  Rng a(1, 0), b(1, 1);
  double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = a.uniform(), y = b.uniform();
    sx += x;
    sy += y;
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double corr = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
  CHECK(std::abs(corr) < 4.0 / std::sqrt(double(n)));
}

TEST_CASE("rng below and uniform ranges") {
  Rng r(3, 3);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) ++hist[r.below(7)];
  for (int h : hist) CHECK(std::abs(h - 10000) < 500);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    const double v = r.uniform_pos();
    CHECK((v > 0.0 && v <= 1.0));
  }
}

TEST_CASE("poisson events") {
  Rng rng(11, 0);
  SUBCASE("zero window is empty") { CHECK(sample_poisson_events(1.0, 0.0, rng).times.empty()); }
  SUBCASE("parameter errors") {
    CHECK_THROWS_AS(sample_poisson_events(0.0, 1.0, rng), ParameterError);
    CHECK_THROWS_AS(sample_poisson_events(-1.0, 1.0, rng), ParameterError);
    CHECK_THROWS_AS(sample_poisson_events(1.0, -1.0, rng), ParameterError);
  }
  SUBCASE("times sorted and inside window") {
    auto ev = sample_poisson_events(3.0, 5.0, rng);
    for (std::size_t i = 1; i < ev.times.size(); ++i) CHECK(ev.times[i] > ev.times[i - 1]);
    for (double t : ev.times) CHECK((t > 0.0 && t <= 5.0));
  }
  SUBCASE("mean count rate*horizon") {
    std::vector<double> counts;
    for (int s = 0; s < 10000; ++s) {
      Rng r(5, s);
      counts.push_back(double(sample_poisson_events(2.0, 10.0, r).times.size()));
    }
    const auto e = estimate_mean(counts);
    CHECK(std::abs(e.value - 20.0) < 0.6);
  }
  SUBCASE("voter arrow rate 1/2 over horizon 100") {
    std::vector<double> counts;
    for (int s = 0; s < 10000; ++s) {
      Rng r(6, s);
      counts.push_back(double(sample_poisson_events(0.5, 100.0, r).times.size()));
    }
    const auto e = estimate_mean(counts);
    const double sigma = std::sqrt(50.0 / 10000.0);
    CHECK(std::abs(e.value - 50.0) < 3.0 * sigma);
  }
  SUBCASE("exponential gaps pass KS at level 0.01") {
    std::vector<double> gaps;
    Rng r(8, 1);
    auto ev = sample_poisson_events(1.5, 8000.0, r);
    double prev = 0.0;
    for (double t : ev.times) {
      gaps.push_back(t - prev);
      prev = t;
      if (gaps.size() == 10000) break;
    }
    REQUIRE(gaps.size() == 10000);
    auto ks = ks_one_sample(gaps, [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-1.5 * x); });
    CHECK(ks.p_value > 0.01);
  }
}

TEST_CASE("gaussian pair") {
  Rng rng(9, 9);
  for (int i = 0; i < 100; ++i) {
    auto [a, b] = gaussian_pair(1.0, rng);
    CHECK(a == b);
    auto [c, d] = gaussian_pair(-1.0, rng);
    CHECK(d == -c);
  }
  CHECK_THROWS_AS(gaussian_pair(1.0001, rng), ParameterError);

  constexpr int n = 100000;
  double sxy = 0, sxx = 0, syy = 0;
  std::vector<double> xs, ys;
  for (int i = 0; i < n; ++i) {
    auto [x, y] = gaussian_pair(0.0, rng);
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
    if (i < 10000) {
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 0.013);
  CHECK(ks_one_sample(xs, normal_cdf).p_value > 0.01);
  CHECK(ks_one_sample(ys, normal_cdf).p_value > 0.01);

  double s2 = 0;
  for (int i = 0; i < n; ++i) {
    auto [x, y] = gaussian_pair(-0.6, rng);
    s2 += x * y;
  }
  CHECK(std::abs(s2 / n + 0.6) < 4.0 / std::sqrt(double(n)));
}

TEST_CASE("bridge crossing probability") {
  CHECK(bridge_crossing_prob(1e-12, 1.0, 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(bridge_crossing_prob(1.0, 1.0, 1.0, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(bridge_crossing_prob(3.0, 3.0, 0.01, 2.0) < 1e-300);
  CHECK_THROWS_AS(bridge_crossing_prob(0.0, 1.0, 1.0, 2.0), ParameterError);
  CHECK_THROWS_AS(bridge_crossing_prob(1.0, 1.0, 0.0, 2.0), ParameterError);

  // Substep composition: walk the bridge a -> b over [0,1] in 64 pieces,
  // sampling interior points from the exact bridge law, and test each piece.
  // The union of piece crossings must reproduce exp(-1).
  constexpr int n = 100000, pieces = 64;
  const double diff = 2.0, a = 1.0, b = 1.0, T = 1.0, h = T / pieces;
  Rng rng(17, 0);
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    double x = a, s = 0.0;
    bool hit = false;
    for (int k = 0; k < pieces && !hit; ++k) {
      const double rem = T - s;
      double y = b;
      if (k + 1 < pieces) {
        const double mean = x + (b - x) * h / rem;
        const double var = diff * h * (rem - h) / rem;
        y = mean + std::sqrt(var) * rng.normal();
      }
      if (y <= 0.0 || rng.uniform() < bridge_crossing_prob(x, y, h, diff)) hit = true;
      x = y;
      s += h;
    }
    hits += hit;
  }
  const double p = double(hits) / n;
  const double se = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(p - std::exp(-1.0)) < 3.0 * se);
}

TEST_CASE("statistics helpers") {
  CHECK(kolmogorov_tail(1.3581) == doctest::Approx(0.05).epsilon(0.01));
  CHECK(kolmogorov_tail(0.5) == doctest::Approx(0.9639).epsilon(0.001));
  CHECK(chi2_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(normal_quantile(0.975) == doctest::Approx(kZ95).epsilon(1e-9));

  std::vector<double> up = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(mann_kendall(up).statistic > 3.0);
  std::vector<double> flat = {1, 3, 2, 3, 1, 2, 3, 1, 2, 2};
  CHECK(mann_kendall(flat).p_value > 0.05);

  std::vector<double> xs(1000);
  std::iota(xs.begin(), xs.end(), 0.0);
  CHECK(pairwise_sum(xs) == 499500.0);
  auto e = estimate_mean(xs);
  CHECK(e.value == 499.5);
  CHECK(e.ci_low() <= e.value);
  CHECK(e.ci_high() >= e.value);

  std::vector<std::size_t> h1 = {100, 200, 300, 50}, h2 = {98, 205, 290, 57};
  CHECK(chi2_two_sample(h1, h2).p_value > 0.5);
  std::vector<std::size_t> h3 = {300, 200, 100, 50};
  CHECK(chi2_two_sample(h1, h3).p_value < 1e-6);

  Rng r(1, 2);
  std::vector<double> s1, s2;
  for (int i = 0; i < 2000; ++i) s1.push_back(r.normal());
  for (int i = 0; i < 2000; ++i) s2.push_back(r.normal() + 0.3);
  CHECK(ks_two_sample(s1, s2).p_value < 1e-6);
}

TEST_CASE("uniformized CTMC matches two-state closed form") {
  const double a = 0.7, b = 1.9, t = 0.8;
  std::vector<Transition> tr = {{0, 1, a}, {1, 0, b}};
  SparseGenerator g(2, tr);
  std::vector<double> p0 = {1.0, 0.0};
  auto p = g.distribution(p0, t);
  const double exact = a / (a + b) * (1.0 - std::exp(-(a + b) * t));
  CHECK(p[1] == doctest::Approx(exact).epsilon(1e-10));
  std::vector<double> f = {0.0, 1.0};
  CHECK(g.expectation(f, t)[0] == doctest::Approx(exact).epsilon(1e-10));

  std::vector<double> kill = {0.0, 0.0};
  kill[0] = 2.5;
  std::vector<Transition> none;
  SparseGenerator k(2, none, kill);
  std::vector<double> one = {1.0, 1.0};
  CHECK(k.expectation(one, 1.3)[0] == doctest::Approx(std::exp(-2.5 * 1.3)).epsilon(1e-10));
}

TEST_CASE("replicate runner is independent of worker count") {
  auto fn = [](std::size_t i) {
    Rng r(99, i);
    return r.normal();
  };
  auto one = run_replicates<double>(1000, 1, fn);
  auto four = run_replicates<double>(1000, 4, fn);
  CHECK(one == four);
}
