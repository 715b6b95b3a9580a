#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace duality::core {

inline constexpr double kZ95 = 1.959963984540054;

// Monte Carlo mean with its standard error.
struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;

  double ci_low(double z = kZ95) const { return value - z * stderr_; }
  double ci_high(double z = kZ95) const { return value + z * stderr_; }
};

// Pairwise (cascade) summation; result is independent of thread count because
// callers always pass samples in replicate order.
double pairwise_sum(std::span<const double> xs);

Estimate estimate_mean(std::span<const double> samples);

// Ratio of two means from paired samples, delta-method standard error.
Estimate estimate_ratio(std::span<const double> num, std::span<const double> den);

bool cis_overlap(const Estimate& a, const Estimate& b, double z = kZ95);

// |a - b| in units of the combined standard error.
double z_distance(const Estimate& a, const Estimate& b);
// |a - target| in units of a's standard error (infinite if stderr is 0 and a != target).
double z_distance(const Estimate& a, double target);

double normal_cdf(double z);
double normal_quantile(double p);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Kolmogorov distribution tail P(K > lambda).
double kolmogorov_tail(double lambda);

TestResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf);
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Pearson chi-square test of homogeneity for two histograms over the same
// categories. Sparse categories (expected < 5) are pooled from the right.
TestResult chi2_two_sample(std::span<const std::size_t> a, std::span<const std::size_t> b);

// Goodness of fit of observed counts against category probabilities.
TestResult chi2_goodness_of_fit(std::span<const std::size_t> observed, std::span<const double> probs);

// Mann-Kendall trend statistic; `statistic` holds the z-score (positive for an
// increasing trend), `p_value` is two-sided.
TestResult mann_kendall(std::span<const double> series);

double chi2_sf(double x, double dof);

}  // namespace duality::core
