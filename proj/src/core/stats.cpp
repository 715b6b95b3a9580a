#include "duality/core/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "duality/core/error.hpp"

namespace duality::core {

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 32) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

Estimate estimate_mean(std::span<const double> samples) {
  Estimate e;
  e.n = samples.size();
  if (e.n == 0) return e;
  e.value = pairwise_sum(samples) / static_cast<double>(e.n);
  if (e.n < 2) return e;
  std::vector<double> sq(samples.size());
  std::transform(samples.begin(), samples.end(), sq.begin(),
                 [m = e.value](double x) { return (x - m) * (x - m); });
  const double var = pairwise_sum(sq) / static_cast<double>(e.n - 1);
  e.stderr_ = std::sqrt(var / static_cast<double>(e.n));
  return e;
}

Estimate estimate_ratio(std::span<const double> num, std::span<const double> den) {
  if (num.size() != den.size()) throw ParameterError("estimate_ratio: sample sizes differ");
  const Estimate a = estimate_mean(num);
  const Estimate b = estimate_mean(den);
  Estimate r;
  r.n = a.n;
  if (b.value == 0.0) {
    r.value = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.value = a.value / b.value;
  if (r.n < 2) return r;
  // Linearised residuals a_i - r * b_i.
  std::vector<double> res(num.size());
  for (std::size_t i = 0; i < num.size(); ++i) res[i] = num[i] - r.value * den[i];
  const Estimate e = estimate_mean(res);
  r.stderr_ = e.stderr_ / std::abs(b.value);
  return r;
}

bool cis_overlap(const Estimate& a, const Estimate& b, double z) {
  return a.ci_low(z) <= b.ci_high(z) && b.ci_low(z) <= a.ci_high(z);
}

double z_distance(const Estimate& a, const Estimate& b) {
  const double se = std::hypot(a.stderr_, b.stderr_);
  const double d = std::abs(a.value - b.value);
  if (se == 0.0) return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return d / se;
}

double z_distance(const Estimate& a, double target) {
  const double d = std::abs(a.value - target);
  if (a.stderr_ == 0.0) return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return d / a.stderr_;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must be in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Small-lambda form converges fast where the alternating series does not.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double s = 0.0;
    for (int j = 1; j <= 20; ++j) {
      const double k = 2.0 * j - 1.0;
      s += std::exp(-k * k * pi2 / (8.0 * lambda * lambda));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

namespace {

double ks_p_value(double d, double effective_n) {
  const double sn = std::sqrt(effective_n);
  return kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace

TestResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw ParameterError("ks_one_sample: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return {d, ks_p_value(d, n)};
}

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ParameterError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_p_value(d, na * nb / (na + nb))};
}

double chi2_sf(double x, double dof) {
  if (dof <= 0.0) return 1.0;
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), x));
}

TestResult chi2_two_sample(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  const std::size_t k = std::max(a.size(), b.size());
  auto at = [](std::span<const std::size_t> s, std::size_t i) -> double {
    return i < s.size() ? static_cast<double>(s[i]) : 0.0;
  };
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    na += at(a, i);
    nb += at(b, i);
  }
  if (na == 0.0 || nb == 0.0) throw ParameterError("chi2_two_sample: empty histogram");
  const double fa = na / (na + nb), fb = nb / (na + nb);

  // Pool consecutive categories until both expected counts reach 5.
  std::vector<std::pair<double, double>> bins;
  double ca = 0.0, cb = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    ca += at(a, i);
    cb += at(b, i);
    const double tot = ca + cb;
    if (tot * fa >= 5.0 && tot * fb >= 5.0) {
      bins.emplace_back(ca, cb);
      ca = cb = 0.0;
    }
  }
  if (ca + cb > 0.0) {
    if (bins.empty()) {
      bins.emplace_back(ca, cb);
    } else {
      bins.back().first += ca;
      bins.back().second += cb;
    }
  }
  if (bins.size() < 2) return {0.0, 1.0};
  double stat = 0.0;
  for (auto [x, y] : bins) {
    const double tot = x + y;
    const double ea = tot * fa, eb = tot * fb;
    stat += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
  }
  const double dof = static_cast<double>(bins.size() - 1);
  return {stat, chi2_sf(stat, dof)};
}

TestResult chi2_goodness_of_fit(std::span<const std::size_t> observed, std::span<const double> probs) {
  if (observed.size() != probs.size()) throw ParameterError("chi2_goodness_of_fit: size mismatch");
  double n = 0.0;
  for (auto o : observed) n += static_cast<double>(o);
  if (n == 0.0) throw ParameterError("chi2_goodness_of_fit: no observations");
  std::vector<std::pair<double, double>> bins;  // (observed, expected)
  double co = 0.0, ce = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    co += static_cast<double>(observed[i]);
    ce += probs[i] * n;
    if (ce >= 5.0) {
      bins.emplace_back(co, ce);
      co = ce = 0.0;
    }
  }
  if (co + ce > 0.0) {
    if (bins.empty()) {
      bins.emplace_back(co, ce);
    } else {
      bins.back().first += co;
      bins.back().second += ce;
    }
  }
  if (bins.size() < 2) return {0.0, 1.0};
  double stat = 0.0;
  for (auto [o, e] : bins) stat += (o - e) * (o - e) / e;
  return {stat, chi2_sf(stat, static_cast<double>(bins.size() - 1))};
}

TestResult mann_kendall(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 3) throw ParameterError("mann_kendall: need at least 3 points");
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = series[j] - series[i];
      s += (d > 0.0) - (d < 0.0);
    }
  }
  const double nn = static_cast<double>(n);
  const double var = nn * (nn - 1.0) * (2.0 * nn + 5.0) / 18.0;
  double z = 0.0;
  if (s > 0.0) z = (s - 1.0) / std::sqrt(var);
  if (s < 0.0) z = (s + 1.0) / std::sqrt(var);
  return {z, 2.0 * (1.0 - normal_cdf(std::abs(z)))};
}

}  // namespace duality::core
