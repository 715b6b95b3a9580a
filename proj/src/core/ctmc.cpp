#include "duality/core/ctmc.hpp"

#include <algorithm>
#include <cmath>

#include "duality/core/error.hpp"

namespace duality::core {

SparseGenerator::SparseGenerator(std::size_t n_states, std::span<const Transition> transitions,
                                 std::span<const double> killing)
    : row_start_(n_states + 1, 0), exit_(n_states, 0.0) {
  if (!killing.empty() && killing.size() != n_states) {
    throw ParameterError("SparseGenerator: killing vector has wrong size");
  }
  for (const auto& tr : transitions) {
    if (tr.from >= n_states || tr.to >= n_states) throw ParameterError("SparseGenerator: state out of range");
    if (tr.rate < 0.0) throw ParameterError("SparseGenerator: negative rate");
    if (tr.from == tr.to) continue;
    ++row_start_[tr.from + 1];
  }
  for (std::size_t i = 0; i < n_states; ++i) row_start_[i + 1] += row_start_[i];
  col_.resize(row_start_.back());
  rate_.resize(row_start_.back());
  std::vector<std::size_t> fill(row_start_.begin(), row_start_.end() - 1);
  for (const auto& tr : transitions) {
    if (tr.from == tr.to) continue;
    const std::size_t k = fill[tr.from]++;
    col_[k] = tr.to;
    rate_[k] = tr.rate;
    exit_[tr.from] += tr.rate;
  }
  for (std::size_t i = 0; i < killing.size(); ++i) {
    if (killing[i] < 0.0) throw ParameterError("SparseGenerator: negative killing rate");
    exit_[i] += killing[i];
  }
  lambda_ = exit_.empty() ? 0.0 : *std::max_element(exit_.begin(), exit_.end());
}

// out = in * P  (row vector times P)
void SparseGenerator::apply_forward(std::span<const double> in, std::span<double> out) const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) out[i] = in[i] * (1.0 - exit_[i] / lambda_);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = in[i] / lambda_;
    if (m == 0.0) continue;
    for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k) out[col_[k]] += m * rate_[k];
  }
}

// out = P * in  (column vector)
void SparseGenerator::apply_backward(std::span<const double> in, std::span<double> out) const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = in[i] * (1.0 - exit_[i] / lambda_);
    for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k) s += rate_[k] / lambda_ * in[col_[k]];
    out[i] = s;
  }
}

namespace {

template <class Apply>
std::vector<double> uniformized(std::span<const double> v0, double lambda_t, double tol, Apply apply) {
  std::vector<double> cur(v0.begin(), v0.end());
  std::vector<double> next(cur.size());
  std::vector<double> acc(cur.size(), 0.0);
  if (lambda_t == 0.0) return cur;
  const double log_lt = std::log(lambda_t);
  double covered = 0.0;
  // Enough terms to pass the Poisson mode plus a generous tail.
  const auto k_max = static_cast<std::size_t>(lambda_t + 12.0 * std::sqrt(lambda_t) + 60.0);
  for (std::size_t k = 0;; ++k) {
    const double w = std::exp(-lambda_t + static_cast<double>(k) * log_lt - std::lgamma(static_cast<double>(k) + 1.0));
    for (std::size_t i = 0; i < cur.size(); ++i) acc[i] += w * cur[i];
    covered += w;
    if ((1.0 - covered < tol && static_cast<double>(k) > lambda_t) || k >= k_max) break;
    apply(cur, next);
    cur.swap(next);
  }
  return acc;
}

}  // namespace

std::vector<double> SparseGenerator::expectation(std::span<const double> f, double t, double tol) const {
  if (f.size() != size()) throw ParameterError("SparseGenerator::expectation: size mismatch");
  if (t < 0.0) throw RangeError("SparseGenerator::expectation: negative time");
  if (lambda_ == 0.0 || t == 0.0) return {f.begin(), f.end()};
  return uniformized(f, lambda_ * t, tol, [this](std::span<const double> in, std::span<double> out) {
    apply_backward(in, out);
  });
}

std::vector<double> SparseGenerator::distribution(std::span<const double> p0, double t, double tol) const {
  if (p0.size() != size()) throw ParameterError("SparseGenerator::distribution: size mismatch");
  if (t < 0.0) throw RangeError("SparseGenerator::distribution: negative time");
  if (lambda_ == 0.0 || t == 0.0) return {p0.begin(), p0.end()};
  return uniformized(p0, lambda_ * t, tol, [this](std::span<const double> in, std::span<double> out) {
    apply_forward(in, out);
  });
}

}  // namespace duality::core
