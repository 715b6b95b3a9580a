#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace duality::core {

struct Transition {
  std::size_t from;
  std::size_t to;
  double rate;
};

/// Finite continuous-time Markov chain with optional killing, evaluated by
/// uniformization: e^{tQ} = sum_k Pois(k; Λt) P^k with P = I + Q/Λ.
/// The Poisson series is truncated once the neglected weight is below `tol`,
/// which bounds the absolute error by tol * max|f|.
class SparseGenerator {
 public:
  SparseGenerator(std::size_t n_states, std::span<const Transition> transitions,
                  std::span<const double> killing = {});

  std::size_t size() const { return exit_.size(); }
  double uniformization_rate() const { return lambda_; }

  // Backward equation: returns (e^{tQ} f)(x) for every start state x. With
  // killing this is E_x[f(X_t); not killed].
  std::vector<double> expectation(std::span<const double> f, double t, double tol = 1e-12) const;

  // Forward equation: returns p0 e^{tQ}.
  std::vector<double> distribution(std::span<const double> p0, double t, double tol = 1e-12) const;

 private:
  void apply_forward(std::span<const double> in, std::span<double> out) const;
  void apply_backward(std::span<const double> in, std::span<double> out) const;

  // CSR by source state.
  std::vector<std::size_t> row_start_;
  std::vector<std::size_t> col_;
  std::vector<double> rate_;
  std::vector<double> exit_;  // total exit rate including killing
  double lambda_ = 0.0;
};

}  // namespace duality::core
