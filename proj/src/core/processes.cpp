#include "duality/core/processes.hpp"

#include <cmath>
#include <string>

#include "duality/core/error.hpp"

namespace duality::core {

PoissonEvents sample_poisson_events(double rate, double horizon, Rng& rng) {
  if (!(rate > 0.0)) throw ParameterError("sample_poisson_events: rate must be positive");
  if (!(horizon >= 0.0)) throw ParameterError("sample_poisson_events: horizon must be nonnegative");
  PoissonEvents ev{rate, horizon, {}};
  if (horizon == 0.0) return ev;
  ev.times.reserve(static_cast<std::size_t>(rate * horizon * 1.2) + 8);
  double t = rng.exponential(rate);
  while (t <= horizon) {
    ev.times.push_back(t);
    t += rng.exponential(rate);
  }
  return ev;
}

std::pair<double, double> gaussian_pair(double rho, Rng& rng) {
  if (!(std::abs(rho) <= 1.0)) throw ParameterError("gaussian_pair: |rho| must be <= 1");
  const double perp = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  return gaussian_pair_unchecked(rho, perp, rng);
}

double bridge_crossing_prob(double a, double b, double dt, double diffusivity) {
  if (!(a > 0.0) || !(b > 0.0) || !(dt > 0.0) || !(diffusivity > 0.0)) {
    throw ParameterError("bridge_crossing_prob: all arguments must be positive");
  }
  return std::exp(-2.0 * a * b / (diffusivity * dt));
}

}  // namespace duality::core
