#pragma once

#include <utility>
#include <vector>

#include "duality/core/rng.hpp"

namespace duality::core {

// Homogeneous Poisson point process on [0, horizon].
struct PoissonEvents {
  double rate = 0.0;
  double horizon = 0.0;
  std::vector<double> times;  // strictly increasing
};

// A zero-length window gives an empty list; negative horizon or nonpositive
// rate throws ParameterError.
PoissonEvents sample_poisson_events(double rate, double horizon, Rng& rng);

/// Pair of standard normals with correlation rho:
/// xi2 = rho * xi1 + sqrt(1 - rho^2) * xi_perp.
std::pair<double, double> gaussian_pair(double rho, Rng& rng);

// Unchecked variant for inner loops; `rho_perp` is sqrt(1 - rho^2).
inline std::pair<double, double> gaussian_pair_unchecked(double rho, double rho_perp, Rng& rng) {
  const double a = rng.normal();
  const double b = rng.normal();
  return {a, rho * a + rho_perp * b};
}

/// Probability that a Brownian bridge of variance rate `diffusivity`, going
/// from distance a to distance b from a barrier over time dt, touches it:
/// exp(-2ab / (diffusivity * dt)).
///
/// The gap between two independent standard Brownian motions has
/// diffusivity 2; one motion against a fixed wall has diffusivity 1.
double bridge_crossing_prob(double a, double b, double dt, double diffusivity);

}  // namespace duality::core
