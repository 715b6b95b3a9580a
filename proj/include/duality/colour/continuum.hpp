#pragma once

#include <functional>
#include <vector>

#include "duality/core/parallel.hpp"
#include "duality/core/stats.hpp"

// Infinite-rate (γ = ∞, ρ = -1) dualities in the continuum: the voter model
// built from coalescing Brownian motions against coalescing and annihilating
// particle systems started from the query points.
namespace duality::colour {

struct ContinuumReport {
  core::Estimate lhs;
  core::Estimate rhs;
};

// LHS = E Π u_t(x_i) with u_t the continuum voter model from u0 (stream
// Rng(seed, i).split(1)); RHS = E Π over surviving coalescing Brownian
// motions of u0(Y) (stream split(2)). |x| <= 4, u0 in [0,1].
ContinuumReport check_coalescing_duality(const std::function<double(double)>& u0, const std::vector<double>& x,
                                         double t, double dt, const core::McConfig& mc);

// LHS = E Π (1 - 2 u_t(x_i)) from the voter model; RHS = E Π over surviving
// instantaneously annihilating Brownian motions of (1 - 2 u0(y)).
ContinuumReport check_annihilating_duality_infinite(const std::function<double(double)>& u0,
                                                    const std::vector<double>& x, double t, double dt,
                                                    const core::McConfig& mc);

}  // namespace duality::colour
