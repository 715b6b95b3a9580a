#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "duality/core/parallel.hpp"
#include "duality/core/rng.hpp"
#include "duality/core/stats.hpp"

// Voter model on the cycle Z/LZ built from Poisson arrows, together with its
// coalescing-walk dual and the annihilating-walk interface process.
namespace duality::voter {

struct SpinField {
  std::vector<std::uint8_t> spins;

  SpinField() = default;
  explicit SpinField(std::vector<std::uint8_t> s);
  std::size_t size() const { return spins.size(); }
  std::uint8_t operator[](std::size_t x) const { return spins[x]; }
  bool operator==(const SpinField&) const = default;

  static SpinField constant(std::size_t L, std::uint8_t value);
  // 1 on {0, ..., L/2 - 1}, 0 elsewhere.
  static SpinField heaviside(std::size_t L);
  // 1, 0, 1, 0, ...
  static SpinField alternating(std::size_t L);
};

// An arrow (time, from, to) makes site `to` copy the opinion of `from`.
struct Arrow {
  double time;
  std::size_t from;
  std::size_t to;
};

struct ArrowLog {
  std::size_t L = 0;
  double horizon = 0.0;
  std::vector<Arrow> arrows;  // sorted by time
};

// Sorted bond indices b with eta(b) != eta(b+1 mod L).
using InterfaceSet = std::vector<std::size_t>;

// Each of the 2L directed edges carries its own rate-1/2 Poisson stream drawn
// from rng.split(edge index).
ArrowLog build_graphical(std::size_t L, double horizon, const core::Rng& rng);

SpinField evolve_voter(const SpinField& eta0, const ArrowLog& log, double t);

// Dual position at time 0 of the walker started at each x in A at time t,
// in the same order as A (walkers that coalesced share a position).
std::vector<std::size_t> trace_dual_paths(const ArrowLog& log, double t, const std::vector<std::size_t>& A);
// Sorted set of the dual positions.
std::vector<std::size_t> trace_dual(const ArrowLog& log, double t, const std::vector<std::size_t>& A);

// Coalescing rate-1 simple random walks on the cycle, simulated directly
// (no arrows). Returns the sorted set of surviving positions at time t.
std::vector<std::size_t> simulate_coalescing_walks(std::size_t L, const std::vector<std::size_t>& A, double t,
                                                   core::Rng& rng);

struct TwoSided {
  core::Estimate lhs;
  core::Estimate rhs;
};

// LHS = E[prod_{x in A} eta_t(x)] from voter runs, RHS = E[prod_{y in dual} eta0(y)]
// from independent coalescing walks.
TwoSided check_voter_duality(const SpinField& eta0, const std::vector<std::size_t>& A, double t,
                             const core::McConfig& mc);

InterfaceSet interface_of(const SpinField& eta);

// Moves interface particles under the arrows of `log` up to time t. Arrow
// b -> b+1 pushes a particle at b to b+1, arrow b+1 -> b pushes a particle at
// b to b-1; a particle landing on another one annihilates with it.
InterfaceSet evolve_interface_walks(const InterfaceSet& I0, std::size_t L, const ArrowLog& log, double t);

// Annihilating rate-1 simple random walks on the bonds of the cycle.
InterfaceSet simulate_annihilating_walks(std::size_t L, const InterfaceSet& I0, double t, core::Rng& rng);

// Number of elements of I in the clockwise bond interval [x, y-1].
std::size_t count_in_interval(const InterfaceSet& I, std::size_t L, std::size_t x, std::size_t y);

// LHS = P(|X_t ∩ [x, y-1]| even) from annihilating walks, RHS = P(eta_t(x) = eta_t(y))
// from voter runs.
TwoSided parity_duality_check(const SpinField& eta0, std::size_t x, std::size_t y, double t,
                              const core::McConfig& mc);

// E[f(eta_t)] for the voter chain on {0,1}^L started from eta0, L <= 12.
// States are bit masks with bit x = eta(x).
double exact_expectation(const SpinField& eta0, const std::function<double(std::uint32_t)>& f, double t);
// E[prod_{x in A} eta_t(x)].
double exact_oracle(const SpinField& eta0, const std::vector<std::size_t>& A, double t);
// P(eta_t(x) = eta_t(y)).
double exact_agreement(const SpinField& eta0, std::size_t x, std::size_t y, double t);

struct ClusteringCurve {
  std::vector<double> t_grid;
  std::vector<core::Estimate> agree;  // P(eta_t(x) = eta_t(y))
  std::vector<double> lower_bound;     // P(tau_{x,y} <= t)
};

// Probability that two walkers on the cycle started distance d apart have met
// by time t. Their difference jumps +-1 at total rate 2.
double meeting_probability(std::size_t L, std::size_t d, double t);

ClusteringCurve clustering_curve(const SpinField& eta0, std::size_t x, std::size_t y,
                                 const std::vector<double>& t_grid, const core::McConfig& mc);

}  // namespace duality::voter
