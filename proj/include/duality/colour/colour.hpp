#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include "duality/core/parallel.hpp"
#include "duality/core/rng.hpp"
#include "duality/core/stats.hpp"
#include "duality/sbm/sbm.hpp"

// Coloured moment dual of the lattice symbiotic branching system.
//
// Walkers live on the same lattice as sbm_field and jump at rate 1/(2dx²) to
// each side, so their generator is the Δ/2 used there. Collision local time
// is co-location time divided by dx; while a same-coloured pair sits on one
// site its flip clock runs at rate γ per unit local time (γ/dx in real time).
//
// A colouring is a bit mask: bit i set means walker i carries colour 2.
namespace duality::colour {

using Colouring = std::uint32_t;
using ColourMeasure = std::vector<double>;  // indexed by Colouring, length 2^n

inline constexpr std::size_t kMaxWalkers = 12;

struct WalkerLattice {
  std::size_t L = 32;
  double dx = 0.25;
  sbm::Boundary boundary = sbm::Boundary::periodic;

  static WalkerLattice of(const sbm::FieldPair& s) { return {s.size(), s.dx, s.boundary}; }
  double jump_rate() const { return 1.0 / (dx * dx); }  // both directions together
  void validate() const;
};

// Motion only. Colours never influence where walkers go, so one path can be
// shared across colour runs with different γ and ρ.
struct WalkerPath {
  struct Jump {
    double time;
    std::uint32_t walker;
    std::size_t to;
  };
  WalkerLattice lattice;
  double horizon = 0.0;
  std::vector<std::size_t> start;
  std::vector<Jump> jumps;

  std::size_t size() const { return start.size(); }
  std::vector<std::size_t> positions_at(double t) const;
};

WalkerPath sample_walker_path(const WalkerLattice& lat, const std::vector<std::size_t>& x, double t, core::Rng& rng);

using Pair = std::pair<std::uint8_t, std::uint8_t>;

// Maximal time interval during which a fixed, nonempty set of pairs is co-located.
struct CoLocation {
  double begin;
  double end;
  std::vector<Pair> pairs;
};

std::vector<CoLocation> colocation_intervals(const WalkerPath& path, double t);

// Local times are co-location times divided by dx. L_pair is row-major n×n,
// filled for i < j.
struct LocalTimeLedger {
  std::size_t n = 0;
  std::vector<double> L_pair;
  double L_eq = 0.0;
  double L_neq = 0.0;

  double pair(std::size_t i, std::size_t j) const { return i < j ? L_pair[i * n + j] : L_pair[j * n + i]; }
  double total() const;
};

struct ColouredWalkers {
  std::vector<std::size_t> positions;
  Colouring colours = 0;
  LocalTimeLedger ledger;
  std::size_t flips = 0;

  double log_weight(double gamma, double rho) const { return gamma * (ledger.L_eq + rho * ledger.L_neq); }
};

// Colour dynamics on a given path up to time t <= path.horizon.
ColouredWalkers run_colours(const WalkerPath& path, Colouring c, double gamma, double t, core::Rng& rng);

// Motion from rng.split(1), colours from rng.split(2).
ColouredWalkers simulate_coloured_dual(const WalkerLattice& lat, const std::vector<std::size_t>& x, Colouring c,
                                       double gamma, double rho, double t, const core::Rng& rng);

// (u,v)^(b) at the walker positions: Π_i (b_i == 1 ? u : v)(x_i).
double colour_product(const sbm::FieldPair& s, const std::vector<std::size_t>& x, Colouring b);

struct MomentDualityReport {
  core::Estimate lhs;  // E Π (u_t, v_t)^(c_i)(x_i)
  core::Estimate rhs;  // E (u0, v0)^(C_t)(X_t) exp(γ(L_eq + ρ L_neq))
  double weight_cv = 0.0;
  bool heavy_tail = false;  // weight_cv > 10
};

// n = |x| <= 4. LHS runs step_sbm with stream Rng(seed, i).split(1), the dual
// uses Rng(seed, i).split(2) on the lattice of init.
MomentDualityReport check_moment_duality(const sbm::FieldPair& init, const std::vector<std::size_t>& x, Colouring c,
                                         const sbm::SbmParams& p, double t, const core::McConfig& mc);

struct ColourTrajectory {
  std::vector<double> times;
  std::vector<ColourMeasure> measures;
};

// M_t(b) = E[1{C_t = b} exp(γ(L_eq + ρ L_neq)) | path], by exact matrix
// exponentials over each co-location interval. If traj is given, M is
// recorded at 0 and at the end of every interval.
ColourMeasure evolve_colour_measure(const WalkerPath& path, Colouring c, double gamma, double rho, double t,
                                    ColourTrajectory* traj = nullptr);

// Conditional Monte Carlo of the same quantity: colours simulated `samples`
// times on the fixed path. Returns one estimate per colouring.
std::vector<core::Estimate> conditional_colour_measure(const WalkerPath& path, Colouring c, double gamma, double rho,
                                                       double t, std::size_t samples, const core::Rng& rng);

// Jump operator of the infinite-rate ρ = -1 limit for the pair (l1, l2).
ColourMeasure k_infinity_apply(const ColourMeasure& M, std::size_t l1, std::size_t l2);

struct MeetingSchedule {
  struct Meeting {
    double tau;
    std::size_t l1;
    std::size_t l2;
  };
  std::vector<double> start;  // starting positions in space units
  std::vector<Meeting> meetings;
};

// A pair is recorded when it becomes co-located and differs from the pair
// recorded last. Pairs that meet in the same jump share one time.
MeetingSchedule meeting_schedule(const WalkerPath& path, double t);

// ρ = -1 limit: M = δ_c, then K∞ at every meeting with tau <= t.
// Coinciding starts throw PreconditionError.
ColourMeasure evolve_colour_measure_infinite(const MeetingSchedule& schedule, Colouring c, double t,
                                             ColourTrajectory* traj = nullptr);

// Two same-coloured walkers from x1, x2: the flip count over [0, t] is 0 or
// 1, and P(flip) = 1 - E[exp(-γ L_pair(t))], computed on the killed pair chain.
double flip_probability_exact(const WalkerLattice& lat, std::size_t x1, std::size_t x2, double gamma, double t);

// Delayed annihilating walks: each co-located pair is removed at rate γ per
// unit local time. Returns survivor positions (sorted).
std::vector<std::size_t> simulate_delayed_annihilating_walks(const WalkerLattice& lat, std::vector<std::size_t> x,
                                                             double gamma, double t, core::Rng& rng);

struct AnnihilatingReport {
  core::Estimate lhs;  // E Π (1 - 2 u_t(x_i))
  core::Estimate rhs;  // E Π over survivors (1 - 2 u0(y))
};

// Finite γ on the lattice: sbm_field at ρ = -1 from (u0, 1 - u0) against
// delayed annihilating walks. init.v must equal 1 - init.u.
AnnihilatingReport check_annihilating_moment_duality(const sbm::FieldPair& init, const std::vector<std::size_t>& x,
                                                     const sbm::SbmParams& p, double t, const core::McConfig& mc);

// Columns time,colouring,weight; the colouring is written as a string of 1s
// and 2s, walker 0 first.
void write_colour_csv(std::ostream& os, const ColourTrajectory& traj, std::size_t n);

}  // namespace duality::colour
