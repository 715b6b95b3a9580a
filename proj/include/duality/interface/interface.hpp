#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "duality/core/parallel.hpp"
#include "duality/core/rng.hpp"
#include "duality/core/stats.hpp"

// Continuum particle systems on the line or a torus: independent, coalescing,
// annihilating and delayed Brownian motions, plus the constructions built on
// them (continuum voter model, interface SDE, annihilating colouring).
namespace duality::interface {

struct Domain {
  enum class Kind { line, torus };
  Kind kind = Kind::line;
  double C = 1.0;  // circumference when kind == torus

  static Domain line() { return {Kind::line, 1.0}; }
  static Domain torus(double C = 1.0) { return {Kind::torus, C}; }
  bool is_torus() const { return kind == Kind::torus; }
};

enum class Mode { independent, coalescing, annihilating, delayed_coalescing, delayed_annihilating };

// Drift b(x, s) added to the Brownian increments.
using Drift = std::function<double(double x, double s)>;

/// Alive particles sorted by position (in [0, C) on a torus).
///
/// Collisions between neighbours in a step are detected by order swap or,
/// failing that, by the Brownian-bridge touching probability of their gap.
/// A coalesced particle keeps the path of the left one. Delayed modes let
/// particles pass through each other and resolve a pair at rate γ/(2ε) while
/// its gap is below ε.
struct ParticleSystem1D {
  Domain domain;
  Mode mode = Mode::independent;
  double gamma = 0.0;
  double eps = 0.01;
  double time = 0.0;
  std::vector<double> x;
  std::vector<std::size_t> id;
  std::vector<std::pair<std::size_t, std::size_t>> merges;  // (absorbed id, survivor id)
  // Optional per-particle noise: if non-empty, particle k draws its
  // increments from streams[k] (kept aligned with x and id).
  std::vector<core::Rng> streams;

  // Sorts, wraps onto the torus and resolves exact ties at time 0
  // (coalescing merges, annihilating removes pairs). Ids are 0..n-1 in
  // input order.
  static ParticleSystem1D make(Domain domain, Mode mode, std::vector<double> positions, double gamma = 0.0,
                               double eps = 0.01);

  std::size_t count() const { return x.size(); }
  // Gives particle `id` the stream base.split(id).
  void attach_streams(const core::Rng& base);
  // Maps every starting id to the id of the particle now carrying it.
  std::vector<std::size_t> family_of(std::size_t n_initial) const;
  void validate() const;
};

void step_particles(ParticleSystem1D& sys, double dt, core::Rng& rng, const Drift& drift = nullptr);
// Steps of dt, the last one shortened to land on sys.time + t.
void run_particles(ParticleSystem1D& sys, double dt, double t, core::Rng& rng, const Drift& drift = nullptr);

// P(two standard Brownian motions at distance d have not met by t) = erf(d / (2 sqrt t)).
double pair_survival(double d, double t);

/// Piecewise constant function: values[0] left of breakpoints[0], values[k]
/// on [breakpoints[k-1], breakpoints[k]), values.back() to the right.
/// Heat evolution is S_t f(x) = E f(x + B_t) with standard Brownian B.
struct PiecewiseConstantProfile {
  std::vector<double> breakpoints;
  std::vector<double> values;

  static PiecewiseConstantProfile constant(double c) { return {{}, {c}}; }
  static PiecewiseConstantProfile step(double at, double left, double right) { return {{at}, {left, right}}; }

  void validate() const;
  double operator()(double x) const;
  double heat(double x, double t) const;
  double heat_dx(double x, double t) const;
  bool is_constant() const;
};

struct ColouringState {
  ParticleSystem1D interfaces;  // annihilating
  int leftmost_colour = 1;
  int colour_at(double x) const;
};

struct ColouringResult {
  ColouringState state;
  std::vector<double> grid;
  std::vector<double> u_hat;
  std::vector<double> v_hat;
};

// Annihilating interfaces started from the colour changes of (u0, v0) on the
// line. With w0 = u0 + v0 constant they are standard Brownian motions,
// otherwise they follow the interface SDE drift -∂_x log S_s w0.
// Throws PreconditionError unless u0 v0 = 0, w0 > 0, and breakpoints are
// shared and at least 1e-9 apart.
ColouringResult simulate_abm_colouring(const PiecewiseConstantProfile& u0, const PiecewiseConstantProfile& v0,
                                       double t, double dt, const std::vector<double>& grid, core::Rng& rng);

// Continuum voter model at the query points: coalescing Brownian motions run
// for time t, each family then draws one Bernoulli(u0(endpoint)) type.
std::vector<std::uint8_t> continuous_voter(const std::function<double(double)>& u0, const std::vector<double>& x,
                                           double t, double dt, core::Rng& rng);

struct SdeOptions {
  double eps0 = 1e-4;     // I is pure Brownian on [0, eps0]
  double refine = 0.05;   // steps are min(dt, refine * s) after eps0
};

// Time grid 0, eps0, ... , t for the interface SDE.
std::vector<double> sde_time_grid(double t, double dt, const SdeOptions& opt = {});

// Euler-Maruyama for dI = -(∂_x w_s / w_s)(I) ds + dB. Returns I on sde_time_grid.
std::vector<double> simulate_interface_sde(double I0, const PiecewiseConstantProfile& w0, double dt, double t,
                                           core::Rng& rng, const SdeOptions& opt = {});

enum class EntranceInit { lattice, poisson, paired_square, paired_quarter };
std::string to_string(EntranceInit k);
EntranceInit entrance_init_from_string(const std::string& s);

// Starting positions on the torus of circumference C:
//  lattice: k/n;  poisson: Poisson(nC) uniform points;
//  paired_square: k/n and k/n + 1/n²;  paired_quarter: k/n and k/n + 1/(4n).
// An odd total is made even by dropping the last point; `dropped` reports it.
std::vector<double> entrance_positions(EntranceInit kind, std::size_t n, double C, core::Rng& rng,
                                       bool* dropped = nullptr);

struct EntranceRow {
  std::size_t n;
  double t;
  core::Estimate count;
  std::vector<std::size_t> counts;  // one per replicate
  std::size_t dropped = 0;          // replicates whose initial count was made even
};

// Annihilating Brownian motions from `kind` on the torus; replicate i uses
// Rng(seed, i) split by n. One row per (n, t).
std::vector<EntranceRow> entrance_law_experiment(EntranceInit kind, double C, const std::vector<std::size_t>& n_list,
                                                 const std::vector<double>& t_grid, double dt,
                                                 const core::McConfig& mc);

struct ConsistencyReport {
  core::TestResult counts_chi2;  // split vs direct
  core::TestResult gaps_ks;
  core::Estimate direct;
  core::Estimate split;
  core::Estimate halved;  // direct run at dt/2
  double shift = 0.0;     // |halved - direct|
  double ci_width = 0.0;  // width of the direct 95% CI
};

// Runs 0 -> s -> t (two legs, fresh noise on the second) against 0 -> t.
ConsistencyReport entrance_consistency_check(EntranceInit kind, std::size_t n, double C, double s, double t, double dt,
                                             const core::McConfig& mc);

struct DensityEstimate {
  double h;
  core::Estimate density;  // P(all windows [x_i - h, x_i + h] occupied) / (2h)^k
};

struct NPointDensity {
  DensityEstimate coarse;  // h
  DensityEstimate fine;    // h / 2
  bool atomic = false;     // fine/coarse > 1.5: the probability does not shrink with h
};

NPointDensity estimate_npoint_density(EntranceInit kind, std::size_t n, double C, double t,
                                      const std::vector<double>& x_points, double h, double dt,
                                      const core::McConfig& mc);

struct ThinningRow {
  double t;
  core::Estimate annihilating;  // alive count
  core::Estimate coalescing;
  core::Estimate ratio;  // annihilating / coalescing
  std::size_t violations = 0;  // paths with more aBMs than cBMs
};

// Same initial points and per-particle noise for both modes.
std::vector<ThinningRow> thinning_experiment(EntranceInit kind, std::size_t n, double C,
                                             const std::vector<double>& t_grid, double dt, const core::McConfig& mc);

struct Snapshot {
  double time;
  std::vector<std::size_t> id;
  std::vector<double> x;
};

// Snapshots at 0 and after every `every` steps, and at the end.
std::vector<Snapshot> record_trajectories(ParticleSystem1D sys, double dt, double t, std::size_t every,
                                          core::Rng& rng);

// Columns time,id,position,alive: one row per particle per snapshot; particles
// that have died are written once more with alive = 0 at their last position.
void write_particle_csv(std::ostream& os, const std::vector<Snapshot>& snaps);
// Columns x,u,v.
void write_colouring_csv(std::ostream& os, const ColouringResult& r);

}  // namespace duality::interface
