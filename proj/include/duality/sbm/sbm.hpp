#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "duality/core/parallel.hpp"
#include "duality/core/rng.hpp"
#include "duality/core/stats.hpp"

// Lattice Euler-Maruyama scheme for the symbiotic branching system
//   du = ½Δu dt + sqrt(γ u v) dW1,  dv = ½Δv dt + sqrt(γ u v) dW2,  d<W1,W2> = ρ dt.
namespace duality::sbm {

enum class Boundary { periodic, zero_flux };

struct FieldPair {
  double dx = 0.25;
  Boundary boundary = Boundary::periodic;
  std::vector<double> u;
  std::vector<double> v;
  // Site index sitting at x = 0.
  std::size_t origin = 0;

  std::size_t size() const { return u.size(); }
  double x(std::size_t i) const { return (static_cast<double>(i) - static_cast<double>(origin)) * dx; }
  void validate() const;
};

// How a step keeps the fields nonnegative.
//  clamp:    negative results are set to 0 (adds mass; counted in the ledger).
//  truncate: each Gaussian is clipped symmetrically to [-k, k], k = (heat-updated
//            value) / noise amplitude, so the step has exactly mean zero noise
//            and cannot go negative. Clipped draws are counted as truncations.
enum class Positivity { clamp, truncate };

struct SbmParams {
  double rho = 0.0;
  double gamma = 1.0;
  double dt = 0.01;
  double dx = 0.25;
  Positivity positivity = Positivity::clamp;
  // Throws ParameterError on |rho| > 1, gamma < 0, dt <= 0 or dt > dx²/2.
  void validate() const;
};

// Per-path bookkeeping: Λ_i = Σ γ u_i v_i dt (pre-step values), and the clamp
// events that kept the fields nonnegative.
struct PathLedger {
  std::vector<double> lambda;
  std::size_t steps = 0;
  std::size_t site_steps = 0;
  std::size_t clamps = 0;
  double clamp_mass = 0.0;  // total mass added by clamping
  std::size_t truncations = 0;
  double clamp_rate() const { return site_steps ? double(clamps) / double(site_steps) : 0.0; }
};

// Discrete Laplacian (f_{i+1} - 2 f_i + f_{i-1}) / dx²; zero-flux drops the
// missing neighbour term, which keeps the operator symmetric.
void laplacian(const std::vector<double>& f, Boundary b, double dx, std::vector<double>& out);

// One step in place. Sites with u_i v_i = 0 draw no noise.
void step_sbm(FieldPair& state, const SbmParams& p, core::Rng& rng, PathLedger* ledger = nullptr);
FieldPair step_sbm(const FieldPair& state, const SbmParams& p, core::Rng& rng);

std::size_t step_count(double t, double dt);
// Runs round(t / dt) steps.
void run_sbm(FieldPair& state, const SbmParams& p, double t, core::Rng& rng, PathLedger* ledger = nullptr);

// Explicit scheme f += (dt/2) Δf, `steps` times. This is the exact mean of the
// stochastic scheme when no clamping occurs.
std::vector<double> heat_flow(std::vector<double> f, Boundary b, double dx, double dt, std::size_t steps);

// Zero-flux complementary Heaviside pair. With j = L/2, u = 1 on sites i <= j
// and v = 1 on i >= j; site j (x = 0) carries both.
FieldPair heaviside_init(std::size_t L, double dx);

// Smallest interval of sites covering where the δ-supports of u and v overlap,
// or where they abut if they do not overlap. Empty if they are further apart.
std::optional<std::pair<std::size_t, std::size_t>> interface_region(const FieldPair& s, double delta = 1e-6);

// exp(-sqrt(1-ρ) <u+v, φ+ψ> + i sqrt(1+ρ) <u-v, φ-ψ>) with dx-weighted pairings.
std::complex<double> self_duality_functional(const FieldPair& mu, const FieldPair& test, double rho);
// The exponent itself, the bracket <<u, v, φ, ψ>>.
std::complex<double> duality_bracket(const std::vector<double>& u, const std::vector<double>& v,
                                     const std::vector<double>& phi, const std::vector<double>& psi, double dx,
                                     double rho);

struct ComplexEstimate {
  core::Estimate re;
  core::Estimate im;
};

struct SelfDualityReport {
  ComplexEstimate lhs;  // E F(u_t, v_t, φ, ψ)
  ComplexEstimate rhs;  // E F(u0, v0, φ_t, ψ_t)
  double clamp_rate = 0.0;
};

SelfDualityReport check_self_duality(const FieldPair& init, const FieldPair& test, const SbmParams& p, double t,
                                     const core::McConfig& mc);

// E of F(t) - F(0) - Σ_n [½ F <<u,v,Δφ,Δψ>> dt + 4(1-ρ²) F dx Σ_i φ_i ψ_i dΛ_i],
// F evaluated at the left end of each step.
ComplexEstimate martingale_residual(const FieldPair& init, const FieldPair& test, const SbmParams& p, double t,
                                    const core::McConfig& mc);

struct SeparationPoint {
  double gamma;
  double dt;
  core::Estimate uv;
  double clamp_rate;
};

// E[u_t(site) v_t(site)] for each γ. The time step shrinks with γ as
// min(p.dt, dt_gamma / γ) to keep the noise amplitude per step bounded.
std::vector<SeparationPoint> separation_stat(const FieldPair& init, const SbmParams& p,
                                             const std::vector<double>& gammas, double t, std::size_t site,
                                             double dt_gamma, const core::McConfig& mc);

struct RescalingReport {
  core::TestResult ks;
  core::Estimate coarse;  // u_{K²t}(site) at (dx, γ, dt)
  core::Estimate fine;    // u_t(site) at (dx/K, Kγ, dt/K²)
};

// Both systems share the same lattice array (scale-covariant initial data) and
// are sampled at the same site index.
RescalingReport rescaling_check(const FieldPair& init, const SbmParams& p, unsigned K, double t, std::size_t site,
                                const core::McConfig& mc);

// π / arccos(-ρ); +∞ at ρ = -1, domain error at ρ = 1.
double critical_curve(double rho);

struct MomentCurve {
  std::vector<double> t_grid;
  std::vector<core::Estimate> moment;
  core::TestResult trend;  // Mann-Kendall over the grid points with t >= tail_from
  double clamp_rate = 0.0;
  double truncation_rate = 0.0;
};

// E[u_t(x)^p] from u ≡ v ≡ 1 on a periodic lattice of L sites, averaged over
// sites within each path (the law is translation invariant).
MomentCurve moment_growth_experiment(const SbmParams& p, double moment, std::size_t L,
                                     const std::vector<double>& t_grid, double tail_from, const core::McConfig& mc);

// Exact E[u_t(x)^2] for the continuous-time lattice system from u ≡ v ≡ 1 on a
// periodic lattice of L sites. With a(z) = E[u_0 u_z], b(z) = E[u_0 v_z]:
//   a' = Δ a + (γ/dx) δ_0 b(0),  b' = Δ b + ρ (γ/dx) δ_0 b(0),
// where Δ is the difference-walk generator (rate 1/dx² to each side). Solved
// by classical RK4; returns a(0) at each grid time.
std::vector<double> second_moment_exact(double rho, double gamma, double dx, std::size_t L,
                                        const std::vector<double>& t_grid);

// CSV with columns site,x,u,v,Lambda.
void write_field_csv(std::ostream& os, const FieldPair& s, const std::vector<double>& lambda = {});

}  // namespace duality::sbm
