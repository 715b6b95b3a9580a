#include "duality/sbm/sbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "duality/core/error.hpp"
#include "duality/core/processes.hpp"

namespace duality::sbm {

using core::Rng;

void FieldPair::validate() const {
  if (u.size() != v.size()) throw SizeError("FieldPair: u and v differ in length");
  if (u.size() < 3) throw ParameterError("FieldPair: need at least 3 sites");
  if (!(dx > 0.0)) throw ParameterError("FieldPair: dx must be positive");
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!(u[i] >= 0.0) || !(v[i] >= 0.0)) throw DomainError("FieldPair: fields must be nonnegative");
}

void SbmParams::validate() const {
  if (!(std::abs(rho) <= 1.0)) throw ParameterError("SbmParams: |rho| > 1");
  if (!(gamma >= 0.0)) throw ParameterError("SbmParams: gamma < 0");
  if (!(dx > 0.0) || !(dt > 0.0)) throw ParameterError("SbmParams: dt and dx must be positive");
  if (dt > dx * dx / 2.0 * (1.0 + 1e-12)) throw ParameterError("SbmParams: dt > dx^2/2 (unstable)");
}

void laplacian(const std::vector<double>& f, Boundary b, double dx, std::vector<double>& out) {
  const std::size_t L = f.size();
  out.resize(L);
  const double inv = 1.0 / (dx * dx);
  for (std::size_t i = 1; i + 1 < L; ++i) out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv;
  if (b == Boundary::periodic) {
    out[0] = (f[1] - 2.0 * f[0] + f[L - 1]) * inv;
    out[L - 1] = (f[0] - 2.0 * f[L - 1] + f[L - 2]) * inv;
  } else {
    out[0] = (f[1] - f[0]) * inv;
    out[L - 1] = (f[L - 2] - f[L - 1]) * inv;
  }
}

namespace {

// base + amp * clip(xi, -base/amp, base/amp); the lower clip lands exactly on 0.
double truncated_add(double base, double amp, double xi, std::size_t& count) {
  const double k = base / amp;
  if (xi <= -k) {
    ++count;
    return 0.0;
  }
  if (xi > k) {
    ++count;
    return 2.0 * base;
  }
  return base + amp * xi;
}

}  // namespace

void step_sbm(FieldPair& s, const SbmParams& p, Rng& rng, PathLedger* ledger) {
  const std::size_t L = s.size();
  const double diff = p.dt / (2.0 * p.dx * p.dx);
  const double noise = p.gamma * p.dt / p.dx;
  const double rho_perp = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
  const bool periodic = s.boundary == Boundary::periodic;
  if (ledger && ledger->lambda.size() != L) ledger->lambda.assign(L, 0.0);

  // Sweep left to right keeping the pre-step value of the left neighbour.
  const double u_first = s.u[0], v_first = s.v[0];
  double u_prev = periodic ? s.u[L - 1] : s.u[0];
  double v_prev = periodic ? s.v[L - 1] : s.v[0];
  const bool truncate = p.positivity == Positivity::truncate;
  std::size_t clamps = 0, truncations = 0;
  double clamp_mass = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    const double ui = s.u[i], vi = s.v[i];
    double u_next, v_next;
    if (i + 1 < L) {
      u_next = s.u[i + 1];
      v_next = s.v[i + 1];
    } else if (periodic) {
      u_next = u_first;
      v_next = v_first;
    } else {
      u_next = ui;
      v_next = vi;
    }
    double un = ui + diff * (u_next - 2.0 * ui + u_prev);
    double vn = vi + diff * (v_next - 2.0 * vi + v_prev);
    const double uv = ui * vi;
    if (uv > 0.0 && noise > 0.0) {
      const double amp = std::sqrt(noise * uv);
      auto [x1, x2] = core::gaussian_pair_unchecked(p.rho, rho_perp, rng);
      if (truncate) {
        un = truncated_add(un, amp, x1, truncations);
        vn = truncated_add(vn, amp, x2, truncations);
      } else {
        un += amp * x1;
        vn += amp * x2;
      }
      if (ledger) ledger->lambda[i] += p.gamma * uv * p.dt;
    }
    if (un < 0.0) {
      ++clamps;
      clamp_mass -= un;
      un = 0.0;
    }
    if (vn < 0.0) {
      ++clamps;
      clamp_mass -= vn;
      vn = 0.0;
    }
    s.u[i] = un;
    s.v[i] = vn;
    u_prev = ui;
    v_prev = vi;
  }
  if (ledger) {
    ++ledger->steps;
    ledger->site_steps += 2 * L;
    ledger->clamps += clamps;
    ledger->clamp_mass += clamp_mass;
    ledger->truncations += truncations;
  }
}

FieldPair step_sbm(const FieldPair& state, const SbmParams& p, Rng& rng) {
  p.validate();
  state.validate();
  FieldPair out = state;
  step_sbm(out, p, rng, nullptr);
  return out;
}

std::size_t step_count(double t, double dt) {
  if (t < 0.0) throw RangeError("negative time");
  const double n = std::round(t / dt);
  if (std::abs(n * dt - t) > 1e-9 * std::max(1.0, t)) throw ParameterError("time is not a multiple of dt");
  return static_cast<std::size_t>(n);
}

void run_sbm(FieldPair& s, const SbmParams& p, double t, Rng& rng, PathLedger* ledger) {
  p.validate();
  s.validate();
  const std::size_t n = step_count(t, p.dt);
  for (std::size_t k = 0; k < n; ++k) step_sbm(s, p, rng, ledger);
}

std::vector<double> heat_flow(std::vector<double> f, Boundary b, double dx, double dt, std::size_t steps) {
  std::vector<double> lap;
  for (std::size_t k = 0; k < steps; ++k) {
    laplacian(f, b, dx, lap);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += 0.5 * dt * lap[i];
  }
  return f;
}

FieldPair heaviside_init(std::size_t L, double dx) {
  if (L < 3) throw ParameterError("heaviside_init: need L >= 3");
  FieldPair s;
  s.dx = dx;
  s.boundary = Boundary::zero_flux;
  s.origin = L / 2;
  s.u.assign(L, 0.0);
  s.v.assign(L, 0.0);
  for (std::size_t i = 0; i < L; ++i) {
    if (i <= s.origin) s.u[i] = 1.0;
    if (i >= s.origin) s.v[i] = 1.0;
  }
  return s;
}

std::optional<std::pair<std::size_t, std::size_t>> interface_region(const FieldPair& s, double delta) {
  if (!(delta > 0.0)) throw ParameterError("interface_region: delta must be positive");
  const std::size_t L = s.size();
  std::optional<std::pair<std::size_t, std::size_t>> both;
  for (std::size_t i = 0; i < L; ++i) {
    if (s.u[i] > delta && s.v[i] > delta) {
      if (!both) both = std::pair{i, i};
      both->second = i;
    }
  }
  if (both) return both;
  std::optional<std::pair<std::size_t, std::size_t>> abut;
  for (std::size_t i = 0; i + 1 < L; ++i) {
    const bool touch = (s.u[i] > delta && s.v[i + 1] > delta) || (s.v[i] > delta && s.u[i + 1] > delta);
    if (touch) {
      if (!abut) abut = std::pair{i, i + 1};
      abut->second = i + 1;
    }
  }
  return abut;
}

std::complex<double> duality_bracket(const std::vector<double>& u, const std::vector<double>& v,
                                     const std::vector<double>& phi, const std::vector<double>& psi, double dx,
                                     double rho) {
  double sum_part = 0.0, diff_part = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    sum_part += (u[i] + v[i]) * (phi[i] + psi[i]);
    diff_part += (u[i] - v[i]) * (phi[i] - psi[i]);
  }
  return {-std::sqrt(1.0 - rho) * sum_part * dx, std::sqrt(1.0 + rho) * diff_part * dx};
}

std::complex<double> self_duality_functional(const FieldPair& mu, const FieldPair& test, double rho) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("self_duality_functional: need |rho| < 1");
  if (mu.size() != test.size()) throw SizeError("self_duality_functional: size mismatch");
  mu.validate();
  test.validate();
  return std::exp(duality_bracket(mu.u, mu.v, test.u, test.v, mu.dx, rho));
}

namespace {

core::McConfig sub_config(const core::McConfig& mc, std::uint64_t tag) {
  core::McConfig c = mc;
  c.seed = core::derive_stream(mc.seed, tag);
  return c;
}

ComplexEstimate complex_estimate(const std::vector<std::complex<double>>& z) {
  std::vector<double> re(z.size()), im(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    re[i] = z[i].real();
    im[i] = z[i].imag();
  }
  return {core::estimate_mean(re), core::estimate_mean(im)};
}

void check_pair(const FieldPair& a, const FieldPair& b, const SbmParams& p) {
  a.validate();
  b.validate();
  p.validate();
  if (a.size() != b.size()) throw SizeError("fields and test functions differ in length");
  if (std::abs(a.dx - p.dx) > 1e-12 || std::abs(b.dx - p.dx) > 1e-12) throw ParameterError("dx mismatch");
  if (!(std::abs(p.rho) < 1.0)) throw DomainError("self-duality needs |rho| < 1");
}

}  // namespace

SelfDualityReport check_self_duality(const FieldPair& init, const FieldPair& test, const SbmParams& p, double t,
                                     const core::McConfig& mc) {
  check_pair(init, test, p);
  struct Sample {
    std::complex<double> lhs, rhs;
    std::size_t clamps = 0, site_steps = 0;
  };
  auto samples = core::run_replicates<Sample>(mc.replicates, mc.workers, [&](std::size_t i) {
    Rng base(mc.seed, i);
    Sample out;
    PathLedger la, lb;
    FieldPair a = init;
    Rng ra = base.split(1);
    run_sbm(a, p, t, ra, &la);
    out.lhs = std::exp(duality_bracket(a.u, a.v, test.u, test.v, p.dx, p.rho));
    FieldPair b = test;
    Rng rb = base.split(2);
    run_sbm(b, p, t, rb, &lb);
    out.rhs = std::exp(duality_bracket(init.u, init.v, b.u, b.v, p.dx, p.rho));
    out.clamps = la.clamps + lb.clamps;
    out.site_steps = la.site_steps + lb.site_steps;
    return out;
  });
  std::vector<std::complex<double>> l, r;
  std::size_t clamps = 0, site_steps = 0;
  for (const auto& s : samples) {
    l.push_back(s.lhs);
    r.push_back(s.rhs);
    clamps += s.clamps;
    site_steps += s.site_steps;
  }
  return {complex_estimate(l), complex_estimate(r), site_steps ? double(clamps) / double(site_steps) : 0.0};
}

ComplexEstimate martingale_residual(const FieldPair& init, const FieldPair& test, const SbmParams& p, double t,
                                    const core::McConfig& mc) {
  check_pair(init, test, p);
  const std::size_t n = step_count(t, p.dt);
  std::vector<double> lphi, lpsi;
  laplacian(test.u, test.boundary, p.dx, lphi);
  laplacian(test.v, test.boundary, p.dx, lpsi);
  const double ito = 4.0 * (1.0 - p.rho * p.rho);
  auto samples = core::run_replicates<std::complex<double>>(mc.replicates, mc.workers, [&](std::size_t i) {
    Rng rng = Rng(mc.seed, i).split(1);
    FieldPair s = init;
    const std::complex<double> f0 = std::exp(duality_bracket(s.u, s.v, test.u, test.v, p.dx, p.rho));
    std::complex<double> f = f0, drift = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::complex<double> lap_term = duality_bracket(s.u, s.v, lphi, lpsi, p.dx, p.rho);
      double branching = 0.0;
      for (std::size_t j = 0; j < s.size(); ++j) branching += test.u[j] * test.v[j] * p.gamma * s.u[j] * s.v[j];
      drift += f * (0.5 * lap_term + ito * branching * p.dx) * p.dt;
      step_sbm(s, p, rng, nullptr);
      f = std::exp(duality_bracket(s.u, s.v, test.u, test.v, p.dx, p.rho));
    }
    return f - f0 - drift;
  });
  return complex_estimate(samples);
}

std::vector<SeparationPoint> separation_stat(const FieldPair& init, const SbmParams& p,
                                             const std::vector<double>& gammas, double t, std::size_t site,
                                             double dt_gamma, const core::McConfig& mc) {
  init.validate();
  if (site >= init.size()) throw RangeError("separation_stat: site out of range");
  std::vector<SeparationPoint> out;
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    SbmParams q = p;
    q.gamma = gammas[g];
    if (q.gamma > 0.0) q.dt = std::min(p.dt, dt_gamma / q.gamma);
    // Keep t an exact multiple of the step.
    q.dt = t / std::ceil(t / q.dt - 1e-9);
    q.validate();
    const auto sub = sub_config(mc, g);
    auto samples = core::run_replicates<std::pair<double, PathLedger>>(sub.replicates, sub.workers, [&](std::size_t i) {
      Rng rng(sub.seed, i);
      FieldPair s = init;
      PathLedger led;
      run_sbm(s, q, t, rng, &led);
      led.lambda.clear();
      return std::pair{s.u[site] * s.v[site], led};
    });
    std::vector<double> uv;
    std::size_t clamps = 0, site_steps = 0;
    for (const auto& [x, led] : samples) {
      uv.push_back(x);
      clamps += led.clamps;
      site_steps += led.site_steps;
    }
    out.push_back({q.gamma, q.dt, core::estimate_mean(uv), site_steps ? double(clamps) / double(site_steps) : 0.0});
  }
  return out;
}

RescalingReport rescaling_check(const FieldPair& init, const SbmParams& p, unsigned K, double t, std::size_t site,
                                const core::McConfig& mc) {
  if (K == 0) throw ParameterError("rescaling_check: K must be positive");
  init.validate();
  p.validate();
  if (site >= init.size()) throw RangeError("rescaling_check: site out of range");
  const double k = K;
  SbmParams coarse = p;
  SbmParams fine = p;
  fine.dx = p.dx / k;
  fine.gamma = p.gamma * k;
  fine.dt = p.dt / (k * k);
  FieldPair fine_init = init;
  fine_init.dx = fine.dx;
  const double t_coarse = k * k * t;
  auto samples = core::run_replicates<std::pair<double, double>>(mc.replicates, mc.workers, [&](std::size_t i) {
    Rng base(mc.seed, i);
    FieldPair a = init;
    Rng ra = base.split(1);
    run_sbm(a, coarse, t_coarse, ra);
    FieldPair b = fine_init;
    Rng rb = base.split(2);
    run_sbm(b, fine, t, rb);
    return std::pair{a.u[site], b.u[site]};
  });
  std::vector<double> a, b;
  for (const auto& [x, y] : samples) {
    a.push_back(x);
    b.push_back(y);
  }
  RescalingReport rep;
  rep.coarse = core::estimate_mean(a);
  rep.fine = core::estimate_mean(b);
  rep.ks = core::ks_two_sample(a, b);
  return rep;
}

double critical_curve(double rho) {
  if (!(rho >= -1.0) || !(rho < 1.0)) throw DomainError("critical_curve: need -1 <= rho < 1");
  if (rho == -1.0) return std::numeric_limits<double>::infinity();
  return std::numbers::pi / std::acos(-rho);
}

MomentCurve moment_growth_experiment(const SbmParams& p, double moment, std::size_t L,
                                     const std::vector<double>& t_grid, double tail_from, const core::McConfig& mc) {
  if (!(moment >= 1.0)) throw ParameterError("moment_growth_experiment: need p >= 1");
  if (t_grid.empty() || !std::is_sorted(t_grid.begin(), t_grid.end()))
    throw ParameterError("moment_growth_experiment: time grid must be sorted and nonempty");
  p.validate();
  FieldPair init;
  init.dx = p.dx;
  init.boundary = Boundary::periodic;
  init.u.assign(L, 1.0);
  init.v.assign(L, 1.0);
  init.validate();
  for (double t : t_grid) step_count(t, p.dt);

  // Every grid time gets its own replicates so the curve points are
  // independent, which the trend test assumes.
  struct Sample {
    double m = 0.0;
    PathLedger led;
  };
  MomentCurve out;
  out.t_grid = t_grid;
  std::vector<double> tail;
  std::size_t clamps = 0, truncations = 0, site_steps = 0;
  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    const auto sub = sub_config(mc, g);
    auto samples = core::run_replicates<Sample>(sub.replicates, sub.workers, [&](std::size_t i) {
      Rng rng(sub.seed, i);
      FieldPair s = init;
      Sample out;
      run_sbm(s, p, t_grid[g], rng, &out.led);
      out.led.lambda.clear();
      double acc = 0.0;
      for (double x : s.u) acc += moment == 2.0 ? x * x : std::pow(x, moment);
      out.m = acc / double(L);
      return out;
    });
    std::vector<double> col;
    for (const auto& smp : samples) {
      col.push_back(smp.m);
      clamps += smp.led.clamps;
      truncations += smp.led.truncations;
      site_steps += smp.led.site_steps;
    }
    out.moment.push_back(core::estimate_mean(col));
    if (t_grid[g] >= tail_from) tail.push_back(out.moment.back().value);
  }
  if (tail.size() >= 3) out.trend = core::mann_kendall(tail);
  out.clamp_rate = site_steps ? double(clamps) / double(site_steps) : 0.0;
  out.truncation_rate = site_steps ? double(truncations) / double(site_steps) : 0.0;
  return out;
}

std::vector<double> second_moment_exact(double rho, double gamma, double dx, std::size_t L,
                                        const std::vector<double>& t_grid) {
  if (L < 3) throw ParameterError("second_moment_exact: need L >= 3");
  if (!std::is_sorted(t_grid.begin(), t_grid.end())) throw ParameterError("second_moment_exact: unsorted grid");
  const double D = 1.0 / (dx * dx), src = gamma / dx;
  const std::size_t n = 2 * L;
  auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy) {
    for (std::size_t part = 0; part < 2; ++part) {
      const double* f = y.data() + part * L;
      double* df = dy.data() + part * L;
      for (std::size_t z = 0; z < L; ++z) df[z] = D * (f[(z + 1) % L] + f[(z + L - 1) % L] - 2.0 * f[z]);
    }
    dy[0] += src * y[L];
    dy[L] += rho * src * y[L];
  };
  std::vector<double> y(n, 1.0), k1(n), k2(n), k3(n), k4(n), tmp(n), out;
  const double h_max = 0.05 / D;
  double t = 0.0;
  for (double target : t_grid) {
    while (t < target) {
      const double h = std::min(h_max, target - t);
      rhs(y, k1);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
      rhs(tmp, k2);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
      rhs(tmp, k3);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
      rhs(tmp, k4);
      for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      t += h;
    }
    out.push_back(y[0]);
  }
  return out;
}

void write_field_csv(std::ostream& os, const FieldPair& s, const std::vector<double>& lambda) {
  if (!lambda.empty() && lambda.size() != s.size()) throw SizeError("write_field_csv: Lambda length mismatch");
  os << "site,x,u,v,Lambda\n";
  os.precision(17);
  for (std::size_t i = 0; i < s.size(); ++i)
    os << i << ',' << s.x(i) << ',' << s.u[i] << ',' << s.v[i] << ',' << (lambda.empty() ? 0.0 : lambda[i]) << '\n';
}

}  // namespace duality::sbm
