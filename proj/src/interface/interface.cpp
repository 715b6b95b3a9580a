#include "duality/interface/interface.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>

#include "duality/core/error.hpp"
#include "duality/core/processes.hpp"

namespace duality::interface {

using core::Rng;

namespace {

double wrap(double x, double C) {
  double r = std::fmod(x, C);
  if (r < 0.0) r += C;
  if (r >= C) r = 0.0;
  return r;
}

bool instant(Mode m) { return m == Mode::coalescing || m == Mode::annihilating; }
bool delayed(Mode m) { return m == Mode::delayed_coalescing || m == Mode::delayed_annihilating; }
bool coalesces(Mode m) { return m == Mode::coalescing || m == Mode::delayed_coalescing; }

// Keeps the particles flagged alive, ordered by (wrapped) position.
void rebuild(ParticleSystem1D& sys, std::vector<double>& y, const std::vector<char>& alive) {
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (!alive[k]) continue;
    if (sys.domain.is_torus()) y[k] = wrap(y[k], sys.domain.C);
    order.push_back(k);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
  std::vector<double> x;
  std::vector<std::size_t> id;
  std::vector<Rng> streams;
  x.reserve(order.size());
  id.reserve(order.size());
  for (auto k : order) {
    x.push_back(y[k]);
    id.push_back(sys.id[k]);
    if (!sys.streams.empty()) streams.push_back(sys.streams[k]);
  }
  sys.x = std::move(x);
  sys.id = std::move(id);
  sys.streams = std::move(streams);
}

}  // namespace

ParticleSystem1D ParticleSystem1D::make(Domain domain, Mode mode, std::vector<double> positions, double gamma,
                                        double eps) {
  if (domain.is_torus() && !(domain.C > 0.0)) throw ParameterError("ParticleSystem1D: circumference must be positive");
  if (delayed(mode) && (!(gamma > 0.0) || !(eps > 0.0)))
    throw ParameterError("ParticleSystem1D: delayed modes need gamma > 0 and eps > 0");
  for (double p : positions)
    if (!std::isfinite(p)) throw ParameterError("ParticleSystem1D: non-finite position");
  ParticleSystem1D s;
  s.domain = domain;
  s.mode = mode;
  s.gamma = gamma;
  s.eps = eps;
  s.id.resize(positions.size());
  std::iota(s.id.begin(), s.id.end(), std::size_t{0});
  std::vector<char> alive(positions.size(), 1);
  if (domain.is_torus())
    for (auto& p : positions) p = wrap(p, domain.C);
  std::vector<std::size_t> order(positions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return positions[a] < positions[b]; });
  if (instant(mode)) {
    for (std::size_t k = 0; k + 1 < order.size();) {
      const std::size_t a = order[k], b = order[k + 1];
      if (positions[a] != positions[b]) {
        ++k;
        continue;
      }
      if (mode == Mode::coalescing) {
        alive[b] = 0;
        s.merges.emplace_back(b, a);
        order.erase(order.begin() + static_cast<std::ptrdiff_t>(k + 1));
      } else {
        alive[a] = alive[b] = 0;
        k += 2;
      }
    }
  }
  rebuild(s, positions, alive);
  return s;
}

void ParticleSystem1D::attach_streams(const Rng& base) {
  streams.clear();
  for (auto i : id) streams.push_back(base.split(i));
}

std::vector<std::size_t> ParticleSystem1D::family_of(std::size_t n_initial) const {
  std::vector<std::size_t> parent(n_initial);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  for (const auto& [a, b] : merges) parent.at(a) = b;
  std::vector<std::size_t> out(n_initial);
  for (std::size_t i = 0; i < n_initial; ++i) {
    std::size_t r = i;
    while (parent[r] != r) r = parent[r];
    out[i] = r;
  }
  return out;
}

void ParticleSystem1D::validate() const {
  if (x.size() != id.size()) throw SizeError("ParticleSystem1D: x and id differ in length");
  if (!streams.empty() && streams.size() != x.size()) throw SizeError("ParticleSystem1D: stream count mismatch");
  for (std::size_t k = 0; k + 1 < x.size(); ++k)
    if (x[k] > x[k + 1]) throw PreconditionError("ParticleSystem1D: positions not sorted");
  if (domain.is_torus())
    for (double p : x)
      if (p < 0.0 || p >= domain.C) throw PreconditionError("ParticleSystem1D: position off the torus");
}

void step_particles(ParticleSystem1D& sys, double dt, Rng& rng, const Drift& drift) {
  if (!(dt > 0.0)) throw ParameterError("step_particles: dt must be positive");
  const std::size_t m = sys.x.size();
  const double sd = std::sqrt(dt);
  std::vector<double> y(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double z = sys.streams.empty() ? rng.normal() : sys.streams[k].normal();
    y[k] = sys.x[k] + sd * z + (drift ? drift(sys.x[k], sys.time) * dt : 0.0);
  }
  std::vector<char> alive(m, 1);
  const bool torus = sys.domain.is_torus();
  const double C = sys.domain.C;
  auto resolve = [&](std::size_t left, std::size_t right) {
    if (coalesces(sys.mode)) {
      alive[right] = 0;
      sys.merges.emplace_back(sys.id[right], sys.id[left]);
    } else {
      alive[left] = alive[right] = 0;
    }
  };
  if (instant(sys.mode) && m >= 2) {
    auto collide = [&](double gb, double ga) {
      if (gb <= 0.0 || ga <= 0.0) return true;
      return rng.uniform() < core::bridge_crossing_prob(gb, ga, dt, 2.0);
    };
    std::size_t cur = m;  // m: no current left particle
    for (std::size_t j = 0; j < m; ++j) {
      if (cur == m) {
        cur = j;
        continue;
      }
      if (collide(sys.x[j] - sys.x[cur], y[j] - y[cur])) {
        resolve(cur, j);
        if (!alive[cur]) cur = m;
      } else {
        cur = j;
      }
    }
    if (torus) {
      std::size_t first = m, last = m;
      for (std::size_t k = 0; k < m; ++k)
        if (alive[k]) {
          if (first == m) first = k;
          last = k;
        }
      if (first != last && collide(C - sys.x[last] + sys.x[first], C - y[last] + y[first])) resolve(first, last);
    }
  }
  rebuild(sys, y, alive);
  if (delayed(sys.mode) && sys.x.size() >= 2) {
    const double p = -std::expm1(-sys.gamma * dt / (2.0 * sys.eps));
    const std::size_t n = sys.x.size();
    std::vector<char> keep(n, 1);
    std::vector<char> used(n, 0);
    auto pair = [&](std::size_t a, std::size_t b, double gap) {
      if (used[a] || used[b] || !(gap < sys.eps) || !(rng.uniform() < p)) return;
      used[a] = used[b] = 1;
      if (coalesces(sys.mode)) {
        keep[b] = 0;
        sys.merges.emplace_back(sys.id[b], sys.id[a]);
      } else {
        keep[a] = keep[b] = 0;
      }
    };
    if (torus && n == 2) {
      pair(0, 1, std::min(sys.x[1] - sys.x[0], C - sys.x[1] + sys.x[0]));
    } else {
      for (std::size_t k = 0; k + 1 < n; ++k) pair(k, k + 1, sys.x[k + 1] - sys.x[k]);
      if (torus) pair(0, n - 1, C - sys.x[n - 1] + sys.x[0]);
    }
    auto z = sys.x;
    rebuild(sys, z, keep);
  }
  sys.time += dt;
}

void run_particles(ParticleSystem1D& sys, double dt, double t, Rng& rng, const Drift& drift) {
  if (!(dt > 0.0)) throw ParameterError("run_particles: dt must be positive");
  if (t < 0.0 && t > -1e-9) t = 0.0;  // grid arithmetic
  if (!(t >= 0.0)) throw ParameterError("run_particles: negative time");
  const double end = sys.time + t;
  const auto n = static_cast<std::size_t>(std::ceil(t / dt - 1e-9));
  for (std::size_t k = 0; k < n; ++k) {
    const double h = (k + 1 == n) ? end - sys.time : dt;
    if (h > 0.0) step_particles(sys, h, rng, drift);
  }
  sys.time = end;
}

double pair_survival(double d, double t) {
  if (t < 0.0) throw ParameterError("pair_survival: negative time");
  if (t == 0.0) return d != 0.0 ? 1.0 : 0.0;
  return std::erf(std::abs(d) / (2.0 * std::sqrt(t)));
}

void PiecewiseConstantProfile::validate() const {
  if (values.size() != breakpoints.size() + 1) throw SizeError("profile: need one more value than breakpoints");
  for (double v : values)
    if (!std::isfinite(v)) throw ParameterError("profile: non-finite value");
  for (std::size_t k = 0; k < breakpoints.size(); ++k) {
    if (!std::isfinite(breakpoints[k])) throw ParameterError("profile: non-finite breakpoint");
    if (k > 0 && !(breakpoints[k] > breakpoints[k - 1])) throw ParameterError("profile: breakpoints must increase");
  }
}

double PiecewiseConstantProfile::operator()(double x) const {
  const auto k = std::upper_bound(breakpoints.begin(), breakpoints.end(), x) - breakpoints.begin();
  return values[static_cast<std::size_t>(k)];
}

double PiecewiseConstantProfile::heat(double x, double t) const {
  if (t < 0.0) throw ParameterError("profile: negative time");
  if (t == 0.0) return (*this)(x);
  const double s = std::sqrt(t);
  double r = values[0];
  for (std::size_t k = 0; k < breakpoints.size(); ++k)
    r += (values[k + 1] - values[k]) * 0.5 * std::erfc(-(x - breakpoints[k]) / (s * std::sqrt(2.0)));
  return r;
}

double PiecewiseConstantProfile::heat_dx(double x, double t) const {
  if (!(t > 0.0)) throw ParameterError("profile: derivative needs t > 0");
  const double s = std::sqrt(t);
  double r = 0.0;
  for (std::size_t k = 0; k < breakpoints.size(); ++k) {
    const double z = (x - breakpoints[k]) / s;
    r += (values[k + 1] - values[k]) * std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * M_PI));
  }
  return r;
}

bool PiecewiseConstantProfile::is_constant() const {
  return std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; });
}

int ColouringState::colour_at(double x) const {
  const auto left = std::lower_bound(interfaces.x.begin(), interfaces.x.end(), x) - interfaces.x.begin();
  return left % 2 == 0 ? leftmost_colour : 3 - leftmost_colour;
}

std::vector<double> sde_time_grid(double t, double dt, const SdeOptions& opt) {
  if (!(dt > 0.0) || !(t >= 0.0)) throw ParameterError("sde_time_grid: need dt > 0 and t >= 0");
  if (!(opt.eps0 > 0.0) || !(opt.refine > 0.0)) throw ParameterError("sde_time_grid: bad options");
  std::vector<double> g = {0.0};
  if (t == 0.0) return g;
  if (t <= opt.eps0) {
    g.push_back(t);
    return g;
  }
  double s = opt.eps0;
  g.push_back(s);
  while (s < t) {
    s += std::min(dt, opt.refine * s);
    if (s > t || t - s < 1e-12 * t) s = t;
    g.push_back(s);
  }
  return g;
}

namespace {

Drift log_gradient_drift(const PiecewiseConstantProfile& w, double eps0) {
  return [w, eps0](double x, double s) {
    if (s < eps0) return 0.0;
    return -w.heat_dx(x, s) / w.heat(x, s);
  };
}

}  // namespace

std::vector<double> simulate_interface_sde(double I0, const PiecewiseConstantProfile& w0, double dt, double t, Rng& rng,
                                           const SdeOptions& opt) {
  w0.validate();
  const auto k = std::upper_bound(w0.breakpoints.begin(), w0.breakpoints.end(), I0) - w0.breakpoints.begin();
  const double right = w0.values[static_cast<std::size_t>(k)];
  const bool on_break = k > 0 && w0.breakpoints[static_cast<std::size_t>(k) - 1] == I0;
  const double left = on_break ? w0.values[static_cast<std::size_t>(k) - 1] : right;
  if (!(left > 0.0) || !(right > 0.0)) throw PreconditionError("simulate_interface_sde: w0 vanishes next to I0");
  for (double v : w0.values)
    if (v < 0.0) throw PreconditionError("simulate_interface_sde: w0 must be nonnegative");
  const auto grid = sde_time_grid(t, dt, opt);
  const auto drift = log_gradient_drift(w0, opt.eps0);
  std::vector<double> path = {I0};
  double I = I0;
  for (std::size_t n = 1; n < grid.size(); ++n) {
    const double s = grid[n - 1], h = grid[n] - s;
    I += drift(I, s) * h + std::sqrt(h) * rng.normal();
    path.push_back(I);
  }
  return path;
}

ColouringResult simulate_abm_colouring(const PiecewiseConstantProfile& u0, const PiecewiseConstantProfile& v0,
                                       double t, double dt, const std::vector<double>& grid, Rng& rng) {
  u0.validate();
  v0.validate();
  std::vector<double> bp = u0.breakpoints;
  bp.insert(bp.end(), v0.breakpoints.begin(), v0.breakpoints.end());
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  for (std::size_t k = 1; k < bp.size(); ++k)
    if (bp[k] - bp[k - 1] < 1e-9) throw PreconditionError("simulate_abm_colouring: breakpoints accumulate");
  PiecewiseConstantProfile w{bp, {}};
  std::vector<int> colour;
  for (std::size_t k = 0; k <= bp.size(); ++k) {
    const double at = bp.empty() ? 0.0 : (k == 0 ? bp[0] - 1.0 : (k == bp.size() ? bp.back() + 1.0 : 0.5 * (bp[k - 1] + bp[k])));
    const double a = u0(at), b = v0(at);
    if (a < 0.0 || b < 0.0 || a * b != 0.0 || a + b <= 0.0)
      throw PreconditionError("simulate_abm_colouring: need u0, v0 >= 0 with u0 v0 = 0 and u0 + v0 > 0");
    w.values.push_back(a + b);
    colour.push_back(a > 0.0 ? 1 : 2);
  }
  std::vector<double> starts;
  for (std::size_t k = 0; k < bp.size(); ++k)
    if (colour[k] != colour[k + 1]) starts.push_back(bp[k]);
  ColouringResult r;
  r.state.leftmost_colour = colour.front();
  r.state.interfaces = ParticleSystem1D::make(Domain::line(), Mode::annihilating, starts);
  if (w.is_constant()) {
    run_particles(r.state.interfaces, dt, t, rng);
  } else {
    const SdeOptions opt;
    const auto times = sde_time_grid(t, dt, opt);
    const auto drift = log_gradient_drift(w, opt.eps0);
    for (std::size_t n = 1; n < times.size(); ++n) step_particles(r.state.interfaces, times[n] - times[n - 1], rng, drift);
  }
  r.grid = grid;
  for (double g : grid) {
    const double wt = w.heat(g, t);
    const bool one = r.state.colour_at(g) == 1;
    r.u_hat.push_back(one ? wt : 0.0);
    r.v_hat.push_back(one ? 0.0 : wt);
  }
  return r;
}

std::vector<std::uint8_t> continuous_voter(const std::function<double(double)>& u0, const std::vector<double>& x,
                                           double t, double dt, Rng& rng) {
  auto sys = ParticleSystem1D::make(Domain::line(), Mode::coalescing, x);
  run_particles(sys, dt, t, rng);
  std::map<std::size_t, std::uint8_t> type;
  for (std::size_t k = 0; k < sys.count(); ++k) {
    const double p = u0(sys.x[k]);
    if (p < 0.0 || p > 1.0) throw DomainError("continuous_voter: u0 must take values in [0,1]");
    type[sys.id[k]] = rng.bernoulli(p) ? 1 : 0;
  }
  const auto fam = sys.family_of(x.size());
  std::vector<std::uint8_t> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = type.at(fam[i]);
  return out;
}

std::string to_string(EntranceInit k) {
  switch (k) {
    case EntranceInit::lattice: return "lattice";
    case EntranceInit::poisson: return "poisson";
    case EntranceInit::paired_square: return "paired_square";
    case EntranceInit::paired_quarter: return "paired_quarter";
  }
  return "?";
}

EntranceInit entrance_init_from_string(const std::string& s) {
  for (auto k : {EntranceInit::lattice, EntranceInit::poisson, EntranceInit::paired_square, EntranceInit::paired_quarter})
    if (to_string(k) == s) return k;
  throw ParameterError("unknown entrance init '" + s + "'");
}

std::vector<double> entrance_positions(EntranceInit kind, std::size_t n, double C, Rng& rng, bool* dropped) {
  if (n == 0 || !(C > 0.0)) throw ParameterError("entrance_positions: need n > 0 and C > 0");
  const double dn = static_cast<double>(n);
  const auto sites = static_cast<std::size_t>(std::llround(dn * C));
  std::vector<double> p;
  switch (kind) {
    case EntranceInit::lattice:
      for (std::size_t k = 0; k < sites; ++k) p.push_back(static_cast<double>(k) / dn);
      break;
    case EntranceInit::poisson: {
      const auto count = rng.poisson(dn * C);
      for (std::uint64_t k = 0; k < count; ++k) p.push_back(C * rng.uniform());
      break;
    }
    case EntranceInit::paired_square:
    case EntranceInit::paired_quarter: {
      const double gap = kind == EntranceInit::paired_square ? 1.0 / (dn * dn) : 1.0 / (4.0 * dn);
      for (std::size_t k = 0; k < sites; ++k) {
        p.push_back(static_cast<double>(k) / dn);
        p.push_back(static_cast<double>(k) / dn + gap);
      }
      break;
    }
  }
  if (dropped) *dropped = p.size() % 2 == 1;
  if (p.size() % 2 == 1) p.pop_back();
  return p;
}

std::vector<EntranceRow> entrance_law_experiment(EntranceInit kind, double C, const std::vector<std::size_t>& n_list,
                                                 const std::vector<double>& t_grid, double dt,
                                                 const core::McConfig& mc) {
  if (!std::is_sorted(t_grid.begin(), t_grid.end()) || t_grid.empty() || t_grid.front() < 0.0)
    throw ParameterError("entrance_law_experiment: t_grid must be nonempty, sorted and nonnegative");
  std::vector<EntranceRow> rows;
  for (auto n : n_list) {
    struct Out {
      std::vector<std::size_t> counts;
      bool dropped = false;
    };
    const auto runs = core::run_replicates<Out>(mc.replicates, mc.workers, [&](std::size_t i) {
      Rng r = Rng(mc.seed, i).split(n);
      Out o;
      auto sys = ParticleSystem1D::make(Domain::torus(C), Mode::annihilating, entrance_positions(kind, n, C, r, &o.dropped));
      for (double t : t_grid) {
        run_particles(sys, dt, t - sys.time, r);
        o.counts.push_back(sys.count());
      }
      return o;
    });
    for (std::size_t g = 0; g < t_grid.size(); ++g) {
      EntranceRow row{n, t_grid[g], {}, {}, 0};
      std::vector<double> c;
      for (const auto& o : runs) {
        row.counts.push_back(o.counts[g]);
        c.push_back(static_cast<double>(o.counts[g]));
        row.dropped += o.dropped;
      }
      row.count = core::estimate_mean(c);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

std::vector<std::size_t> histogram(const std::vector<std::size_t>& counts, std::size_t bins) {
  std::vector<std::size_t> h(bins, 0);
  for (auto c : counts) ++h[std::min(c, bins - 1)];
  return h;
}

std::vector<double> to_double(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

}  // namespace

ConsistencyReport entrance_consistency_check(EntranceInit kind, std::size_t n, double C, double s, double t, double dt,
                                             const core::McConfig& mc) {
  if (!(s > 0.0) || !(s <= t)) throw ParameterError("entrance_consistency_check: need 0 < s <= t");
  struct Out {
    std::size_t direct, split, halved;
    double gap_direct, gap_split;  // NaN when fewer than two particles
  };
  auto gap = [&](const ParticleSystem1D& sys) {
    return sys.count() >= 2 ? sys.x[1] - sys.x[0] : std::nan("");
  };
  const auto runs = core::run_replicates<Out>(mc.replicates, mc.workers, [&](std::size_t i) {
    const Rng base(mc.seed, i);
    Out o{};
    Rng r1 = base.split(1);
    auto d = ParticleSystem1D::make(Domain::torus(C), Mode::annihilating, entrance_positions(kind, n, C, r1));
    run_particles(d, dt, t, r1);
    Rng r2 = base.split(2);
    auto sp = ParticleSystem1D::make(Domain::torus(C), Mode::annihilating, entrance_positions(kind, n, C, r2));
    run_particles(sp, dt, s, r2);
    Rng r3 = base.split(3);
    run_particles(sp, dt, t - s, r3);
    Rng r4 = base.split(4);
    auto hv = ParticleSystem1D::make(Domain::torus(C), Mode::annihilating, entrance_positions(kind, n, C, r4));
    run_particles(hv, dt / 2.0, t, r4);
    o.direct = d.count();
    o.split = sp.count();
    o.halved = hv.count();
    o.gap_direct = gap(d);
    o.gap_split = gap(sp);
    return o;
  });
  std::vector<std::size_t> a, b, c;
  std::vector<double> ga, gb;
  for (const auto& o : runs) {
    a.push_back(o.direct);
    b.push_back(o.split);
    c.push_back(o.halved);
    if (!std::isnan(o.gap_direct)) ga.push_back(o.gap_direct);
    if (!std::isnan(o.gap_split)) gb.push_back(o.gap_split);
  }
  const std::size_t bins = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end())) + 1;
  ConsistencyReport r;
  r.counts_chi2 = core::chi2_two_sample(histogram(a, bins), histogram(b, bins));
  r.gaps_ks = (ga.size() > 1 && gb.size() > 1) ? core::ks_two_sample(ga, gb) : core::TestResult{0.0, 1.0};
  r.direct = core::estimate_mean(to_double(a));
  r.split = core::estimate_mean(to_double(b));
  r.halved = core::estimate_mean(to_double(c));
  r.shift = std::abs(r.halved.value - r.direct.value);
  r.ci_width = r.direct.ci_high() - r.direct.ci_low();
  return r;
}

NPointDensity estimate_npoint_density(EntranceInit kind, std::size_t n, double C, double t,
                                      const std::vector<double>& x_points, double h, double dt,
                                      const core::McConfig& mc) {
  if (x_points.empty() || !(h > 0.0)) throw ParameterError("estimate_npoint_density: need points and h > 0");
  for (std::size_t i = 0; i < x_points.size(); ++i)
    for (std::size_t j = i + 1; j < x_points.size(); ++j) {
      const double d = std::abs(wrap(x_points[i], C) - wrap(x_points[j], C));
      if (std::min(d, C - d) <= 2.0 * h) throw ParameterError("estimate_npoint_density: windows overlap");
    }
  auto occupied = [&](const std::vector<double>& xs, double x, double hw) {
    for (double p : xs) {
      double d = std::abs(p - wrap(x, C));
      d = std::min(d, C - d);
      if (d <= hw) return true;
    }
    return false;
  };
  const auto runs = core::run_replicates<std::pair<double, double>>(mc.replicates, mc.workers, [&](std::size_t i) {
    Rng r = Rng(mc.seed, i).split(n);
    auto sys = ParticleSystem1D::make(Domain::torus(C), Mode::annihilating, entrance_positions(kind, n, C, r));
    if (t > 0.0) run_particles(sys, dt, t, r);
    bool a = true, b = true;
    for (double x : x_points) {
      a = a && occupied(sys.x, x, h);
      b = b && occupied(sys.x, x, h / 2.0);
    }
    return std::pair{a ? 1.0 : 0.0, b ? 1.0 : 0.0};
  });
  const double k = static_cast<double>(x_points.size());
  std::vector<double> a, b;
  for (const auto& [p, q] : runs) {
    a.push_back(p / std::pow(2.0 * h, k));
    b.push_back(q / std::pow(h, k));
  }
  NPointDensity d{{h, core::estimate_mean(a)}, {h / 2.0, core::estimate_mean(b)}, false};
  d.atomic = d.coarse.density.value > 0.0 && d.fine.density.value > 1.5 * d.coarse.density.value;
  return d;
}

std::vector<ThinningRow> thinning_experiment(EntranceInit kind, std::size_t n, double C,
                                             const std::vector<double>& t_grid, double dt,
                                             const core::McConfig& mc) {
  if (!std::is_sorted(t_grid.begin(), t_grid.end()) || t_grid.empty() || t_grid.front() < 0.0)
    throw ParameterError("thinning_experiment: t_grid must be nonempty, sorted and nonnegative");
  using Counts = std::vector<std::pair<std::size_t, std::size_t>>;
  const auto runs = core::run_replicates<Counts>(mc.replicates, mc.workers, [&](std::size_t i) {
    const Rng base(mc.seed, i);
    Rng r0 = base.split(0);
    const auto start = entrance_positions(kind, n, C, r0);
    auto a = ParticleSystem1D::make(Domain::torus(C), Mode::annihilating, start);
    auto c = ParticleSystem1D::make(Domain::torus(C), Mode::coalescing, start);
    a.attach_streams(base.split(1));
    c.attach_streams(base.split(1));
    Rng ra = base.split(2), rc = base.split(2);
    Counts out;
    for (double t : t_grid) {
      run_particles(a, dt, t - a.time, ra);
      run_particles(c, dt, t - c.time, rc);
      out.emplace_back(a.count(), c.count());
    }
    return out;
  });
  std::vector<ThinningRow> rows;
  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    std::vector<double> a, c;
    ThinningRow row{t_grid[g], {}, {}, {}, 0};
    for (const auto& r : runs) {
      a.push_back(static_cast<double>(r[g].first));
      c.push_back(static_cast<double>(r[g].second));
      row.violations += r[g].first > r[g].second;
    }
    row.annihilating = core::estimate_mean(a);
    row.coalescing = core::estimate_mean(c);
    row.ratio = core::estimate_ratio(a, c);
    rows.push_back(row);
  }
  return rows;
}

std::vector<Snapshot> record_trajectories(ParticleSystem1D sys, double dt, double t, std::size_t every, Rng& rng) {
  if (every == 0) throw ParameterError("record_trajectories: every must be positive");
  std::vector<Snapshot> out = {{sys.time, sys.id, sys.x}};
  const double end = sys.time + t;
  std::size_t k = 0;
  while (sys.time < end - 1e-12) {
    step_particles(sys, std::min(dt, end - sys.time), rng);
    if (++k % every == 0 || sys.time >= end - 1e-12) out.push_back({sys.time, sys.id, sys.x});
  }
  return out;
}

void write_particle_csv(std::ostream& os, const std::vector<Snapshot>& snaps) {
  os << "time,id,position,alive\n" << std::setprecision(12);
  std::map<std::size_t, double> last;
  for (const auto& s : snaps) {
    std::map<std::size_t, double> now;
    for (std::size_t k = 0; k < s.id.size(); ++k) now[s.id[k]] = s.x[k];
    for (const auto& [i, p] : last)
      if (!now.count(i)) os << s.time << ',' << i << ',' << p << ",0\n";
    for (const auto& [i, p] : now) os << s.time << ',' << i << ',' << p << ",1\n";
    last = std::move(now);
  }
}

void write_colouring_csv(std::ostream& os, const ColouringResult& r) {
  os << "x,u,v\n" << std::setprecision(12);
  for (std::size_t k = 0; k < r.grid.size(); ++k) os << r.grid[k] << ',' << r.u_hat[k] << ',' << r.v_hat[k] << '\n';
}

}  // namespace duality::interface
