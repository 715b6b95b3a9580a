#include "duality/colour/colour.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>

#include "duality/core/ctmc.hpp"
#include "duality/core/error.hpp"

namespace duality::colour {

using core::Rng;

namespace {

std::size_t step_site(const WalkerLattice& lat, std::size_t x, bool right) {
  if (right) {
    if (x + 1 < lat.L) return x + 1;
    return lat.boundary == sbm::Boundary::periodic ? 0 : x;
  }
  if (x > 0) return x - 1;
  return lat.boundary == sbm::Boundary::periodic ? lat.L - 1 : x;
}

std::vector<Pair> colocated_pairs(const std::vector<std::size_t>& pos) {
  std::vector<Pair> out;
  for (std::size_t i = 0; i < pos.size(); ++i)
    for (std::size_t j = i + 1; j < pos.size(); ++j)
      if (pos[i] == pos[j]) out.emplace_back(static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(j));
  return out;
}

void check_walker_count(std::size_t n) {
  if (n == 0) throw ParameterError("colour dual: need at least one walker");
  if (n > kMaxWalkers) throw SizeError("colour dual: at most 12 walkers");
}

void check_rates(double gamma, double rho) {
  if (!(gamma >= 0.0)) throw ParameterError("colour dual: gamma < 0");
  if (!(std::abs(rho) <= 1.0)) throw ParameterError("colour dual: |rho| > 1");
}

bool bit(Colouring b, std::size_t i) { return (b >> i) & 1U; }

// M <- exp(ell G) M for the generator of one co-location interval:
//   (G M)(b) = Σ_{(i,j) in P, b_i != b_j} [γρ M(b) + γ/2 M(b^i) + γ/2 M(b^j)].
// G + sI has nonnegative entries for s = γ|P| max(0, -ρ), so the Taylor
// series below has no cancellation and keeps M nonnegative.
void expmv(ColourMeasure& M, const std::vector<Pair>& P, double gamma, double rho, double ell) {
  if (P.empty() || ell <= 0.0 || gamma == 0.0) return;
  const double np = static_cast<double>(P.size());
  const double s = gamma * np * std::max(0.0, -rho);
  const double norm = s + gamma * np * (std::abs(rho) + 1.0);
  const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil(ell * norm)));
  const double h = ell / static_cast<double>(m);
  const double decay = std::exp(-s * h);
  const std::size_t S = M.size();
  std::vector<double> term(S), next(S), acc(S);
  auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    for (std::size_t b = 0; b < S; ++b) {
      double r = s * in[b];
      for (const auto& [i, j] : P) {
        if (bit(static_cast<Colouring>(b), i) == bit(static_cast<Colouring>(b), j)) continue;
        r += gamma * rho * in[b] + 0.5 * gamma * (in[b ^ (std::size_t{1} << i)] + in[b ^ (std::size_t{1} << j)]);
      }
      out[b] = r;
    }
  };
  for (std::size_t step = 0; step < m; ++step) {
    term = M;
    acc = M;
    for (int k = 1; k <= 60; ++k) {
      apply(term, next);
      double tmax = 0.0, amax = 0.0;
      for (std::size_t b = 0; b < S; ++b) {
        term[b] = next[b] * h / k;
        acc[b] += term[b];
        tmax = std::max(tmax, term[b]);
        amax = std::max(amax, acc[b]);
      }
      if (tmax <= 1e-17 * amax) break;
    }
    for (std::size_t b = 0; b < S; ++b) M[b] = acc[b] * decay;
  }
}

}  // namespace

void WalkerLattice::validate() const {
  if (L < 2) throw ParameterError("WalkerLattice: need at least 2 sites");
  if (!(dx > 0.0)) throw ParameterError("WalkerLattice: dx must be positive");
}

std::vector<std::size_t> WalkerPath::positions_at(double t) const {
  if (t < 0.0 || t > horizon) throw RangeError("WalkerPath: time outside the path");
  auto pos = start;
  for (const auto& j : jumps) {
    if (j.time > t) break;
    pos[j.walker] = j.to;
  }
  return pos;
}

WalkerPath sample_walker_path(const WalkerLattice& lat, const std::vector<std::size_t>& x, double t, Rng& rng) {
  lat.validate();
  check_walker_count(x.size());
  if (!(t >= 0.0)) throw ParameterError("sample_walker_path: negative horizon");
  for (auto s : x)
    if (s >= lat.L) throw RangeError("sample_walker_path: start site outside the lattice");
  WalkerPath path{lat, t, x, {}};
  auto pos = x;
  const double rate = lat.jump_rate() * static_cast<double>(x.size());
  double now = 0.0;
  for (;;) {
    now += rng.exponential(rate);
    if (now > t) break;
    const auto w = static_cast<std::uint32_t>(rng.below(x.size()));
    const bool right = rng.below(2) == 1;
    const std::size_t to = step_site(lat, pos[w], right);
    if (to == pos[w]) continue;
    pos[w] = to;
    path.jumps.push_back({now, w, to});
  }
  return path;
}

std::vector<CoLocation> colocation_intervals(const WalkerPath& path, double t) {
  if (t < 0.0 || t > path.horizon) throw RangeError("colocation_intervals: time outside the path");
  std::vector<CoLocation> out;
  auto pos = path.start;
  double begin = 0.0;
  auto close = [&](double end) {
    if (end <= begin) return;
    auto pairs = colocated_pairs(pos);
    if (pairs.empty()) return;
    if (!out.empty() && out.back().end == begin && out.back().pairs == pairs)
      out.back().end = end;
    else
      out.push_back({begin, end, std::move(pairs)});
  };
  for (const auto& j : path.jumps) {
    if (j.time >= t) break;
    close(j.time);
    pos[j.walker] = j.to;
    begin = j.time;
  }
  close(t);
  return out;
}

double LocalTimeLedger::total() const { return std::accumulate(L_pair.begin(), L_pair.end(), 0.0); }

ColouredWalkers run_colours(const WalkerPath& path, Colouring c, double gamma, double t, Rng& rng) {
  const std::size_t n = path.size();
  check_walker_count(n);
  if (!(gamma >= 0.0)) throw ParameterError("run_colours: gamma < 0");
  if (c >> n) throw ParameterError("run_colours: colouring has bits beyond n");
  ColouredWalkers w;
  w.positions = path.positions_at(t);
  w.colours = c;
  w.ledger.n = n;
  w.ledger.L_pair.assign(n * n, 0.0);
  const double dx = path.lattice.dx;
  std::vector<std::size_t> equal;
  for (const auto& iv : colocation_intervals(path, t)) {
    double left = (iv.end - iv.begin) / dx;
    for (const auto& [i, j] : iv.pairs) w.ledger.L_pair[i * n + j] += left;
    while (left > 0.0) {
      equal.clear();
      for (std::size_t k = 0; k < iv.pairs.size(); ++k)
        if (bit(w.colours, iv.pairs[k].first) == bit(w.colours, iv.pairs[k].second)) equal.push_back(k);
      const double ne = static_cast<double>(equal.size());
      const double nu = static_cast<double>(iv.pairs.size()) - ne;
      const double wait = (equal.empty() || gamma == 0.0) ? left : rng.exponential(gamma * ne);
      const double used = std::min(wait, left);
      w.ledger.L_eq += ne * used;
      w.ledger.L_neq += nu * used;
      if (wait >= left) break;
      left -= used;
      const auto& [i, j] = iv.pairs[equal[rng.below(equal.size())]];
      w.colours ^= Colouring{1} << (rng.below(2) ? j : i);
      ++w.flips;
    }
  }
  return w;
}

ColouredWalkers simulate_coloured_dual(const WalkerLattice& lat, const std::vector<std::size_t>& x, Colouring c,
                                       double gamma, double rho, double t, const Rng& rng) {
  check_rates(gamma, rho);
  Rng motion = rng.split(1);
  Rng flips = rng.split(2);
  const auto path = sample_walker_path(lat, x, t, motion);
  return run_colours(path, c, gamma, t, flips);
}

double colour_product(const sbm::FieldPair& s, const std::vector<std::size_t>& x, Colouring b) {
  double r = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) r *= bit(b, i) ? s.v.at(x[i]) : s.u.at(x[i]);
  return r;
}

MomentDualityReport check_moment_duality(const sbm::FieldPair& init, const std::vector<std::size_t>& x, Colouring c,
                                         const sbm::SbmParams& p, double t, const core::McConfig& mc) {
  init.validate();
  p.validate();
  if (x.size() > 4) throw SizeError("check_moment_duality: at most 4 points");
  if (std::abs(init.dx - p.dx) > 1e-12) throw ParameterError("check_moment_duality: lattice spacing mismatch");
  const auto lat = WalkerLattice::of(init);
  struct Sample {
    double lhs, rhs, weight;
  };
  const auto samples = core::run_replicates<Sample>(mc.replicates, mc.workers, [&](std::size_t i) {
    const Rng base(mc.seed, i);
    sbm::FieldPair s = init;
    Rng r = base.split(1);
    sbm::run_sbm(s, p, t, r);
    const auto d = simulate_coloured_dual(lat, x, c, p.gamma, p.rho, t, base.split(2));
    const double w = std::exp(d.log_weight(p.gamma, p.rho));
    return Sample{colour_product(s, x, c), colour_product(init, d.positions, d.colours) * w, w};
  });
  std::vector<double> lhs, rhs, wts;
  for (const auto& s : samples) {
    lhs.push_back(s.lhs);
    rhs.push_back(s.rhs);
    wts.push_back(s.weight);
  }
  MomentDualityReport r{core::estimate_mean(lhs), core::estimate_mean(rhs), 0.0, false};
  const auto we = core::estimate_mean(wts);
  const double sd = we.stderr_ * std::sqrt(static_cast<double>(we.n));
  r.weight_cv = we.value > 0.0 ? sd / we.value : 0.0;
  r.heavy_tail = r.weight_cv > 10.0;
  return r;
}

ColourMeasure evolve_colour_measure(const WalkerPath& path, Colouring c, double gamma, double rho, double t,
                                    ColourTrajectory* traj) {
  const std::size_t n = path.size();
  check_walker_count(n);
  check_rates(gamma, rho);
  if (c >> n) throw ParameterError("evolve_colour_measure: colouring has bits beyond n");
  ColourMeasure M(std::size_t{1} << n, 0.0);
  M[c] = 1.0;
  if (traj) {
    traj->times = {0.0};
    traj->measures = {M};
  }
  for (const auto& iv : colocation_intervals(path, t)) {
    expmv(M, iv.pairs, gamma, rho, (iv.end - iv.begin) / path.lattice.dx);
    if (traj) {
      traj->times.push_back(iv.end);
      traj->measures.push_back(M);
    }
  }
  return M;
}

std::vector<core::Estimate> conditional_colour_measure(const WalkerPath& path, Colouring c, double gamma, double rho,
                                                       double t, std::size_t samples, const Rng& rng) {
  check_rates(gamma, rho);
  if (samples < 2) throw ParameterError("conditional_colour_measure: need at least 2 samples");
  const std::size_t S = std::size_t{1} << path.size();
  std::vector<std::vector<double>> draws(S, std::vector<double>(samples, 0.0));
  for (std::size_t k = 0; k < samples; ++k) {
    Rng r = rng.split(k);
    const auto w = run_colours(path, c, gamma, t, r);
    draws[w.colours][k] = std::exp(w.log_weight(gamma, rho));
  }
  std::vector<core::Estimate> out;
  out.reserve(S);
  for (const auto& d : draws) out.push_back(core::estimate_mean(d));
  return out;
}

ColourMeasure k_infinity_apply(const ColourMeasure& M, std::size_t l1, std::size_t l2) {
  if (M.empty() || !std::has_single_bit(M.size())) throw SizeError("k_infinity_apply: length must be 2^n");
  const std::size_t n = static_cast<std::size_t>(std::countr_zero(M.size()));
  if (l1 == l2) throw ParameterError("k_infinity_apply: l1 == l2");
  if (l1 >= n || l2 >= n) throw RangeError("k_infinity_apply: particle index out of range");
  ColourMeasure out(M.size(), 0.0);
  for (std::size_t b = 0; b < M.size(); ++b) {
    if (M[b] == 0.0 || bit(static_cast<Colouring>(b), l1) != bit(static_cast<Colouring>(b), l2)) continue;
    out[b] += M[b];
    out[b ^ (std::size_t{1} << l1)] += 0.5 * M[b];
    out[b ^ (std::size_t{1} << l2)] += 0.5 * M[b];
  }
  return out;
}

MeetingSchedule meeting_schedule(const WalkerPath& path, double t) {
  if (t < 0.0 || t > path.horizon) throw RangeError("meeting_schedule: time outside the path");
  MeetingSchedule s;
  for (auto x : path.start) s.start.push_back(static_cast<double>(x) * path.lattice.dx);
  auto pos = path.start;
  std::pair<std::size_t, std::size_t> last{0, 0};
  bool any = false;
  for (const auto& j : path.jumps) {
    if (j.time >= t) break;
    pos[j.walker] = j.to;
    std::vector<std::size_t> met;
    for (std::size_t k = 0; k < pos.size(); ++k)
      if (k != j.walker && pos[k] == j.to) met.push_back(k);
    for (auto k : met) {
      const std::pair<std::size_t, std::size_t> p{std::min<std::size_t>(k, j.walker), std::max<std::size_t>(k, j.walker)};
      if (any && p == last) continue;
      s.meetings.push_back({j.time, p.first, p.second});
      last = p;
      any = true;
    }
  }
  return s;
}

ColourMeasure evolve_colour_measure_infinite(const MeetingSchedule& schedule, Colouring c, double t,
                                             ColourTrajectory* traj) {
  const std::size_t n = schedule.start.size();
  check_walker_count(n);
  if (c >> n) throw ParameterError("evolve_colour_measure_infinite: colouring has bits beyond n");
  auto sorted = schedule.start;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw PreconditionError("evolve_colour_measure_infinite: starting positions must be distinct");
  ColourMeasure M(std::size_t{1} << n, 0.0);
  M[c] = 1.0;
  if (traj) {
    traj->times = {0.0};
    traj->measures = {M};
  }
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto& m : schedule.meetings) {
    if (m.tau < prev) throw PreconditionError("evolve_colour_measure_infinite: meeting times out of order");
    prev = m.tau;
    if (!(m.tau < t)) break;
    M = k_infinity_apply(M, m.l1, m.l2);
    if (traj) {
      traj->times.push_back(m.tau);
      traj->measures.push_back(M);
    }
  }
  return M;
}

double flip_probability_exact(const WalkerLattice& lat, std::size_t x1, std::size_t x2, double gamma, double t) {
  lat.validate();
  if (!(gamma >= 0.0)) throw ParameterError("flip_probability_exact: gamma < 0");
  if (x1 >= lat.L || x2 >= lat.L) throw RangeError("flip_probability_exact: start outside the lattice");
  if (lat.L > 200) throw SizeError("flip_probability_exact: pair chain too large");
  const std::size_t L = lat.L;
  const double q = 0.5 * lat.jump_rate();
  std::vector<core::Transition> tr;
  std::vector<double> kill(L * L, 0.0);
  for (std::size_t a = 0; a < L; ++a)
    for (std::size_t b = 0; b < L; ++b) {
      const std::size_t s = a * L + b;
      for (bool right : {false, true}) {
        const std::size_t a2 = step_site(lat, a, right), b2 = step_site(lat, b, right);
        if (a2 != a) tr.push_back({s, a2 * L + b, q});
        if (b2 != b) tr.push_back({s, a * L + b2, q});
      }
      if (a == b) kill[s] = gamma / lat.dx;
    }
  const core::SparseGenerator gen(L * L, tr, kill);
  const std::vector<double> one(L * L, 1.0);
  return 1.0 - gen.expectation(one, t, 1e-14)[x1 * L + x2];
}

std::vector<std::size_t> simulate_delayed_annihilating_walks(const WalkerLattice& lat, std::vector<std::size_t> x,
                                                             double gamma, double t, Rng& rng) {
  lat.validate();
  if (!(gamma >= 0.0)) throw ParameterError("simulate_delayed_annihilating_walks: gamma < 0");
  if (!(t >= 0.0)) throw ParameterError("simulate_delayed_annihilating_walks: negative time");
  for (auto s : x)
    if (s >= lat.L) throw RangeError("simulate_delayed_annihilating_walks: start outside the lattice");
  const double kill = gamma / lat.dx;
  const bool instant = std::isinf(gamma);
  auto annihilate_at = [&](std::size_t site) {
    std::size_t found = x.size();
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (x[k] != site) continue;
      if (found == x.size()) {
        found = k;
        continue;
      }
      x.erase(x.begin() + static_cast<std::ptrdiff_t>(k));
      x.erase(x.begin() + static_cast<std::ptrdiff_t>(found));
      return true;
    }
    return false;
  };
  if (instant)
    for (auto pairs = colocated_pairs(x); !pairs.empty(); pairs = colocated_pairs(x)) annihilate_at(x[pairs[0].first]);
  double now = 0.0;
  while (!x.empty()) {
    const auto pairs = colocated_pairs(x);
    const double jump = lat.jump_rate() * static_cast<double>(x.size());
    const double ann = instant ? 0.0 : kill * static_cast<double>(pairs.size());
    now += rng.exponential(jump + ann);
    if (now > t) break;
    if (rng.uniform() * (jump + ann) < ann) {
      const auto [i, j] = pairs[rng.below(pairs.size())];
      x.erase(x.begin() + j);
      x.erase(x.begin() + i);
      continue;
    }
    const auto w = rng.below(x.size());
    x[w] = step_site(lat, x[w], rng.below(2) == 1);
    if (instant) annihilate_at(x[w]);
  }
  std::sort(x.begin(), x.end());
  return x;
}

AnnihilatingReport check_annihilating_moment_duality(const sbm::FieldPair& init, const std::vector<std::size_t>& x,
                                                     const sbm::SbmParams& p, double t, const core::McConfig& mc) {
  init.validate();
  p.validate();
  if (p.rho != -1.0) throw ParameterError("check_annihilating_moment_duality: needs rho = -1");
  if (x.size() > 4) throw SizeError("check_annihilating_moment_duality: at most 4 points");
  for (std::size_t i = 0; i < init.size(); ++i)
    if (std::abs(init.u[i] + init.v[i] - 1.0) > 1e-12 || init.u[i] > 1.0)
      throw PreconditionError("check_annihilating_moment_duality: need u0 in [0,1] and v0 = 1 - u0");
  const auto lat = WalkerLattice::of(init);
  const auto samples = core::run_replicates<std::pair<double, double>>(mc.replicates, mc.workers, [&](std::size_t i) {
    const Rng base(mc.seed, i);
    sbm::FieldPair s = init;
    Rng r = base.split(1);
    sbm::run_sbm(s, p, t, r);
    double lhs = 1.0, rhs = 1.0;
    for (auto k : x) lhs *= 1.0 - 2.0 * s.u[k];
    Rng w = base.split(2);
    for (auto y : simulate_delayed_annihilating_walks(lat, x, p.gamma, t, w)) rhs *= 1.0 - 2.0 * init.u[y];
    return std::pair{lhs, rhs};
  });
  std::vector<double> lhs, rhs;
  for (const auto& [a, b] : samples) {
    lhs.push_back(a);
    rhs.push_back(b);
  }
  return {core::estimate_mean(lhs), core::estimate_mean(rhs)};
}

void write_colour_csv(std::ostream& os, const ColourTrajectory& traj, std::size_t n) {
  os << "time,colouring,weight\n" << std::setprecision(17);
  for (std::size_t k = 0; k < traj.times.size(); ++k)
    for (std::size_t b = 0; b < traj.measures[k].size(); ++b) {
      os << traj.times[k] << ',';
      for (std::size_t i = 0; i < n; ++i) os << (bit(static_cast<Colouring>(b), i) ? '2' : '1');
      os << ',' << traj.measures[k][b] << '\n';
    }
}

}  // namespace duality::colour
