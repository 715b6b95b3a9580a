#include "duality/voter/voter.hpp"

#include <algorithm>
#include <string>

#include "duality/core/ctmc.hpp"
#include "duality/core/error.hpp"
#include "duality/core/processes.hpp"

namespace duality::voter {

using core::Rng;

namespace {

std::size_t right(std::size_t x, std::size_t L) { return x + 1 == L ? 0 : x + 1; }
std::size_t left(std::size_t x, std::size_t L) { return x == 0 ? L - 1 : x - 1; }

void check_sites(const std::vector<std::size_t>& A, std::size_t L, const char* who) {
  for (auto x : A)
    if (x >= L) throw RangeError(std::string(who) + ": site out of range");
}

void check_time(const ArrowLog& log, double t, const char* who) {
  if (t < 0.0 || t > log.horizon) throw RangeError(std::string(who) + ": t outside [0, horizon]");
}

double product_over(const SpinField& eta, const std::vector<std::size_t>& sites) {
  for (auto x : sites)
    if (!eta[x]) return 0.0;
  return 1.0;
}

}  // namespace

SpinField::SpinField(std::vector<std::uint8_t> s) : spins(std::move(s)) {
  for (auto v : spins)
    if (v > 1) throw ParameterError("SpinField: spins must be 0 or 1");
}

SpinField SpinField::constant(std::size_t L, std::uint8_t value) {
  return SpinField(std::vector<std::uint8_t>(L, value));
}

SpinField SpinField::heaviside(std::size_t L) {
  std::vector<std::uint8_t> s(L, 0);
  for (std::size_t x = 0; x < L / 2; ++x) s[x] = 1;
  return SpinField(std::move(s));
}

SpinField SpinField::alternating(std::size_t L) {
  std::vector<std::uint8_t> s(L);
  for (std::size_t x = 0; x < L; ++x) s[x] = (x % 2 == 0);
  return SpinField(std::move(s));
}

ArrowLog build_graphical(std::size_t L, double horizon, const Rng& rng) {
  if (L < 3) throw ParameterError("build_graphical: need L >= 3");
  if (horizon < 0.0) throw ParameterError("build_graphical: negative horizon");
  ArrowLog log{L, horizon, {}};
  if (horizon == 0.0) return log;
  for (std::size_t x = 0; x < L; ++x) {
    for (int dir = 0; dir < 2; ++dir) {
      Rng edge = rng.split(2 * x + dir);
      const std::size_t to = dir == 0 ? right(x, L) : left(x, L);
      for (double s : core::sample_poisson_events(0.5, horizon, edge).times) log.arrows.push_back({s, x, to});
    }
  }
  std::sort(log.arrows.begin(), log.arrows.end(), [](const Arrow& a, const Arrow& b) { return a.time < b.time; });
  return log;
}

SpinField evolve_voter(const SpinField& eta0, const ArrowLog& log, double t) {
  if (eta0.size() != log.L) throw SizeError("evolve_voter: configuration and log sizes differ");
  check_time(log, t, "evolve_voter");
  SpinField eta = eta0;
  for (const auto& a : log.arrows) {
    if (a.time > t) break;
    eta.spins[a.to] = eta.spins[a.from];
  }
  return eta;
}

std::vector<std::size_t> trace_dual_paths(const ArrowLog& log, double t, const std::vector<std::size_t>& A) {
  if (A.empty()) throw ParameterError("trace_dual: empty starting set");
  check_time(log, t, "trace_dual");
  check_sites(A, log.L, "trace_dual");
  std::vector<std::size_t> pos = A;
  auto end = std::upper_bound(log.arrows.begin(), log.arrows.end(), t,
                              [](double v, const Arrow& a) { return v < a.time; });
  for (auto it = std::make_reverse_iterator(end); it != log.arrows.rend(); ++it) {
    for (auto& p : pos)
      if (p == it->to) p = it->from;
  }
  return pos;
}

std::vector<std::size_t> trace_dual(const ArrowLog& log, double t, const std::vector<std::size_t>& A) {
  auto pos = trace_dual_paths(log, t, A);
  std::sort(pos.begin(), pos.end());
  pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
  return pos;
}

std::vector<std::size_t> simulate_coalescing_walks(std::size_t L, const std::vector<std::size_t>& A, double t,
                                                   Rng& rng) {
  if (A.empty()) throw ParameterError("simulate_coalescing_walks: empty starting set");
  if (L < 3) throw ParameterError("simulate_coalescing_walks: need L >= 3");
  check_sites(A, L, "simulate_coalescing_walks");
  std::vector<std::size_t> pos = A;
  std::sort(pos.begin(), pos.end());
  pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
  double s = 0.0;
  while (pos.size() > 1) {
    s += rng.exponential(static_cast<double>(pos.size()));
    if (s > t) break;
    const std::size_t i = rng.below(pos.size());
    const std::size_t to = rng.bernoulli(0.5) ? right(pos[i], L) : left(pos[i], L);
    if (std::find(pos.begin(), pos.end(), to) != pos.end()) {
      pos.erase(pos.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      pos[i] = to;
    }
  }
  if (pos.size() == 1) {
    // A lone walker: its displacement is a difference of two Poisson(t/2) counts
    // minus whatever time has already been used.
    const double rest = t - std::min(s, t);
    if (rest > 0.0) {
      const auto r = static_cast<long long>(rng.poisson(rest / 2));
      const auto l = static_cast<long long>(rng.poisson(rest / 2));
      const auto Ls = static_cast<long long>(L);
      pos[0] = static_cast<std::size_t>((((static_cast<long long>(pos[0]) + r - l) % Ls) + Ls) % Ls);
    }
  }
  std::sort(pos.begin(), pos.end());
  return pos;
}

TwoSided check_voter_duality(const SpinField& eta0, const std::vector<std::size_t>& A, double t,
                             const core::McConfig& mc) {
  if (A.empty()) throw ParameterError("check_voter_duality: empty set");
  check_sites(A, eta0.size(), "check_voter_duality");
  if (t < 0.0) throw RangeError("check_voter_duality: negative time");
  const std::size_t L = eta0.size();
  auto samples = core::run_replicates<std::pair<double, double>>(mc.replicates, mc.workers, [&](std::size_t i) {
    Rng base(mc.seed, i);
    const auto log = build_graphical(L, t, base.split(1));
    const double lhs = product_over(evolve_voter(eta0, log, t), A);
    Rng walk = base.split(2);
    const double rhs = product_over(eta0, simulate_coalescing_walks(L, A, t, walk));
    return std::pair{lhs, rhs};
  });
  std::vector<double> l(samples.size()), r(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) std::tie(l[i], r[i]) = samples[i];
  return {core::estimate_mean(l), core::estimate_mean(r)};
}

InterfaceSet interface_of(const SpinField& eta) {
  InterfaceSet I;
  const std::size_t L = eta.size();
  for (std::size_t x = 0; x < L; ++x)
    if (eta[x] != eta[right(x, L)]) I.push_back(x);
  return I;
}

InterfaceSet evolve_interface_walks(const InterfaceSet& I0, std::size_t L, const ArrowLog& log, double t) {
  if (L != log.L) throw SizeError("evolve_interface_walks: lattice and log sizes differ");
  check_time(log, t, "evolve_interface_walks");
  check_sites(I0, L, "evolve_interface_walks");
  std::vector<std::uint8_t> occ(L, 0);
  for (auto b : I0) occ[b] = 1;
  for (const auto& a : log.arrows) {
    if (a.time > t) break;
    if (a.to == right(a.from, L)) {
      // from -> from+1 copies across bond `from`; the particle there moves to bond `to`.
      if (occ[a.from]) {
        occ[a.from] = 0;
        occ[a.to] ^= 1;
      }
    } else {
      // from -> from-1 copies across bond `to`; the particle there moves to bond `to`-1.
      if (occ[a.to]) {
        occ[a.to] = 0;
        occ[left(a.to, L)] ^= 1;
      }
    }
  }
  InterfaceSet I;
  for (std::size_t b = 0; b < L; ++b)
    if (occ[b]) I.push_back(b);
  return I;
}

InterfaceSet simulate_annihilating_walks(std::size_t L, const InterfaceSet& I0, double t, Rng& rng) {
  if (L < 3) throw ParameterError("simulate_annihilating_walks: need L >= 3");
  check_sites(I0, L, "simulate_annihilating_walks");
  std::vector<std::size_t> pos = I0;
  std::sort(pos.begin(), pos.end());
  pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
  double s = 0.0;
  while (!pos.empty()) {
    s += rng.exponential(static_cast<double>(pos.size()));
    if (s > t) break;
    const std::size_t i = rng.below(pos.size());
    const std::size_t to = rng.bernoulli(0.5) ? right(pos[i], L) : left(pos[i], L);
    auto hit = std::find(pos.begin(), pos.end(), to);
    if (hit != pos.end()) {
      const auto j = static_cast<std::size_t>(hit - pos.begin());
      pos.erase(pos.begin() + static_cast<std::ptrdiff_t>(std::max(i, j)));
      pos.erase(pos.begin() + static_cast<std::ptrdiff_t>(std::min(i, j)));
    } else {
      pos[i] = to;
    }
  }
  std::sort(pos.begin(), pos.end());
  return pos;
}

std::size_t count_in_interval(const InterfaceSet& I, std::size_t L, std::size_t x, std::size_t y) {
  const std::size_t len = (y + L - x) % L;
  std::size_t c = 0;
  for (auto b : I)
    if ((b + L - x) % L < len) ++c;
  return c;
}

TwoSided parity_duality_check(const SpinField& eta0, std::size_t x, std::size_t y, double t,
                              const core::McConfig& mc) {
  const std::size_t L = eta0.size();
  if (x >= L || y >= L) throw RangeError("parity_duality_check: site out of range");
  if (x >= y) throw ParameterError("parity_duality_check: need x < y");
  if (t < 0.0) throw RangeError("parity_duality_check: negative time");
  const auto I0 = interface_of(eta0);
  auto samples = core::run_replicates<std::pair<double, double>>(mc.replicates, mc.workers, [&](std::size_t i) {
    Rng base(mc.seed, i);
    Rng walk = base.split(1);
    const auto It = simulate_annihilating_walks(L, I0, t, walk);
    const double lhs = count_in_interval(It, L, x, y) % 2 == 0 ? 1.0 : 0.0;
    const auto eta = evolve_voter(eta0, build_graphical(L, t, base.split(2)), t);
    const double rhs = eta[x] == eta[y] ? 1.0 : 0.0;
    return std::pair{lhs, rhs};
  });
  std::vector<double> l(samples.size()), r(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) std::tie(l[i], r[i]) = samples[i];
  return {core::estimate_mean(l), core::estimate_mean(r)};
}

double exact_expectation(const SpinField& eta0, const std::function<double(std::uint32_t)>& f, double t) {
  const std::size_t L = eta0.size();
  if (L > 12) throw SizeError("exact_oracle: L > 12");
  if (L < 3) throw ParameterError("exact_oracle: need L >= 3");
  if (t < 0.0) throw RangeError("exact_oracle: negative time");
  const std::uint32_t n = 1u << L;
  std::uint32_t start = 0;
  for (std::size_t x = 0; x < L; ++x)
    if (eta0[x]) start |= 1u << x;
  std::vector<double> fv(n);
  for (std::uint32_t s = 0; s < n; ++s) fv[s] = f(s);
  if (t == 0.0) return fv[start];

  std::vector<core::Transition> tr;
  tr.reserve(static_cast<std::size_t>(n) * L);
  for (std::uint32_t s = 0; s < n; ++s) {
    for (std::size_t x = 0; x < L; ++x) {
      const std::uint32_t bit = 1u << x;
      for (std::size_t y : {left(x, L), right(x, L)}) {
        const bool src = (s >> y) & 1u;
        if (src == bool(s & bit)) continue;
        tr.push_back({s, s ^ bit, 0.5});
      }
    }
  }
  core::SparseGenerator gen(n, tr);
  return gen.expectation(fv, t, 1e-11)[start];
}

double exact_oracle(const SpinField& eta0, const std::vector<std::size_t>& A, double t) {
  check_sites(A, eta0.size(), "exact_oracle");
  std::uint32_t mask = 0;
  for (auto x : A) mask |= 1u << x;
  return exact_expectation(eta0, [mask](std::uint32_t s) { return (s & mask) == mask ? 1.0 : 0.0; }, t);
}

double exact_agreement(const SpinField& eta0, std::size_t x, std::size_t y, double t) {
  check_sites({x, y}, eta0.size(), "exact_agreement");
  return exact_expectation(
      eta0, [x, y](std::uint32_t s) { return ((s >> x) & 1u) == ((s >> y) & 1u) ? 1.0 : 0.0; }, t);
}

double meeting_probability(std::size_t L, std::size_t d, double t) {
  if (L < 3) throw ParameterError("meeting_probability: need L >= 3");
  d %= L;
  if (d == 0) return 1.0;
  if (t <= 0.0) return 0.0;
  std::vector<core::Transition> tr;
  for (std::size_t k = 1; k < L; ++k) {
    tr.push_back({k, right(k, L), 1.0});
    tr.push_back({k, left(k, L), 1.0});
  }
  std::vector<double> f(L, 0.0);
  f[0] = 1.0;
  core::SparseGenerator gen(L, tr);
  return gen.expectation(f, t, 1e-13)[d];
}

ClusteringCurve clustering_curve(const SpinField& eta0, std::size_t x, std::size_t y,
                                 const std::vector<double>& t_grid, const core::McConfig& mc) {
  const std::size_t L = eta0.size();
  if (x >= L || y >= L) throw RangeError("clustering_curve: site out of range");
  if (t_grid.empty()) throw ParameterError("clustering_curve: empty time grid");
  if (!std::is_sorted(t_grid.begin(), t_grid.end()) || t_grid.front() < 0.0)
    throw ParameterError("clustering_curve: time grid must be sorted and nonnegative");
  const double t_max = t_grid.back();
  auto rows = core::run_replicates<std::vector<double>>(mc.replicates, mc.workers, [&](std::size_t i) {
    Rng base(mc.seed, i);
    const auto log = build_graphical(L, t_max, base.split(1));
    std::vector<double> row(t_grid.size());
    SpinField eta = eta0;
    std::size_t k = 0;
    for (std::size_t g = 0; g < t_grid.size(); ++g) {
      for (; k < log.arrows.size() && log.arrows[k].time <= t_grid[g]; ++k)
        eta.spins[log.arrows[k].to] = eta.spins[log.arrows[k].from];
      row[g] = eta[x] == eta[y] ? 1.0 : 0.0;
    }
    return row;
  });
  ClusteringCurve out;
  out.t_grid = t_grid;
  const std::size_t d = (y + L - x) % L;
  std::vector<double> col(rows.size());
  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][g];
    out.agree.push_back(core::estimate_mean(col));
    out.lower_bound.push_back(meeting_probability(L, d, t_grid[g]));
  }
  return out;
}

}  // namespace duality::voter
