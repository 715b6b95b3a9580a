#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "duality/colour/colour.hpp"
#include "duality/colour/continuum.hpp"
#include "duality/core/parallel.hpp"
#include "duality/core/processes.hpp"
#include "duality/interface/interface.hpp"
#include "duality/lab/profiles.hpp"
#include "duality/sbm/sbm.hpp"
#include "duality/voter/voter.hpp"

namespace duality::lab::detail {

namespace {

using core::Estimate;
using core::Rng;

ParamSpec opt(std::string key, ParamType type, std::string def, std::string doc, std::vector<std::string> choices = {}) {
  return {std::move(key), type, std::move(def), std::move(doc), std::move(choices), {}};
}

ParamSpec req(std::string key, ParamType type, std::string example, std::string doc) {
  return {std::move(key), type, std::nullopt, std::move(doc), {}, std::move(example)};
}

template <class T, class F>
std::vector<T> replicates(const RunContext& ctx, F&& fn) {
  return core::run_replicates<T>(ctx.mc.replicates, ctx.mc.workers, std::forward<F>(fn));
}

Estimate mean_of(const std::vector<double>& xs) { return core::estimate_mean(xs); }

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t k) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[k]);
  return out;
}

// ---- stochastic_core ---------------------------------------------------

RunResult run_poisson(const Params& p, const RunContext& ctx) {
  const double rate = p.real("rate"), horizon = p.real("horizon");
  struct Out {
    double count = 0;
    bool ok = true;
  };
  const auto outs = replicates<Out>(ctx, [&](std::size_t i) {
    Rng r(ctx.mc.seed, i);
    const auto ev = core::sample_poisson_events(rate, horizon, r);
    Out o{double(ev.times.size()), true};
    for (std::size_t k = 0; k < ev.times.size(); ++k) {
      if (ev.times[k] < 0.0 || ev.times[k] > horizon) o.ok = false;
      if (k && !(ev.times[k] > ev.times[k - 1])) o.ok = false;
    }
    return o;
  });
  std::vector<double> counts, rates;
  bool ok = true;
  for (const auto& o : outs) {
    counts.push_back(o.count);
    rates.push_back(horizon > 0 ? o.count / horizon : 0.0);
    ok = ok && o.ok;
  }
  RunResult r;
  r.add("count", mean_of(counts));
  r.add("expected_count", rate * horizon);
  r.add("rate_estimate", mean_of(rates));
  r.check("event times strictly increasing in [0, horizon]", ok);
  return r;
}

RunResult run_gaussian_pair(const Params& p, const RunContext& ctx) {
  const double rho = p.real("rho");
  const auto draws = replicates<std::vector<double>>(ctx, [&](std::size_t i) {
    Rng r(ctx.mc.seed, i);
    const auto [a, b] = core::gaussian_pair(rho, r);
    return std::vector<double>{a, b, a * a, b * b, a * b};
  });
  RunResult r;
  const char* names[] = {"mean_xi1", "mean_xi2", "second_moment_xi1", "second_moment_xi2", "correlation"};
  for (std::size_t k = 0; k < 5; ++k) r.add(names[k], mean_of(column(draws, k)));
  const double corr = r.rows.back().value;
  const double n = double(ctx.mc.replicates);
  r.check("empirical correlation within 4/sqrt(N) of rho", std::abs(corr - rho) < 4.0 / std::sqrt(n),
          "corr=" + format_number(corr));
  return r;
}

RunResult run_bridge(const Params& p, const RunContext&) {
  RunResult r;
  const double q = core::bridge_crossing_prob(p.real("a"), p.real("b"), p.real("dt"), p.real("diffusivity"));
  r.add("probability", q);
  r.check("probability in [0, 1]", q >= 0.0 && q <= 1.0);
  return r;
}

// ---- voter_lattice -----------------------------------------------------

std::vector<ParamSpec> voter_base() {
  return {opt("L", ParamType::count, "8", "cycle length"),
          opt("init", ParamType::text, "alternating",
              "initial spins: heaviside|alternating|ones|zeros or a 0/1 string of length L")};
}

template <class... Extra>
std::vector<ParamSpec> with(std::vector<ParamSpec> base, Extra... extra) {
  (base.push_back(std::move(extra)), ...);
  return base;
}

RunResult run_build_graphical(const Params& p, const RunContext& ctx) {
  const std::size_t L = p.count("L");
  const double horizon = p.real("horizon");
  struct Out {
    double arrows = 0;
    bool ok = true;
  };
  const auto outs = replicates<Out>(ctx, [&](std::size_t i) {
    const auto log = voter::build_graphical(L, horizon, Rng(ctx.mc.seed, i));
    Out o{double(log.arrows.size()), true};
    for (std::size_t k = 0; k < log.arrows.size(); ++k) {
      const auto& a = log.arrows[k];
      if (a.time < 0 || a.time > horizon || a.from >= L || a.to >= L) o.ok = false;
      if (a.to != (a.from + 1) % L && a.from != (a.to + 1) % L) o.ok = false;
      if (k && a.time < log.arrows[k - 1].time) o.ok = false;
    }
    return o;
  });
  std::vector<double> n;
  bool ok = true;
  for (const auto& o : outs) {
    n.push_back(o.arrows);
    ok = ok && o.ok;
  }
  RunResult r;
  r.add("arrows", mean_of(n));
  r.add("expected_arrows", double(L) * horizon);
  r.check("arrows sorted, in range and between neighbours", ok);
  return r;
}

RunResult run_evolve_voter(const Params& p, const RunContext& ctx) {
  const std::size_t L = p.count("L");
  const auto eta0 = spin_profile(p.text("init"), L);
  const double t = p.real("t");
  struct Out {
    std::vector<double> spins;
    std::size_t violations = 0;
  };
  const auto outs = replicates<Out>(ctx, [&](std::size_t i) {
    const auto log = voter::build_graphical(L, t, Rng(ctx.mc.seed, i));
    const auto eta = voter::evolve_voter(eta0, log, t);
    Out o;
    for (std::size_t x = 0; x < L; ++x) {
      o.spins.push_back(eta[x]);
      if (eta[x] != eta0[voter::trace_dual_paths(log, t, {x})[0]]) ++o.violations;
    }
    return o;
  });
  RunResult r;
  std::vector<std::vector<double>> rows;
  std::size_t violations = 0;
  for (const auto& o : outs) {
    rows.push_back(o.spins);
    violations += o.violations;
  }
  std::vector<double> density;
  for (const auto& row : rows) {
    double s = 0;
    for (double v : row) s += v;
    density.push_back(s / double(L));
  }
  r.add("density", mean_of(density));
  for (std::size_t x = 0; x < L; ++x) r.add(point_name("mean_spin", double(x)), mean_of(column(rows, x)));
  r.add("dual_violations", double(violations));
  r.check("eta_t(x) equals eta_0 at the dual walker's endpoint", violations == 0);
  return r;
}

RunResult run_trace_dual(const Params& p, const RunContext& ctx) {
  const std::size_t L = p.count("L");
  const auto A = p.counts("A");
  const double t = p.real("t");
  for (auto a : A)
    if (a >= L) throw ConfigError("A", "site outside the cycle");
  const auto outs = replicates<std::vector<double>>(ctx, [&](std::size_t i) {
    const auto log = voter::build_graphical(L, t, Rng(ctx.mc.seed, i));
    const auto d = voter::trace_dual(log, t, A);
    return std::vector<double>{double(d.size()), d.size() == 1 ? 1.0 : 0.0};
  });
  RunResult r;
  r.add("dual_size", mean_of(column(outs, 0)));
  r.add("all_coalesced", mean_of(column(outs, 1)));
  return r;
}

RunResult run_check_voter_duality(const Params& p, const RunContext& ctx) {
  const std::size_t L = p.count("L");
  const auto eta0 = spin_profile(p.text("init"), L);
  const auto A = p.counts("A");
  const double t = p.real("t");
  const auto d = voter::check_voter_duality(eta0, A, t, ctx.mc);
  RunResult r;
  r.add("lhs", d.lhs);
  r.add("rhs", d.rhs);
  r.add("z_lhs_rhs", core::z_distance(d.lhs, d.rhs));
  if (L <= 12) r.add("oracle", voter::exact_oracle(eta0, A, t));
  return r;
}

RunResult run_interface_of(const Params& p, const RunContext&) {
  const std::size_t L = p.count("L");
  const auto I = voter::interface_of(spin_profile(p.text("init"), L));
  RunResult r;
  r.add("interfaces", double(I.size()));
  r.check("interface count is even on a cycle", I.size() % 2 == 0);
  return r;
}

RunResult run_evolve_interface_walks(const Params& p, const RunContext& ctx) {
  const std::size_t L = p.count("L");
  const auto eta0 = spin_profile(p.text("init"), L);
  const double t = p.real("t");
  const auto I0 = voter::interface_of(eta0);
  struct Out {
    double count = 0;
    bool same = true;
  };
  const auto outs = replicates<Out>(ctx, [&](std::size_t i) {
    const auto log = voter::build_graphical(L, t, Rng(ctx.mc.seed, i));
    const auto I = voter::evolve_interface_walks(I0, L, log, t);
    return Out{double(I.size()), I == voter::interface_of(voter::evolve_voter(eta0, log, t))};
  });
  std::vector<double> counts;
  std::size_t violations = 0;
  for (const auto& o : outs) {
    counts.push_back(o.count);
    violations += !o.same;
  }
  RunResult r;
  r.add("interfaces", mean_of(counts));
  r.add("coupling_violations", double(violations));
  r.check("interfaces of the voter path equal the annihilating walks on the same arrows", violations == 0);
  return r;
}

RunResult run_parity(const Params& p, const RunContext& ctx) {
  const std::size_t L = p.count("L");
  const auto eta0 = spin_profile(p.text("init"), L);
  const std::size_t x = p.count("x"), y = p.count("y");
  const double t = p.real("t");
  const auto d = voter::parity_duality_check(eta0, x, y, t, ctx.mc);
  RunResult r;
  r.add("lhs", d.lhs);
  r.add("rhs", d.rhs);
  if (L <= 12) r.add("oracle", voter::exact_agreement(eta0, x, y, t));
  return r;
}

RunResult run_exact_oracle(const Params& p, const RunContext&) {
  const std::size_t L = p.count("L");
  RunResult r;
  r.add("value", voter::exact_oracle(spin_profile(p.text("init"), L), p.counts("A"), p.real("t")));
  return r;
}

RunResult run_clustering(const Params& p, const RunContext& ctx) {
  const std::size_t L = p.count("L");
  const auto c = voter::clustering_curve(spin_profile(p.text("init"), L), p.count("x"), p.count("y"),
                                         p.reals("t_grid"), ctx.mc);
  RunResult r;
  for (std::size_t k = 0; k < c.t_grid.size(); ++k) r.add(point_name("agree", c.t_grid[k]), c.agree[k]);
  for (std::size_t k = 0; k < c.t_grid.size(); ++k) r.add(point_name("lower_bound", c.t_grid[k]), c.lower_bound[k]);
  return r;
}

// ---- sbm_field ---------------------------------------------------------

std::vector<ParamSpec> sbm_base(const std::string& init) {
  return {opt("L", ParamType::count, "32", "lattice sites"),
          opt("dx", ParamType::real, "0.25", "lattice spacing"),
          opt("init", ParamType::text, init, "initial pair (u0, v0)", kFieldProfiles),
          opt("rho", ParamType::real, "-0.5", "noise correlation"),
          opt("gamma", ParamType::real, "1", "branching rate"),
          opt("dt", ParamType::real, "0.01", "Euler-Maruyama step"),
          opt("positivity", ParamType::text, "clamp", "how negative values are prevented", {"clamp", "truncate"})};
}

sbm::SbmParams sbm_params(const Params& p) {
  sbm::SbmParams s;
  s.rho = p.real("rho");
  s.gamma = p.real("gamma");
  s.dt = p.real("dt");
  s.dx = p.real("dx");
  s.positivity = p.text("positivity") == "truncate" ? sbm::Positivity::truncate : sbm::Positivity::clamp;
  return s;
}

sbm::FieldPair sbm_init(const Params& p) { return field_profile(p.text("init"), p.count("L"), p.real("dx")); }

double mass(const std::vector<double>& f, double dx) {
  double s = 0;
  for (double v : f) s += v;
  return s * dx;
}

RunResult run_step_sbm(const Params& p, const RunContext& ctx) {
  const auto init = sbm_init(p);
  const auto sp = sbm_params(p);
  const std::size_t steps = p.count("steps");
  struct Out {
    std::vector<double> u;
    double mu = 0, mv = 0;
    sbm::PathLedger led;
    bool nonneg = true;
  };
  const auto outs = replicates<Out>(ctx, [&](std::size_t i) {
    Rng rng(ctx.mc.seed, i);
    auto s = init;
    Out o;
    for (std::size_t k = 0; k < steps; ++k) sbm::step_sbm(s, sp, rng, &o.led);
    for (std::size_t x = 0; x < s.size(); ++x) o.nonneg = o.nonneg && s.u[x] >= 0 && s.v[x] >= 0;
    o.mu = mass(s.u, s.dx);
    o.mv = mass(s.v, s.dx);
    o.u = s.u;
    return o;
  });
  std::vector<double> mu, mv;
  std::vector<std::vector<double>> us;
  std::size_t clamps = 0, site_steps = 0;
  bool nonneg = true;
  for (const auto& o : outs) {
    mu.push_back(o.mu);
    mv.push_back(o.mv);
    us.push_back(o.u);
    clamps += o.led.clamps;
    site_steps += o.led.site_steps;
    nonneg = nonneg && o.nonneg;
  }
  RunResult r;
  r.add("mass_u", mean_of(mu));
  r.add("mass_v", mean_of(mv));
  r.add("clamp_rate", site_steps ? double(clamps) / double(site_steps) : 0.0);
  for (std::size_t x = 0; x < init.size(); ++x) r.add(point_name("mean_u", init.x(x)), mean_of(column(us, x)));
  r.check("fields stay nonnegative", nonneg);
  return r;
}

RunResult run_heaviside_init(const Params& p, const RunContext&) {
  const auto s = sbm::heaviside_init(p.count("L"), p.real("dx"));
  RunResult r;
  r.add("mass_u", mass(s.u, s.dx));
  r.add("mass_v", mass(s.v, s.dx));
  r.add("origin", double(s.origin));
  bool ok = true;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != s.origin && s.u[i] * s.v[i] != 0.0) ok = false;
    if (s.u[i] + s.v[i] < 1.0) ok = false;
  }
  r.check("u v = 0 away from the junction and u + v >= 1", ok);
  return r;
}

RunResult run_interface_region(const Params& p, const RunContext& ctx) {
  const auto init = sbm_init(p);
  const auto sp = sbm_params(p);
  const double t = p.real("t"), delta = p.real("delta");
  const auto outs = replicates<std::vector<double>>(ctx, [&](std::size_t i) {
    Rng rng(ctx.mc.seed, i);
    auto s = init;
    sbm::run_sbm(s, sp, t, rng);
    const auto reg = sbm::interface_region(s, delta);
    if (!reg) return std::vector<double>{1.0, 0.0};
    return std::vector<double>{0.0, double(reg->second - reg->first + 1) * s.dx};
  });
  RunResult r;
  r.add("empty_fraction", mean_of(column(outs, 0)));
  r.add("width", mean_of(column(outs, 1)));
  return r;
}

std::vector<ParamSpec> self_duality_params() {
  auto v = sbm_base("balanced");
  v.push_back(opt("test", ParamType::text, "balanced", "test pair (phi, psi), shifted by phase", kFieldProfiles));
  v.push_back(opt("phase", ParamType::real, "0.5", "phase shift of the test pair"));
  return v;
}

sbm::FieldPair sbm_test(const Params& p) {
  return field_profile(p.text("test"), p.count("L"), p.real("dx"), p.real("phase"));
}

RunResult run_self_duality_functional(const Params& p, const RunContext&) {
  const auto f = sbm::self_duality_functional(sbm_init(p), sbm_test(p), p.real("rho"));
  RunResult r;
  r.add("re", f.real());
  r.add("im", f.imag());
  r.check("|F| <= 1", std::abs(f) <= 1.0 + 1e-12);
  return r;
}

RunResult run_check_self_duality(const Params& p, const RunContext& ctx) {
  const auto d = sbm::check_self_duality(sbm_init(p), sbm_test(p), sbm_params(p), p.real("t"), ctx.mc);
  RunResult r;
  r.add("lhs_re", d.lhs.re);
  r.add("lhs_im", d.lhs.im);
  r.add("rhs_re", d.rhs.re);
  r.add("rhs_im", d.rhs.im);
  r.add("clamp_rate", d.clamp_rate);
  return r;
}

RunResult run_martingale(const Params& p, const RunContext& ctx) {
  const auto m = sbm::martingale_residual(sbm_init(p), sbm_test(p), sbm_params(p), p.real("t"), ctx.mc);
  RunResult r;
  r.add("residual_re", m.re);
  r.add("residual_im", m.im);
  return r;
}

RunResult run_separation(const Params& p, const RunContext& ctx) {
  const auto init = sbm_init(p);
  const long long site = p.integer("site");
  const std::size_t at = site < 0 ? init.origin : static_cast<std::size_t>(site);
  if (at >= init.size()) throw ConfigError("site", "outside the lattice");
  const auto pts =
      sbm::separation_stat(init, sbm_params(p), p.reals("gammas"), p.real("t"), at, p.real("dt_gamma"), ctx.mc);
  RunResult r;
  for (const auto& pt : pts) r.add(point_name("uv", pt.gamma), pt.uv);
  for (const auto& pt : pts) r.add(point_name("clamp_rate", pt.gamma), pt.clamp_rate);
  return r;
}

RunResult run_rescaling(const Params& p, const RunContext& ctx) {
  const auto init = sbm_init(p);
  const long long site = p.integer("site");
  const std::size_t at = site < 0 ? init.origin : static_cast<std::size_t>(site);
  const auto rep = sbm::rescaling_check(init, sbm_params(p), static_cast<unsigned>(p.count("K")), p.real("t"), at, ctx.mc);
  RunResult r;
  r.add("ks_statistic", rep.ks.statistic);
  r.add("ks_p_value", rep.ks.p_value);
  r.add("coarse", rep.coarse);
  r.add("fine", rep.fine);
  return r;
}

RunResult run_critical_curve(const Params& p, const RunContext&) {
  RunResult r;
  const double v = sbm::critical_curve(p.real("rho"));
  if (std::isinf(v)) throw ConfigError("rho", "p(rho) is infinite at rho = -1");
  r.add("p", v);
  return r;
}

RunResult run_moment_growth(const Params& p, const RunContext& ctx) {
  const auto sp = sbm_params(p);
  const auto grid = p.reals("t_grid");
  const double moment = p.real("moment");
  const auto c = sbm::moment_growth_experiment(sp, moment, p.count("L"), grid, p.real("tail_from"), ctx.mc);
  RunResult r;
  for (std::size_t k = 0; k < grid.size(); ++k) r.add(point_name("moment", grid[k]), c.moment[k]);
  if (moment == 2.0) {
    const auto ex = sbm::second_moment_exact(sp.rho, sp.gamma, sp.dx, p.count("L"), grid);
    for (std::size_t k = 0; k < grid.size(); ++k) r.add(point_name("exact", grid[k]), ex[k]);
  }
  r.add("trend_z", c.trend.statistic);
  r.add("trend_p_value", c.trend.p_value);
  r.add("clamp_rate", c.clamp_rate);
  r.add("truncation_rate", c.truncation_rate);
  return r;
}

// ---- colour_dual -------------------------------------------------------

std::vector<ParamSpec> walker_base() {
  return {opt("L", ParamType::count, "32", "lattice sites (periodic)"),
          opt("dx", ParamType::real, "0.25", "lattice spacing"),
          req("x", ParamType::counts, "15, 16", "starting sites"),
          opt("colours", ParamType::text, "12", "initial colours, a string of 1s and 2s, one per walker")};
}

colour::WalkerLattice walker_lattice(const Params& p) {
  return {p.count("L"), p.real("dx"), sbm::Boundary::periodic};
}

std::uint32_t walker_colours(const Params& p) {
  const auto c = p.text("colours");
  if (c.size() != p.counts("x").size()) throw ConfigError("colours", "needs one colour per walker");
  return parse_colouring(c);
}

RunResult run_coloured_dual(const Params& p, const RunContext& ctx) {
  const auto lat = walker_lattice(p);
  const auto x = p.counts("x");
  const auto c = walker_colours(p);
  const double gamma = p.real("gamma"), rho = p.real("rho"), t = p.real("t");
  const auto outs = replicates<std::vector<double>>(ctx, [&](std::size_t i) {
    const auto w = colour::simulate_coloured_dual(lat, x, c, gamma, rho, t, Rng(ctx.mc.seed, i));
    return std::vector<double>{w.ledger.L_eq, w.ledger.L_neq, double(w.flips), std::exp(w.log_weight(gamma, rho))};
  });
  RunResult r;
  r.add("L_eq", mean_of(column(outs, 0)));
  r.add("L_neq", mean_of(column(outs, 1)));
  r.add("flips", mean_of(column(outs, 2)));
  r.add("weight", mean_of(column(outs, 3)));
  return r;
}

RunResult run_check_moment_duality(const Params& p, const RunContext& ctx) {
  auto init = sbm_init(p);
  const auto x = p.counts("x");
  const auto c = walker_colours(p);
  const auto d = colour::check_moment_duality(init, x, c, sbm_params(p), p.real("t"), ctx.mc);
  RunResult r;
  r.add("lhs", d.lhs);
  r.add("rhs", d.rhs);
  r.add("weight_cv", d.weight_cv);
  return r;
}

RunResult run_evolve_colour_measure(const Params& p, const RunContext& ctx) {
  const auto lat = walker_lattice(p);
  const auto x = p.counts("x");
  const auto c = walker_colours(p);
  const double gamma = p.real("gamma"), rho = p.real("rho"), t = p.real("t");
  const std::size_t B = std::size_t{1} << x.size();
  const auto outs = replicates<colour::ColourMeasure>(ctx, [&](std::size_t i) {
    Rng rng(ctx.mc.seed, i);
    const auto path = colour::sample_walker_path(lat, x, t, rng);
    return colour::evolve_colour_measure(path, c, gamma, rho, t);
  });
  RunResult r;
  bool nonneg = true;
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<double> col;
    for (const auto& m : outs) {
      col.push_back(m[b]);
      nonneg = nonneg && m[b] >= 0.0;
    }
    r.add("M_" + colouring_string(static_cast<std::uint32_t>(b), x.size()), mean_of(col));
  }
  r.check("colour measure is nonnegative", nonneg);
  Rng rng(ctx.mc.seed, 0);
  const auto path = colour::sample_walker_path(lat, x, t, rng);
  colour::ColourTrajectory traj;
  colour::evolve_colour_measure(path, c, gamma, rho, t, &traj);
  std::ostringstream os;
  colour::write_colour_csv(os, traj, x.size());
  r.attachments["colour_measure.csv"] = os.str();
  return r;
}

RunResult run_k_infinity(const Params& p, const RunContext&) {
  const auto s = p.text("colours");
  const auto b = parse_colouring(s);
  colour::ColourMeasure M(std::size_t{1} << s.size(), 0.0);
  M[b] = 1.0;
  const auto out = colour::k_infinity_apply(M, p.count("l1"), p.count("l2"));
  RunResult r;
  for (std::size_t k = 0; k < out.size(); ++k)
    r.add("M_" + colouring_string(static_cast<std::uint32_t>(k), s.size()), out[k]);
  return r;
}

RunResult run_colour_infinite(const Params& p, const RunContext& ctx) {
  const auto lat = walker_lattice(p);
  const auto x = p.counts("x");
  const auto c = walker_colours(p);
  const double t = p.real("t");
  const std::size_t B = std::size_t{1} << x.size();
  const auto outs = replicates<colour::ColourMeasure>(ctx, [&](std::size_t i) {
    Rng rng(ctx.mc.seed, i);
    const auto path = colour::sample_walker_path(lat, x, t, rng);
    return colour::evolve_colour_measure_infinite(colour::meeting_schedule(path, t), c, t);
  });
  RunResult r;
  std::vector<double> dead;
  for (const auto& m : outs) {
    double s = 0;
    for (double w : m) s += w;
    dead.push_back(s == 0.0 ? 1.0 : 0.0);
  }
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<double> col;
    for (const auto& m : outs) col.push_back(m[b]);
    r.add("M_" + colouring_string(static_cast<std::uint32_t>(b), x.size()), mean_of(col));
  }
  r.add("zero_measure", mean_of(dead));
  return r;
}

std::function<double(double)> as_function(const interface::PiecewiseConstantProfile& f) {
  return [f](double y) { return f(y); };
}

RunResult run_coalescing_duality(const Params& p, const RunContext& ctx) {
  const auto u0 = line_profile(p.text("u0"));
  const auto d = colour::check_coalescing_duality(as_function(u0), p.reals("x"), p.real("t"), p.real("dt"), ctx.mc);
  RunResult r;
  r.add("lhs", d.lhs);
  r.add("rhs", d.rhs);
  return r;
}

RunResult run_annihilating_duality(const Params& p, const RunContext& ctx) {
  const double gamma = p.real("gamma"), t = p.real("t");
  const auto x = p.reals("x");
  RunResult r;
  if (std::isinf(gamma)) {
    const auto d = colour::check_annihilating_duality_infinite(as_function(line_profile(p.text("u0"))), x, t,
                                                               p.real("dt"), ctx.mc);
    r.add("lhs", d.lhs);
    r.add("rhs", d.rhs);
    return r;
  }
  // Lattice version: u0 sampled at site centres, v0 = 1 - u0, sites rounded from x.
  const std::size_t L = p.count("L");
  const double dx = p.real("dx");
  const auto prof = line_profile(p.text("u0"));
  sbm::FieldPair init = field_profile("zero", L, dx);
  std::vector<std::size_t> sites;
  for (std::size_t i = 0; i < L; ++i) {
    init.u[i] = prof(init.x(i));
    init.v[i] = 1.0 - init.u[i];
  }
  for (double xi : x) {
    const long long s = static_cast<long long>(init.origin) + std::llround(xi / dx);
    if (s < 0 || s >= static_cast<long long>(L)) throw ConfigError("x", "point outside the lattice");
    sites.push_back(static_cast<std::size_t>(s));
  }
  sbm::SbmParams sp;
  sp.rho = -1.0;
  sp.gamma = gamma;
  sp.dx = dx;
  sp.dt = p.real("sbm_dt");
  const auto d = colour::check_annihilating_moment_duality(init, sites, sp, t, ctx.mc);
  r.add("lhs", d.lhs);
  r.add("rhs", d.rhs);
  return r;
}

// ---- interface_process -------------------------------------------------

RunResult run_step_particles(const Params& p, const RunContext& ctx) {
  const auto mode = mode_from_string(p.text("mode"));
  const bool torus = p.text("domain") == "torus";
  const double C = p.real("C");
  const std::size_t n = p.count("n");
  const double dt = p.real("dt"), gamma = p.real("gamma"), eps = p.real("eps");
  auto grid = p.reals("t_grid");
  std::sort(grid.begin(), grid.end());
  if (grid.front() < 0.0) throw ConfigError("t_grid", "negative time");
  const auto domain = torus ? interface::Domain::torus(C) : interface::Domain::line();
  std::vector<double> start;
  for (std::size_t k = 0; k < n; ++k) start.push_back(C * double(k) / double(n));
  struct Out {
    std::vector<double> alive;
    bool ok = true;
  };
  const auto outs = replicates<Out>(ctx, [&](std::size_t i) {
    Rng rng(ctx.mc.seed, i);
    auto sys = interface::ParticleSystem1D::make(domain, mode, start, gamma, eps);
    Out o;
    double now = 0.0;
    for (double tk : grid) {
      interface::run_particles(sys, dt, tk - now, rng);
      now = tk;
      o.alive.push_back(double(sys.count()));
      try {
        sys.validate();
      } catch (const std::exception&) {
        o.ok = false;
      }
      if (torus && mode == interface::Mode::annihilating && (n - sys.count()) % 2 != 0) o.ok = false;
    }
    return o;
  });
  RunResult r;
  std::vector<std::vector<double>> rows;
  bool ok = true;
  for (const auto& o : outs) {
    rows.push_back(o.alive);
    ok = ok && o.ok;
  }
  for (std::size_t k = 0; k < grid.size(); ++k) r.add(point_name("alive", grid[k]), mean_of(column(rows, k)));
  r.check("particle system invariants hold at every grid time", ok);

  Rng rng(ctx.mc.seed, ctx.mc.replicates);  // a separate stream for the recorded paths
  const auto snaps = interface::record_trajectories(interface::ParticleSystem1D::make(domain, mode, start, gamma, eps),
                                                    dt, grid.back(), p.count("record_every"), rng);
  std::ostringstream os;
  interface::write_particle_csv(os, snaps);
  r.attachments["particles.csv"] = os.str();
  return r;
}

std::pair<interface::PiecewiseConstantProfile, interface::PiecewiseConstantProfile> colouring_pair(
    const std::string& name) {
  using P = interface::PiecewiseConstantProfile;
  if (name == "heaviside") return {P::step(0.0, 1.0, 0.0), P::step(0.0, 0.0, 1.0)};
  if (name == "heaviside_w2") return {P::step(0.0, 1.0, 0.0), P::step(0.0, 0.0, 2.0)};
  if (name == "two_interfaces") return {P{{0.0, 0.6}, {1.0, 0.0, 1.0}}, P{{0.0, 0.6}, {0.0, 1.0, 0.0}}};
  throw ConfigError("profile", "unknown colouring profile '" + name + "'");
}

RunResult run_abm_colouring(const Params& p, const RunContext& ctx) {
  const auto [u0, v0] = colouring_pair(p.text("profile"));
  const double t = p.real("t"), dt = p.real("dt");
  const auto grid = p.reals("grid");
  struct Out {
    std::vector<double> u, v;
    double interfaces = 0;
    bool separated = true;
  };
  const auto outs = replicates<Out>(ctx, [&](std::size_t i) {
    Rng rng(ctx.mc.seed, i);
    const auto c = interface::simulate_abm_colouring(u0, v0, t, dt, grid, rng);
    Out o{c.u_hat, c.v_hat, double(c.state.interfaces.count()), true};
    for (std::size_t k = 0; k < grid.size(); ++k) o.separated = o.separated && c.u_hat[k] * c.v_hat[k] == 0.0;
    return o;
  });
  RunResult r;
  std::vector<std::vector<double>> us, vs;
  std::vector<double> counts;
  bool sep = true;
  for (const auto& o : outs) {
    us.push_back(o.u);
    vs.push_back(o.v);
    counts.push_back(o.interfaces);
    sep = sep && o.separated;
  }
  r.add("interfaces", mean_of(counts));
  for (std::size_t k = 0; k < grid.size(); ++k) r.add(point_name("u_hat", grid[k]), mean_of(column(us, k)));
  for (std::size_t k = 0; k < grid.size(); ++k) r.add(point_name("v_hat", grid[k]), mean_of(column(vs, k)));
  r.check("types are separated on the grid", sep);
  Rng rng(ctx.mc.seed, 0);
  std::ostringstream os;
  interface::write_colouring_csv(os, interface::simulate_abm_colouring(u0, v0, t, dt, grid, rng));
  r.attachments["colouring.csv"] = os.str();
  return r;
}

RunResult run_continuous_voter(const Params& p, const RunContext& ctx) {
  const auto u0 = line_profile(p.text("u0"));
  const auto x = p.reals("x");
  const double t = p.real("t"), dt = p.real("dt");
  const auto outs = replicates<std::vector<double>>(ctx, [&](std::size_t i) {
    Rng rng(ctx.mc.seed, i);
    const auto types = interface::continuous_voter(as_function(u0), x, t, dt, rng);
    return std::vector<double>(types.begin(), types.end());
  });
  RunResult r;
  for (std::size_t k = 0; k < x.size(); ++k) r.add(point_name("type", x[k]), mean_of(column(outs, k)));
  for (std::size_t k = 0; k < x.size(); ++k) r.add(point_name("heat", x[k]), u0.heat(x[k], t));
  return r;
}

RunResult run_interface_sde(const Params& p, const RunContext& ctx) {
  using P = interface::PiecewiseConstantProfile;
  const std::string w_name = p.text("w0");
  const P w0 = w_name == "flat" ? P::constant(1.0) : P::step(0.0, 1.0, 2.0);
  const double I0 = p.real("I0"), dt = p.real("dt"), t = p.real("t");
  const auto ends = replicates<double>(ctx, [&](std::size_t i) {
    Rng rng(ctx.mc.seed, i);
    return interface::simulate_interface_sde(I0, w0, dt, t, rng).back();
  });
  std::vector<double> sq;
  for (double e : ends) sq.push_back(e * e);
  RunResult r;
  r.add("mean", mean_of(ends));
  r.add("second_moment", mean_of(sq));
  std::function<double(double)> cdf;
  if (w_name == "flat") {
    cdf = [=](double x) { return 0.5 * std::erfc(-(x - I0) / std::sqrt(2.0 * t)); };
  } else if (I0 == 0.0) {
    const P u0 = P::step(0.0, 1.0, 0.0);
    cdf = [=](double x) { return 1.0 - u0.heat(x, t) / w0.heat(x, t); };
  }
  if (cdf) {
    const auto ks = core::ks_one_sample(ends, cdf);
    r.add("ks_statistic", ks.statistic);
    r.add("ks_p_value", ks.p_value);
  }
  return r;
}

std::vector<ParamSpec> entrance_base() {
  return {opt("init", ParamType::text, "lattice", "starting configuration",
              {"lattice", "poisson", "paired_square", "paired_quarter"}),
          opt("C", ParamType::real, "1", "torus circumference"),
          opt("dt", ParamType::real, "0.001", "time step")};
}

interface::EntranceInit entrance_kind(const Params& p) { return interface::entrance_init_from_string(p.text("init")); }

RunResult run_entrance_law(const Params& p, const RunContext& ctx) {
  const auto rows = interface::entrance_law_experiment(entrance_kind(p), p.real("C"), p.counts("n_list"),
                                                       p.reals("t_grid"), p.real("dt"), ctx.mc);
  RunResult r;
  std::size_t dropped = 0;
  for (const auto& row : rows) {
    r.add(point_name("count_n" + std::to_string(row.n), row.t), row.count);
    dropped += row.dropped;
  }
  r.add("dropped_odd_starts", double(dropped));
  return r;
}

RunResult run_npoint_density(const Params& p, const RunContext& ctx) {
  const auto d = interface::estimate_npoint_density(entrance_kind(p), p.count("n"), p.real("C"), p.real("t"),
                                                    p.reals("x_points"), p.real("h"), p.real("dt"), ctx.mc);
  RunResult r;
  r.add(point_name("density", d.coarse.h), d.coarse.density);
  r.add(point_name("density", d.fine.h), d.fine.density);
  r.add("atomic", d.atomic ? 1.0 : 0.0);
  return r;
}

RunResult run_entrance_consistency(const Params& p, const RunContext& ctx) {
  const auto c = interface::entrance_consistency_check(entrance_kind(p), p.count("n"), p.real("C"), p.real("s"),
                                                       p.real("t"), p.real("dt"), ctx.mc);
  RunResult r;
  r.add("counts_chi2_statistic", c.counts_chi2.statistic);
  r.add("counts_chi2_p_value", c.counts_chi2.p_value);
  r.add("gaps_ks_p_value", c.gaps_ks.p_value);
  r.add("direct", c.direct);
  r.add("split", c.split);
  r.add("halved_dt", c.halved);
  r.add("dt_shift", c.shift);
  r.add("ci_width", c.ci_width);
  return r;
}

RunResult run_thinning(const Params& p, const RunContext& ctx) {
  const auto rows = interface::thinning_experiment(entrance_kind(p), p.count("n"), p.real("C"), p.reals("t_grid"),
                                                   p.real("dt"), ctx.mc);
  RunResult r;
  std::size_t violations = 0;
  for (const auto& row : rows) r.add(point_name("annihilating", row.t), row.annihilating);
  for (const auto& row : rows) r.add(point_name("coalescing", row.t), row.coalescing);
  for (const auto& row : rows) {
    if (row.t > 0.0) r.add(point_name("ratio", row.t), row.ratio);
    violations += row.violations;
  }
  r.add("violations", double(violations));
  return r;
}

}  // namespace

std::vector<Experiment> make_experiments() {
  using T = ParamType;
  std::vector<Experiment> v;
  auto add = [&](std::string name, std::string module, std::string doc, std::vector<ParamSpec> params,
                 std::function<RunResult(const Params&, const RunContext&)> run) {
    v.push_back({std::move(name), std::move(module), std::move(doc), std::move(params), std::move(run)});
  };

  add("sample_poisson_events", "stochastic_core", "event counts of a homogeneous Poisson process",
      {opt("rate", T::real, "2", "events per unit time"), opt("horizon", T::real, "10", "window length")}, run_poisson);
  add("gaussian_pair", "stochastic_core", "moments of correlated normal pairs",
      {opt("rho", T::real, "0.5", "correlation")}, run_gaussian_pair);
  add("bridge_crossing_prob", "stochastic_core", "Brownian bridge barrier-touching probability",
      {req("a", T::real, "0.1", "start distance"), req("b", T::real, "0.1", "end distance"),
       opt("dt", T::real, "0.01", "bridge duration"), opt("diffusivity", T::real, "2", "variance rate")},
      run_bridge);

  add("build_graphical", "voter_lattice", "Poisson arrow counts of the graphical construction",
      {opt("L", T::count, "8", "cycle length"), opt("horizon", T::real, "1", "time horizon")}, run_build_graphical);
  add("evolve_voter", "voter_lattice", "voter model one-point means, with the dual-path coupling check",
      with(voter_base(), req("t", T::real, "1", "time")), run_evolve_voter);
  add("trace_dual", "voter_lattice", "coalescing dual walkers traced through the arrows",
      {opt("L", T::count, "8", "cycle length"), req("A", T::counts, "2, 3", "starting sites"),
       req("t", T::real, "1", "time")},
      run_trace_dual);
  add("check_voter_duality", "voter_lattice", "voter/coalescing-walk duality, both sides by Monte Carlo",
      with(voter_base(), req("A", T::counts, "2, 3", "sites of the product"), req("t", T::real, "1", "time")),
      run_check_voter_duality);
  add("interface_of", "voter_lattice", "interface bonds of a spin configuration", voter_base(), run_interface_of);
  add("evolve_interface_walks", "voter_lattice", "annihilating interface walks on shared arrows",
      with(voter_base(), req("t", T::real, "1", "time")), run_evolve_interface_walks);
  add("parity_duality_check", "voter_lattice", "parity of interfaces in [x, y) against agreement of spins",
      with(voter_base(), req("x", T::count, "0", "first site"), req("y", T::count, "3", "second site"),
           req("t", T::real, "1", "time")),
      run_parity);
  add("exact_oracle", "voter_lattice", "exact product moment by uniformization (L <= 12)",
      with(voter_base(), req("A", T::counts, "2, 3", "sites of the product"), req("t", T::real, "1", "time")),
      run_exact_oracle);
  add("clustering_curve", "voter_lattice", "P(eta_t(x) = eta_t(y)) over a time grid with the meeting bound",
      {opt("L", T::count, "16", "cycle length"), opt("init", T::text, "alternating", "initial spins"),
       opt("x", T::count, "0", "first site"), opt("y", T::count, "4", "second site"),
       opt("t_grid", T::reals, "1, 5, 20, 50", "times")},
      run_clustering);

  add("step_sbm", "sbm_field", "Euler-Maruyama steps of the symbiotic branching lattice system",
      with(sbm_base("wavy"), opt("steps", T::count, "50", "number of steps")), run_step_sbm);
  add("heaviside_init", "sbm_field", "complementary Heaviside initial pair",
      {opt("L", T::count, "33", "sites"), opt("dx", T::real, "0.25", "spacing")}, run_heaviside_init);
  add("interface_region", "sbm_field", "width of the region where both types are present",
      with(sbm_base("heaviside"), req("t", T::real, "0.5", "time"), opt("delta", T::real, "1e-6", "threshold")),
      run_interface_region);
  add("self_duality_functional", "sbm_field", "mixed Laplace-Fourier duality function", self_duality_params(),
      run_self_duality_functional);
  add("check_self_duality", "sbm_field", "self-duality, both sides by Monte Carlo",
      with(self_duality_params(), req("t", T::real, "0.25", "time")), run_check_self_duality);
  add("martingale_residual", "sbm_field", "martingale-problem residual of the duality function",
      with(self_duality_params(), req("t", T::real, "0.25", "time")), run_martingale);
  add("separation_stat", "sbm_field", "E[u_t v_t] at a site for several branching rates",
      with(sbm_base("heaviside"), opt("gammas", T::reals, "1, 10, 100", "branching rates"),
           req("t", T::real, "0.25", "time"), opt("site", T::integer, "-1", "site index, -1 for the origin"),
           opt("dt_gamma", T::real, "0.01", "step scale: dt = min(dt, dt_gamma / gamma)")),
      run_separation);
  add("rescaling_check", "sbm_field", "diffusive rescaling law of the lattice system",
      with(sbm_base("heaviside"), opt("K", T::count, "2", "scale factor"), req("t", T::real, "0.25", "time"),
           opt("site", T::integer, "-1", "site index, -1 for the origin")),
      run_rescaling);
  add("critical_curve", "sbm_field", "critical moment order p(rho) = pi / arccos(-rho)",
      {req("rho", T::real, "-0.5", "correlation in (-1, 1)")}, run_critical_curve);
  add("moment_growth_experiment", "sbm_field", "E[u_t(x)^p] from constant data, with a trend test",
      {opt("L", T::count, "32", "sites"), opt("dx", T::real, "0.25", "spacing"), opt("rho", T::real, "-0.5", "correlation"),
       opt("gamma", T::real, "1", "branching rate"), opt("dt", T::real, "0.01", "time step"),
       opt("positivity", T::text, "truncate", "positivity scheme", {"clamp", "truncate"}),
       opt("moment", T::real, "2", "moment order p"), opt("t_grid", T::reals, "1, 2, 5, 10", "times"),
       opt("tail_from", T::real, "1", "trend test uses times >= this")},
      run_moment_growth);

  add("simulate_coloured_dual", "colour_dual", "coloured dual walkers with collision local times",
      with(walker_base(), opt("gamma", T::real, "1", "branching rate"), opt("rho", T::real, "-0.5", "correlation"),
           req("t", T::real, "0.5", "time")),
      run_coloured_dual);
  {
    auto params = sbm_base("wavy");
    params.push_back(req("x", T::counts, "5, 6", "sites of the moment (at most 4)"));
    params.push_back(opt("colours", T::text, "12", "colour of each site, 1 for u and 2 for v"));
    params.push_back(req("t", T::real, "0.5", "time"));
    add("check_moment_duality", "colour_dual", "mixed moments against the coloured dual", params,
        run_check_moment_duality);
  }
  add("evolve_colour_measure", "colour_dual", "exact colour measure on sampled walker paths",
      with(walker_base(), opt("gamma", T::real, "1", "branching rate"), opt("rho", T::real, "-0.5", "correlation"),
           req("t", T::real, "0.5", "time")),
      run_evolve_colour_measure);
  add("k_infinity_apply", "colour_dual", "infinite-rate jump operator applied to a point mass",
      {req("colours", T::text, "11", "colouring of the point mass"), opt("l1", T::count, "0", "first walker"),
       opt("l2", T::count, "1", "second walker")},
      run_k_infinity);
  add("evolve_colour_measure_infinite", "colour_dual", "infinite-rate colour measure (rho = -1)",
      with(walker_base(), req("t", T::real, "0.5", "time")), run_colour_infinite);
  add("check_coalescing_duality", "colour_dual", "continuum voter model against coalescing Brownian motions",
      {opt("u0", T::text, "step", "initial profile", kLineProfiles), req("x", T::reals, "-0.1, 0.3", "query points"),
       req("t", T::real, "0.5", "time"), opt("dt", T::real, "0.01", "time step")},
      run_coalescing_duality);
  add("check_annihilating_moment_duality", "colour_dual",
      "products of (1 - 2u) against delayed (finite gamma, lattice) or instant (gamma = inf, line) annihilation",
      {opt("u0", T::text, "step", "initial profile, v0 = 1 - u0", kLineProfiles),
       req("x", T::reals, "-0.1, 0.3", "query points"), opt("gamma", T::real, "inf", "branching rate or inf"),
       req("t", T::real, "0.5", "time"), opt("dt", T::real, "0.01", "particle time step (gamma = inf)"),
       opt("L", T::count, "32", "lattice sites (finite gamma)"), opt("dx", T::real, "0.25", "lattice spacing"),
       opt("sbm_dt", T::real, "0.01", "field time step (finite gamma)")},
      run_annihilating_duality);

  add("step_particles", "interface_process", "particle counts over time; particles.csv for fan plots",
      {opt("mode", T::text, "annihilating", "interaction", kModes),
       opt("domain", T::text, "torus", "line or torus", {"line", "torus"}), opt("C", T::real, "1", "circumference"),
       opt("n", T::count, "20", "particles, started at C k / n"), opt("gamma", T::real, "10", "delayed-mode rate"),
       opt("eps", T::real, "0.01", "delayed-mode co-location half-width"), opt("dt", T::real, "0.0001", "time step"),
       opt("t_grid", T::reals, "0.001, 0.005, 0.01, 0.02", "report times"),
       opt("record_every", T::count, "5", "steps between recorded snapshots")},
      run_step_particles);
  add("simulate_abm_colouring", "interface_process", "two-type colouring carried by annihilating interfaces",
      {opt("profile", T::text, "heaviside", "initial pair", {"heaviside", "heaviside_w2", "two_interfaces"}),
       req("t", T::real, "1", "time"), opt("dt", T::real, "0.001", "time step"),
       opt("grid", T::reals, "-2, -1, -0.5, 0, 0.5, 1, 2", "evaluation points")},
      run_abm_colouring);
  add("continuous_voter", "interface_process", "continuum voter types from coalescing Brownian motions",
      {opt("u0", T::text, "step", "initial profile", kLineProfiles), req("x", T::reals, "0, 0.3", "query points"),
       req("t", T::real, "0.5", "time"), opt("dt", T::real, "0.01", "time step")},
      run_continuous_voter);
  add("simulate_interface_sde", "interface_process", "single interface SDE, end-point law",
      {opt("I0", T::real, "0", "start"), opt("w0", T::text, "step", "total mass profile", {"flat", "step"}),
       req("t", T::real, "1", "time"), opt("dt", T::real, "0.01", "time step")},
      run_interface_sde);
  add("entrance_law_experiment", "interface_process", "annihilating Brownian motion counts on the torus",
      with(entrance_base(), opt("n_list", T::counts, "10, 20, 40", "densities n"),
           opt("t_grid", T::reals, "0.05, 0.1", "times")),
      run_entrance_law);
  add("estimate_npoint_density", "interface_process", "n-point density at two window sizes",
      with(entrance_base(), opt("n", T::count, "40", "density"), req("t", T::real, "0.1", "time"),
           req("x_points", T::reals, "0.5", "points"), opt("h", T::real, "0.004", "window half-width")),
      run_npoint_density);
  add("entrance_consistency_check", "interface_process", "0 -> s -> t against 0 -> t",
      with(entrance_base(), opt("n", T::count, "40", "density"), opt("s", T::real, "0.05", "intermediate time"),
           req("t", T::real, "0.1", "time")),
      run_entrance_consistency);
  add("thinning_experiment", "interface_process", "annihilating against coalescing counts on shared noise",
      with(entrance_base(), opt("n", T::count, "40", "density"), opt("t_grid", T::reals, "0.01, 0.05, 0.1", "times")),
      run_thinning);
  return v;
}

}  // namespace duality::lab::detail
