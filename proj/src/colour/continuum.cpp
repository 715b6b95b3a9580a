#include "duality/colour/continuum.hpp"

#include "duality/core/error.hpp"
#include "duality/interface/interface.hpp"

namespace duality::colour {

using core::Rng;

namespace {

template <class Lhs, class Rhs>
ContinuumReport two_sided(const std::vector<double>& x, double t, double dt, const core::McConfig& mc,
                          interface::Mode mode, Lhs lhs_of, Rhs rhs_of) {
  if (x.empty() || x.size() > 4) throw SizeError("continuum duality: need 1 to 4 points");
  if (!(t >= 0.0) || !(dt > 0.0)) throw ParameterError("continuum duality: need t >= 0 and dt > 0");
  const auto samples = core::run_replicates<std::pair<double, double>>(mc.replicates, mc.workers, [&](std::size_t i) {
    const Rng base(mc.seed, i);
    Rng a = base.split(1);
    Rng b = base.split(2);
    auto sys = interface::ParticleSystem1D::make(interface::Domain::line(), mode, x);
    interface::run_particles(sys, dt, t, b);
    return std::pair{lhs_of(a), rhs_of(sys)};
  });
  std::vector<double> l, r;
  for (const auto& [p, q] : samples) {
    l.push_back(p);
    r.push_back(q);
  }
  return {core::estimate_mean(l), core::estimate_mean(r)};
}

}  // namespace

ContinuumReport check_coalescing_duality(const std::function<double(double)>& u0, const std::vector<double>& x,
                                         double t, double dt, const core::McConfig& mc) {
  return two_sided(
      x, t, dt, mc, interface::Mode::coalescing,
      [&](Rng& r) {
        double p = 1.0;
        for (auto type : interface::continuous_voter(u0, x, t, dt, r)) p *= type;
        return p;
      },
      [&](const interface::ParticleSystem1D& s) {
        double p = 1.0;
        for (double y : s.x) p *= u0(y);
        return p;
      });
}

ContinuumReport check_annihilating_duality_infinite(const std::function<double(double)>& u0,
                                                    const std::vector<double>& x, double t, double dt,
                                                    const core::McConfig& mc) {
  return two_sided(
      x, t, dt, mc, interface::Mode::annihilating,
      [&](Rng& r) {
        double p = 1.0;
        for (auto type : interface::continuous_voter(u0, x, t, dt, r)) p *= 1.0 - 2.0 * type;
        return p;
      },
      [&](const interface::ParticleSystem1D& s) {
        double p = 1.0;
        for (double y : s.x) p *= 1.0 - 2.0 * u0(y);
        return p;
      });
}

}  // namespace duality::colour
