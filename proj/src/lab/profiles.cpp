#include "duality/lab/profiles.hpp"

#include <cmath>
#include <numbers>

#include "duality/lab/config.hpp"

namespace duality::lab {

voter::SpinField spin_profile(const std::string& name, std::size_t L) {
  if (name == "heaviside") return voter::SpinField::heaviside(L);
  if (name == "alternating") return voter::SpinField::alternating(L);
  if (name == "ones") return voter::SpinField::constant(L, 1);
  if (name == "zeros") return voter::SpinField::constant(L, 0);
  if (name.size() != L) throw ConfigError("init", "expected a profile name or a 0/1 string of length L");
  std::vector<std::uint8_t> s;
  for (char c : name) {
    if (c != '0' && c != '1') throw ConfigError("init", "spin strings use only 0 and 1");
    s.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return voter::SpinField(std::move(s));
}

sbm::FieldPair field_profile(const std::string& name, std::size_t L, double dx, double phase) {
  if (name == "heaviside") return sbm::heaviside_init(L, dx);
  sbm::FieldPair s;
  s.dx = dx;
  s.boundary = sbm::Boundary::periodic;
  s.u.assign(L, 0.0);
  s.v.assign(L, 0.0);
  s.origin = L / 2;
  for (std::size_t i = 0; i < L; ++i) {
    const double a = 2.0 * std::numbers::pi * double(i) / double(L) + phase;
    if (name == "wavy") {
      s.u[i] = 1.0 + 0.5 * std::sin(a);
      s.v[i] = 1.0 + 0.5 * std::cos(a);
    } else if (name == "balanced") {
      const double c = std::sqrt(0.03);
      s.u[i] = c * (1.0 + 0.6 * std::sin(a));
      s.v[i] = c * (1.0 - 0.6 * std::sin(a));
    } else if (name == "ones") {
      s.u[i] = s.v[i] = 1.0;
    } else if (name == "half") {
      s.u[i] = s.v[i] = 0.5;
    } else if (name == "step") {
      s.u[i] = i < L / 2 ? 1.0 : 0.0;
      s.v[i] = 1.0 - s.u[i];
    } else if (name != "zero") {
      throw ConfigError("init", "unknown field profile '" + name + "'");
    }
  }
  return s;
}

interface::PiecewiseConstantProfile line_profile(const std::string& name) {
  using P = interface::PiecewiseConstantProfile;
  if (name == "step") return P::step(0.0, 1.0, 0.0);
  if (name == "half") return P::constant(0.5);
  if (name == "ones") return P::constant(1.0);
  if (name == "zeros") return P::constant(0.0);
  throw ConfigError("u0", "unknown line profile '" + name + "'");
}

std::uint32_t parse_colouring(const std::string& s) {
  if (s.empty() || s.size() > 12) throw ConfigError("colours", "expected 1 to 12 characters");
  std::uint32_t b = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '2')
      b |= 1u << i;
    else if (s[i] != '1')
      throw ConfigError("colours", "colours are written with 1 and 2");
  }
  return b;
}

std::string colouring_string(std::uint32_t b, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (b >> i & 1u) ? '2' : '1';
  return s;
}

interface::Mode mode_from_string(const std::string& s) {
  using interface::Mode;
  if (s == "independent") return Mode::independent;
  if (s == "coalescing") return Mode::coalescing;
  if (s == "annihilating") return Mode::annihilating;
  if (s == "delayed_coalescing") return Mode::delayed_coalescing;
  if (s == "delayed_annihilating") return Mode::delayed_annihilating;
  throw ConfigError("mode", "unknown mode '" + s + "'");
}

}  // namespace duality::lab
