#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "duality/interface/interface.hpp"
#include "duality/sbm/sbm.hpp"
#include "duality/voter/voter.hpp"

// Named initial conditions shared by the experiment registry and the
// acceptance suite.
namespace duality::lab {

// heaviside | alternating | ones | zeros | a 0/1 string of length L.
voter::SpinField spin_profile(const std::string& name, std::size_t L);

// Periodic unless noted:
//  heaviside  zero-flux complementary Heaviside pair (heaviside_init)
//  wavy       u = 1 + sin/2, v = 1 + cos/2
//  balanced   u, v = c(1 ± 0.6 sin), c = sqrt(0.03); `phase` shifts the sine
//  ones       u = v = 1
//  half       u = v = 1/2
//  step       u = 1 on the left half, v = 1 - u
//  zero       u = v = 0
sbm::FieldPair field_profile(const std::string& name, std::size_t L, double dx, double phase = 0.0);
inline const std::vector<std::string> kFieldProfiles = {"heaviside", "wavy", "balanced", "ones", "half", "step", "zero"};

// Continuum profiles on the line: step (1 on x <= 0), half, ones, zeros.
interface::PiecewiseConstantProfile line_profile(const std::string& name);
inline const std::vector<std::string> kLineProfiles = {"step", "half", "ones", "zeros"};

// Colours as a string of 1s and 2s, walker 0 first.
std::uint32_t parse_colouring(const std::string& s);
std::string colouring_string(std::uint32_t b, std::size_t n);

interface::Mode mode_from_string(const std::string& s);
inline const std::vector<std::string> kModes = {"independent", "coalescing", "annihilating", "delayed_coalescing",
                                                "delayed_annihilating"};

}  // namespace duality::lab
