#pragma once

#include <vector>

#include "duality/lab/registry.hpp"

namespace duality::lab::detail {

std::vector<Experiment> make_experiments();

}  // namespace duality::lab::detail
