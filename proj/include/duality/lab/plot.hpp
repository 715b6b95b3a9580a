#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "duality/lab/result.hpp"

namespace duality::lab {

class PlotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PlotKind { histogram, curve, fan };
PlotKind plot_kind_from_string(const std::string& s);
std::string to_string(PlotKind k);

// Curves and histograms read "series@x" rows; other rows are ignored.
//  curve:     one polyline per series, with a shaded 95% band where stderr > 0
//  histogram: bars for the series with the most points
// Throws PlotError when there is nothing compatible to draw.
std::string plot_svg(const std::vector<ResultRow>& rows, PlotKind kind, const std::string& title);

// Space-time fan from particles.csv (time,id,position,alive): one polyline per
// particle, ending at its last position. Torus paths are unwrapped when a step
// jumps by more than half the position range.
std::string fan_svg(const std::string& particles_csv, const std::string& title);

}  // namespace duality::lab
