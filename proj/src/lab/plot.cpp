#include "duality/lab/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace duality::lab {

PlotKind plot_kind_from_string(const std::string& s) {
  if (s == "histogram") return PlotKind::histogram;
  if (s == "curve") return PlotKind::curve;
  if (s == "fan") return PlotKind::fan;
  throw PlotError("unknown plot kind '" + s + "' (histogram|curve|fan)");
}

std::string to_string(PlotKind k) {
  switch (k) {
    case PlotKind::histogram: return "histogram";
    case PlotKind::curve: return "curve";
    case PlotKind::fan: return "fan";
  }
  return "?";
}

namespace {

constexpr double kW = 640, kH = 420, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

struct Point {
  double x, y, lo, hi;
  bool band;
};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;
  double sx(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
  double sy(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

Frame frame(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0)) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  return {x0, x1, y0 - pad, y1 + pad};
}

void open_svg(std::ostringstream& os, const std::string& title, const Frame& f, const std::string& xlab,
              const std::string& ylab) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
     << kW << " " << kH << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
     << esc(title) << "</text>\n";
  const double bx = kLeft, by = kTop, bw = kW - kLeft - kRight, bh = kH - kTop - kBottom;
  os << "<rect x=\"" << bx << "\" y=\"" << by << "\" width=\"" << bw << "\" height=\"" << bh
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  auto text = [&](double x, double y, const std::string& s, const char* anchor) {
    os << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << esc(s) << "</text>\n";
  };
  text(bx, kH - kBottom + 16, label(f.x0), "start");
  text(bx + bw, kH - kBottom + 16, label(f.x1), "end");
  text(bx - 6, by + bh, label(f.y0), "end");
  text(bx - 6, by + 10, label(f.y1), "end");
  text(bx + bw / 2, kH - 12, xlab, "middle");
  os << "<text x=\"14\" y=\"" << by + bh / 2 << "\" transform=\"rotate(-90 14 " << by + bh / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << esc(ylab) << "</text>\n";
}

std::map<std::string, std::vector<Point>> series_of(const std::vector<ResultRow>& rows) {
  std::map<std::string, std::vector<Point>> out;
  for (const auto& r : rows) {
    const auto at = r.metric.rfind('@');
    if (at == std::string::npos || at == 0) continue;
    const std::string xs = r.metric.substr(at + 1);
    double x = 0;
    const auto [p, ec] = std::from_chars(xs.data(), xs.data() + xs.size(), x);
    if (ec != std::errc() || p != xs.data() + xs.size() || !std::isfinite(r.value)) continue;
    out[r.metric.substr(0, at)].push_back({x, r.value, r.ci_low, r.ci_high, r.stderr_ > 0.0});
  }
  for (auto& [name, pts] : out)
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
  return out;
}

}  // namespace

std::string plot_svg(const std::vector<ResultRow>& rows, PlotKind kind, const std::string& title) {
  if (kind == PlotKind::fan) throw PlotError("fan plots need particles.csv");
  if (rows.empty()) throw PlotError("result has no rows");
  auto series = series_of(rows);
  if (series.empty()) throw PlotError("result has no series@x rows to plot as a " + to_string(kind));

  if (kind == PlotKind::histogram) {
    auto best = series.begin();
    for (auto it = series.begin(); it != series.end(); ++it)
      if (it->second.size() > best->second.size()) best = it;
    const auto& pts = best->second;
    double y0 = 0, y1 = 0;
    for (const auto& p : pts) {
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    // Bars are centred on their x values and as wide as the smallest gap.
    double gap = 1.0;
    for (std::size_t k = 1; k < pts.size(); ++k)
      if (k == 1 || pts[k].x - pts[k - 1].x < gap) gap = pts[k].x - pts[k - 1].x;
    if (!(gap > 0)) gap = 1.0;
    const Frame f = frame(pts.front().x - gap / 2, pts.back().x + gap / 2, y0, y1);
    std::ostringstream os;
    open_svg(os, title, f, best->first, "value");
    for (const auto& p : pts) {
      const double a = f.sx(p.x - 0.45 * gap), b = f.sx(p.x + 0.45 * gap);
      const double top = f.sy(std::max(p.y, 0.0)), base = f.sy(std::min(p.y, 0.0));
      os << "<rect class=\"bar\" x=\"" << num(a) << "\" y=\"" << num(top) << "\" width=\"" << num(b - a)
         << "\" height=\"" << num(base - top) << "\" fill=\"" << kPalette[0] << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
  }

  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& [name, pts] : series)
    for (const auto& p : pts) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min({y0, p.y, p.lo});
      y1 = std::max({y1, p.y, p.hi});
    }
  const Frame f = frame(x0, x1, y0, y1);
  std::ostringstream os;
  open_svg(os, title, f, "x", "value");
  std::size_t k = 0;
  for (const auto& [name, pts] : series) {
    const char* colour = kPalette[k++ % std::size(kPalette)];
    if (std::any_of(pts.begin(), pts.end(), [](const Point& p) { return p.band; })) {
      os << "<polygon class=\"ci-band\" fill=\"" << colour << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (const auto& p : pts) os << num(f.sx(p.x)) << "," << num(f.sy(p.hi)) << " ";
      for (auto it = pts.rbegin(); it != pts.rend(); ++it) os << num(f.sx(it->x)) << "," << num(f.sy(it->lo)) << " ";
      os << "\"/>\n";
    }
    os << "<polyline class=\"series\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : pts) os << num(f.sx(p.x)) << "," << num(f.sy(p.y)) << " ";
    os << "\"/>\n";
    for (const auto& p : pts)
      os << "<circle cx=\"" << num(f.sx(p.x)) << "\" cy=\"" << num(f.sy(p.y)) << "\" r=\"2.5\" fill=\"" << colour
         << "\"/>\n";
    os << "<text x=\"" << kW - kRight - 4 << "\" y=\"" << kTop + 14 * double(k) << "\" text-anchor=\"end\" fill=\""
       << colour << "\" font-family=\"sans-serif\" font-size=\"11\">" << esc(name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string fan_svg(const std::string& particles_csv, const std::string& title) {
  std::istringstream in(particles_csv);
  std::string line;
  if (!std::getline(in, line) || line != "time,id,position,alive") throw PlotError("not a particles.csv file");
  struct Sample {
    double t, x;
  };
  std::map<std::size_t, std::vector<Sample>> paths;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string a, b, c, d;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c, ',') || !std::getline(ls, d))
      throw PlotError("malformed particles row: " + line);
    paths[std::stoul(b)].push_back({std::stod(a), std::stod(c)});
  }
  if (paths.empty()) throw PlotError("particles.csv has no rows");

  double lo = INFINITY, hi = -INFINITY;
  for (const auto& [id, s] : paths)
    for (const auto& p : s) {
      lo = std::min(lo, p.x);
      hi = std::max(hi, p.x);
    }
  const double range = hi - lo;
  double t1 = 0, x0 = INFINITY, x1 = -INFINITY;
  for (auto& [id, s] : paths) {
    double shift = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (k) {
        const double jump = s[k].x + shift - s[k - 1].x;
        if (range > 0 && std::abs(jump) > range / 2) shift -= jump > 0 ? range : -range;
      }
      s[k].x += shift;
      t1 = std::max(t1, s[k].t);
      x0 = std::min(x0, s[k].x);
      x1 = std::max(x1, s[k].x);
    }
  }
  // Position across, time running down the page.
  Frame f = frame(x0, x1, 0.0, t1);
  std::ostringstream os;
  open_svg(os, title, f, "position", "time");
  std::size_t k = 0;
  for (const auto& [id, s] : paths) {
    os << "<polyline class=\"particle\" data-id=\"" << id << "\" fill=\"none\" stroke=\""
       << kPalette[k++ % std::size(kPalette)] << "\" stroke-width=\"1\" points=\"";
    for (const auto& p : s) os << num(f.sx(p.x)) << "," << num(kTop + kH - kBottom - f.sy(p.t)) << " ";
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace duality::lab
