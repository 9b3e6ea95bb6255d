#include "qcal/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace qcal {
namespace {

constexpr std::size_t kMaxMarkers = 2000;

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
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

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-300 ? 0.0 : v);
  return buf;
}

struct Range {
  double lo = INFINITY, hi = -INFINITY;
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) {
      lo = 0;
      hi = 1;
    }
    if (lo == hi) {
      const double pad = lo == 0 ? 1.0 : 0.05 * std::abs(lo);
      lo -= pad;
      hi += pad;
    }
  }
};

std::vector<double> ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(t);
  return out;
}

}  // namespace

const std::vector<std::string>& palette() {
  static const std::vector<std::string> colors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  return colors;
}

std::string colormap(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  const double k = std::round(t * 255) / 255;
  // dark blue (68, 1, 84) -> teal (33, 145, 140) -> yellow (253, 231, 37)
  const double stops[3][3] = {{68, 1, 84}, {33, 145, 140}, {253, 231, 37}};
  const int seg = k < 0.5 ? 0 : 1;
  const double u = k < 0.5 ? k * 2 : (k - 0.5) * 2;
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c) rgb[c] = int(std::lround(stops[seg][c] + u * (stops[seg + 1][c] - stops[seg][c])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

std::string render_svg(const Figure& fig, int width, int height) {
  const double left = 70, right = 20, top = 30, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  Range xr, yr;
  for (const auto& s : fig.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  if (fig.heatmap) {
    for (double v : fig.heatmap->x) xr.add(v);
    for (double v : fig.heatmap->y) yr.add(v);
  }
  xr.finish();
  yr.finish();
  auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return top + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">";
  o << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>";
  o << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << escape(fig.title)
    << "</text>";

  if (fig.heatmap && !fig.heatmap->x.empty() && !fig.heatmap->y.empty()) {
    const auto& h = *fig.heatmap;
    Range zr;
    for (double v : h.z) zr.add(v);
    zr.finish();
    auto edges = [](const std::vector<double>& c, std::size_t i) {
      const double lo = i == 0 ? (c.size() > 1 ? c[0] - 0.5 * (c[1] - c[0]) : c[0] - 0.5) : 0.5 * (c[i - 1] + c[i]);
      const double hi = i + 1 == c.size() ? (c.size() > 1 ? c[i] + 0.5 * (c[i] - c[i - 1]) : c[i] + 0.5)
                                          : 0.5 * (c[i] + c[i + 1]);
      return std::pair{lo, hi};
    };
    o << "<g shape-rendering=\"crispEdges\">";
    for (std::size_t j = 0; j < h.y.size(); ++j) {
      const auto [y0, y1] = edges(h.y, j);
      for (std::size_t i = 0; i < h.x.size(); ++i) {
        const std::size_t k = j * h.x.size() + i;
        if (k >= h.z.size()) break;
        const auto [x0, x1] = edges(h.x, i);
        const double l = std::clamp(px(x0), left, left + pw), r = std::clamp(px(x1), left, left + pw);
        const double t = std::clamp(py(y1), top, top + ph), b = std::clamp(py(y0), top, top + ph);
        o << "<rect x=\"" << num(std::min(l, r)) << "\" y=\"" << num(std::min(t, b)) << "\" width=\""
          << num(std::abs(r - l)) << "\" height=\"" << num(std::abs(b - t)) << "\" fill=\""
          << colormap((h.z[k] - zr.lo) / (zr.hi - zr.lo)) << "\"/>";
      }
    }
    o << "</g>";
  }

  o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"black\"/>";
  for (double t : ticks(xr.lo, xr.hi)) {
    const double x = px(t);
    o << "<line x1=\"" << num(x) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(x) << "\" y2=\""
      << num(top + ph + 5) << "\" stroke=\"black\"/>";
    o << "<text x=\"" << num(x) << "\" y=\"" << num(top + ph + 17) << "\" text-anchor=\"middle\">" << tick_label(t)
      << "</text>";
  }
  for (double t : ticks(yr.lo, yr.hi)) {
    const double y = py(t);
    o << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(left) << "\" y2=\"" << num(y)
      << "\" stroke=\"black\"/>";
    o << "<text x=\"" << num(left - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << tick_label(t)
      << "</text>";
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
    << escape(fig.x_label) << "</text>";
  o << "<text x=\"14\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << num(top + ph / 2) << ")\">" << escape(fig.y_label) << "</text>";

  const auto& colors = palette();
  for (std::size_t si = 0; si < fig.series.size(); ++si) {
    const auto& s = fig.series[si];
    const std::string color = s.color.empty() ? colors[si % colors.size()] : s.color;
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.style == SeriesStyle::kLine) {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < n; ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) o << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
      o << "\"/>";
    } else {
      const std::size_t stride = std::max<std::size_t>(1, (n + kMaxMarkers - 1) / kMaxMarkers);
      o << "<g fill=\"" << color << "\" fill-opacity=\"0.7\">";
      for (std::size_t i = 0; i < n; i += stride)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
          o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"2.5\"/>";
      o << "</g>";
    }
    const double ly = top + 14 + 14 * double(si);
    o << "<rect x=\"" << num(left + pw - 130) << "\" y=\"" << num(ly - 8) << "\" width=\"10\" height=\"10\" fill=\""
      << color << "\"/><text x=\"" << num(left + pw - 115) << "\" y=\"" << num(ly + 1) << "\">" << escape(s.label)
      << "</text>";
  }
  o << "</svg>";
  return o.str();
}

}  // namespace qcal
