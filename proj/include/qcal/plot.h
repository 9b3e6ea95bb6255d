#ifndef QCAL_PLOT_H_
#define QCAL_PLOT_H_

#include <optional>
#include <string>
#include <vector>

namespace qcal {

enum class SeriesStyle { kMarkers, kLine };

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  SeriesStyle style = SeriesStyle::kMarkers;
  std::string color;  // empty: taken from the palette by position
};

// z is row-major with one row per y value.
struct Heatmap {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> z;
};

struct Figure {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::optional<Heatmap> heatmap;
};

// Standalone SVG element (no XML prolog) suitable for inlining into XHTML.
std::string render_svg(const Figure& figure, int width = 640, int height = 400);

// 256-step linear colormap from dark blue through teal to yellow; t is clamped to [0, 1].
std::string colormap(double t);

const std::vector<std::string>& palette();

}  // namespace qcal

#endif  // QCAL_PLOT_H_
