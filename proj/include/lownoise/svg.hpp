#pragma once

#include <string>

#include "lownoise/common.hpp"

namespace lownoise {

/// One named series of (x, y) points.
struct PlotSeries {
    std::string name;
    Vec x;
    Vec y;
};

/// Self-contained SVG line plot; one polyline per series. A constant series
/// gets a y-range of [value - 1, value + 1].
std::string render_line_svg(const std::vector<PlotSeries>& series, const std::string& x_label,
                            const std::string& y_label);

/// Scatter variant: one circle per point.
std::string render_scatter_svg(const PlotSeries& points, const std::string& x_label,
                               const std::string& y_label);

/// Render and write (line plot for series data).
void emit_plot(const std::vector<PlotSeries>& series, const std::string& x_label,
               const std::string& y_label, const std::string& path);
void emit_scatter(const PlotSeries& points, const std::string& x_label, const std::string& y_label,
                  const std::string& path);

}  // namespace lownoise
