#include "lownoise/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lownoise/io.hpp"

namespace lownoise {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 20.0;
constexpr double kMarginBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Range {
    double lo, hi;
};

Range y_range(double lo, double hi) {
    if (lo == hi) return {lo - 1.0, hi + 1.0};  // constant series convention
    double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

Range x_range(double lo, double hi) {
    if (lo == hi) return {lo - 1.0, hi + 1.0};
    return {lo, hi};
}

struct Mapper {
    Range xr, yr;
    double px(double x) const {
        return kMarginLeft + (x - xr.lo) / (xr.hi - xr.lo) * (kWidth - kMarginLeft - kMarginRight);
    }
    double py(double y) const {
        return kHeight - kMarginBottom -
               (y - yr.lo) / (yr.hi - yr.lo) * (kHeight - kMarginTop - kMarginBottom);
    }
};

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
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

std::string header() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
           fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string axes(const Mapper& m, const std::string& x_label, const std::string& y_label) {
    std::string out;
    double x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    double y0 = kHeight - kMarginBottom, y1 = kMarginTop;
    out += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x1) + "\" y2=\"" +
           fmt(y0) + "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x0) + "\" y2=\"" +
           fmt(y1) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        double tx = m.xr.lo + (m.xr.hi - m.xr.lo) * i / 5.0;
        double ty = m.yr.lo + (m.yr.hi - m.yr.lo) * i / 5.0;
        out += "<line x1=\"" + fmt(m.px(tx)) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(m.px(tx)) +
               "\" y2=\"" + fmt(y0 + 5) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + fmt(m.px(tx)) + "\" y=\"" + fmt(y0 + 20) +
               "\" font-size=\"12\" text-anchor=\"middle\">" + fmt(tx) + "</text>\n";
        out += "<line x1=\"" + fmt(x0 - 5) + "\" y1=\"" + fmt(m.py(ty)) + "\" x2=\"" + fmt(x0) +
               "\" y2=\"" + fmt(m.py(ty)) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + fmt(x0 - 8) + "\" y=\"" + fmt(m.py(ty) + 4) +
               "\" font-size=\"12\" text-anchor=\"end\">" + fmt(ty) + "</text>\n";
    }
    out += "<text x=\"" + fmt((x0 + x1) / 2) + "\" y=\"" + fmt(kHeight - 10) +
           "\" font-size=\"14\" text-anchor=\"middle\">" + xml_escape(x_label) + "</text>\n";
    out += "<text x=\"15\" y=\"" + fmt((y0 + y1) / 2) +
           "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
           fmt((y0 + y1) / 2) + ")\">" + xml_escape(y_label) + "</text>\n";
    return out;
}

Mapper fit(const std::vector<PlotSeries>& series) {
    double xlo = series[0].x[0], xhi = xlo, ylo = series[0].y[0], yhi = ylo;
    for (const auto& s : series) {
        for (double v : s.x) {
            xlo = std::min(xlo, v);
            xhi = std::max(xhi, v);
        }
        for (double v : s.y) {
            ylo = std::min(ylo, v);
            yhi = std::max(yhi, v);
        }
    }
    return Mapper{x_range(xlo, xhi), y_range(ylo, yhi)};
}

void check_nonempty(const std::vector<PlotSeries>& series) {
    if (series.empty()) throw ConfigError("emit_plot: no series");
    for (const auto& s : series) {
        if (s.x.empty() || s.x.size() != s.y.size())
            throw ConfigError("emit_plot: series '" + s.name + "' empty or length mismatch");
    }
}

}  // namespace

std::string render_line_svg(const std::vector<PlotSeries>& series, const std::string& x_label,
                            const std::string& y_label) {
    check_nonempty(series);
    Mapper m = fit(series);
    std::string out = header();
    out += axes(m, x_label, y_label);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (i) pts += ' ';
            pts += fmt(m.px(s.x[i])) + "," + fmt(m.py(s.y[i]));
        }
        out += "<polyline fill=\"none\" stroke=\"" + std::string(kPalette[k % 6]) +
               "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        out += "<text x=\"" + fmt(kWidth - kMarginRight - 5) + "\" y=\"" +
               fmt(kMarginTop + 16.0 * static_cast<double>(k + 1)) +
               "\" font-size=\"12\" text-anchor=\"end\" fill=\"" + kPalette[k % 6] + "\">" +
               xml_escape(s.name) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

std::string render_scatter_svg(const PlotSeries& points, const std::string& x_label,
                               const std::string& y_label) {
    check_nonempty({points});
    Mapper m = fit({points});
    std::string out = header();
    out += axes(m, x_label, y_label);
    for (std::size_t i = 0; i < points.x.size(); ++i) {
        out += "<circle cx=\"" + fmt(m.px(points.x[i])) + "\" cy=\"" + fmt(m.py(points.y[i])) +
               "\" r=\"2.5\" fill=\"#1f77b4\" fill-opacity=\"0.6\"/>\n";
    }
    out += "</svg>\n";
    return out;
}

void emit_plot(const std::vector<PlotSeries>& series, const std::string& x_label,
               const std::string& y_label, const std::string& path) {
    io::write_file_atomic(path, render_line_svg(series, x_label, y_label));
}

void emit_scatter(const PlotSeries& points, const std::string& x_label, const std::string& y_label,
                  const std::string& path) {
    io::write_file_atomic(path, render_scatter_svg(points, x_label, y_label));
}

}  // namespace lownoise
