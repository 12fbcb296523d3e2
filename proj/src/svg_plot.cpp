#include "faopd/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "faopd/errors.hpp"

namespace faopd {

namespace {

constexpr int kWidth = 760;
constexpr int kPanelHeight = 300;
constexpr int kMarginLeft = 70, kMarginRight = 150, kMarginTop = 30, kMarginBottom = 45;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Range {
    double lo = 0.0, hi = 1.0;
};

Range data_range(const std::vector<CurveSeries>& series, bool use_y) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : series) {
        for (double v : use_y ? s.y : s.x) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    return {lo, hi};
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

void panel(std::string& out, const std::vector<CurveSeries>& series, const std::string& title,
           const std::string& y_label, int y_off) {
    const double px0 = kMarginLeft, px1 = kWidth - kMarginRight;
    const double py0 = y_off + kPanelHeight - kMarginBottom, py1 = y_off + kMarginTop;
    const Range rx = data_range(series, false);
    const Range ry = data_range(series, true);
    auto sx = [&](double x) { return px0 + (x - rx.lo) / (rx.hi - rx.lo) * (px1 - px0); };
    auto sy = [&](double y) { return py0 - (y - ry.lo) / (ry.hi - ry.lo) * (py0 - py1); };

    out += "<rect x=\"" + num(px0) + "\" y=\"" + num(py1) + "\" width=\"" + num(px1 - px0) +
           "\" height=\"" + num(py0 - py1) + "\" fill=\"none\" stroke=\"#888\"/>\n";
    out += "<text x=\"" + num((px0 + px1) / 2) + "\" y=\"" + num(py1 - 10) +
           "\" text-anchor=\"middle\" font-size=\"14\">" + title + "</text>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = rx.lo + (rx.hi - rx.lo) * i / 4.0;
        const double fy = ry.lo + (ry.hi - ry.lo) * i / 4.0;
        out += "<line x1=\"" + num(sx(fx)) + "\" y1=\"" + num(py0) + "\" x2=\"" + num(sx(fx)) +
               "\" y2=\"" + num(py0 + 5) + "\" stroke=\"#888\"/>\n";
        out += "<text x=\"" + num(sx(fx)) + "\" y=\"" + num(py0 + 18) +
               "\" text-anchor=\"middle\" font-size=\"10\">" + num(fx) + "</text>\n";
        out += "<line x1=\"" + num(px0 - 5) + "\" y1=\"" + num(sy(fy)) + "\" x2=\"" + num(px0) +
               "\" y2=\"" + num(sy(fy)) + "\" stroke=\"#888\"/>\n";
        out += "<text x=\"" + num(px0 - 8) + "\" y=\"" + num(sy(fy) + 3) +
               "\" text-anchor=\"end\" font-size=\"10\">" + num(fy) + "</text>\n";
    }
    out += "<text x=\"" + num((px0 + px1) / 2) + "\" y=\"" + num(py0 + 34) +
           "\" text-anchor=\"middle\" font-size=\"11\">env steps</text>\n";
    out += "<text x=\"18\" y=\"" + num((py0 + py1) / 2) +
           "\" text-anchor=\"middle\" font-size=\"11\" transform=\"rotate(-90 18 " +
           num((py0 + py1) / 2) + ")\">" + y_label + "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % (sizeof(kColors) / sizeof(kColors[0]))];
        std::string pts;
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (i) pts += ' ';
            pts += num(sx(series[s].x[i])) + "," + num(sy(series[s].y[i]));
        }
        out += "<polyline fill=\"none\" stroke=\"";
        out += color;
        out += "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        const double ly = py1 + 14.0 * static_cast<double>(s);
        out += "<line x1=\"" + num(px1 + 8) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(px1 + 28) +
               "\" y2=\"" + num(ly) + "\" stroke=\"";
        out += color;
        out += "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + num(px1 + 32) + "\" y=\"" + num(ly + 4) + "\" font-size=\"10\">" +
               series[s].label + "</text>\n";
    }
}

}  // namespace

std::string render_learning_curves(const std::vector<CurveSeries>& success,
                                   const std::vector<CurveSeries>& reward) {
    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
           "\" height=\"" + std::to_string(2 * kPanelHeight) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    panel(out, success, "success rate", "success rate", 0);
    panel(out, reward, "mean learned reward", "mean reward", kPanelHeight);
    out += "</svg>\n";
    return out;
}

void write_svg(const std::string& svg, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("svg: cannot open \"" + path + "\" for writing");
    f << svg;
    if (!f) throw IoError("svg: write failed for \"" + path + "\"");
}

}  // namespace faopd
