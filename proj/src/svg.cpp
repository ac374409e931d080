#include "coarsen/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

namespace coarsen {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 150;
constexpr double kTop = 40;
constexpr double kBottom = 50;

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                              "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

struct Point {
    double x;
    double y;
};

}  // namespace

std::string render_log_chart(const CsvTable& table, const ChartSpec& spec) {
    const std::size_t xc = table.column(spec.x_column);
    const std::size_t yc = table.column(spec.y_column);
    const bool grouped = !spec.series_column.empty();
    const std::size_t sc = grouped ? table.column(spec.series_column) : 0;

    // Series keep first-appearance order so output is stable.
    std::vector<std::string> order;
    std::map<std::string, std::vector<Point>> series;
    for (const auto& row : table.rows) {
        const double x = std::strtod(row[xc].c_str(), nullptr);
        const double y = std::strtod(row[yc].c_str(), nullptr);
        if (!(y > 0.0) || !std::isfinite(y) || !std::isfinite(x)) continue;
        if (spec.log_x && !(x > 0.0)) continue;
        const std::string key = grouped ? row[sc] : spec.y_column;
        if (!series.count(key)) order.push_back(key);
        series[key].push_back({spec.log_x ? std::log10(x) : x, std::log10(y)});
    }

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
    double y0 = x0, y1 = -x0;
    for (const auto& [key, pts] : series) {
        for (const auto& p : pts) {
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y);
            y1 = std::max(y1, p.y);
        }
    }
    if (series.empty()) {
        x0 = 0;
        x1 = 1;
        y0 = 0;
        y1 = 1;
    }
    y0 = std::floor(y0);
    y1 = std::ceil(y1);
    if (y1 <= y0) y1 = y0 + 1;
    if (x1 <= x0) x1 = x0 + 1;

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

    std::ostringstream svg;
    svg.precision(6);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << spec.title << "</text>\n";
    svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    const int decades = static_cast<int>(y1 - y0);
    const int step = std::max(1, decades / 8);
    for (int d = static_cast<int>(y0); d <= static_cast<int>(y1); d += step) {
        svg << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << sy(d)
            << "\" y2=\"" << sy(d) << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(d) + 4
            << "\" text-anchor=\"end\">1e" << d << "</text>\n";
    }
    for (int k = 0; k <= 4; ++k) {
        const double x = x0 + (x1 - x0) * k / 4.0;
        std::ostringstream label;
        label.precision(3);
        label << (spec.log_x ? std::pow(10.0, x) : x);
        svg << "<text x=\"" << sx(x) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
            << label.str() << "</text>\n";
    }
    svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10
        << "\" text-anchor=\"middle\">" << spec.x_column << "</text>\n";
    svg << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << kTop + ph / 2 << ")\">" << spec.y_column << "</text>\n";

    for (std::size_t s = 0; s < order.size(); ++s) {
        const char* color = kPalette[s % kPalette.size()];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& p : series[order[s]]) svg << sx(p.x) << ',' << sy(p.y) << ' ';
        svg << "\"/>\n";
        const double ly = kTop + 14.0 * static_cast<double>(s + 1);
        svg << "<line x1=\"" << kLeft + pw + 10 << "\" x2=\"" << kLeft + pw + 30 << "\" y1=\"" << ly - 4
            << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kLeft + pw + 34 << "\" y=\"" << ly << "\">"
            << (grouped ? spec.series_column + "=" : "") << order[s] << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace coarsen
