#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "relaymean/simharness.hpp"

namespace relaymean {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#17becf"};

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

} // namespace

std::string emit_svg(const SweepTable& table, const std::string& title) {
    if (table.rows.empty()) throw std::invalid_argument("emit_svg: empty table");
    const std::size_t series_count = table.columns.size() - 1;

    // Data ranges over finite values only.
    double x_lo = 1e300, x_hi = -1e300, y_lo = 0.0, y_hi = -1e300;
    for (const auto& row : table.rows) {
        x_lo = std::min(x_lo, row[0]);
        x_hi = std::max(x_hi, row[0]);
        for (std::size_t c = 1; c < row.size(); ++c)
            if (std::isfinite(row[c])) y_hi = std::max(y_hi, row[c]);
    }
    if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
    if (!(y_hi > y_lo)) y_hi = y_lo + 1.0;
    y_hi *= 1.05;

    const double width = 860, height = 540;
    const double ml = 70, mr = 180, mt = 40, mb = 50;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto sx = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
    auto sy = [&](double y) { return mt + ph - (y - y_lo) / (y_hi - y_lo) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
       << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(ml) << "\" y=\"24\" font-family=\"sans-serif\" "
          "font-size=\"16\">"
       << title << "</text>\n";

    // Axes and ticks.
    os << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt + ph) << "\" x2=\""
       << num(ml + pw) << "\" y2=\"" << num(mt + ph)
       << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    os << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(ml)
       << "\" y2=\"" << num(mt + ph) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double fx = x_lo + (x_hi - x_lo) * t / 5.0;
        const double fy = y_lo + (y_hi - y_lo) * t / 5.0;
        os << "<line x1=\"" << num(sx(fx)) << "\" y1=\"" << num(mt + ph) << "\" x2=\""
           << num(sx(fx)) << "\" y2=\"" << num(mt + ph + 5)
           << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        os << "<text x=\"" << num(sx(fx)) << "\" y=\"" << num(mt + ph + 20)
           << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
           << label(fx) << "</text>\n";
        os << "<line x1=\"" << num(ml - 5) << "\" y1=\"" << num(sy(fy)) << "\" x2=\""
           << num(ml) << "\" y2=\"" << num(sy(fy))
           << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        os << "<text x=\"" << num(ml - 8) << "\" y=\"" << num(sy(fy) + 4)
           << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
           << label(fy) << "</text>\n";
    }
    os << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(height - 12)
       << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
       << table.var_name << "</text>\n";
    os << "<text x=\"18\" y=\"" << num(mt + ph / 2)
       << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
          "transform=\"rotate(-90 18 "
       << num(mt + ph / 2) << ")\">error exponent (nats)</text>\n";

    // One polyline per series; non-finite points are skipped.
    for (std::size_t s = 0; s < series_count; ++s) {
        const char* color = kPalette[s % (sizeof kPalette / sizeof kPalette[0])];
        std::ostringstream pts;
        bool open = false;
        auto flush = [&] {
            if (open) {
                os << "<polyline fill=\"none\" stroke=\"" << color
                   << "\" stroke-width=\"1.8\" points=\"" << pts.str() << "\"/>\n";
                pts.str("");
                open = false;
            }
        };
        for (const auto& row : table.rows) {
            const double y = row[s + 1];
            if (!std::isfinite(y)) {
                flush();
                continue;
            }
            pts << num(sx(row[0])) << ',' << num(sy(y)) << ' ';
            open = true;
        }
        flush();
        // Legend entry.
        const double ly = mt + 16 + 20 * static_cast<double>(s);
        os << "<line x1=\"" << num(ml + pw + 14) << "\" y1=\"" << num(ly) << "\" x2=\""
           << num(ml + pw + 38) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
           << "\" stroke-width=\"1.8\"/>\n";
        os << "<text x=\"" << num(ml + pw + 44) << "\" y=\"" << num(ly + 4)
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << table.columns[s + 1]
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace relaymean
