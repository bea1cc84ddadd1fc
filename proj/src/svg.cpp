#include "wormtopo/svg.hpp"

#include "wormtopo/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace wormtopo {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                              "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"};

std::string escape(const std::string& s) {
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

// Comments may not contain "--".
std::string comment_safe(std::string s) {
    for (std::size_t p = s.find("--"); p != std::string::npos; p = s.find("--")) s.replace(p, 2, "- ");
    return s;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range pad(double lo, double hi) {
    if (!(lo <= hi)) return {0.0, 1.0};
    if (hi - lo < 1e-300) return {lo - 0.5, hi + 0.5};
    const double m = 0.05 * (hi - lo);
    return {lo - m, hi + m};
}

}  // namespace

std::string render_svg(const Plot& plot, const std::string& hash) {
    double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
    for (const auto& s : plot.series) {
        for (Eigen::Index i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x(i)) || !std::isfinite(s.y(i))) continue;
            xlo = std::min(xlo, s.x(i));
            xhi = std::max(xhi, s.x(i));
            ylo = std::min(ylo, s.y(i));
            yhi = std::max(yhi, s.y(i));
        }
    }
    if (plot.diagonal && xlo <= xhi) {
        xlo = ylo = std::min(xlo, ylo);
        xhi = yhi = std::max(xhi, yhi);
    }
    const Range xr = pad(xlo, xhi);
    const Range yr = pad(ylo, yhi);
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    const auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    const auto py = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out += "<!-- config_hash=" + hash + " -->\n";
    for (const auto& s : plot.series) {
        out += "<!-- data series=" + comment_safe(s.name) + "\nx,y" + (s.labels.empty() ? "" : ",label") + "\n";
        for (Eigen::Index i = 0; i < s.x.size(); ++i) {
            out += format_double(s.x(i)) + "," + format_double(s.y(i));
            if (!s.labels.empty()) out += "," + comment_safe(s.labels[static_cast<std::size_t>(i)]);
            out += "\n";
        }
        out += "-->\n";
    }
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
           escape(plot.title) + "</text>\n";
    out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
           "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
        const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
        out += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(kTop + ph + 16) + "\" text-anchor=\"middle\">" +
               tick(xv) + "</text>\n";
        out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(yv) + 4) + "\" text-anchor=\"end\">" + tick(yv) +
               "</text>\n";
    }
    out += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 12) + "\" text-anchor=\"middle\">" +
           escape(plot.x_label) + "</text>\n";
    out += "<text x=\"16\" y=\"" + num(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           num(kTop + ph / 2) + ")\">" + escape(plot.y_label) + "</text>\n";
    if (plot.diagonal) {
        out += "<line x1=\"" + num(px(xr.lo)) + "\" y1=\"" + num(py(xr.lo)) + "\" x2=\"" + num(px(xr.hi)) +
               "\" y2=\"" + num(py(xr.hi)) + "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    }
    for (std::size_t si = 0; si < plot.series.size(); ++si) {
        const auto& s = plot.series[si];
        const std::string color = kPalette[si % kPalette.size()];
        if (s.line) {
            out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"";
            for (Eigen::Index i = 0; i < s.x.size(); ++i) {
                if (std::isfinite(s.x(i)) && std::isfinite(s.y(i))) out += num(px(s.x(i))) + "," + num(py(s.y(i))) + " ";
            }
            out += "\"/>\n";
        } else {
            for (Eigen::Index i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x(i)) || !std::isfinite(s.y(i))) continue;
                out += "<circle cx=\"" + num(px(s.x(i))) + "\" cy=\"" + num(py(s.y(i))) + "\" r=\"3\" fill=\"" + color +
                       "\" fill-opacity=\"0.8\"/>\n";
            }
        }
        for (std::size_t i = 0; i < s.labels.size() && static_cast<Eigen::Index>(i) < s.x.size(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            out += "<text x=\"" + num(px(s.x(ii)) + 5) + "\" y=\"" + num(py(s.y(ii)) - 5) + "\">" +
                   escape(s.labels[i]) + "</text>\n";
        }
        const double ly = kTop + 12 + 16 * static_cast<double>(si);
        out += "<rect x=\"" + num(kWidth - kRight + 12) + "\" y=\"" + num(ly - 8) + "\" width=\"10\" height=\"10\" fill=\"" +
               color + "\"/>\n";
        out += "<text x=\"" + num(kWidth - kRight + 28) + "\" y=\"" + num(ly + 1) + "\">" + escape(s.name) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace wormtopo
