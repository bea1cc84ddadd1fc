#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace wormtopo {

struct PlotSeries {
    std::string name;
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    bool line = false;                // polyline instead of markers
    std::vector<std::string> labels;  // optional text next to each point
};

struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
    bool diagonal = false;  // draw y = x over the data range
};

/// Static SVG with axes and a legend. Each series' data is repeated as CSV
/// inside an XML comment so the figure can be audited or diffed.
std::string render_svg(const Plot& plot, const std::string& hash);

}  // namespace wormtopo
