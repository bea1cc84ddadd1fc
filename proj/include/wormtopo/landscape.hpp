#pragma once

#include "wormtopo/homology.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace wormtopo {

struct CriticalPoint {
    double t = 0.0;
    double value = 0.0;
};

/// Persistence landscape stored exactly: depth k (0-based here, usually written
/// lambda_{k+1}) is the piecewise-linear interpolant of its critical points,
/// and zero outside them.
class Landscape {
public:
    Landscape() = default;
    explicit Landscape(std::vector<std::vector<CriticalPoint>> depths) : depths_(std::move(depths)) {}

    std::size_t depth_count() const noexcept { return depths_.size(); }
    const std::vector<CriticalPoint>& depth(std::size_t k) const { return depths_.at(k); }
    const std::vector<std::vector<CriticalPoint>>& depths() const noexcept { return depths_; }

    /// lambda_k(t); zero for k beyond the stored depths.
    double operator()(std::size_t k, double t) const;

private:
    std::vector<std::vector<CriticalPoint>> depths_;
};

/// Exact landscape of the finite pairs of `diagram`. Essential pairs are
/// truncated at `infinity_cap` when one is given; otherwise they are an error.
Landscape landscape_from_diagram(const PersistenceDiagram& diagram,
                                 std::optional<double> infinity_cap = std::nullopt);

/// Pointwise mean of exact landscapes over the union of their critical points.
Landscape mean_landscape(const std::vector<Landscape>& landscapes);

/// Uniform sample grid: `samples` points from t_min to t_max inclusive.
struct Grid {
    double t_min = 0.0;
    double t_max = 1.0;
    Eigen::Index samples = 2;

    void validate() const;
    double at(Eigen::Index i) const {
        return i == samples - 1 ? t_max
                                : t_min + static_cast<double>(i) * (t_max - t_min) / static_cast<double>(samples - 1);
    }
    bool operator==(const Grid&) const = default;
};

/// K x G landscape samples flattened row-major: depth k occupies
/// values[k*G, (k+1)*G).
struct DiscretizedLandscape {
    Grid grid;
    Eigen::Index depths = 1;
    Eigen::VectorXd values;

    auto row(Eigen::Index k) const { return values.segment(k * grid.samples, grid.samples); }
    auto row(Eigen::Index k) { return values.segment(k * grid.samples, grid.samples); }
    bool compatible(const DiscretizedLandscape& other) const {
        return grid == other.grid && depths == other.depths;
    }
    /// Number of depths with at least one sample above `tol`.
    Eigen::Index nonzero_depths(double tol = 0.0) const;

    static DiscretizedLandscape zero(const Grid& grid, Eigen::Index depths);
};

DiscretizedLandscape discretize(const Landscape& l, const Grid& grid, Eigen::Index depths);

DiscretizedLandscape average(const std::vector<DiscretizedLandscape>& landscapes);

double distance(const DiscretizedLandscape& a, const DiscretizedLandscape& b);

struct ClassSummary {
    std::string label;
    DiscretizedLandscape mean;
    std::size_t n = 0;
    std::vector<std::string> member_ids;
};

ClassSummary summarize_class(const std::string& label, const std::vector<DiscretizedLandscape>& members,
                             std::vector<std::string> member_ids);

/// Distances among the class means and the zero landscape, scaled so the
/// mean class-to-origin distance is 1. Index 0 is the origin.
struct NormalizedDistances {
    std::vector<std::string> labels;  // "origin", then class labels
    Eigen::MatrixXd distances;
    double scale = 1.0;  // raw distance = normalized / scale
};

NormalizedDistances normalize_class_distances(const std::vector<ClassSummary>& summaries);

}  // namespace wormtopo
