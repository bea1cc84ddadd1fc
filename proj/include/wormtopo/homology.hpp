#pragma once

#include "wormtopo/embed.hpp"
#include "wormtopo/error.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

namespace wormtopo {

/// Symmetric, non-negative, zero-diagonal, finite matrix of point distances.
class DistanceMatrix {
public:
    explicit DistanceMatrix(Eigen::MatrixXd entries);

    Eigen::Index size() const noexcept { return d_.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return d_(i, j); }
    const Eigen::MatrixXd& matrix() const noexcept { return d_; }

    /// min over points of the max distance to every other point.
    double enclosing_radius() const;

    DistanceMatrix scaled(double c) const { return DistanceMatrix(d_ * c); }

private:
    Eigen::MatrixXd d_;
};

/// Euclidean distances between the rows of `points`.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
euclidean_distances(const Eigen::MatrixBase<Derived>& points) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = points.rows();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const Scalar v = (points.row(i) - points.row(j)).norm();
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

DistanceMatrix pairwise_distances(const PointCloud& pc);

/// Simplices carry up to four vertices (dimension <= 3), sorted ascending.
struct Simplex {
    std::array<std::int32_t, 4> vertex{-1, -1, -1, -1};
    int dim = 0;
    double value = 0.0;

    std::span<const std::int32_t> vertices() const {
        return {vertex.data(), static_cast<std::size_t>(dim + 1)};
    }
};

bool filtration_order(const Simplex& a, const Simplex& b);

/// Simplices sorted by (value, dimension, lexicographic vertices).
class Filtration {
public:
    static constexpr int kMaxSupportedDim = 3;

    /// Sorts `simplices` into filtration order. Face closure is not checked
    /// here; persistent_homology reports a missing face as a StructuralError.
    Filtration(std::vector<Simplex> simplices, int max_dim, double max_radius);

    const std::vector<Simplex>& simplices() const noexcept { return simplices_; }
    const Simplex& operator[](std::size_t i) const { return simplices_[i]; }
    std::size_t size() const noexcept { return simplices_.size(); }
    int max_dim() const noexcept { return max_dim_; }
    double max_radius() const noexcept { return max_radius_; }
    /// One past the largest vertex id.
    std::int32_t vertex_count() const noexcept { return vertex_count_; }
    std::size_t count(int dim) const;

    /// Distances the filtration was built from, when it is a flag
    /// (Vietoris-Rips) filtration; nullptr otherwise.
    const Eigen::MatrixXd* rips_distances() const noexcept { return rips_distances_.get(); }
    void set_rips_distances(std::shared_ptr<const Eigen::MatrixXd> d) { rips_distances_ = std::move(d); }

private:
    std::vector<Simplex> simplices_;
    std::shared_ptr<const Eigen::MatrixXd> rips_distances_;
    int max_dim_;
    double max_radius_;
    std::int32_t vertex_count_ = 0;
};

/// Vietoris-Rips filtration up to dimension `max_dim`, keeping simplices of
/// diameter <= max_radius. std::nullopt selects the enclosing radius.
Filtration vietoris_rips(const DistanceMatrix& dm, int max_dim = 2,
                         std::optional<double> max_radius = std::nullopt);

struct PersistencePair {
    double birth = 0.0;
    double death = std::numeric_limits<double>::infinity();
    /// Filtration indices of the creating and destroying simplices, -1 when
    /// unknown (e.g. a diagram read from disk) or the class is essential.
    std::int64_t birth_simplex = -1;
    std::int64_t death_simplex = -1;

    bool essential() const noexcept { return std::isinf(death); }
    double persistence() const noexcept { return death - birth; }
};

struct PersistenceDiagram {
    int degree = 0;
    std::vector<PersistencePair> pairs;

    std::size_t size() const noexcept { return pairs.size(); }
    bool empty() const noexcept { return pairs.empty(); }
    /// Largest finite persistence, 0 for an empty diagram.
    double max_persistence() const;
    /// Pairs with persistence strictly above `fraction` of the maximum.
    std::size_t significant_count(double fraction = 0.25) const;
    /// (birth, death) multiset, sorted, for comparisons.
    std::vector<std::pair<double, double>> sorted_points() const;
};

/// Z/2 cycle given as a list of edges (vertex id pairs).
struct RepresentativeCycle {
    int degree = 1;
    double birth = 0.0;
    double death = 0.0;
    std::vector<std::pair<std::int32_t, std::int32_t>> edges;
};

/// Standard Z/2 boundary-matrix reduction with the twist (clearing)
/// optimisation: higher dimensions are reduced first and every column that
/// appears as a pivot is cleared in the next dimension down.
class BoundaryReduction {
public:
    BoundaryReduction(const Filtration& f, const std::set<int>& degrees);

    /// Zero-length pairs are dropped.
    PersistenceDiagram diagram(int degree) const;

    /// Cycle generating the class born at `birth_simplex`: the reduced
    /// boundary of its death simplex, or the reduction chain of the birth
    /// edge for an essential class. Empty when the index is not a birth.
    std::vector<std::int64_t> cycle(std::int64_t birth_simplex) const;

    /// Global filtration index of the pivot (lowest row) of every reduced
    /// column; -1 for columns that are zero or were never reduced.
    std::vector<std::int64_t> lows() const;

private:
    void reduce_dimension(int dim, std::int64_t stop_after_pivots);
    void boundary_ranks(std::int64_t j, std::vector<std::int32_t>& out) const;
    std::int64_t find_face(std::uint64_t key) const;

    const Filtration* f_;
    std::set<int> degrees_;
    std::vector<std::vector<std::int64_t>> of_dim_;  // global indices grouped by dimension
    std::vector<std::int32_t> rank_;                 // global index -> position within its dimension
    // Per dimension d, rows are ranks of (d-1)-simplices and columns ranks of d-simplices.
    std::vector<std::vector<std::vector<std::int32_t>>> pivot_column_;  // [d][low row] -> reduced column
    std::vector<std::vector<std::int32_t>> killer_;  // [d][row] -> column of dim d+1 with that pivot
    std::vector<std::vector<char>> zero_;            // [d][column] -> reduced to zero or cleared
    std::vector<std::vector<char>> reduced_;         // [d][column] -> processed
    std::vector<std::vector<std::int32_t>> chains_;  // dim-1 reduction chains, by column
    std::vector<std::int32_t> edge_rank_;  // dense n*n table of edge ranks, empty when n is large
    std::int32_t n_vertices_ = 0;
    std::vector<std::pair<std::uint64_t, std::int64_t>> face_index_;  // sorted keys of faces of dim >= 1
};

/// Persistence diagrams in the requested degrees, one per degree in
/// ascending order.
std::vector<PersistenceDiagram> persistent_homology(const Filtration& f, const std::set<int>& degrees = {0, 1});

/// Cycles for the `top_k` most persistent pairs of a degree-1 diagram
/// computed from `f`. Asking for more cycles than pairs returns them all.
std::vector<RepresentativeCycle> representative_cycles(const Filtration& f, const PersistenceDiagram& diagram,
                                                       std::size_t top_k);

}  // namespace wormtopo
