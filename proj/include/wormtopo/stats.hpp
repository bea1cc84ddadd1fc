#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace wormtopo {

/// Principal components as columns of `components`, variances descending.
struct PCAResult {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components;  // dim x k, orthonormal columns
    Eigen::VectorXd explained_variance;
    Eigen::VectorXd cumulative;  // running fraction of total variance
    double total_variance = 0.0;

    /// Coordinates of the rows of `x` in the component basis.
    Eigen::MatrixXd project(const Eigen::MatrixXd& x) const;
};

/// PCA of the rows of `vectors` with population covariance (divisor n),
/// computed through the n x n Gram matrix. Requires at least two rows and
/// k <= min(n-1, dim). Components with zero variance are not returned, so
/// identical rows give an empty basis.
PCAResult pca(const Eigen::MatrixXd& vectors, Eigen::Index k);

/// Population standard deviation of every column.
Eigen::VectorXd per_coordinate_std(const Eigen::MatrixXd& vectors);

/// Population covariance matrix (divisor n) of the rows.
Eigen::MatrixXd covariance(const Eigen::MatrixXd& vectors);

struct MDSEmbedding {
    Eigen::MatrixXd coordinates;  // n x target_dim, column means zero
    Eigen::VectorXd eigenvalues;  // top target_dim, negatives clamped to zero
    double stress = 0.0;          // Kruskal stress-1 against the input distances
};

/// Classical (Torgerson) multidimensional scaling.
MDSEmbedding mds(const Eigen::MatrixXd& distances, Eigen::Index target_dim = 2);

struct PermutationResult {
    double observed = 0.0;  // distance between group means
    double p_value = 1.0;   // (exceed + 1) / (n_perms + 1)
    std::size_t exceed = 0;
    std::size_t n_perms = 0;
};

/// Two-sample permutation test on the Euclidean distance between group
/// means. Permutation i is drawn from stream i of `seed`, so the result is
/// reproducible and independent of evaluation order. Ties count as exceeding.
PermutationResult permutation_test(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                   std::size_t n_perms = 10000, std::uint64_t seed = 0);

}  // namespace wormtopo
