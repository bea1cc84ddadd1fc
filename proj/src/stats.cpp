#include "wormtopo/stats.hpp"

#include "wormtopo/error.hpp"
#include "wormtopo/random.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace wormtopo {

namespace {

void fix_signs(Eigen::MatrixXd& basis) {
    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
        Eigen::Index arg = 0;
        basis.col(j).cwiseAbs().maxCoeff(&arg);
        if (basis(arg, j) < 0) basis.col(j) *= -1.0;
    }
}

}  // namespace

Eigen::MatrixXd PCAResult::project(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean.transpose()) * components;
}

PCAResult pca(const Eigen::MatrixXd& vectors, Eigen::Index k) {
    const Eigen::Index n = vectors.rows();
    if (n < 2) throw ParameterError("pca: needs at least two vectors");
    if (k < 0 || k > std::min(n - 1, vectors.cols())) {
        throw ParameterError("pca: k must satisfy 0 <= k <= min(n - 1, dim)");
    }
    PCAResult out;
    out.mean = vectors.colwise().mean().transpose();
    const Eigen::MatrixXd centered = vectors.rowwise() - out.mean.transpose();
    const Eigen::MatrixXd gram = (centered * centered.transpose()) / static_cast<double>(n);
    out.total_variance = gram.trace();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) throw NumericalError("pca: eigendecomposition failed");
    const Eigen::VectorXd values = eig.eigenvalues().reverse();
    const Eigen::MatrixXd vecs = eig.eigenvectors().rowwise().reverse();

    const double floor = 1e-12 * std::max(values(0), 0.0);
    Eigen::Index kept = 0;
    while (kept < k && values(kept) > floor && values(kept) > 0.0) ++kept;

    out.components.resize(vectors.cols(), kept);
    out.explained_variance.resize(kept);
    for (Eigen::Index j = 0; j < kept; ++j) {
        // Gram eigenvector v with eigenvalue l maps to the covariance
        // eigenvector X^T v, of norm sqrt(n l).
        out.components.col(j) = centered.transpose() * vecs.col(j);
        out.components.col(j).normalize();
        out.explained_variance(j) = values(j);
    }
    fix_signs(out.components);
    out.cumulative.resize(kept);
    double running = 0.0;
    for (Eigen::Index j = 0; j < kept; ++j) {
        running += values(j);
        out.cumulative(j) = running / out.total_variance;
    }
    return out;
}

Eigen::VectorXd per_coordinate_std(const Eigen::MatrixXd& vectors) {
    if (vectors.rows() < 2) throw ParameterError("per_coordinate_std: needs at least two vectors");
    const Eigen::RowVectorXd mean = vectors.colwise().mean();
    const Eigen::MatrixXd centered = vectors.rowwise() - mean;
    return (centered.array().square().colwise().sum() / static_cast<double>(vectors.rows())).sqrt().transpose();
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& vectors) {
    const Eigen::RowVectorXd mean = vectors.colwise().mean();
    const Eigen::MatrixXd centered = vectors.rowwise() - mean;
    return (centered.transpose() * centered) / static_cast<double>(vectors.rows());
}

MDSEmbedding mds(const Eigen::MatrixXd& distances, Eigen::Index target_dim) {
    const Eigen::Index n = distances.rows();
    if (n == 0 || distances.cols() != n) throw DataError("mds: distance matrix must be square and non-empty");
    if (target_dim < 1) throw ParameterError("mds: target dimension must be positive");
    if (!distances.allFinite()) throw DataError("mds: non-finite distance");
    const double tol = 1e-12 * std::max(1.0, distances.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(distances(i, i)) > tol) throw DataError("mds: diagonal must be zero");
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (std::abs(distances(i, j) - distances(j, i)) > tol) throw DataError("mds: matrix is not symmetric");
            if (distances(i, j) < 0.0) throw DataError("mds: negative distance");
        }
    }
    const Eigen::MatrixXd sq = distances.array().square().matrix();
    const Eigen::MatrixXd centering =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    const Eigen::MatrixXd b = -0.5 * centering * sq * centering;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (b + b.transpose()));
    if (eig.info() != Eigen::Success) throw NumericalError("mds: eigendecomposition failed");
    const Eigen::VectorXd values = eig.eigenvalues().reverse();
    const Eigen::MatrixXd vecs = eig.eigenvectors().rowwise().reverse();

    MDSEmbedding out;
    out.coordinates = Eigen::MatrixXd::Zero(n, target_dim);
    out.eigenvalues = Eigen::VectorXd::Zero(target_dim);
    for (Eigen::Index j = 0; j < std::min(n, target_dim); ++j) {
        const double l = std::max(values(j), 0.0);
        out.eigenvalues(j) = l;
        out.coordinates.col(j) = vecs.col(j) * std::sqrt(l);
    }
    fix_signs(out.coordinates);
    out.coordinates.rowwise() -= out.coordinates.colwise().mean();

    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double fitted = (out.coordinates.row(i) - out.coordinates.row(j)).norm();
            num += (distances(i, j) - fitted) * (distances(i, j) - fitted);
            den += distances(i, j) * distances(i, j);
        }
    }
    out.stress = den > 0.0 ? std::sqrt(num / den) : 0.0;
    return out;
}

PermutationResult permutation_test(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::size_t n_perms,
                                   std::uint64_t seed) {
    if (a.rows() == 0 || b.rows() == 0) throw ParameterError("permutation_test: both groups must be non-empty");
    if (a.cols() != b.cols()) throw IncompatibleError("permutation_test: vector length mismatch");

    // Canonical group order, so swapping the arguments replays the same draws.
    const bool swap = b.rows() < a.rows() ||
                      (b.rows() == a.rows() && b.squaredNorm() < a.squaredNorm());
    const Eigen::MatrixXd& first = swap ? b : a;
    const Eigen::MatrixXd& second = swap ? a : b;
    const Eigen::Index n1 = first.rows();
    const Eigen::Index n2 = second.rows();
    const Eigen::Index n = n1 + n2;

    PermutationResult out;
    out.n_perms = n_perms;
    out.observed = (first.colwise().mean() - second.colwise().mean()).norm();

    Eigen::MatrixXd pooled(n, a.cols());
    pooled << first, second;
    const Eigen::MatrixXd gram = pooled * pooled.transpose();
    // Squared mean distance of a split is w^T G w, w = +1/n1 on group one, -1/n2 on group two.
    const auto split_stat = [&](const std::vector<Eigen::Index>& order) {
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            w(order[static_cast<std::size_t>(i)]) =
                i < n1 ? 1.0 / static_cast<double>(n1) : -1.0 / static_cast<double>(n2);
        }
        return w.dot(gram * w);
    };
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const double observed_sq = split_stat(order);
    const double tie_tol = 1e-12 * gram.trace() / static_cast<double>(n);

    const CounterRng root(seed);
    for (std::size_t p = 0; p < n_perms; ++p) {
        CounterRng rng = root.split(p);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(std::span<Eigen::Index>(order));
        if (split_stat(order) >= observed_sq - tie_tol) ++out.exceed;
    }
    out.p_value = static_cast<double>(out.exceed + 1) / static_cast<double>(n_perms + 1);
    return out;
}

}  // namespace wormtopo
