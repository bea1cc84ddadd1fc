#pragma once

#include "wormtopo/error.hpp"
#include "wormtopo/ingest.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>

namespace wormtopo {

struct Provenance {
    std::string parent_id;
    Eigen::Index window_length = 0;
};

/// Points stored one per row.
struct PointCloud {
    Eigen::MatrixXd points;
    std::optional<Provenance> provenance;

    Eigen::Index size() const noexcept { return points.rows(); }
    Eigen::Index dim() const noexcept { return points.cols(); }
};

/// Sliding window (time delay) embedding with unit step: row t of the
/// result is the concatenation of rows t, t+1, ..., t+w-1 of `frames`.
/// N frames of dimension d give N-w+1 points of dimension d*w.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
sliding_window(const Eigen::MatrixBase<Derived>& frames, Eigen::Index w) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = frames.rows();
    const Eigen::Index d = frames.cols();
    if (w <= 0) {
        throw ParameterError("sliding_window: window length must be positive");
    }
    if (w > n) {
        throw InsufficientDataError("sliding_window: window length " + std::to_string(w) +
                                    " exceeds series length " + std::to_string(n));
    }
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(n - w + 1, d * w);
    for (Eigen::Index t = 0; t < out.rows(); ++t) {
        for (Eigen::Index k = 0; k < w; ++k) {
            out.row(t).segment(k * d, d) = frames.row(t + k);
        }
    }
    return out;
}

inline PointCloud sliding_window(const TimeSeries& ts, Eigen::Index w) {
    return PointCloud{sliding_window(ts.frames(), w), Provenance{ts.label().value_or(""), w}};
}

inline PointCloud sliding_window(const Patch& patch, Eigen::Index w) {
    return PointCloud{sliding_window(patch.frames, w), Provenance{patch.parent_id, w}};
}

}  // namespace wormtopo
