#pragma once

#include "wormtopo/ingest.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace wormtopo {

/// x_t = amplitude * sin(2 pi t / period) + N(0, noise^2), t = 0..n-1.
/// Requires period >= 4.
TimeSeries gen_sine(Eigen::Index n, double period, double amplitude = 1.0, double noise = 0.0,
                    std::uint64_t seed = 0);

/// Lemniscate (sin s, sin s cos s) sampled at n uniform phases per period,
/// repeated `periods` times, plus isotropic Gaussian noise. Requires n >= 16.
TimeSeries gen_figure_eight(Eigen::Index n, double noise = 0.0, std::uint64_t seed = 0, int periods = 1);

enum class Behavior { Forward, Backward, Pause };

/// Traveling-wave posture model. Body point i of dim has angle
///   A * [sin(psi - 2 pi k s_i) + sum_h c_h sin(h (psi - 2 pi k s_i))],
/// s_i = i / (dim - 1), where the gait phase psi advances by
/// +-2 pi f / rate per frame (forward / backward) or holds (pause).
/// Behaviours switch after exponentially distributed segment lengths.
struct PostureParams {
    double amplitude = 1.0;
    double frequency_hz = 0.5;
    double wave_number = 1.0;
    std::vector<double> harmonics;  // c_2, c_3, ...
    double mean_segment_s = 0.0;    // 0: never switch
    double p_backward = 0.0;
    double p_pause = 0.0;
    double noise = 0.01;
    double jitter = 0.05;  // relative per-sample spread of amplitude and frequency
};

/// Fixed parameter table for the synthetic classes 1..4. Amplitude falls as
/// the id grows; each step also adds a harmonic and shortens behaviour segments.
PostureParams posture_class_params(int class_id);

/// One series drawn from `params`; the first segment is always forward.
TimeSeries gen_posture_series(const PostureParams& params, Eigen::Index n_frames, Eigen::Index dim,
                              double frame_rate_hz, std::uint64_t seed);

/// `n_samples` series of class `class_id`, labelled with the class number.
/// Sample j uses stream j of `seed` mixed with the class id.
std::vector<TimeSeries> gen_posture_class(int class_id, std::size_t n_samples, Eigen::Index n_frames,
                                          Eigen::Index dim = 100, std::uint64_t seed = 0,
                                          double frame_rate_hz = 30.0);

/// Deterministic series that runs each behaviour of `schedule` for
/// `frames_per_segment` frames, continuing the gait phase across segments.
TimeSeries gen_behavior_sequence(const std::vector<Behavior>& schedule, Eigen::Index frames_per_segment,
                                 const PostureParams& params, Eigen::Index dim, double frame_rate_hz,
                                 std::uint64_t seed);

}  // namespace wormtopo
