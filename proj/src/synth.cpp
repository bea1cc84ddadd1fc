#include "wormtopo/synth.hpp"

#include "wormtopo/error.hpp"
#include "wormtopo/random.hpp"

#include <cmath>
#include <numbers>

namespace wormtopo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double posture_angle(const PostureParams& p, double amplitude, double psi, double s) {
    const double arg = psi - kTwoPi * p.wave_number * s;
    double v = std::sin(arg);
    for (std::size_t h = 0; h < p.harmonics.size(); ++h) {
        v += p.harmonics[h] * std::sin(static_cast<double>(h + 2) * arg);
    }
    return amplitude * v;
}

void fill_frame(Eigen::MatrixXd& frames, Eigen::Index t, const PostureParams& p, double amplitude, double psi,
                CounterRng& noise) {
    const Eigen::Index dim = frames.cols();
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double s = dim > 1 ? static_cast<double>(i) / static_cast<double>(dim - 1) : 0.0;
        frames(t, i) = posture_angle(p, amplitude, psi, s) + (p.noise > 0.0 ? p.noise * noise.normal() : 0.0);
    }
}

double direction(Behavior b) {
    switch (b) {
        case Behavior::Forward: return 1.0;
        case Behavior::Backward: return -1.0;
        case Behavior::Pause: return 0.0;
    }
    return 0.0;
}

}  // namespace

TimeSeries gen_sine(Eigen::Index n, double period, double amplitude, double noise, std::uint64_t seed) {
    if (n < 1) throw ParameterError("gen_sine: n must be positive");
    if (!(period >= 4.0)) throw ParameterError("gen_sine: period must be at least 4 samples");
    CounterRng rng(seed);
    Eigen::MatrixXd x(n, 1);
    for (Eigen::Index t = 0; t < n; ++t) {
        x(t, 0) = amplitude * std::sin(kTwoPi * static_cast<double>(t) / period);
        if (noise > 0.0) x(t, 0) += noise * rng.normal();
    }
    return TimeSeries(std::move(x));
}

TimeSeries gen_figure_eight(Eigen::Index n, double noise, std::uint64_t seed, int periods) {
    if (n < 16) throw ParameterError("gen_figure_eight: n must be at least 16");
    if (periods < 1) throw ParameterError("gen_figure_eight: periods must be positive");
    CounterRng rng(seed);
    Eigen::MatrixXd x(n * periods, 2);
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
        const double s = kTwoPi * static_cast<double>(t % n) / static_cast<double>(n);
        x(t, 0) = std::sin(s);
        x(t, 1) = std::sin(s) * std::cos(s);
        if (noise > 0.0) {
            x(t, 0) += noise * rng.normal();
            x(t, 1) += noise * rng.normal();
        }
    }
    return TimeSeries(std::move(x));
}

PostureParams posture_class_params(int class_id) {
    PostureParams p;
    switch (class_id) {
        case 1:
            p.amplitude = 1.00;
            break;
        case 2:
            p.amplitude = 0.80;
            p.harmonics = {0.30};
            p.mean_segment_s = 8.0;
            p.p_backward = 0.25;
            p.p_pause = 0.10;
            break;
        case 3:
            p.amplitude = 0.60;
            p.harmonics = {0.30, 0.20};
            p.mean_segment_s = 5.0;
            p.p_backward = 0.35;
            p.p_pause = 0.10;
            break;
        case 4:
            p.amplitude = 0.45;
            p.harmonics = {0.30, 0.20, 0.15};
            p.mean_segment_s = 3.0;
            p.p_backward = 0.45;
            p.p_pause = 0.10;
            break;
        default:
            throw ParameterError("posture class must be 1..4, got " + std::to_string(class_id));
    }
    return p;
}

TimeSeries gen_posture_series(const PostureParams& params, Eigen::Index n_frames, Eigen::Index dim,
                              double frame_rate_hz, std::uint64_t seed) {
    if (n_frames < 1 || dim < 1) throw ParameterError("gen_posture_series: n_frames and dim must be positive");
    if (!(frame_rate_hz > 0.0)) throw ParameterError("gen_posture_series: frame rate must be positive");
    const CounterRng root(seed);
    CounterRng draws = root.split(0);
    CounterRng noise = root.split(1);

    const double amplitude = params.amplitude * (1.0 + params.jitter * (2.0 * draws.uniform() - 1.0));
    const double freq = params.frequency_hz * (1.0 + params.jitter * (2.0 * draws.uniform() - 1.0));
    const double step = kTwoPi * freq / frame_rate_hz;
    double psi = kTwoPi * draws.uniform();

    Behavior behavior = Behavior::Forward;
    const auto segment_frames = [&] {
        if (params.mean_segment_s <= 0.0) return n_frames;
        const double len = -std::log1p(-draws.uniform()) * params.mean_segment_s * frame_rate_hz;
        return std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::llround(len)));
    };
    Eigen::Index remaining = segment_frames();

    Eigen::MatrixXd frames(n_frames, dim);
    for (Eigen::Index t = 0; t < n_frames; ++t) {
        if (remaining == 0) {
            const double u = draws.uniform();
            behavior = u < params.p_pause                     ? Behavior::Pause
                       : u < params.p_pause + params.p_backward ? Behavior::Backward
                                                                : Behavior::Forward;
            remaining = segment_frames();
        }
        fill_frame(frames, t, params, amplitude, psi, noise);
        psi += direction(behavior) * step;
        --remaining;
    }
    return TimeSeries(std::move(frames), frame_rate_hz);
}

std::vector<TimeSeries> gen_posture_class(int class_id, std::size_t n_samples, Eigen::Index n_frames,
                                          Eigen::Index dim, std::uint64_t seed, double frame_rate_hz) {
    const PostureParams params = posture_class_params(class_id);
    const CounterRng root(mix64(seed) ^ static_cast<std::uint64_t>(class_id));
    std::vector<TimeSeries> out;
    out.reserve(n_samples);
    for (std::size_t j = 0; j < n_samples; ++j) {
        const std::uint64_t sample_seed = root.split(j)();
        out.push_back(gen_posture_series(params, n_frames, dim, frame_rate_hz, sample_seed)
                          .with_label(std::to_string(class_id)));
    }
    return out;
}

TimeSeries gen_behavior_sequence(const std::vector<Behavior>& schedule, Eigen::Index frames_per_segment,
                                 const PostureParams& params, Eigen::Index dim, double frame_rate_hz,
                                 std::uint64_t seed) {
    if (schedule.empty() || frames_per_segment < 1 || dim < 1) {
        throw ParameterError("gen_behavior_sequence: empty schedule or non-positive sizes");
    }
    CounterRng noise(seed);
    const double step = kTwoPi * params.frequency_hz / frame_rate_hz;
    double psi = 0.0;
    Eigen::MatrixXd frames(static_cast<Eigen::Index>(schedule.size()) * frames_per_segment, dim);
    Eigen::Index t = 0;
    for (Behavior b : schedule) {
        for (Eigen::Index k = 0; k < frames_per_segment; ++k, ++t) {
            fill_frame(frames, t, params, params.amplitude, psi, noise);
            psi += direction(b) * step;
        }
    }
    return TimeSeries(std::move(frames), frame_rate_hz);
}

}  // namespace wormtopo
