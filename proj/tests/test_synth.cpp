#include "doctest.h"

#include "wormtopo/embed.hpp"
#include "wormtopo/error.hpp"
#include "wormtopo/homology.hpp"
#include "wormtopo/landscape.hpp"
#include "wormtopo/synth.hpp"

#include <cmath>
#include <numbers>

using namespace wormtopo;

namespace {

PersistenceDiagram h1(const Eigen::MatrixXd& points) {
    const Filtration f = vietoris_rips(DistanceMatrix(euclidean_distances(points)), 2);
    return persistent_homology(f, {1}).at(0);
}

Eigen::Index centred_rank(const Eigen::MatrixXd& pts) {
    const Eigen::MatrixXd c = pts.rowwise() - pts.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(c);
    svd.setThreshold(1e-10);
    return svd.rank();
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("sine values") {
    const TimeSeries s = gen_sine(24, 12.0, 2.0);
    REQUIRE(s.size() == 24);
    REQUIRE(s.dim() == 1);
    for (Eigen::Index t = 0; t < 24; ++t) {
        CHECK(s.frames()(t, 0) == doctest::Approx(2.0 * std::sin(2 * std::numbers::pi * t / 12.0)));
    }
    CHECK_THROWS_AS(gen_sine(10, 3.0), ParameterError);
}

TEST_CASE("a raw sine has no loops and a short window makes one") {
    const TimeSeries s = gen_sine(60, 12.0);
    CHECK(h1(sliding_window(s.frames(), 1)).empty());
    const PersistenceDiagram d = h1(sliding_window(s.frames(), 4));
    CHECK(d.size() >= 1);
    CHECK(d.significant_count() == 1);
}

TEST_CASE("zero amplitude sine is trivial at every window") {
    const TimeSeries s = gen_sine(40, 10.0, 0.0);
    for (Eigen::Index w : {1, 4, 8}) CHECK(h1(sliding_window(s.frames(), w)).empty());
}

TEST_CASE("noise free sine embeddings lie on an ellipse") {
    for (double period : {5.0, 8.0, 12.0}) {
        const TimeSeries s = gen_sine(50, period);
        for (Eigen::Index w = 2; w <= static_cast<Eigen::Index>(period); ++w) {
            CHECK(centred_rank(sliding_window(s.frames(), w)) == 2);
        }
    }
}

TEST_CASE("figure eight parameterisation") {
    const TimeSeries f = gen_figure_eight(32, 0.0, 0, 3);
    REQUIRE(f.size() == 96);
    REQUIRE(f.dim() == 2);
    for (Eigen::Index i = 0; i < 96; ++i) {
        const double s = 2 * std::numbers::pi * static_cast<double>(i % 32) / 32.0;
        CHECK(f.frames()(i, 0) == doctest::Approx(std::sin(s)));
        CHECK(f.frames()(i, 1) == doctest::Approx(std::sin(s) * std::cos(s)));
    }
    CHECK(f.frames().row(5) == f.frames().row(37));
    CHECK_THROWS_AS(gen_figure_eight(15), ParameterError);
}

TEST_CASE("figure eight has two raw loops and one embedded loop that grows with the window") {
    const TimeSeries f = gen_figure_eight(32, 0.0, 0, 3);
    const PersistenceDiagram raw = h1(f.frames());
    CHECK(raw.significant_count() == 2);

    const PersistenceDiagram w10 = h1(sliding_window(f.frames(), 10));
    const PersistenceDiagram w20 = h1(sliding_window(f.frames(), 20));
    CHECK(w10.significant_count() == 1);
    CHECK(w20.significant_count() == 1);
    CHECK(w20.max_persistence() > w10.max_persistence());
}

TEST_CASE("the symmetric figure eight gives equal first two landscape depths") {
    const PersistenceDiagram raw = h1(gen_figure_eight(32, 0.0, 0, 1).frames());
    REQUIRE(raw.size() == 2);
    CHECK(raw.pairs[0].birth == doctest::Approx(raw.pairs[1].birth).epsilon(1e-12));
    CHECK(raw.pairs[0].death == doctest::Approx(raw.pairs[1].death).epsilon(1e-12));
    const Landscape l = landscape_from_diagram(raw);
    REQUIRE(l.depth_count() == 2);
    for (int i = 0; i <= 200; ++i) {
        const double t = 1.2 * i / 200.0;
        CHECK(std::abs(l(0, t) - l(1, t)) <= 1e-12);
    }
    CHECK(l(0, (raw.pairs[0].birth + raw.pairs[0].death) / 2) > 0.0);
}

TEST_CASE("generators are deterministic") {
    CHECK(gen_sine(50, 7.0, 1.0, 0.3, 9).frames() == gen_sine(50, 7.0, 1.0, 0.3, 9).frames());
    CHECK(gen_sine(50, 7.0, 1.0, 0.3, 9).frames() != gen_sine(50, 7.0, 1.0, 0.3, 10).frames());
    CHECK(gen_figure_eight(20, 0.1, 4).frames() == gen_figure_eight(20, 0.1, 4).frames());
    const auto a = gen_posture_class(3, 4, 120, 20, 17);
    const auto b = gen_posture_class(3, 4, 120, 20, 17);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].frames() == b[i].frames());
        CHECK(a[i].label() == std::optional<std::string>("3"));
    }
    CHECK(a[0].frames() != a[1].frames());
    // The class id enters the stream, so classes with one seed differ.
    CHECK(gen_posture_class(2, 1, 120, 20, 17)[0].frames() != gen_posture_class(3, 1, 120, 20, 17)[0].frames());
}

TEST_CASE("posture class table") {
    double previous = INFINITY;
    std::size_t harmonics = 0;
    for (int c = 1; c <= 4; ++c) {
        const PostureParams p = posture_class_params(c);
        CHECK(p.amplitude < previous);
        CHECK(p.harmonics.size() >= harmonics);
        previous = p.amplitude;
        harmonics = p.harmonics.size();
    }
    CHECK(posture_class_params(1).mean_segment_s == 0.0);
    CHECK(posture_class_params(4).mean_segment_s < posture_class_params(2).mean_segment_s);
    CHECK_THROWS_AS(posture_class_params(0), ParameterError);
    CHECK_THROWS_AS(posture_class_params(5), ParameterError);
}

TEST_CASE("pure forward gait is a travelling wave") {
    PostureParams p;
    p.noise = 0.0;
    p.jitter = 0.0;
    const TimeSeries s = gen_posture_series(p, 90, 11, 30.0, 1);
    REQUIRE(s.size() == 90);
    REQUIRE(s.dim() == 11);
    // Advancing the gait by one full period (60 frames at 0.5 Hz) repeats the shape.
    CHECK((s.frames().row(70) - s.frames().row(10)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(s.frames().cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
}

TEST_CASE("behaviour schedules") {
    PostureParams p;
    p.noise = 0.0;
    p.jitter = 0.0;
    const TimeSeries s = gen_behavior_sequence({Behavior::Forward, Behavior::Pause, Behavior::Backward}, 30, p, 8,
                                               30.0, 0);
    REQUIRE(s.size() == 90);
    // Pausing holds the posture.
    CHECK((s.frames().row(45) - s.frames().row(30)).cwiseAbs().maxCoeff() < 1e-12);
    // Running backward retraces the forward segment.
    CHECK((s.frames().row(65) - s.frames().row(25)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("a zero amplitude posture class has zero landscapes") {
    PostureParams p;
    p.amplitude = 0.0;
    p.noise = 0.0;
    const TimeSeries s = gen_posture_series(p, 60, 10, 30.0, 3);
    CHECK(s.frames().isZero(0.0));
    const PersistenceDiagram d = h1(sliding_window(s.frames(), 20));
    const auto v = discretize(landscape_from_diagram(d), Grid{0, 1, 11}, 3);
    CHECK(v.values.isZero(0.0));
}

}
