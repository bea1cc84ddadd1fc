#include "doctest.h"

#include "wormtopo/error.hpp"
#include "wormtopo/ml.hpp"
#include "wormtopo/random.hpp"

#include <algorithm>
#include <vector>

using namespace wormtopo;

namespace {

double accuracy(const std::vector<int>& a, const std::vector<int>& b) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < a.size(); ++i) hit += a[i] == b[i] ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(a.size());
}

struct Labelled {
    Eigen::MatrixXd x;
    std::vector<int> y;
};

// `per` points around each corner of a square spaced `gap` apart.
Labelled clusters(CounterRng& rng, int classes, int per, double gap, double spread) {
    Labelled out{Eigen::MatrixXd(classes * per, 3), {}};
    for (int c = 0; c < classes; ++c) {
        for (int i = 0; i < per; ++i) {
            const Eigen::Index r = c * per + i;
            out.x(r, 0) = gap * (c % 2) + spread * rng.normal();
            out.x(r, 1) = gap * (c / 2) + spread * rng.normal();
            out.x(r, 2) = spread * rng.normal();
            out.y.push_back(c + 1);
        }
    }
    return out;
}

Labelled xor_data(CounterRng& rng, int per) {
    Labelled out{Eigen::MatrixXd(4 * per, 2), {}};
    for (int q = 0; q < 4; ++q) {
        const double sx = q & 1 ? 1.0 : -1.0;
        const double sy = q & 2 ? 1.0 : -1.0;
        for (int i = 0; i < per; ++i) {
            const Eigen::Index r = q * per + i;
            out.x(r, 0) = sx * (0.5 + 0.5 * rng.uniform());
            out.x(r, 1) = sy * (0.5 + 0.5 * rng.uniform());
            out.y.push_back(sx * sy > 0 ? 1 : 2);
        }
    }
    return out;
}

// Violation of the box and equality constraints and the KKT gap, recomputed
// from the returned alpha alone.
double kkt_gap(const SmoProblem& p, const Eigen::VectorXd& alpha) {
    const Eigen::VectorXd grad = p.q * alpha + p.p;
    double m = -INFINITY;
    double big_m = INFINITY;
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        const double v = -p.y(i) * grad(i);
        const bool up = (p.y(i) > 0 && alpha(i) < p.upper(i)) || (p.y(i) < 0 && alpha(i) > 0);
        const bool low = (p.y(i) > 0 && alpha(i) > 0) || (p.y(i) < 0 && alpha(i) < p.upper(i));
        if (up) m = std::max(m, v);
        if (low) big_m = std::min(big_m, v);
    }
    return m - big_m;
}

}  // namespace

TEST_SUITE("ml") {

TEST_CASE("separable one dimensional classes") {
    Eigen::MatrixXd x(10, 1);
    std::vector<int> y;
    for (int i = 0; i < 10; ++i) {
        x(i, 0) = (i < 5 ? -1.0 : 1.0) + 0.01 * i;
        y.push_back(i < 5 ? 0 : 1);
    }
    SVMOptions o;
    o.kernel.type = KernelType::Linear;
    const SVMModel m = svm_train(x, y, o);
    CHECK(accuracy(m.predict(x), y) == 1.0);
    REQUIRE(m.pairs.size() == 1);
    CHECK(m.pairs[0].converged);
}

TEST_CASE("xor needs a nonlinear kernel") {
    CounterRng rng(1);
    const Labelled d = xor_data(rng, 20);
    CHECK(accuracy(svm_train(d.x, d.y).predict(d.x), d.y) == 1.0);
    SVMOptions lin;
    lin.kernel.type = KernelType::Linear;
    CHECK(accuracy(svm_train(d.x, d.y, lin).predict(d.x), d.y) <= 0.75);
}

TEST_CASE("dual variables respect the box and the KKT tolerance") {
    CounterRng rng(2);
    const Labelled d = clusters(rng, 4, 15, 1.5, 0.6);
    const SVMModel m = svm_train(d.x, d.y);
    CHECK(m.pairs.size() == 6);
    for (const auto& b : m.pairs) {
        CHECK(b.converged);
        CHECK(b.kkt_violation < 1e-3);
        CHECK(b.alpha.minCoeff() >= 0.0);
        CHECK(b.alpha.maxCoeff() <= m.cost);
        CHECK(b.coef.cwiseAbs().maxCoeff() <= m.cost);
    }
}

TEST_CASE("smo objective improves monotonically") {
    CounterRng rng(3);
    const Labelled d = clusters(rng, 2, 25, 1.0, 0.8);
    const Kernel k{KernelType::Rbf, median_heuristic_gamma(d.x)};
    const Eigen::MatrixXd km = k.matrix(d.x, d.x);
    SmoProblem p;
    p.y = Eigen::VectorXd(d.x.rows());
    for (Eigen::Index i = 0; i < p.y.size(); ++i) p.y(i) = d.y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    p.q = (p.y * p.y.transpose()).cwiseProduct(km);
    p.p = -Eigen::VectorXd::Ones(p.y.size());
    p.upper = Eigen::VectorXd::Constant(p.y.size(), 10.0);
    const SmoResult r = solve_smo(p, 1e-3, 1'000'000, true);
    REQUIRE(r.converged);
    REQUIRE(r.objective_trace.size() > 2);
    // The solver minimises 0.5 a'Qa + p'a, the negated dual, so the dual rises.
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
        CHECK(r.objective_trace[i] <= r.objective_trace[i - 1] + 1e-12);
    }
    CHECK(kkt_gap(p, r.alpha) < 1e-3);
    CHECK(std::abs(p.y.dot(r.alpha)) < 1e-9);
    CHECK(r.alpha.minCoeff() >= 0.0);
    CHECK(r.alpha.maxCoeff() <= 10.0);
    CHECK(r.objective == doctest::Approx(0.5 * r.alpha.dot(p.q * r.alpha) + p.p.dot(r.alpha)).epsilon(1e-9));
}

TEST_CASE("four separated clusters cross validate well") {
    CounterRng rng(4);
    const Labelled d = clusters(rng, 4, 10, 6.0, 0.5);
    const CVReport r = svm_cross_validate(d.x, d.y, 10, 5, 9);
    CHECK(r.accuracy_mean >= 0.95);
    CHECK(r.per_repeat.size() == 5);
    REQUIRE(r.confusion.rows() == 4);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(r.confusion.row(i).sum() == 10);
    CHECK(r.confusion.trace() == 40);
    CHECK(r.classes == std::vector<int>{1, 2, 3, 4});
}

TEST_CASE("shuffled labels give chance accuracy") {
    CounterRng rng(5);
    Labelled d = clusters(rng, 4, 20, 6.0, 0.5);
    CounterRng shuffle_rng(6);
    shuffle_rng.shuffle(std::span<int>(d.y));
    const CVReport r = svm_cross_validate(d.x, d.y, 10, 10, 3);
    // 80 samples, 10 repeats: chance is 0.25 with a standard error near 0.05.
    CHECK(r.accuracy_mean > 0.05);
    CHECK(r.accuracy_mean < 0.45);
    CHECK(r.confusion.sum() == 80);
    CHECK(static_cast<double>(r.confusion.trace()) / 80.0 == doctest::Approx(r.per_repeat[0]));
}

TEST_CASE("cross validation is deterministic") {
    CounterRng rng(7);
    const Labelled d = clusters(rng, 3, 12, 1.0, 0.7);
    const CVReport a = svm_cross_validate(d.x, d.y, 5, 4, 11);
    const CVReport b = svm_cross_validate(d.x, d.y, 5, 4, 11);
    CHECK(a.per_repeat == b.per_repeat);
    CHECK(a.confusion == b.confusion);
    CHECK(a.gamma == b.gamma);
}

TEST_CASE("rbf predictions are invariant under translation and matched scaling") {
    CounterRng rng(8);
    const Labelled d = clusters(rng, 3, 12, 1.0, 0.7);
    const Labelled probe = clusters(rng, 3, 10, 1.0, 1.0);
    SVMOptions o;
    o.kernel.gamma = 0.7;
    const auto base = svm_train(d.x, d.y, o).predict(probe.x);

    const Eigen::RowVector3d shift(5.0, -3.0, 11.0);
    const Eigen::MatrixXd moved = d.x.rowwise() + shift;
    const Eigen::MatrixXd moved_probe = probe.x.rowwise() + shift;
    CHECK(svm_train(moved, d.y, o).predict(moved_probe) == base);

    const double c = 3.0;
    SVMOptions scaled = o;
    scaled.kernel.gamma = 0.7 / (c * c);
    CHECK(svm_train(d.x * c, d.y, scaled).predict(probe.x * c) == base);

    // The median heuristic scales with the data on its own.
    CHECK(median_heuristic_gamma(d.x * c) == doctest::Approx(median_heuristic_gamma(d.x) / (c * c)));
}

TEST_CASE("svm errors") {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 2);
    CHECK_THROWS_AS(svm_train(x, {1, 1, 1, 1, 1, 1}), DegenerateError);
    CHECK_THROWS_AS(svm_cross_validate(x, {1, 2, 1, 2, 1, 2}, 7, 1, 0), ParameterError);
    CHECK_THROWS_AS(svm_train(x, {1, 2}), ParameterError);
}

TEST_CASE("svr recovers exactly linear targets") {
    const Eigen::Index n = 60;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd t(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = static_cast<double>(i) / static_cast<double>(n - 1);
        t(i) = 3.0 * x(i, 0) - 1.0;
    }
    SVROptions o;
    o.kernel.type = KernelType::Linear;
    o.cost = 100.0;
    const Eigen::VectorXd est = svr_fit_predict(x, t, 10, 3, 5, o);
    const double sd = std::sqrt((t.array() - t.mean()).square().mean());
    const double tube = (o.epsilon + 1e-3) * sd;
    // The flattest fit touches the tube at both ends of its training range, so
    // a held-out end point is extrapolated by at most one grid step on a
    // training range of at least 1 - 2h, which widens the bound by 2h/(1-2h).
    const double h = 1.0 / static_cast<double>(n - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool interior = i >= 2 && i < n - 2;
        CHECK(std::abs(est(i) - t(i)) <= (interior ? tube : tube * (1.0 + 2.0 * h / (1.0 - 2.0 * h))));
    }

    const SVRModel m = svr_train(x, t, o);
    CHECK(m.coef.cwiseAbs().maxCoeff() <= o.cost);
    CHECK(m.solver.converged);
    const Eigen::VectorXd fit = m.predict(x);
    CHECK((fit - t).cwiseAbs().maxCoeff() <= tube);
}

TEST_CASE("svr of constant targets is constant") {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(12, 4);
    const Eigen::VectorXd t = Eigen::VectorXd::Constant(12, 2.5);
    const Eigen::VectorXd est = svr_fit_predict(x, t, 4, 2, 1);
    CHECK((est.array() == 2.5).all());
}

TEST_CASE("svr orders monotone classes") {
    CounterRng rng(10);
    const int per = 10;
    Eigen::MatrixXd x(4 * per, 5);
    Eigen::VectorXd t(4 * per);
    const double level[4] = {0.0, 0.5, 1.0, 2.0};
    for (int c = 0; c < 4; ++c) {
        for (int i = 0; i < per; ++i) {
            const Eigen::Index r = c * per + i;
            for (Eigen::Index j = 0; j < 5; ++j) x(r, j) = 0.3 * rng.normal();
            x(r, 0) += 2.0 * c;
            x(r, 1) -= 1.0 * c;
            t(r) = level[c];
        }
    }
    const Eigen::VectorXd est = svr_fit_predict(x, t, 10, 5, 2);
    // A sample is ordered correctly when its estimate is nearer its own level
    // than either neighbouring level.
    int good = 0;
    for (int c = 0; c < 4; ++c) {
        for (int i = 0; i < per; ++i) {
            const double e = est(c * per + i);
            bool ok = true;
            if (c > 0) ok = ok && e > (level[c] + level[c - 1]) / 2;
            if (c < 3) ok = ok && e < (level[c] + level[c + 1]) / 2;
            good += ok ? 1 : 0;
        }
    }
    CHECK(good >= 36);
}

}
