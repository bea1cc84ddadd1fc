// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include "oracles.hpp"
#include "tree.hpp"
#include "wormtopo/embed.hpp"
#include "wormtopo/homology.hpp"
#include "wormtopo/landscape.hpp"
#include "wormtopo/pipeline.hpp"
#include "wormtopo/random.hpp"
#include "wormtopo/stats.hpp"
#include "wormtopo/synth.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

using namespace wormtopo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

PersistenceDiagram degree_of(const std::vector<PersistenceDiagram>& ds, int p) {
    for (const auto& d : ds) {
        if (d.degree == p) return d;
    }
    return PersistenceDiagram{p, {}};
}

PersistenceDiagram h1(const Eigen::MatrixXd& points) {
    return persistent_homology(vietoris_rips(DistanceMatrix(euclidean_distances(points)), 2), {1}).at(0);
}

std::string num(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

Outcome sliding_window_example() {
    Eigen::MatrixXd tau(5, 2);
    tau << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
    Eigen::MatrixXd expected(3, 6);
    expected << 1, 2, 3, 4, 5, 6, 3, 4, 5, 6, 7, 8, 5, 6, 7, 8, 9, 10;
    const Eigen::MatrixXd got = sliding_window(tau, 3);
    const bool ok = got.rows() == 3 && got.cols() == 6 && got == expected;
    return {ok, "3 points of dim 6, bit-exact"};
}

Outcome oracle_equivalence() {
    CounterRng rng(20240);
    int mismatches = 0;
    int pairs = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<Eigen::Index>(2 + rng.below(7));
        const auto dim = static_cast<Eigen::Index>(2 + rng.below(3));
        Eigen::MatrixXd m(n, dim);
        // Every fourth cloud sits on a coarse lattice to force tied distances.
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            m.data()[i] = trial % 4 == 0 ? static_cast<double>(rng.below(3)) : rng.uniform();
        }
        const DistanceMatrix dm(euclidean_distances(m));
        const auto ds = persistent_homology(vietoris_rips(dm, 2), {0, 1});
        for (int p = 0; p <= 1; ++p) {
            const auto expected = oracle::diagram(dm.matrix(), p);
            pairs += static_cast<int>(expected.size());
            if (degree_of(ds, p).sorted_points() != expected) ++mismatches;
        }
    }
    return {mismatches == 0, "200 clouds, " + std::to_string(pairs) + " oracle pairs, " + std::to_string(mismatches) +
                                 " mismatched diagrams"};
}

Outcome square_fixture() {
    Eigen::MatrixXd sq(4, 2);
    sq << 0, 0, 1, 0, 1, 1, 0, 1;
    const Filtration f = vietoris_rips(DistanceMatrix(euclidean_distances(sq)), 2);
    const auto d = persistent_homology(f, {1}).at(0);
    bool ok = d.size() == 1 && std::abs(d.pairs[0].birth - 1.0) <= 1e-12 &&
              std::abs(d.pairs[0].death - std::sqrt(2.0)) <= 1e-12;
    const auto cycles = representative_cycles(f, d, 1);
    ok = ok && cycles.size() == 1;
    if (ok) {
        auto edges = cycles[0].edges;
        for (auto& e : edges) {
            if (e.first > e.second) std::swap(e.first, e.second);
        }
        std::sort(edges.begin(), edges.end());
        const decltype(edges) sides{{0, 1}, {0, 3}, {1, 2}, {2, 3}};
        ok = edges == sides;
    }
    return {ok, "diagram {(1, sqrt 2)}, cycle = 4 side edges"};
}

// Pairs whose persistence exceeds 25% of the largest finite death.
std::size_t above_death_scale(const PersistenceDiagram& d) {
    double scale = 0.0;
    for (const auto& p : d.pairs) {
        if (!p.essential()) scale = std::max(scale, p.death);
    }
    std::size_t n = 0;
    for (const auto& p : d.pairs) n += !p.essential() && p.persistence() > 0.25 * scale ? 1 : 0;
    return n;
}

Outcome sine_example() {
    const TimeSeries s = gen_sine(60, 12.0);
    const auto raw = h1(sliding_window(s.frames(), 1));
    const auto w4 = h1(sliding_window(s.frames(), 4));
    const bool ok = raw.empty() && above_death_scale(w4) == 1 && w4.significant_count() == 1;
    return {ok, "raw pairs " + std::to_string(raw.size()) + ", w=4 significant " + std::to_string(above_death_scale(w4))};
}

Outcome figure_eight_example() {
    const TimeSeries f = gen_figure_eight(32, 0.0, 0, 3);
    const auto raw = h1(f.frames());
    const auto w10 = h1(sliding_window(f.frames(), 10));
    const auto w20 = h1(sliding_window(f.frames(), 20));
    const bool ok = raw.significant_count() == 2 && w10.significant_count() == 1 && w20.significant_count() == 1 &&
                    w20.max_persistence() > w10.max_persistence();
    return {ok, "raw " + std::to_string(raw.significant_count()) + ", w=10 " + std::to_string(w10.significant_count()) +
                    " (max " + num(w10.max_persistence()) + "), w=20 " + std::to_string(w20.significant_count()) +
                    " (max " + num(w20.max_persistence()) + ")"};
}

PersistenceDiagram random_diagram(CounterRng& rng) {
    PersistenceDiagram d{1, {}};
    const auto n = rng.below(16);
    for (std::uint64_t i = 0; i < n; ++i) {
        if (!d.pairs.empty() && rng.below(6) == 0) {
            d.pairs.push_back(d.pairs.back());
            continue;
        }
        const double b = 10.0 * rng.uniform();
        d.pairs.push_back({b, b + 5.0 * rng.uniform()});
    }
    return d;
}

Outcome landscape_laws() {
    CounterRng rng(6006);
    const Grid g{0, 16, 641};
    const double h = 16.0 / 640.0;
    int bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto d = random_diagram(rng);
        const Landscape l = landscape_from_diagram(d);
        const auto v = discretize(l, g, 16);
        if (v.values.minCoeff() < 0.0) ++bad;
        for (Eigen::Index k = 0; k + 1 < v.depths; ++k) {
            if (((v.row(k) - v.row(k + 1)).array() < 0.0).any()) ++bad;
        }
        for (Eigen::Index k = 0; k < v.depths; ++k) {
            const auto r = v.row(k);
            if ((r.tail(640) - r.head(640)).cwiseAbs().maxCoeff() > h * (1 + 1e-9)) ++bad;
        }
        double half = 0.0;
        for (const auto& p : d.pairs) half = std::max(half, (p.death - p.birth) / 2.0);
        double peak = 0.0;
        if (l.depth_count() > 0) {
            for (const auto& c : l.depth(0)) peak = std::max(peak, c.value);
        }
        if (std::abs(peak - half) > 1e-12) ++bad;
    }
    // Two identical pairs, and the symmetric figure eight's two raw loops.
    const double r2 = std::sqrt(2.0);
    const Landscape twin = landscape_from_diagram(PersistenceDiagram{1, {{1, r2}, {1, r2}}});
    const Landscape eight = landscape_from_diagram(h1(gen_figure_eight(32).frames()));
    double gap = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        const double t = 2.0 * i / 2000.0;
        gap = std::max({gap, std::abs(twin(0, t) - twin(1, t)), std::abs(eight(0, t) - eight(1, t))});
    }
    const bool ok = bad == 0 && gap <= 1e-12 && twin(0, 1.2) > 0.0 && eight.depth_count() == 2;
    return {ok, "1000 diagrams, " + std::to_string(bad) + " violations, multiplicity-2 gap " + num(gap)};
}

Outcome averaging_linearity() {
    CounterRng rng(7007);
    const Grid g{0, 16, 513};
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Landscape a = landscape_from_diagram(random_diagram(rng));
        const Landscape b = landscape_from_diagram(random_diagram(rng));
        const auto lhs = discretize(mean_landscape({a, b}), g, 16);
        const auto rhs = average({discretize(a, g, 16), discretize(b, g, 16)});
        worst = std::max(worst, (lhs.values - rhs.values).cwiseAbs().maxCoeff());
    }
    return {worst < 1e-12, "100 pairs, max abs error " + num(worst)};
}

Eigen::MatrixXd gaussian(CounterRng& rng, Eigen::Index n, Eigen::Index dim, double shift) {
    Eigen::MatrixXd m(n, dim);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() + shift;
    return m;
}

Outcome permutation_calibration() {
    CounterRng rng(8008);
    int rejections = 0;
    for (int trial = 0; trial < 200; ++trial) {
        // One pooled sample split at random into two groups of ten.
        const Eigen::MatrixXd pooled = gaussian(rng, 20, 5, 0.0);
        std::vector<Eigen::Index> order(20);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(std::span<Eigen::Index>(order));
        Eigen::MatrixXd a(10, 5);
        Eigen::MatrixXd b(10, 5);
        for (Eigen::Index i = 0; i < 10; ++i) {
            a.row(i) = pooled.row(order[static_cast<std::size_t>(i)]);
            b.row(i) = pooled.row(order[static_cast<std::size_t>(i + 10)]);
        }
        if (permutation_test(a, b, 2000, 100 + static_cast<std::uint64_t>(trial)).p_value < 0.05) ++rejections;
    }
    const double rate = rejections / 200.0;
    const auto separated = permutation_test(gaussian(rng, 10, 5, 0.0), gaussian(rng, 10, 5, 4.0), 2000, 99);
    const bool ok = rate >= 0.01 && rate <= 0.12 && separated.p_value < 0.01;
    return {ok, "null rejection rate " + num(rate) + ", separated p " + num(separated.p_value)};
}

std::vector<Sample> posture_corpus() {
    std::vector<Sample> out;
    for (int k = 1; k <= 4; ++k) {
        const auto series = gen_posture_class(k, 10, 450, 100, 11);
        for (std::size_t j = 0; j < series.size(); ++j) {
            char id[32];
            std::snprintf(id, sizeof id, "c%d_s%02zu", k, j);
            out.push_back({id, std::to_string(k), series[j]});
        }
    }
    return out;
}

PipelineConfig corpus_config() {
    PipelineConfig c;
    c.seed = 5;
    return c;
}

const fs::path kRunA = fs::path(WORMTOPO_SCRATCH) / "acceptance" / "run_a";
const fs::path kRunB = fs::path(WORMTOPO_SCRATCH) / "acceptance" / "run_b";

Outcome synthetic_corpus() {
    fs::remove_all(kRunA);
    const PipelineResult r = run_pipeline(corpus_config(), posture_corpus(), kRunA);
    const ClassSummary* c1 = nullptr;
    const ClassSummary* c4 = nullptr;
    for (const auto& c : r.classes) {
        if (c.label == "1") c1 = &c;
        if (c.label == "4") c4 = &c;
    }
    if (!c1 || !c4 || !r.svm) return {false, "missing classes or svm report"};
    const double l1 = c1->mean.row(0).maxCoeff();
    const double l4 = c4->mean.row(0).maxCoeff();
    const auto d1 = c1->mean.nonzero_depths();
    const auto d4 = c4->mean.nonzero_depths();
    double worst_p = 0.0;
    for (const auto& p : r.permutations) worst_p = std::max(worst_p, p.result.p_value);
    const bool ok = r.svm->accuracy_mean >= 0.90 && l1 > l4 && d4 > d1 && r.permutations.size() == 6 && worst_p < 0.05;
    return {ok, "svm accuracy " + num(r.svm->accuracy_mean) + ", max lambda_1 class 1 " + num(l1) + " vs class 4 " +
                    num(l4) + ", nonzero depths " + std::to_string(d1) + " vs " + std::to_string(d4) +
                    ", largest of 6 p-values " + num(worst_p)};
}

Outcome determinism() {
    if (!fs::exists(kRunA)) return {false, "first run missing"};
    fs::remove_all(kRunB);
    run_pipeline(corpus_config(), posture_corpus(), kRunB);
    const auto diff = treecmp::differences(kRunA, kRunB);
    const auto files = treecmp::snapshot(kRunA).size();
    return {diff.empty() && files > 0,
            std::to_string(files) + " files compared, " + std::to_string(diff.size()) + " differ" +
                (diff.empty() ? "" : " (first: " + diff.front() + ")")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"sliding window example", sliding_window_example},
        {"oracle equivalence", oracle_equivalence},
        {"square fixture", square_fixture},
        {"sine example", sine_example},
        {"figure eight example", figure_eight_example},
        {"landscape laws", landscape_laws},
        {"averaging linearity", averaging_linearity},
        {"permutation calibration", permutation_calibration},
        {"synthetic four class corpus", synthetic_corpus},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %zu %s: %s (%s; %.2fs)\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
