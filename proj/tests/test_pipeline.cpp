#include "doctest.h"

#include "tree.hpp"
#include "wormtopo/error.hpp"
#include "wormtopo/io.hpp"
#include "wormtopo/pipeline.hpp"
#include "wormtopo/synth.hpp"

#include <filesystem>

using namespace wormtopo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::path(WORMTOPO_SCRATCH) / "pipeline" / name;
    fs::remove_all(p);
    return p;
}

// Small but complete: 2 classes x 4 samples, two patches each.
PipelineConfig small_config() {
    PipelineConfig c;
    c.dim = 12;
    c.patch_length = 80;
    c.overlap = 40;
    c.window_length = 8;
    c.grid_samples = 101;
    c.depths = 8;
    c.seed = 3;
    c.n_perms = 200;
    c.pca_components = 3;
    c.cv_folds = 4;
    c.cv_repeats = 2;
    c.svr_folds = 4;
    c.svr_repeats = 2;
    return c;
}

std::vector<Sample> small_corpus() {
    std::vector<Sample> out;
    for (int k : {1, 4}) {
        const auto series = gen_posture_class(k, 4, 120, 12, 21);
        for (std::size_t j = 0; j < series.size(); ++j) {
            out.push_back({"c" + std::to_string(k) + "_" + std::to_string(j), std::to_string(k), series[j]});
        }
    }
    return out;
}

// The hash line comes first in CSVs and right after the root element in SVGs.
bool starts_with_hash(const std::string& text, const std::string& hash) {
    std::size_t end = 0;
    for (int line = 0; line < 3 && end != std::string::npos; ++line) end = text.find('\n', end + 1);
    return text.substr(0, end).find("config_hash=" + hash) != std::string::npos;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config defaults and key values") {
    const PipelineConfig d;
    CHECK(d.patch_length == 300);
    CHECK(d.overlap == 150);
    CHECK(d.window_length == 20);
    CHECK(d.max_dim == 2);
    CHECK(!d.max_radius);
    CHECK(d.cost == 10.0);
    CHECK(d.n_perms == 10000);
    CHECK(d.cv_folds == 10);
    CHECK(d.cv_repeats == 20);

    const PipelineConfig c = small_config();
    const PipelineConfig back = PipelineConfig::from_key_values(c.to_key_values());
    CHECK(back.to_key_values() == c.to_key_values());
    CHECK(back.hash() == c.hash());

    const PipelineConfig t = c.with({{"target.1", "0.5"}, {"max_radius", "2.5"}, {"gamma", "0.1"}});
    CHECK(t.targets.at("1") == 0.5);
    CHECK(*t.max_radius == 2.5);
    CHECK(t.hash() != c.hash());
    CHECK_THROWS_AS(c.with({{"windw_length", "3"}}), ParameterError);
    CHECK_THROWS_AS(c.with({{"window_length", "x"}}), ParameterError);

    PipelineConfig w = c;
    w.workers = 7;
    CHECK(w.hash() == c.hash());
}

TEST_CASE("config validation") {
    CHECK_NOTHROW(small_config().validate());
    CHECK_THROWS_AS(small_config().with({{"overlap", "80"}}).validate(), ParameterError);
    CHECK_THROWS_AS(small_config().with({{"degree", "2"}}).validate(), ParameterError);
    CHECK_THROWS_AS(small_config().with({{"window_length", "0"}}).validate(), ParameterError);
    CHECK_THROWS_AS(small_config().with({{"grid_samples", "1"}}).validate(), ParameterError);
    PipelineConfig unseeded = small_config();
    unseeded.seed.reset();
    CHECK_THROWS_AS(unseeded.require_seed("svm"), ParameterError);
}

TEST_CASE("numeric labels") {
    CHECK(numeric_label("1%") == 1.0);
    CHECK(numeric_label("0.5") == 0.5);
    CHECK(numeric_label("2.5cP") == 2.5);
    CHECK(!numeric_label("water"));
}

TEST_CASE("a small corpus produces every artifact") {
    const fs::path out = scratch("small");
    const auto samples = small_corpus();
    const PipelineResult r = run_pipeline(small_config(), samples, out);

    CHECK(r.samples.size() == 8);
    for (const auto& s : r.samples) {
        CHECK(s.patch_starts == std::vector<Eigen::Index>{0, 40});
        CHECK(s.diagrams.size() == 2);
    }
    REQUIRE(r.classes.size() == 2);
    CHECK(r.classes[0].label == "1");
    CHECK(r.distances.distances.rows() == 3);
    CHECK(r.distances.distances.row(0).tail(2).mean() == doctest::Approx(1.0));
    REQUIRE(r.mds);
    CHECK(r.mds->coordinates.rows() == 3);
    REQUIRE(r.pca);
    CHECK(r.pca->components.cols() == 3);
    CHECK(r.class_std.size() == 2);
    CHECK(r.class_pca.size() == 2);
    REQUIRE(r.permutations.size() == 1);
    CHECK(r.permutations[0].result.n_perms == 200);
    REQUIRE(r.svm);
    CHECK(r.svm->confusion.rows() == 2);
    CHECK(r.svm->confusion.row(0).sum() == 4);
    CHECK(r.svm->confusion.row(1).sum() == 4);
    REQUIRE(r.svr);
    CHECK(r.svr->size() == 8);

    for (const char* f : {"config.txt", "notices.txt", "samples.csv", "classes.csv", "distances.csv", "mds.csv",
                          "mds.svg", "pca_variance.csv", "pca_coordinates.csv", "pca.svg", "permutation.csv",
                          "svm_accuracy.csv", "svm_confusion.csv", "svr_estimates.csv", "svr.svg", "std.svg",
                          "class_landscapes.svg", "class_pca.svg", "classes/1_landscape.csv", "classes/4_std.csv",
                          "samples/c1_0/diagrams.csv", "samples/c4_3/landscape.csv", "samples/c4_3/diagram.svg"}) {
        CAPTURE(f);
        REQUIRE(fs::exists(out / f));
    }
    for (const auto& e : fs::recursive_directory_iterator(out)) {
        if (!e.is_regular_file()) continue;
        CAPTURE(e.path());
        CHECK(starts_with_hash(read_text(e.path()), r.hash));
    }
}

TEST_CASE("reruns are byte identical regardless of worker count") {
    const auto samples = small_corpus();
    PipelineConfig a = small_config();
    a.workers = 1;
    PipelineConfig b = small_config();
    b.workers = 4;
    const fs::path x = scratch("det_a");
    const fs::path y = scratch("det_b");
    run_pipeline(a, samples, x);
    run_pipeline(b, samples, y);
    CHECK(treecmp::differences(x, y).empty());
}

TEST_CASE("stages re-enter from intermediate files bit exactly") {
    const fs::path out = scratch("reenter");
    const auto samples = small_corpus();
    const PipelineConfig cfg = small_config();
    const PipelineResult r = run_pipeline(cfg, samples, out);
    for (const auto& s : r.samples) {
        const fs::path dir = out / "samples" / s.id;
        const auto diagrams = parse_diagrams(read_text(dir / "diagrams.csv"));
        const DiscretizedLandscape from_file = parse_landscape(read_text(dir / "landscape.csv"));
        const DiscretizedLandscape recomputed = sample_landscape(diagrams, cfg.degree, from_file.grid, cfg.depths);
        CHECK(recomputed.values == s.landscape.values);
        CHECK(from_file.values == s.landscape.values);
        CHECK(from_file.grid == r.grid);
    }
    // Class means from the per-sample files reproduce the class file.
    std::vector<DiscretizedLandscape> members;
    for (const auto& id : r.classes[0].member_ids) {
        members.push_back(parse_landscape(read_text(out / "samples" / id / "landscape.csv")));
    }
    CHECK(average(members).values == parse_landscape(read_text(out / "classes/1_landscape.csv")).values);
}

TEST_CASE("a single sample degrades with notices") {
    const fs::path out = scratch("single");
    std::vector<Sample> one{small_corpus().front()};
    const PipelineResult r = run_pipeline(small_config(), one, out);
    CHECK(r.distances.distances.rows() == 2);
    CHECK(r.permutations.empty());
    CHECK(!r.svm);
    CHECK(!r.svr);
    CHECK(!r.notices.empty());
    CHECK(read_text(out / "notices.txt").find("skipped") != std::string::npos);
}

TEST_CASE("stage errors name the stage and the sample") {
    auto samples = small_corpus();
    samples[2].series = TimeSeries(Eigen::MatrixXd::Zero(5, 12));
    samples[2].id = "short_one";
    try {
        run_pipeline(small_config(), samples, {});
        FAIL("expected a stage error");
    } catch (const Error& e) {
        const std::string what = e.what();
        CHECK(what.find("stage") != std::string::npos);
        CHECK(what.find("short_one") != std::string::npos);
        CHECK(e.kind() == ErrorKind::Data);
    }
    auto dup = small_corpus();
    dup[1].id = dup[0].id;
    CHECK_THROWS_AS(run_pipeline(small_config(), dup, {}), Error);
    auto wrong_dim = small_corpus();
    wrong_dim[3].series = TimeSeries(Eigen::MatrixXd::Zero(120, 5));
    CHECK_THROWS_AS(run_pipeline(small_config(), wrong_dim, {}), DataError);
    PipelineConfig unseeded = small_config();
    unseeded.seed.reset();
    CHECK_THROWS_AS(run_pipeline(unseeded, small_corpus(), {}), ParameterError);
}

TEST_CASE("case study of a sine") {
    PipelineConfig c;
    c.dim = 1;
    c.window_length = 4;
    const fs::path out = scratch("case_sine");
    const CaseStudyResult r = case_study(c, gen_sine(60, 12.0), "sine", out);
    CHECK(r.length == 60);
    REQUIRE(r.raw.topology.diagrams.size() == 2);
    CHECK(r.raw.topology.diagrams[1].empty());
    CHECK(r.embedded.significant == 1);
    CHECK(r.raw.significant == 0);
    for (const char* f : {"summary.csv", "cycles.csv", "cycle_support.csv", "raw_diagrams.csv", "embedded_landscape.csv",
                          "embedded_pca.csv", "raw_pca.svg", "diagrams.svg", "landscapes.svg", "config.txt"}) {
        CAPTURE(f);
        CHECK(fs::exists(out / f));
    }
}

TEST_CASE("case study of a figure eight") {
    PipelineConfig c;
    c.dim = 2;
    c.window_length = 20;
    const CaseStudyResult r = case_study(c, gen_figure_eight(32, 0.0, 0, 3), "eight", scratch("case_eight"));
    CHECK(r.raw.significant == 2);
    CHECK(r.embedded.significant == 1);
    REQUIRE(!r.embedded.cycles.empty());
    CHECK(r.embedded.cycles[0].edges.size() >= 3);
    CHECK(r.embedded.landscape.grid == r.raw.landscape.grid);
}

TEST_CASE("case study of a forward, backward and pause composite") {
    PipelineConfig c;
    c.dim = 20;
    PostureParams p;
    p.noise = 0.0;
    const TimeSeries s =
        gen_behavior_sequence({Behavior::Forward, Behavior::Backward, Behavior::Pause}, 120, p, 20, 30.0, 1);
    const CaseStudyResult r = case_study(c, s, "composite", scratch("case_composite"));
    CHECK(r.length == 300);
    CHECK(r.embedded.significant == r.raw.significant + 1);
    // Every cycle edge joins frames of the analysed segment.
    for (const auto& cyc : r.embedded.cycles) {
        for (auto [u, v] : cyc.edges) {
            CHECK(u >= 0);
            CHECK(v < 281);
        }
    }
}

}
