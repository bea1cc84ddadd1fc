// wormtopo command line: each subcommand reads a key=value config (optional),
// applies --set overrides and dedicated flags, and writes CSV / SVG outputs
// that all carry the hash of the effective configuration.

#include "wormtopo/embed.hpp"
#include "wormtopo/error.hpp"
#include "wormtopo/homology.hpp"
#include "wormtopo/ingest.hpp"
#include "wormtopo/io.hpp"
#include "wormtopo/landscape.hpp"
#include "wormtopo/ml.hpp"
#include "wormtopo/pipeline.hpp"
#include "wormtopo/stats.hpp"
#include "wormtopo/svg.hpp"
#include "wormtopo/synth.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace wormtopo;

namespace {

/// Options shared by every subcommand.
struct Common {
    std::string config_file;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::string out;
    KeyValues flags;  // dedicated flags, applied last
};

void add_common(CLI::App* cmd, Common& c, bool needs_seed) {
    cmd->add_option("--config", c.config_file, "key=value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--set", c.sets, "override a configuration key (key=value), repeatable");
    auto* seed = cmd->add_option("--seed", c.seed, "random seed");
    if (needs_seed) seed->required();
    cmd->add_option("--out,-o", c.out, "output file or directory")->required();
}

/// Adds a flag that writes configuration key `key`.
void add_key(CLI::App* cmd, Common& c, const std::string& flag, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(flag, [&c, key](const std::string& v) { c.flags[key] = v; }, help);
}

KeyValues effective_values(const Common& c) {
    KeyValues kv;
    if (!c.config_file.empty()) kv = load_key_values(c.config_file);
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ParameterError("--set expects key=value, got '" + s + "'");
        kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
    for (const auto& [k, v] : c.flags) kv[k] = v;
    if (c.seed) kv["seed"] = std::to_string(*c.seed);
    return kv;
}

PipelineConfig effective_config(const Common& c) { return PipelineConfig::from_key_values(effective_values(c)); }

TimeSeries read_series(const std::string& path, const PipelineConfig& cfg) {
    return load_postures(path, cfg.dim, cfg.frame_rate_hz);
}

std::string with_hash(const std::string& hash, const std::string& body) { return header_line(hash) + body; }

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
    std::string kind = "posture";
    Eigen::Index n = 200;
    double period = 20.0;
    double amplitude = 1.0;
    double noise = 0.0;
    int periods = 1;
    std::vector<int> classes{1, 2, 3, 4};
    std::size_t samples = 10;
    Eigen::Index frames = 450;
    Eigen::Index dim = 100;
    Eigen::Index segment = 120;
};

int run_synth(const Common& c, const SynthArgs& a) {
    KeyValues kv{{"kind", a.kind},       {"n", std::to_string(a.n)},        {"period", format_double(a.period)},
                 {"amplitude", format_double(a.amplitude)}, {"noise", format_double(a.noise)},
                 {"periods", std::to_string(a.periods)}, {"samples", std::to_string(a.samples)},
                 {"frames", std::to_string(a.frames)}, {"dim", std::to_string(a.dim)},
                 {"segment", std::to_string(a.segment)}, {"seed", std::to_string(*c.seed)}};
    std::string classes;
    for (int k : a.classes) classes += (classes.empty() ? "" : " ") + std::to_string(k);
    kv["classes"] = classes;
    const std::string h = config_hash(kv);
    const fs::path out = c.out;
    std::string manifest = header_line(h) + "id,label,path\n";
    const auto emit = [&](const std::string& id, const std::string& label, const TimeSeries& ts) {
        write_text(out / (id + ".csv"), with_hash(h, format_postures(ts)));
        manifest += id + "," + label + "," + id + ".csv\n";
    };
    if (a.kind == "sine") {
        emit("sine", "sine", gen_sine(a.n, a.period, a.amplitude, a.noise, *c.seed));
    } else if (a.kind == "figure-eight") {
        emit("figure_eight", "figure-eight", gen_figure_eight(a.n, a.noise, *c.seed, a.periods));
    } else if (a.kind == "composite") {
        PostureParams p;
        p.noise = a.noise;
        emit("composite", "composite",
             gen_behavior_sequence({Behavior::Forward, Behavior::Backward, Behavior::Pause}, a.segment, p, a.dim, 30.0,
                                   *c.seed));
    } else if (a.kind == "posture") {
        for (int k : a.classes) {
            const auto series = gen_posture_class(k, a.samples, a.frames, a.dim, *c.seed);
            for (std::size_t j = 0; j < series.size(); ++j) {
                char id[32];
                std::snprintf(id, sizeof id, "c%d_s%02zu", k, j);
                emit(id, std::to_string(k), series[j]);
            }
        }
    } else {
        throw ParameterError("synth --kind must be sine, figure-eight, composite or posture");
    }
    write_text(out / "manifest.csv", manifest);
    write_text(out / "config.txt", header_line(h) + format_key_values(kv));
    return 0;
}

// ---- single-stage commands ------------------------------------------------

int run_embed(const Common& c, const std::string& input) {
    const PipelineConfig cfg = effective_config(c);
    const TimeSeries ts = read_series(input, cfg);
    PointCloud pc{sliding_window(ts.frames(), cfg.window_length), Provenance{fs::path(input).stem().string(), cfg.window_length}};
    write_text(c.out, format_point_cloud(pc, cfg.hash()));
    return 0;
}

int run_ph(const Common& c, const std::string& input, bool cloud, bool patches) {
    const PipelineConfig cfg = effective_config(c);
    const std::string h = cfg.hash();
    std::vector<std::vector<PersistenceDiagram>> diagrams;
    if (cloud) {
        diagrams.push_back(cloud_topology(PointCloud{read_matrix(input), std::nullopt}, cfg).diagrams);
    } else {
        const TimeSeries ts = read_series(input, cfg);
        const std::string id = fs::path(input).stem().string();
        const auto ps = patches ? make_patches(ts, cfg.patch_length, cfg.overlap, id)
                                : std::vector<Patch>{Patch{id, 0, ts.frames()}};
        for (const auto& p : ps) diagrams.push_back(cloud_topology(sliding_window(p, cfg.window_length), cfg).diagrams);
    }
    write_text(c.out, format_diagrams(diagrams, h));
    return 0;
}

int run_landscape(const Common& c, const std::string& input) {
    const PipelineConfig cfg = effective_config(c);
    const auto diagrams = parse_diagrams(read_text(input));
    if (diagrams.empty()) throw InsufficientDataError(input + ": no diagrams");
    double max_death = -std::numeric_limits<double>::infinity();
    for (const auto& ds : diagrams) {
        for (const auto& d : ds) {
            if (d.degree != cfg.degree) continue;
            for (const auto& p : d.pairs) {
                if (!p.essential()) max_death = std::max(max_death, p.death);
            }
        }
    }
    double t_max = cfg.t_max.value_or(max_death);
    if (!(t_max > cfg.t_min)) t_max = cfg.t_min + 1.0;
    const DiscretizedLandscape l = sample_landscape(diagrams, cfg.degree, cfg.grid(t_max), cfg.depths);
    write_text(c.out, format_landscape(l, cfg.hash()));
    return 0;
}

std::vector<Sample> read_manifest(const std::string& manifest, const PipelineConfig& cfg) {
    const fs::path base = fs::path(manifest).parent_path();
    std::vector<Sample> samples;
    for (const auto& row : parse_labels(read_text(manifest))) {
        if (row.path.empty()) throw DataError(manifest + ": sample " + row.id + " has no path");
        const fs::path p = fs::path(row.path).is_absolute() ? fs::path(row.path) : base / row.path;
        samples.push_back(Sample{row.id, row.label, load_postures(p, cfg.dim, cfg.frame_rate_hz).with_label(row.label)});
    }
    return samples;
}

int run_pipeline_cmd(const Common& c, const std::string& manifest) {
    const PipelineConfig cfg = effective_config(c);
    const PipelineResult r = run_pipeline(cfg, read_manifest(manifest, cfg), c.out);
    std::cout << "config_hash=" << r.hash << " samples=" << r.samples.size() << " classes=" << r.classes.size();
    if (r.svm) std::cout << " svm_accuracy=" << r.svm->accuracy_mean;
    std::cout << "\n";
    for (const auto& n : r.notices) std::cout << "notice: " << n << "\n";
    return 0;
}

int run_case_study(const Common& c, const std::string& input) {
    const PipelineConfig cfg = effective_config(c);
    const auto r = case_study(cfg, read_series(input, cfg), fs::path(input).stem().string(), c.out);
    std::cout << "config_hash=" << r.hash << " raw_significant=" << r.raw.significant
              << " embedded_significant=" << r.embedded.significant << "\n";
    return 0;
}

/// Landscape files contribute one row each; other files are matrices of rows.
Eigen::MatrixXd read_group(const std::vector<std::string>& files) {
    std::vector<Eigen::MatrixXd> parts;
    Eigen::Index rows = 0;
    for (const auto& f : files) {
        const std::string text = read_text(f);
        parts.push_back(text.find("# grid ") != std::string::npos ? Eigen::MatrixXd(parse_landscape(text).values.transpose())
                                                                 : parse_matrix(text, f));
        if (parts.back().cols() != parts.front().cols()) throw IncompatibleError(f + ": vector length differs");
        rows += parts.back().rows();
    }
    Eigen::MatrixXd m(rows, parts.front().cols());
    Eigen::Index r = 0;
    for (const auto& p : parts) {
        m.middleRows(r, p.rows()) = p;
        r += p.rows();
    }
    return m;
}

int run_permtest(const Common& c, const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const PipelineConfig cfg = effective_config(c);
    const auto res = permutation_test(read_group(a), read_group(b), cfg.n_perms, cfg.require_seed("permtest"));
    write_text(c.out, header_line(cfg.hash()) + "observed,p_value,exceed,n_perms\n" + format_double(res.observed) + "," +
                          format_double(res.p_value) + "," + std::to_string(res.exceed) + "," +
                          std::to_string(res.n_perms) + "\n");
    return 0;
}

/// One label per line, or "id,label" rows.
std::vector<std::string> read_label_column(const std::string& path) {
    std::vector<std::string> out;
    std::istringstream in(read_text(path));
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto comma = line.rfind(',');
        out.push_back(comma == std::string::npos ? line : line.substr(comma + 1));
    }
    if (!out.empty() && (out.front() == "label" || out.front() == "target")) out.erase(out.begin());
    return out;
}

int run_classify(const Common& c, const std::string& features, const std::string& labels) {
    const PipelineConfig cfg = effective_config(c);
    const std::string h = cfg.hash();
    const Eigen::MatrixXd x = read_matrix(features);
    const auto names = read_label_column(labels);
    if (static_cast<Eigen::Index>(names.size()) != x.rows()) throw DataError("label count differs from feature rows");
    std::vector<std::string> classes;
    std::vector<int> y;
    for (const auto& n : names) {
        auto it = std::find(classes.begin(), classes.end(), n);
        if (it == classes.end()) it = classes.insert(classes.end(), n);
        y.push_back(static_cast<int>(it - classes.begin()));
    }
    SVMOptions opts;
    opts.kernel = KernelSpec{cfg.kernel, cfg.gamma};
    opts.cost = cfg.cost;
    opts.standardize = cfg.standardize;
    const auto cv = svm_cross_validate(x, y, cfg.cv_folds, cfg.cv_repeats, cfg.require_seed("classify"), opts);
    const fs::path out = c.out;
    std::string acc = header_line(h) + "# gamma=" + format_double(cv.gamma) + "\nrepeat,accuracy\n";
    for (std::size_t i = 0; i < cv.per_repeat.size(); ++i) acc += std::to_string(i) + "," + format_double(cv.per_repeat[i]) + "\n";
    acc += "mean," + format_double(cv.accuracy_mean) + "\n";
    write_text(out / "svm_accuracy.csv", acc);
    std::string conf = header_line(h) + "truth\\predicted";
    for (int k : cv.classes) conf += "," + classes[static_cast<std::size_t>(k)];
    conf += "\n";
    for (Eigen::Index i = 0; i < cv.confusion.rows(); ++i) {
        conf += classes[static_cast<std::size_t>(cv.classes[static_cast<std::size_t>(i)])];
        for (Eigen::Index j = 0; j < cv.confusion.cols(); ++j) conf += "," + std::to_string(cv.confusion(i, j));
        conf += "\n";
    }
    write_text(out / "svm_confusion.csv", conf);
    std::cout << "accuracy=" << cv.accuracy_mean << "\n";
    return 0;
}

int run_regress(const Common& c, const std::string& features, const std::string& targets_file) {
    const PipelineConfig cfg = effective_config(c);
    const Eigen::MatrixXd x = read_matrix(features);
    const auto rows = read_label_column(targets_file);
    if (static_cast<Eigen::Index>(rows.size()) != x.rows()) throw DataError("target count differs from feature rows");
    Eigen::VectorXd t(x.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) t(static_cast<Eigen::Index>(i)) = parse_double(rows[i], "target");
    SVROptions opts;
    opts.kernel = KernelSpec{cfg.kernel, cfg.gamma};
    opts.cost = cfg.cost;
    opts.epsilon = cfg.svr_epsilon;
    opts.standardize = cfg.standardize;
    const Eigen::VectorXd est = svr_fit_predict(x, t, cfg.svr_folds, cfg.svr_repeats, cfg.require_seed("regress"), opts);
    std::string body = "row,target,estimate\n";
    for (Eigen::Index i = 0; i < est.size(); ++i) {
        body += std::to_string(i) + "," + format_double(t(i)) + "," + format_double(est(i)) + "\n";
    }
    write_text(c.out, header_line(cfg.hash()) + body);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Topological summaries of posture time series"};
    app.require_subcommand(1);

    Common c;
    SynthArgs sa;
    std::string input;
    std::string manifest;
    std::string features;
    std::string labels;
    std::vector<std::string> group_a;
    std::vector<std::string> group_b;
    bool cloud = false;
    bool patches = false;

    auto* synth = app.add_subcommand("synth", "generate synthetic series");
    add_common(synth, c, true);
    synth->add_option("--kind", sa.kind, "sine, figure-eight, composite or posture");
    synth->add_option("--n", sa.n, "samples per sine series or per figure-eight period");
    synth->add_option("--period", sa.period, "sine period in samples");
    synth->add_option("--amplitude", sa.amplitude);
    synth->add_option("--noise", sa.noise, "Gaussian noise standard deviation");
    synth->add_option("--periods", sa.periods, "figure-eight periods");
    synth->add_option("--classes", sa.classes, "posture classes (1..4)")->delimiter(',');
    synth->add_option("--samples", sa.samples, "posture samples per class");
    synth->add_option("--frames", sa.frames, "frames per posture sample");
    synth->add_option("--dim", sa.dim, "posture dimension");
    synth->add_option("--segment", sa.segment, "frames per behaviour in the composite");

    auto* embed = app.add_subcommand("embed", "sliding window embedding of a posture CSV");
    add_common(embed, c, false);
    embed->add_option("--input,-i", input)->required()->check(CLI::ExistingFile);

    auto* ph = app.add_subcommand("ph", "persistence diagrams");
    add_common(ph, c, false);
    ph->add_option("--input,-i", input)->required()->check(CLI::ExistingFile);
    ph->add_flag("--cloud", cloud, "input is a point cloud rather than a posture series");
    ph->add_flag("--patches", patches, "cut the series into patches first");

    auto* land = app.add_subcommand("landscape", "discretized mean landscape of a diagram file");
    add_common(land, c, false);
    land->add_option("--input,-i", input)->required()->check(CLI::ExistingFile);

    auto* pipe = app.add_subcommand("pipeline", "full corpus analysis from a manifest of id,label,path rows");
    add_common(pipe, c, true);
    pipe->add_option("--manifest,-m", manifest)->required()->check(CLI::ExistingFile);

    auto* cs = app.add_subcommand("case-study", "raw versus embedded analysis of one series");
    add_common(cs, c, false);
    cs->add_option("--input,-i", input)->required()->check(CLI::ExistingFile);

    auto* perm = app.add_subcommand("permtest", "two-sample permutation test");
    add_common(perm, c, true);
    perm->add_option("--a", group_a, "landscape or matrix files of group a")->required()->check(CLI::ExistingFile);
    perm->add_option("--b", group_b, "landscape or matrix files of group b")->required()->check(CLI::ExistingFile);

    auto* cls = app.add_subcommand("classify", "repeated cross-validated SVM");
    add_common(cls, c, true);
    cls->add_option("--features,-x", features)->required()->check(CLI::ExistingFile);
    cls->add_option("--labels,-y", labels)->required()->check(CLI::ExistingFile);

    auto* reg = app.add_subcommand("regress", "cross-validated SVR estimates");
    add_common(reg, c, true);
    reg->add_option("--features,-x", features)->required()->check(CLI::ExistingFile);
    reg->add_option("--targets,-y", labels)->required()->check(CLI::ExistingFile);

    for (auto* cmd : {embed, ph, land, pipe, cs, perm, cls, reg}) {
        add_key(cmd, c, "--dim", "dim", "posture dimension");
        add_key(cmd, c, "--window", "window_length", "sliding window length");
        add_key(cmd, c, "--patch-length", "patch_length", "frames per patch");
        add_key(cmd, c, "--overlap", "overlap", "frames shared by adjacent patches");
        add_key(cmd, c, "--max-dim", "max_dim", "largest simplex dimension");
        add_key(cmd, c, "--max-radius", "max_radius", "filtration scale cap or 'enclosing'");
        add_key(cmd, c, "--t-max", "t_max", "landscape grid end or 'auto'");
        add_key(cmd, c, "--grid-samples", "grid_samples", "landscape grid size");
        add_key(cmd, c, "--depths", "depths", "landscape depths kept");
        add_key(cmd, c, "--perms", "n_perms", "permutations per test");
        add_key(cmd, c, "--kernel", "kernel", "rbf or linear");
        add_key(cmd, c, "--cost", "cost", "SVM / SVR cost");
        add_key(cmd, c, "--workers", "workers", "worker threads, 0 for all cores");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) return run_synth(c, sa);
        if (embed->parsed()) return run_embed(c, input);
        if (ph->parsed()) return run_ph(c, input, cloud, patches);
        if (land->parsed()) return run_landscape(c, input);
        if (pipe->parsed()) return run_pipeline_cmd(c, manifest);
        if (cs->parsed()) return run_case_study(c, input);
        if (perm->parsed()) return run_permtest(c, group_a, group_b);
        if (cls->parsed()) return run_classify(c, features, labels);
        if (reg->parsed()) return run_regress(c, features, labels);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(ErrorKind::Data);
    } catch (const std::bad_alloc&) {
        std::cerr << "error: out of memory\n";
        return exit_code(ErrorKind::Numerical);
    }
    return 0;
}
