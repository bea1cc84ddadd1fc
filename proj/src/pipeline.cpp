#include "wormtopo/pipeline.hpp"

#include "wormtopo/embed.hpp"
#include "wormtopo/error.hpp"
#include "wormtopo/random.hpp"
#include "wormtopo/svg.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <functional>
#include <set>
#include <thread>

namespace wormtopo {

namespace {

// ---- configuration values -------------------------------------------------

long long to_integer(const std::string& key, const std::string& v, long long lo) {
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ParameterError("config " + key + ": expected an integer, got '" + v + "'");
    }
    if (out < lo) throw ParameterError("config " + key + ": must be at least " + std::to_string(lo));
    return out;
}

double to_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw ParameterError("config " + key + ": expected a finite number, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParameterError("config " + key + ": expected true or false, got '" + v + "'");
}

std::optional<double> to_optional_real(const std::string& key, const std::string& v, const std::string& sentinel) {
    if (v == sentinel) return std::nullopt;
    return to_real(key, v);
}

std::string show(std::optional<double> v, const std::string& sentinel) {
    return v ? format_double(*v) : sentinel;
}

// ---- execution helpers ----------------------------------------------------

template <typename F>
auto in_stage(const std::string& stage, const std::string& sample, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.kind(), "stage " + stage + (sample.empty() ? "" : ", sample " + sample) + ": " + e.what());
    }
}

/// Runs fn(0..n-1) on up to `workers` threads; the exception of the lowest
/// failing index is rethrown after all tasks finish.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try { fn(i); } catch (...) { errors[i] = std::current_exception(); }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try { fn(i); } catch (...) { errors[i] = std::current_exception(); }
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::uint64_t stage_seed(std::uint64_t seed, std::uint64_t stage, std::uint64_t index) {
    return CounterRng(seed, stage).split(index)();
}

Eigen::MatrixXd stack(const std::vector<const DiscretizedLandscape*>& ls) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(ls.size()), ls.empty() ? 0 : ls.front()->values.size());
    for (std::size_t i = 0; i < ls.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = ls[i]->values.transpose();
    return m;
}

Eigen::VectorXd iota_vector(Eigen::Index n, double start = 0.0) {
    return Eigen::VectorXd::LinSpaced(n, start, start + static_cast<double>(n - 1));
}

struct Topology {
    Filtration filtration;
    CloudTopology result;
};

Topology compute_topology(const PointCloud& pc, const PipelineConfig& config) {
    const DistanceMatrix dm = pairwise_distances(pc);
    Filtration f = vietoris_rips(dm, config.max_dim, config.max_radius);
    std::set<int> degrees;
    for (int d = 0; d <= config.degree; ++d) degrees.insert(d);
    CloudTopology t{persistent_homology(f, degrees), f.max_radius()};
    if (config.cap_essential) {
        for (auto& d : t.diagrams) {
            for (auto& p : d.pairs) {
                if (p.essential()) p.death = t.radius;
            }
            std::erase_if(d.pairs, [](const PersistencePair& p) { return !(p.death > p.birth); });
        }
    }
    return Topology{std::move(f), std::move(t)};
}

const PersistenceDiagram& of_degree(const std::vector<PersistenceDiagram>& ds, int degree) {
    for (const auto& d : ds) {
        if (d.degree == degree) return d;
    }
    static const PersistenceDiagram empty;
    return empty;
}

double max_finite_death(const std::vector<PersistenceDiagram>& ds, int degree, double acc) {
    for (const auto& p : of_degree(ds, degree).pairs) {
        if (!p.essential()) acc = std::max(acc, p.death);
    }
    return acc;
}

Grid resolve_grid(const PipelineConfig& config, double max_death, std::vector<std::string>& notices) {
    double t_max = config.t_max.value_or(max_death);
    if (!config.t_max && !(t_max > config.t_min)) {
        t_max = config.t_min + 1.0;
        notices.push_back("no finite degree-" + std::to_string(config.degree) +
                          " pairs beyond t_min; landscape grid set to [t_min, t_min + 1]");
    }
    Grid g = config.grid(t_max);
    g.validate();
    return g;
}

// ---- plots ----------------------------------------------------------------

Plot diagram_plot(const std::string& title, const std::vector<std::pair<std::string, const PersistenceDiagram*>>& ds) {
    Plot plot{title, "birth", "death", {}, true};
    for (const auto& [name, d] : ds) {
        PlotSeries s{name, Eigen::VectorXd(static_cast<Eigen::Index>(d->size())),
                     Eigen::VectorXd(static_cast<Eigen::Index>(d->size())), false, {}};
        for (std::size_t i = 0; i < d->size(); ++i) {
            s.x(static_cast<Eigen::Index>(i)) = d->pairs[i].birth;
            s.y(static_cast<Eigen::Index>(i)) = d->pairs[i].death;
        }
        plot.series.push_back(std::move(s));
    }
    return plot;
}

Plot landscape_plot(const std::string& title, const std::vector<std::pair<std::string, const DiscretizedLandscape*>>& ls,
                    Eigen::Index max_depths = 3) {
    Plot plot{title, "t", "lambda_k(t)", {}, false};
    for (const auto& [name, l] : ls) {
        Eigen::VectorXd t(l->grid.samples);
        for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = l->grid.at(i);
        for (Eigen::Index k = 0; k < std::min(max_depths, l->depths); ++k) {
            plot.series.push_back({name + " k=" + std::to_string(k + 1), t, l->row(k), true, {}});
        }
    }
    return plot;
}

std::string safe_name(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
    return out.empty() ? "_" : out;
}

std::string quote_free(const std::string& s) {
    std::string out = s;
    std::replace(out.begin(), out.end(), ',', ';');
    return out;
}

// ---- pipeline outputs -----------------------------------------------------

void write_pipeline(const PipelineResult& r, const PipelineConfig& config, const std::vector<Sample>& samples,
                    const std::filesystem::path& out) {
    const std::string& h = r.hash;
    namespace fs = std::filesystem;
    write_text(out / "config.txt", header_line(h) + format_key_values(config.to_key_values()));

    std::string notices = header_line(h);
    for (const auto& n : r.notices) notices += n + "\n";
    write_text(out / "notices.txt", notices);

    std::string index = header_line(h) + "id,label,patches,patch_starts\n";
    for (std::size_t s = 0; s < r.samples.size(); ++s) {
        const auto& sr = r.samples[s];
        std::string starts;
        for (std::size_t p = 0; p < sr.patch_starts.size(); ++p) starts += (p ? " " : "") + std::to_string(sr.patch_starts[p]);
        index += sr.id + "," + quote_free(sr.label) + "," + std::to_string(sr.patch_starts.size()) + "," + starts + "\n";
        const fs::path dir = out / "samples" / safe_name(sr.id);
        write_text(dir / "diagrams.csv", format_diagrams(sr.diagrams, h));
        write_text(dir / "landscape.csv", format_landscape(sr.landscape, h));
        write_text(dir / "diagram.svg",
                   render_svg(diagram_plot(sr.id + " patch 0, degree " + std::to_string(config.degree),
                                           {{"patch 0", &of_degree(sr.diagrams.front(), config.degree)}}),
                              h));
        write_text(dir / "landscape.svg", render_svg(landscape_plot(sr.id + " average landscape", {{sr.id, &sr.landscape}}), h));
        if (config.write_point_clouds) {
            const auto& series = samples[s].series;
            for (std::size_t p = 0; p < sr.patch_starts.size(); ++p) {
                const Patch patch{sr.id, sr.patch_starts[p],
                                  series.frames().middleRows(sr.patch_starts[p], config.patch_length)};
                PointCloud pc = sliding_window(patch, config.window_length);
                write_text(dir / ("cloud_" + std::to_string(p) + ".csv"), format_point_cloud(pc, h));
            }
        }
    }
    write_text(out / "samples.csv", index);

    std::string classes = header_line(h) + "label,n,nonzero_depths,max_lambda1,members\n";
    std::vector<std::pair<std::string, const DiscretizedLandscape*>> class_plot;
    for (const auto& c : r.classes) {
        std::string members;
        for (std::size_t i = 0; i < c.member_ids.size(); ++i) members += (i ? " " : "") + c.member_ids[i];
        classes += quote_free(c.label) + "," + std::to_string(c.n) + "," + std::to_string(c.mean.nonzero_depths()) + "," +
                   format_double(c.mean.row(0).maxCoeff()) + "," + members + "\n";
        const std::string base = "classes/" + safe_name(c.label);
        write_text(out / (base + "_landscape.csv"), format_landscape(c.mean, h));
        class_plot.emplace_back(c.label, &c.mean);
    }
    write_text(out / "classes.csv", classes);
    write_text(out / "class_landscapes.svg", render_svg(landscape_plot("class average landscapes", class_plot, 1), h));

    // Normalized distance table: origin first, then the classes.
    std::vector<std::string> cols{"from"};
    cols.insert(cols.end(), r.distances.labels.begin(), r.distances.labels.end());
    std::string dist = header_line(h) + "# scale=" + format_double(r.distances.scale) + "\n";
    for (std::size_t j = 0; j < cols.size(); ++j) dist += (j ? "," : "") + quote_free(cols[j]);
    dist += "\n";
    for (Eigen::Index i = 0; i < r.distances.distances.rows(); ++i) {
        dist += quote_free(r.distances.labels[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < r.distances.distances.cols(); ++j) dist += "," + format_double(r.distances.distances(i, j));
        dist += "\n";
    }
    write_text(out / "distances.csv", dist);

    if (r.mds) {
        std::string m = header_line(h) + "# stress=" + format_double(r.mds->stress) + "\nlabel";
        for (Eigen::Index j = 0; j < r.mds->coordinates.cols(); ++j) m += ",mds" + std::to_string(j + 1);
        m += "\n";
        PlotSeries s{"classes", r.mds->coordinates.col(0),
                     r.mds->coordinates.cols() > 1 ? Eigen::VectorXd(r.mds->coordinates.col(1))
                                                   : Eigen::VectorXd::Zero(r.mds->coordinates.rows()),
                     false, r.distances.labels};
        for (Eigen::Index i = 0; i < r.mds->coordinates.rows(); ++i) {
            m += quote_free(r.distances.labels[static_cast<std::size_t>(i)]);
            for (Eigen::Index j = 0; j < r.mds->coordinates.cols(); ++j) m += "," + format_double(r.mds->coordinates(i, j));
            m += "\n";
        }
        write_text(out / "mds.csv", m);
        write_text(out / "mds.svg", render_svg(Plot{"MDS of class and origin distances", "mds1", "mds2", {s}, false}, h));
    }

    const auto variance_table = [&](const PCAResult& p) {
        std::string t = header_line(h) + "component,explained_variance,cumulative\n";
        for (Eigen::Index i = 0; i < p.explained_variance.size(); ++i) {
            t += std::to_string(i + 1) + "," + format_double(p.explained_variance(i)) + "," +
                 format_double(p.cumulative(i)) + "\n";
        }
        return t;
    };
    if (r.pca) {
        const auto& p = *r.pca;
        write_text(out / "pca_variance.csv", variance_table(p));
        const Eigen::Index k = p.components.cols();
        std::string coords = header_line(h) + "kind,id,label";
        for (Eigen::Index j = 0; j < k; ++j) coords += ",pc" + std::to_string(j + 1);
        coords += "\n";
        std::vector<PlotSeries> series;
        std::map<std::string, std::size_t> series_of;
        const auto add_point = [&](const std::string& kind, const std::string& id, const std::string& label,
                                   const Eigen::RowVectorXd& z) {
            coords += kind + "," + id + "," + quote_free(label);
            for (Eigen::Index j = 0; j < k; ++j) coords += "," + format_double(z(j));
            coords += "\n";
            const std::string name = (kind == "class" ? "mean " : "") + label;
            auto [it, fresh] = series_of.try_emplace(name, series.size());
            if (fresh) series.push_back({name, Eigen::VectorXd(0), Eigen::VectorXd(0), false, {}});
            auto& s = series[it->second];
            s.x.conservativeResize(s.x.size() + 1);
            s.y.conservativeResize(s.y.size() + 1);
            s.x(s.x.size() - 1) = k > 0 ? z(0) : 0.0;
            s.y(s.y.size() - 1) = k > 1 ? z(1) : 0.0;
        };
        for (const auto& sr : r.samples) add_point("sample", sr.id, sr.label, p.project(sr.landscape.values.transpose()));
        for (const auto& c : r.classes) add_point("class", c.label, c.label, p.project(c.mean.values.transpose()));
        write_text(out / "pca_coordinates.csv", coords);
        write_text(out / "pca.svg", render_svg(Plot{"PCA of sample landscapes", "pc1", "pc2", series, false}, h));
        for (Eigen::Index j = 0; j < std::min<Eigen::Index>(k, 2); ++j) {
            DiscretizedLandscape comp{r.grid, config.depths, p.components.col(j)};
            write_text(out / ("pca_component_" + std::to_string(j + 1) + ".csv"), format_landscape(comp, h));
        }
    }

    std::vector<PlotSeries> std_series;
    for (const auto& [label, sd] : r.class_std) {
        DiscretizedLandscape as_landscape{r.grid, config.depths, sd};
        write_text(out / ("classes/" + safe_name(label) + "_std.csv"), format_landscape(as_landscape, h));
        std_series.push_back({label, iota_vector(sd.size()), sd, true, {}});
    }
    if (!std_series.empty()) {
        write_text(out / "std.svg", render_svg(Plot{"per-coordinate standard deviation", "coordinate", "std", std_series, false}, h));
    }
    std::vector<PlotSeries> cum_series;
    for (const auto& [label, p] : r.class_pca) {
        write_text(out / ("classes/" + safe_name(label) + "_pca.csv"), variance_table(p));
        for (Eigen::Index j = 0; j < std::min<Eigen::Index>(p.components.cols(), 3); ++j) {
            DiscretizedLandscape comp{r.grid, config.depths, p.components.col(j)};
            write_text(out / ("classes/" + safe_name(label) + "_pc" + std::to_string(j + 1) + ".csv"),
                       format_landscape(comp, h));
        }
        cum_series.push_back({label, iota_vector(p.cumulative.size(), 1.0), p.cumulative, true, {}});
    }
    if (!cum_series.empty()) {
        write_text(out / "class_pca.svg",
                   render_svg(Plot{"cumulative variance by class", "components", "fraction", cum_series, false}, h));
    }

    if (!r.permutations.empty()) {
        std::string t = header_line(h) + "a,b,observed,p_value,exceed,n_perms\n";
        for (const auto& row : r.permutations) {
            t += quote_free(row.a) + "," + quote_free(row.b) + "," + format_double(row.result.observed) + "," +
                 format_double(row.result.p_value) + "," + std::to_string(row.result.exceed) + "," +
                 std::to_string(row.result.n_perms) + "\n";
        }
        write_text(out / "permutation.csv", t);
    }

    if (r.svm) {
        const auto& cv = *r.svm;
        std::string t = header_line(h) + "# gamma=" + format_double(cv.gamma) + "\nrepeat,accuracy\n";
        for (std::size_t i = 0; i < cv.per_repeat.size(); ++i) t += std::to_string(i) + "," + format_double(cv.per_repeat[i]) + "\n";
        t += "mean," + format_double(cv.accuracy_mean) + "\n";
        write_text(out / "svm_accuracy.csv", t);
        std::string c = header_line(h) + "truth\\predicted";
        for (int cls : cv.classes) c += "," + quote_free(r.classes[static_cast<std::size_t>(cls)].label);
        c += "\n";
        for (Eigen::Index i = 0; i < cv.confusion.rows(); ++i) {
            c += quote_free(r.classes[static_cast<std::size_t>(cv.classes[static_cast<std::size_t>(i)])].label);
            for (Eigen::Index j = 0; j < cv.confusion.cols(); ++j) c += "," + std::to_string(cv.confusion(i, j));
            c += "\n";
        }
        write_text(out / "svm_confusion.csv", c);
    }

    if (r.svr) {
        std::string t = header_line(h) + "id,label,target,estimate\n";
        std::map<std::string, std::size_t> class_pos;
        for (std::size_t c = 0; c < r.classes.size(); ++c) class_pos[r.classes[c].label] = c;
        std::vector<PlotSeries> series(r.classes.size());
        for (std::size_t c = 0; c < r.classes.size(); ++c) series[c].name = r.classes[c].label;
        for (std::size_t s = 0; s < r.samples.size(); ++s) {
            const auto& sr = r.samples[s];
            const double target = config.targets.count(sr.label) ? config.targets.at(sr.label) : *numeric_label(sr.label);
            const double est = (*r.svr)(static_cast<Eigen::Index>(s));
            t += sr.id + "," + quote_free(sr.label) + "," + format_double(target) + "," + format_double(est) + "\n";
            auto& ps = series[class_pos[sr.label]];
            ps.x.conservativeResize(ps.x.size() + 1);
            ps.y.conservativeResize(ps.y.size() + 1);
            // Deterministic horizontal offsets spread each class's strip.
            ps.x(ps.x.size() - 1) = target + 0.02 * static_cast<double>((ps.x.size() - 1) % 7 - 3);
            ps.y(ps.y.size() - 1) = est;
        }
        write_text(out / "svr_estimates.csv", t);
        write_text(out / "svr.svg", render_svg(Plot{"SVR estimates", "target", "estimate", series, true}, h));
    }
}

}  // namespace

// ---- configuration --------------------------------------------------------

PipelineConfig PipelineConfig::from_key_values(const KeyValues& kv) { return PipelineConfig{}.with(kv); }

PipelineConfig PipelineConfig::with(const KeyValues& kv) const {
    PipelineConfig c = *this;
    for (const auto& [key, v] : kv) {
        if (key == "dim") c.dim = to_integer(key, v, 1);
        else if (key == "frame_rate_hz") c.frame_rate_hz = to_real(key, v);
        else if (key == "project_k") c.project_k = to_integer(key, v, 0);
        else if (key == "patch_length") c.patch_length = to_integer(key, v, 1);
        else if (key == "overlap") c.overlap = to_integer(key, v, 0);
        else if (key == "window_length") c.window_length = to_integer(key, v, 1);
        else if (key == "max_dim") c.max_dim = static_cast<int>(to_integer(key, v, 1));
        else if (key == "max_radius") c.max_radius = to_optional_real(key, v, "enclosing");
        else if (key == "degree") c.degree = static_cast<int>(to_integer(key, v, 0));
        else if (key == "cap_essential") c.cap_essential = to_bool(key, v);
        else if (key == "t_min") c.t_min = to_real(key, v);
        else if (key == "t_max") c.t_max = to_optional_real(key, v, "auto");
        else if (key == "grid_samples") c.grid_samples = to_integer(key, v, 2);
        else if (key == "depths") c.depths = to_integer(key, v, 1);
        else if (key == "significance") c.significance = to_real(key, v);
        else if (key == "seed") c.seed = v == "none" ? std::nullopt
                                                     : std::optional<std::uint64_t>(static_cast<std::uint64_t>(to_integer(key, v, 0)));
        else if (key == "n_perms") c.n_perms = static_cast<std::size_t>(to_integer(key, v, 1));
        else if (key == "pca_components") c.pca_components = to_integer(key, v, 1);
        else if (key == "cv_folds") c.cv_folds = static_cast<std::size_t>(to_integer(key, v, 2));
        else if (key == "cv_repeats") c.cv_repeats = static_cast<std::size_t>(to_integer(key, v, 1));
        else if (key == "svr_folds") c.svr_folds = static_cast<std::size_t>(to_integer(key, v, 2));
        else if (key == "svr_repeats") c.svr_repeats = static_cast<std::size_t>(to_integer(key, v, 1));
        else if (key == "kernel") {
            if (v == "rbf") c.kernel = KernelType::Rbf;
            else if (v == "linear") c.kernel = KernelType::Linear;
            else throw ParameterError("config kernel: expected rbf or linear, got '" + v + "'");
        }
        else if (key == "gamma") c.gamma = to_optional_real(key, v, "auto");
        else if (key == "cost") c.cost = to_real(key, v);
        else if (key == "svr_epsilon") c.svr_epsilon = to_real(key, v);
        else if (key == "standardize") c.standardize = to_bool(key, v);
        else if (key.rfind("target.", 0) == 0 && key.size() > 7) c.targets[key.substr(7)] = to_real(key, v);
        else if (key == "case_start") c.case_start = to_integer(key, v, 0);
        else if (key == "top_cycles") c.top_cycles = static_cast<std::size_t>(to_integer(key, v, 0));
        else if (key == "write_point_clouds") c.write_point_clouds = to_bool(key, v);
        else if (key == "workers") c.workers = static_cast<unsigned>(to_integer(key, v, 0));
        else throw ParameterError("unknown config key '" + key + "'");
    }
    c.validate();
    return c;
}

KeyValues PipelineConfig::to_key_values() const {
    KeyValues kv{
        {"dim", std::to_string(dim)},
        {"frame_rate_hz", format_double(frame_rate_hz)},
        {"project_k", std::to_string(project_k)},
        {"patch_length", std::to_string(patch_length)},
        {"overlap", std::to_string(overlap)},
        {"window_length", std::to_string(window_length)},
        {"max_dim", std::to_string(max_dim)},
        {"max_radius", show(max_radius, "enclosing")},
        {"degree", std::to_string(degree)},
        {"cap_essential", cap_essential ? "true" : "false"},
        {"t_min", format_double(t_min)},
        {"t_max", show(t_max, "auto")},
        {"grid_samples", std::to_string(grid_samples)},
        {"depths", std::to_string(depths)},
        {"significance", format_double(significance)},
        {"seed", seed ? std::to_string(*seed) : "none"},
        {"n_perms", std::to_string(n_perms)},
        {"pca_components", std::to_string(pca_components)},
        {"cv_folds", std::to_string(cv_folds)},
        {"cv_repeats", std::to_string(cv_repeats)},
        {"svr_folds", std::to_string(svr_folds)},
        {"svr_repeats", std::to_string(svr_repeats)},
        {"kernel", kernel == KernelType::Rbf ? "rbf" : "linear"},
        {"gamma", show(gamma, "auto")},
        {"cost", format_double(cost)},
        {"svr_epsilon", format_double(svr_epsilon)},
        {"standardize", standardize ? "true" : "false"},
        {"case_start", std::to_string(case_start)},
        {"top_cycles", std::to_string(top_cycles)},
        {"write_point_clouds", write_point_clouds ? "true" : "false"},
    };
    for (const auto& [label, t] : targets) kv["target." + label] = format_double(t);
    return kv;
}

void PipelineConfig::validate() const {
    if (!(frame_rate_hz > 0.0)) throw ParameterError("config frame_rate_hz must be positive");
    if (overlap >= patch_length) throw ParameterError("config overlap must be smaller than patch_length");
    if (window_length > patch_length) throw ParameterError("config window_length must not exceed patch_length");
    if (max_dim > Filtration::kMaxSupportedDim) {
        throw ParameterError("config max_dim must be at most " + std::to_string(Filtration::kMaxSupportedDim));
    }
    if (degree >= max_dim) throw ParameterError("config degree must be smaller than max_dim");
    if (max_radius && *max_radius < 0.0) throw ParameterError("config max_radius must be non-negative");
    if (t_max && !(*t_max > t_min)) throw ParameterError("config t_max must exceed t_min");
    if (!(significance >= 0.0 && significance < 1.0)) throw ParameterError("config significance must lie in [0, 1)");
    if (!(cost > 0.0)) throw ParameterError("config cost must be positive");
    if (svr_epsilon < 0.0) throw ParameterError("config svr_epsilon must be non-negative");
    if (gamma && !(*gamma > 0.0)) throw ParameterError("config gamma must be positive");
}

std::uint64_t PipelineConfig::require_seed(const std::string& stage) const {
    if (!seed) throw ParameterError("stage " + stage + " is stochastic and needs a seed");
    return *seed;
}

std::optional<double> numeric_label(const std::string& label) {
    double v = 0.0;
    const auto res = std::from_chars(label.data(), label.data() + label.size(), v);
    if (res.ec != std::errc() || res.ptr == label.data() || !std::isfinite(v)) return std::nullopt;
    return v;
}

// ---- stages ---------------------------------------------------------------

CloudTopology cloud_topology(const PointCloud& pc, const PipelineConfig& config) {
    return compute_topology(pc, config).result;
}

DiscretizedLandscape sample_landscape(const std::vector<std::vector<PersistenceDiagram>>& patch_diagrams, int degree,
                                      const Grid& grid, Eigen::Index depths) {
    if (patch_diagrams.empty()) throw InsufficientDataError("sample has no patches");
    std::vector<DiscretizedLandscape> ls;
    ls.reserve(patch_diagrams.size());
    for (const auto& ds : patch_diagrams) {
        PersistenceDiagram finite{degree, {}};
        for (const auto& p : of_degree(ds, degree).pairs) {
            if (!p.essential()) finite.pairs.push_back(p);
        }
        ls.push_back(discretize(landscape_from_diagram(finite), grid, depths));
    }
    return average(ls);
}

PipelineResult run_pipeline(const PipelineConfig& config, const std::vector<Sample>& samples,
                            const std::filesystem::path& out_dir) {
    config.validate();
    if (samples.empty()) throw InsufficientDataError("pipeline needs at least one sample");
    PipelineResult r;
    r.hash = config.hash();
    {
        std::set<std::string> ids;
        for (const auto& s : samples) {
            if (!ids.insert(s.id).second) throw ParameterError("duplicate sample id '" + s.id + "'");
            if (s.series.dim() != samples.front().series.dim()) {
                throw DataError("stage ingest, sample " + s.id + ": dimension " + std::to_string(s.series.dim()) +
                                " differs from " + std::to_string(samples.front().series.dim()));
            }
        }
    }

    // Patching, optionally in eigenposture coordinates.
    std::vector<std::vector<Patch>> patches(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& sm = samples[s];
        patches[s] = in_stage("patch", sm.id, [&] {
            const TimeSeries ts = config.project_k > 0 ? project_postures(sm.series, config.project_k) : sm.series;
            return make_patches(ts, config.patch_length, config.overlap, sm.id);
        });
    }

    // Persistent homology on every patch; the flat task list keeps results
    // indexed independently of completion order.
    std::vector<std::pair<std::size_t, std::size_t>> tasks;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        for (std::size_t p = 0; p < patches[s].size(); ++p) tasks.emplace_back(s, p);
    }
    std::vector<CloudTopology> topo(tasks.size());
    parallel_for(tasks.size(), config.workers, [&](std::size_t t) {
        const auto [s, p] = tasks[t];
        topo[t] = in_stage("homology", samples[s].id + " patch " + std::to_string(p), [&] {
            return cloud_topology(sliding_window(patches[s][p], config.window_length), config);
        });
    });

    r.samples.resize(samples.size());
    double max_death = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto [s, p] = tasks[t];
        auto& sr = r.samples[s];
        sr.id = samples[s].id;
        sr.label = samples[s].label;
        sr.patch_starts.push_back(patches[s][p].start);
        sr.diagrams.push_back(std::move(topo[t].diagrams));
        max_death = max_finite_death(sr.diagrams.back(), config.degree, max_death);
    }
    r.grid = resolve_grid(config, max_death, r.notices);

    for (auto& sr : r.samples) {
        sr.landscape = in_stage("landscape", sr.id, [&] {
            return sample_landscape(sr.diagrams, config.degree, r.grid, config.depths);
        });
    }

    // Class summaries in order of first appearance.
    std::vector<std::string> labels;
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t s = 0; s < r.samples.size(); ++s) {
        auto& m = members[r.samples[s].label];
        if (m.empty()) labels.push_back(r.samples[s].label);
        m.push_back(s);
    }
    std::map<std::string, Eigen::MatrixXd> class_matrix;
    for (const auto& label : labels) {
        std::vector<DiscretizedLandscape> ls;
        std::vector<std::string> ids;
        std::vector<const DiscretizedLandscape*> ptrs;
        for (std::size_t s : members[label]) {
            ls.push_back(r.samples[s].landscape);
            ids.push_back(r.samples[s].id);
            ptrs.push_back(&r.samples[s].landscape);
        }
        r.classes.push_back(in_stage("summary", "", [&] { return summarize_class(label, ls, ids); }));
        class_matrix[label] = stack(ptrs);
    }

    r.distances = in_stage("distances", "", [&] { return normalize_class_distances(r.classes); });
    r.mds = in_stage("mds", "", [&] { return mds(r.distances.distances, 2); });

    std::vector<const DiscretizedLandscape*> all;
    for (const auto& sr : r.samples) all.push_back(&sr.landscape);
    const Eigen::MatrixXd x = stack(all);
    if (x.rows() >= 2) {
        const Eigen::Index k = std::min<Eigen::Index>({config.pca_components, x.rows() - 1, x.cols()});
        r.pca = in_stage("pca", "", [&] { return pca(x, k); });
    } else {
        r.notices.push_back("pca skipped: fewer than two samples");
    }
    for (const auto& label : labels) {
        const auto& m = class_matrix[label];
        if (m.rows() < 2) {
            r.notices.push_back("class " + label + ": std and pca skipped, fewer than two samples");
            continue;
        }
        r.class_std[label] = in_stage("std", "", [&] { return per_coordinate_std(m); });
        const Eigen::Index k = std::min<Eigen::Index>({config.pca_components, m.rows() - 1, m.cols()});
        r.class_pca[label] = in_stage("class pca", "", [&] { return pca(m, k); });
    }

    if (labels.size() < 2) {
        r.notices.push_back("permutation tests, svm and svr skipped: fewer than two classes");
    } else {
        const std::uint64_t seed = config.require_seed("permutation");
        std::vector<std::pair<std::size_t, std::size_t>> class_pairs;
        for (std::size_t a = 0; a < labels.size(); ++a) {
            for (std::size_t b = a + 1; b < labels.size(); ++b) class_pairs.emplace_back(a, b);
        }
        r.permutations.resize(class_pairs.size());
        parallel_for(class_pairs.size(), config.workers, [&](std::size_t i) {
            const auto [a, b] = class_pairs[i];
            r.permutations[i] = PermutationRow{labels[a], labels[b], in_stage("permutation", "", [&] {
                return permutation_test(class_matrix[labels[a]], class_matrix[labels[b]], config.n_perms,
                                        stage_seed(seed, 1, i));
            })};
        });

        std::vector<int> y;
        std::map<std::string, int> class_id;
        for (std::size_t c = 0; c < labels.size(); ++c) class_id[labels[c]] = static_cast<int>(c);
        for (const auto& sr : r.samples) y.push_back(class_id[sr.label]);
        if (r.samples.size() < config.cv_folds) {
            r.notices.push_back("svm skipped: fewer samples than cv_folds");
        } else {
            SVMOptions opts;
            opts.kernel = KernelSpec{config.kernel, config.gamma};
            opts.cost = config.cost;
            opts.standardize = config.standardize;
            r.svm = in_stage("svm", "", [&] {
                return svm_cross_validate(x, y, config.cv_folds, config.cv_repeats, stage_seed(seed, 2, 0), opts);
            });
        }

        Eigen::VectorXd targets(x.rows());
        std::string missing;
        for (std::size_t s = 0; s < r.samples.size(); ++s) {
            const auto& label = r.samples[s].label;
            const auto it = config.targets.find(label);
            const std::optional<double> t = it != config.targets.end() ? std::optional<double>(it->second)
                                                                       : numeric_label(label);
            if (!t) missing = label;
            else targets(static_cast<Eigen::Index>(s)) = *t;
        }
        if (!missing.empty()) {
            r.notices.push_back("svr skipped: no numeric target for class " + missing);
        } else if (r.samples.size() < config.svr_folds) {
            r.notices.push_back("svr skipped: fewer samples than svr_folds");
        } else {
            SVROptions opts;
            opts.kernel = KernelSpec{config.kernel, config.gamma};
            opts.cost = config.cost;
            opts.epsilon = config.svr_epsilon;
            opts.standardize = config.standardize;
            r.svr = in_stage("svr", "", [&] {
                return svr_fit_predict(x, targets, config.svr_folds, config.svr_repeats, stage_seed(seed, 3, 0), opts);
            });
        }
    }

    if (!out_dir.empty()) in_stage("write", "", [&] { write_pipeline(r, config, samples, out_dir); });
    return r;
}

// ---- case study -----------------------------------------------------------

namespace {

CloudAnalysis analyse_cloud(PointCloud pc, const PipelineConfig& config) {
    CloudAnalysis a;
    Topology t = compute_topology(pc, config);
    a.topology = std::move(t.result);
    const auto& d = of_degree(a.topology.diagrams, config.degree);
    a.significant = d.significant_count(config.significance);
    if (config.degree == 1) a.cycles = representative_cycles(t.filtration, d, config.top_cycles);
    const Eigen::Index k = std::min<Eigen::Index>({2, pc.size() - 1, pc.dim()});
    if (k >= 1) {
        a.pca = pca(pc.points, k);
        a.projection = a.pca.project(pc.points);
    }
    a.cloud = std::move(pc);
    return a;
}

void write_case(const CaseStudyResult& r, const PipelineConfig& config, const std::filesystem::path& out) {
    const std::string& h = r.hash;
    write_text(out / "config.txt", header_line(h) + format_key_values(config.to_key_values()));
    std::string summary = header_line(h) + "# segment_start=" + std::to_string(r.start) +
                          ",segment_length=" + std::to_string(r.length) + "\n" +
                          "cloud,points,dim,radius,pairs,significant,max_persistence\n";
    const std::pair<const char*, const CloudAnalysis*> clouds[] = {{"raw", &r.raw}, {"embedded", &r.embedded}};
    std::string cycles = header_line(h) + "cloud,cycle,birth,death,u,v,frame_u,frame_v\n";
    std::string support = header_line(h) + "cloud,cycle,birth,death,first_frame,last_frame,frames\n";
    for (const auto& [name, a] : clouds) {
        const auto& d = of_degree(a->topology.diagrams, config.degree);
        summary += std::string(name) + "," + std::to_string(a->cloud.size()) + "," + std::to_string(a->cloud.dim()) + "," +
                   format_double(a->topology.radius) + "," + std::to_string(d.size()) + "," +
                   std::to_string(a->significant) + "," + format_double(d.max_persistence()) + "\n";
        write_text(out / (std::string(name) + "_diagrams.csv"), format_diagrams({a->topology.diagrams}, h));
        write_text(out / (std::string(name) + "_landscape.csv"), format_landscape(a->landscape, h));
        if (config.write_point_clouds) write_text(out / (std::string(name) + "_cloud.csv"), format_point_cloud(a->cloud, h));

        // Point t of either cloud starts at frame start + t.
        std::vector<std::string> cols{"frame"};
        for (Eigen::Index j = 0; j < a->projection.cols(); ++j) cols.push_back("pc" + std::to_string(j + 1));
        Eigen::MatrixXd proj(a->projection.rows(), a->projection.cols() + 1);
        proj.col(0) = iota_vector(a->projection.rows(), static_cast<double>(r.start));
        proj.rightCols(a->projection.cols()) = a->projection;
        write_text(out / (std::string(name) + "_pca.csv"), format_matrix(proj, h, cols));
        if (a->projection.cols() >= 1) {
            const Eigen::VectorXd py = a->projection.cols() > 1 ? Eigen::VectorXd(a->projection.col(1))
                                                                : Eigen::VectorXd::Zero(a->projection.rows());
            write_text(out / (std::string(name) + "_pca.svg"),
                       render_svg(Plot{std::string(name) + " cloud, principal components", "pc1", "pc2",
                                       {{name, a->projection.col(0), py, true, {}}}, false},
                                  h));
        }
        for (std::size_t c = 0; c < a->cycles.size(); ++c) {
            const auto& cy = a->cycles[c];
            std::set<Eigen::Index> frames;
            for (const auto& [u, v] : cy.edges) {
                cycles += std::string(name) + "," + std::to_string(c) + "," + format_double(cy.birth) + "," +
                          format_double(cy.death) + "," + std::to_string(u) + "," + std::to_string(v) + "," +
                          std::to_string(r.start + u) + "," + std::to_string(r.start + v) + "\n";
                frames.insert(r.start + u);
                frames.insert(r.start + v);
            }
            std::string list;
            for (auto f : frames) list += (list.empty() ? "" : " ") + std::to_string(f);
            support += std::string(name) + "," + std::to_string(c) + "," + format_double(cy.birth) + "," +
                       format_double(cy.death) + "," + (frames.empty() ? "" : std::to_string(*frames.begin())) + "," +
                       (frames.empty() ? "" : std::to_string(*frames.rbegin())) + "," + list + "\n";
        }
    }
    write_text(out / "summary.csv", summary);
    write_text(out / "cycles.csv", cycles);
    write_text(out / "cycle_support.csv", support);
    write_text(out / "diagrams.svg",
               render_svg(diagram_plot("degree " + std::to_string(config.degree) + " diagrams",
                                       {{"raw", &of_degree(r.raw.topology.diagrams, config.degree)},
                                        {"embedded", &of_degree(r.embedded.topology.diagrams, config.degree)}}),
                          h));
    write_text(out / "landscapes.svg",
               render_svg(landscape_plot("landscapes", {{"raw", &r.raw.landscape}, {"embedded", &r.embedded.landscape}}), h));
}

}  // namespace

CaseStudyResult case_study(const PipelineConfig& config, const TimeSeries& series, const std::string& id,
                           const std::filesystem::path& out_dir) {
    config.validate();
    CaseStudyResult r;
    r.hash = config.hash();
    if (config.case_start >= series.size()) {
        throw InsufficientDataError("stage case-study, sample " + id + ": case_start beyond the series");
    }
    r.start = config.case_start;
    r.length = std::min<Eigen::Index>(config.patch_length, series.size() - r.start);
    const Eigen::MatrixXd segment = series.frames().middleRows(r.start, r.length);

    r.raw = in_stage("case-study raw", id, [&] {
        return analyse_cloud(PointCloud{segment, Provenance{id, 1}}, config);
    });
    r.embedded = in_stage("case-study embedded", id, [&] {
        return analyse_cloud(PointCloud{sliding_window(segment, config.window_length), Provenance{id, config.window_length}},
                             config);
    });
    double max_death = max_finite_death(r.raw.topology.diagrams, config.degree,
                                        -std::numeric_limits<double>::infinity());
    max_death = max_finite_death(r.embedded.topology.diagrams, config.degree, max_death);
    std::vector<std::string> notices;
    const Grid grid = resolve_grid(config, max_death, notices);
    r.raw.landscape = sample_landscape({r.raw.topology.diagrams}, config.degree, grid, config.depths);
    r.embedded.landscape = sample_landscape({r.embedded.topology.diagrams}, config.degree, grid, config.depths);

    if (!out_dir.empty()) in_stage("write", id, [&] { write_case(r, config, out_dir); });
    return r;
}

}  // namespace wormtopo
