#include "wormtopo/landscape.hpp"

#include <algorithm>
#include <limits>

namespace wormtopo {

namespace {

double interpolate(const std::vector<CriticalPoint>& pts, double t) {
    if (pts.empty() || t <= pts.front().t || t >= pts.back().t) return 0.0;
    auto hi = std::upper_bound(pts.begin(), pts.end(), t,
                               [](double x, const CriticalPoint& p) { return x < p.t; });
    auto lo = hi - 1;
    if (lo->t == t) return lo->value;
    const double w = (t - lo->t) / (hi->t - lo->t);
    return lo->value + w * (hi->value - lo->value);
}

struct Interval {
    double birth;
    double death;
};

bool interval_order(const Interval& a, const Interval& b) {
    if (a.birth != b.birth) return a.birth < b.birth;
    return a.death > b.death;
}

CriticalPoint peak(double b, double d) { return {(b + d) / 2.0, (d - b) / 2.0}; }

}  // namespace

double Landscape::operator()(std::size_t k, double t) const {
    if (k >= depths_.size()) return 0.0;
    return interpolate(depths_[k], t);
}

// Sweep over intervals sorted by (birth asc, death desc). Each pass traces
// the upper envelope of the remaining tents; the part of a tent hidden under
// a crossing is pushed back as a shorter interval for the next depth.
Landscape landscape_from_diagram(const PersistenceDiagram& diagram, std::optional<double> infinity_cap) {
    std::vector<Interval> queue;
    for (const auto& p : diagram.pairs) {
        double death = p.death;
        if (p.essential()) {
            if (!infinity_cap) {
                throw DataError("landscape: essential pair needs an explicit truncation cap");
            }
            death = *infinity_cap;
        }
        if (!std::isfinite(p.birth) || !std::isfinite(death)) throw DataError("landscape: non-finite pair");
        if (death > p.birth) queue.push_back({p.birth, death});
    }
    std::sort(queue.begin(), queue.end(), interval_order);

    std::vector<std::vector<CriticalPoint>> depths;
    while (!queue.empty()) {
        std::vector<CriticalPoint> level;
        Interval cur = queue.front();
        queue.erase(queue.begin());
        std::size_t pos = 0;
        level.push_back({cur.birth, 0.0});
        level.push_back(peak(cur.birth, cur.death));
        while (true) {
            auto next = std::find_if(queue.begin() + static_cast<std::ptrdiff_t>(pos), queue.end(),
                                     [&](const Interval& iv) { return iv.death > cur.death; });
            if (next == queue.end()) {
                level.push_back({cur.death, 0.0});
                break;
            }
            const Interval nxt = *next;
            pos = static_cast<std::size_t>(next - queue.begin());
            queue.erase(next);
            if (nxt.birth > cur.death) level.push_back({cur.death, 0.0});
            if (nxt.birth >= cur.death) {
                level.push_back({nxt.birth, 0.0});
            } else {
                level.push_back(peak(nxt.birth, cur.death));
                const Interval hidden{nxt.birth, cur.death};
                auto at = std::lower_bound(queue.begin() + static_cast<std::ptrdiff_t>(pos), queue.end(), hidden,
                                           interval_order);
                queue.insert(at, hidden);
            }
            level.push_back(peak(nxt.birth, nxt.death));
            cur = nxt;
        }
        depths.push_back(std::move(level));
    }
    return Landscape(std::move(depths));
}

Landscape mean_landscape(const std::vector<Landscape>& landscapes) {
    if (landscapes.empty()) throw DataError("mean of an empty landscape list");
    std::size_t depth = 0;
    for (const auto& l : landscapes) depth = std::max(depth, l.depth_count());
    const double n = static_cast<double>(landscapes.size());
    std::vector<std::vector<CriticalPoint>> out(depth);
    for (std::size_t k = 0; k < depth; ++k) {
        std::vector<double> ts;
        for (const auto& l : landscapes) {
            if (k >= l.depth_count()) continue;
            for (const auto& p : l.depth(k)) ts.push_back(p.t);
        }
        std::sort(ts.begin(), ts.end());
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
        for (double t : ts) {
            double sum = 0.0;
            for (const auto& l : landscapes) sum += l(k, t);
            out[k].push_back({t, sum / n});
        }
    }
    return Landscape(std::move(out));
}

void Grid::validate() const {
    if (samples < 2) throw ParameterError("grid needs at least two samples");
    if (!(t_min < t_max) || !std::isfinite(t_min) || !std::isfinite(t_max)) {
        throw ParameterError("grid needs finite t_min < t_max");
    }
}

Eigen::Index DiscretizedLandscape::nonzero_depths(double tol) const {
    Eigen::Index count = 0;
    for (Eigen::Index k = 0; k < depths; ++k) {
        if (row(k).maxCoeff() > tol) ++count;
    }
    return count;
}

DiscretizedLandscape DiscretizedLandscape::zero(const Grid& grid, Eigen::Index depths) {
    grid.validate();
    if (depths < 1) throw ParameterError("landscape depth count must be positive");
    return DiscretizedLandscape{grid, depths, Eigen::VectorXd::Zero(depths * grid.samples)};
}

DiscretizedLandscape discretize(const Landscape& l, const Grid& grid, Eigen::Index depths) {
    DiscretizedLandscape out = DiscretizedLandscape::zero(grid, depths);
    const auto available = std::min<Eigen::Index>(depths, static_cast<Eigen::Index>(l.depth_count()));
    for (Eigen::Index k = 0; k < available; ++k) {
        const auto& pts = l.depth(static_cast<std::size_t>(k));
        for (Eigen::Index i = 0; i < grid.samples; ++i) {
            out.values[k * grid.samples + i] = interpolate(pts, grid.at(i));
        }
        // Depths interpolate different segments, so rounding alone can lift
        // lambda_{k+1} a few ulps above lambda_k; the exact landscape is dominated.
        if (k > 0) out.row(k) = out.row(k).cwiseMin(out.row(k - 1));
    }
    return out;
}

DiscretizedLandscape average(const std::vector<DiscretizedLandscape>& landscapes) {
    if (landscapes.empty()) throw DataError("average of an empty landscape list");
    DiscretizedLandscape out = landscapes.front();
    for (std::size_t i = 1; i < landscapes.size(); ++i) {
        if (!landscapes[i].compatible(out)) throw IncompatibleError("average: landscapes on different grids");
        out.values += landscapes[i].values;
    }
    out.values /= static_cast<double>(landscapes.size());
    return out;
}

double distance(const DiscretizedLandscape& a, const DiscretizedLandscape& b) {
    if (!a.compatible(b)) throw IncompatibleError("distance: landscapes on different grids");
    return (a.values - b.values).norm();
}

ClassSummary summarize_class(const std::string& label, const std::vector<DiscretizedLandscape>& members,
                             std::vector<std::string> member_ids) {
    if (member_ids.size() != members.size()) throw ParameterError("summarize_class: id count mismatch");
    return ClassSummary{label, average(members), members.size(), std::move(member_ids)};
}

NormalizedDistances normalize_class_distances(const std::vector<ClassSummary>& summaries) {
    if (summaries.empty()) throw ParameterError("normalize_class_distances: no classes");
    const auto m = static_cast<Eigen::Index>(summaries.size());
    std::vector<const DiscretizedLandscape*> points;
    const DiscretizedLandscape origin =
        DiscretizedLandscape::zero(summaries.front().mean.grid, summaries.front().mean.depths);
    points.push_back(&origin);
    for (const auto& s : summaries) points.push_back(&s.mean);

    NormalizedDistances out;
    out.labels.push_back("origin");
    for (const auto& s : summaries) out.labels.push_back(s.label);
    out.distances = Eigen::MatrixXd::Zero(m + 1, m + 1);
    for (Eigen::Index i = 0; i <= m; ++i) {
        for (Eigen::Index j = i + 1; j <= m; ++j) {
            const double d = distance(*points[i], *points[j]);
            out.distances(i, j) = d;
            out.distances(j, i) = d;
        }
    }
    const double mean_origin = out.distances.row(0).tail(m).mean();
    if (!(mean_origin > 0.0)) {
        throw NumericalError("normalize_class_distances: every class mean is the zero landscape");
    }
    out.scale = 1.0 / mean_origin;
    out.distances *= out.scale;
    return out;
}

}  // namespace wormtopo
