#include "wormtopo/homology.hpp"

#include <algorithm>
#include <numeric>

namespace wormtopo {

namespace {

constexpr std::int32_t kDenseEdgeLimit = 2048;
constexpr std::int32_t kMaxPackedVertex = 0xFFFE;

std::uint64_t pack(std::span<const std::int32_t> vertices) {
    std::uint64_t key = ~std::uint64_t{0};
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        key &= ~(std::uint64_t{0xFFFF} << (16 * i));
        key |= static_cast<std::uint64_t>(vertices[i]) << (16 * i);
    }
    return key;
}

std::int32_t find_root(std::vector<std::int32_t>& parent, std::int32_t x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

}  // namespace

DistanceMatrix::DistanceMatrix(Eigen::MatrixXd entries) : d_(std::move(entries)) {
    if (d_.rows() != d_.cols()) throw DataError("distance matrix must be square");
    if (d_.rows() == 0) throw DataError("distance matrix is empty");
    if (!d_.allFinite()) throw DataError("distance matrix has non-finite entries");
    for (Eigen::Index i = 0; i < d_.rows(); ++i) {
        if (d_(i, i) != 0.0) throw DataError("distance matrix diagonal must be zero");
        for (Eigen::Index j = i + 1; j < d_.cols(); ++j) {
            if (d_(i, j) != d_(j, i)) throw DataError("distance matrix must be symmetric");
            if (d_(i, j) < 0.0) throw DataError("distance matrix entries must be non-negative");
        }
    }
}

double DistanceMatrix::enclosing_radius() const {
    if (d_.rows() == 1) return 0.0;
    return d_.rowwise().maxCoeff().minCoeff();
}

DistanceMatrix pairwise_distances(const PointCloud& pc) {
    if (pc.size() == 0) throw DataError("point cloud is empty");
    if (!pc.points.allFinite()) throw DataError("point cloud has non-finite coordinates");
    return DistanceMatrix(euclidean_distances(pc.points));
}

// In a flag filtration a triangle abc is the boundary sum of the cone
// triangles vab, vac, vbc for any fourth vertex v. When all three precede abc
// in filtration order, the column of abc reduces to zero and can be skipped.
bool has_earlier_cone(const Eigen::MatrixXd& d, const Simplex& s) {
    const Eigen::Index n = d.rows();
    const std::int32_t a = s.vertex[0];
    const std::int32_t b = s.vertex[1];
    const std::int32_t c = s.vertex[2];
    const double* da = d.col(a).data();
    const double* db = d.col(b).data();
    const double* dc = d.col(c).data();
    const double diam = s.value;
    const auto precedes = [&](std::int32_t v, std::int32_t x, std::int32_t y, double dvx, double dvy) {
        const double value = std::max({dvx, dvy, d(x, y)});
        if (value < diam) return true;
        if (value > diam) return false;
        std::array<std::int32_t, 3> cone{v, x, y};
        std::sort(cone.begin(), cone.end());
        return std::lexicographical_compare(cone.begin(), cone.end(), s.vertex.begin(), s.vertex.begin() + 3);
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        if (da[i] > diam || db[i] > diam || dc[i] > diam) continue;
        const auto v = static_cast<std::int32_t>(i);
        if (v == a || v == b || v == c) continue;
        if (precedes(v, a, b, da[i], db[i]) && precedes(v, a, c, da[i], dc[i]) && precedes(v, b, c, db[i], dc[i])) {
            return true;
        }
    }
    return false;
}

bool filtration_order(const Simplex& a, const Simplex& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.dim != b.dim) return a.dim < b.dim;
    return std::lexicographical_compare(a.vertex.begin(), a.vertex.begin() + a.dim + 1, b.vertex.begin(),
                                        b.vertex.begin() + b.dim + 1);
}

Filtration::Filtration(std::vector<Simplex> simplices, int max_dim, double max_radius)
    : simplices_(std::move(simplices)), max_dim_(max_dim), max_radius_(max_radius) {
    if (max_dim_ < 0 || max_dim_ > kMaxSupportedDim) {
        throw ParameterError("filtration dimension must lie in [0, 3]");
    }
    for (auto& s : simplices_) {
        if (s.dim < 0 || s.dim > max_dim_) throw StructuralError("simplex dimension out of range");
        std::sort(s.vertex.begin(), s.vertex.begin() + s.dim + 1);
        for (int k = s.dim + 1; k < 4; ++k) s.vertex[k] = -1;
        if (s.vertex[0] < 0) throw StructuralError("negative vertex id");
        for (int k = 0; k < s.dim; ++k) {
            if (s.vertex[k] == s.vertex[k + 1]) throw StructuralError("repeated vertex in simplex");
        }
        vertex_count_ = std::max(vertex_count_, s.vertex[s.dim] + 1);
    }
    std::sort(simplices_.begin(), simplices_.end(), filtration_order);
}

std::size_t Filtration::count(int dim) const {
    return static_cast<std::size_t>(
        std::count_if(simplices_.begin(), simplices_.end(), [dim](const Simplex& s) { return s.dim == dim; }));
}

Filtration vietoris_rips(const DistanceMatrix& dm, int max_dim, std::optional<double> max_radius) {
    if (max_dim < 1) throw ParameterError("vietoris_rips: max_dim must be at least 1");
    if (max_dim > Filtration::kMaxSupportedDim) throw ParameterError("vietoris_rips: max_dim must be at most 3");
    const double r = max_radius.value_or(dm.enclosing_radius());
    if (std::isnan(r) || r < 0.0) throw ParameterError("vietoris_rips: max_radius must be non-negative");
    const auto n = static_cast<std::int32_t>(dm.size());

    std::vector<std::vector<std::int32_t>> higher(n);
    for (std::int32_t i = 0; i < n; ++i) {
        for (std::int32_t j = i + 1; j < n; ++j) {
            if (dm(i, j) <= r) higher[i].push_back(j);
        }
    }

    std::vector<Simplex> simplices;
    simplices.reserve(n);
    for (std::int32_t i = 0; i < n; ++i) simplices.push_back(Simplex{{i, -1, -1, -1}, 0, 0.0});

    // Clique expansion: extend each simplex by common higher neighbours of its vertices.
    std::vector<std::int32_t> common;
    for (std::int32_t i = 0; i < n; ++i) {
        for (std::int32_t j : higher[i]) {
            const double dij = dm(i, j);
            simplices.push_back(Simplex{{i, j, -1, -1}, 1, dij});
            if (max_dim < 2) continue;
            common.clear();
            std::set_intersection(higher[i].begin(), higher[i].end(), higher[j].begin(), higher[j].end(),
                                  std::back_inserter(common));
            for (std::size_t a = 0; a < common.size(); ++a) {
                const std::int32_t k = common[a];
                const double dijk = std::max({dij, dm(i, k), dm(j, k)});
                simplices.push_back(Simplex{{i, j, k, -1}, 2, dijk});
                if (max_dim < 3) continue;
                for (std::size_t b = a + 1; b < common.size(); ++b) {
                    const std::int32_t l = common[b];
                    if (dm(k, l) > r) continue;
                    const double v = std::max({dijk, dm(i, l), dm(j, l), dm(k, l)});
                    simplices.push_back(Simplex{{i, j, k, l}, 3, v});
                }
            }
        }
    }
    Filtration f(std::move(simplices), max_dim, r);
    f.set_rips_distances(std::make_shared<const Eigen::MatrixXd>(dm.matrix()));
    return f;
}

BoundaryReduction::BoundaryReduction(const Filtration& f, const std::set<int>& degrees)
    : f_(&f), degrees_(degrees) {
    for (int p : degrees_) {
        if (p < 0) throw ParameterError("homology degree must be non-negative");
    }
    constexpr int kDims = Filtration::kMaxSupportedDim + 1;
    const std::size_t m = f.size();
    n_vertices_ = f.vertex_count();
    if (n_vertices_ > kMaxPackedVertex) throw ParameterError("too many vertices for the boundary index");
    of_dim_.assign(kDims, {});
    rank_.assign(m, -1);
    const bool dense_edges = n_vertices_ <= kDenseEdgeLimit;
    if (dense_edges) edge_rank_.assign(static_cast<std::size_t>(n_vertices_) * n_vertices_, -1);
    for (std::size_t i = 0; i < m; ++i) {
        const Simplex& s = f[i];
        rank_[i] = static_cast<std::int32_t>(of_dim_[s.dim].size());
        of_dim_[s.dim].push_back(static_cast<std::int64_t>(i));
        if (s.dim == 1 && dense_edges) {
            edge_rank_[static_cast<std::size_t>(s.vertex[0]) * n_vertices_ + s.vertex[1]] = rank_[i];
        }
        if (s.dim < f.max_dim() && !(s.dim == 1 && dense_edges)) {
            face_index_.emplace_back(pack(s.vertices()), static_cast<std::int64_t>(i));
        }
    }
    std::sort(face_index_.begin(), face_index_.end());

    pivot_column_.assign(kDims, {});
    killer_.assign(kDims, {});
    zero_.assign(kDims, {});
    reduced_.assign(kDims, {});
    for (int d = 0; d < kDims; ++d) {
        killer_[d].assign(of_dim_[d].size(), -1);
        zero_[d].assign(of_dim_[d].size(), d == 0 ? 1 : 0);
        reduced_[d].assign(of_dim_[d].size(), d == 0 ? 1 : 0);
        if (d > 0) pivot_column_[d].resize(of_dim_[d - 1].size());
    }

    if (degrees_.empty()) return;
    const int top = std::min(*degrees_.rbegin() + 1, f.max_dim());

    // Without H_top requested, the top pass can stop once every cycle one
    // dimension down has been killed. Counted here for the edge/triangle case.
    std::int64_t stop_after = -1;
    if (top == 2 && !degrees_.contains(2)) {
        std::vector<std::int32_t> parent(n_vertices_);
        std::iota(parent.begin(), parent.end(), 0);
        std::int64_t positive_edges = 0;
        for (std::int64_t e : of_dim_[1]) {
            const auto a = find_root(parent, f[e].vertex[0]);
            const auto b = find_root(parent, f[e].vertex[1]);
            if (a == b) {
                ++positive_edges;
            } else {
                parent[std::max(a, b)] = std::min(a, b);
            }
        }
        stop_after = positive_edges;
    }
    for (int d = top; d >= 1; --d) {
        reduce_dimension(d, d == top ? stop_after : -1);
    }
}

std::int64_t BoundaryReduction::find_face(std::uint64_t key) const {
    auto it = std::lower_bound(face_index_.begin(), face_index_.end(), std::make_pair(key, std::int64_t{-1}));
    if (it == face_index_.end() || it->first != key) return -1;
    return it->second;
}

void BoundaryReduction::boundary_ranks(std::int64_t j, std::vector<std::int32_t>& out) const {
    const Simplex& s = (*f_)[static_cast<std::size_t>(j)];
    out.clear();
    std::array<std::int32_t, 4> face{};
    for (int skip = 0; skip <= s.dim; ++skip) {
        int w = 0;
        for (int k = 0; k <= s.dim; ++k) {
            if (k != skip) face[w++] = s.vertex[k];
        }
        std::int64_t global = -1;
        std::int32_t rank = -1;
        if (s.dim == 2 && !edge_rank_.empty()) {
            rank = edge_rank_[static_cast<std::size_t>(face[0]) * n_vertices_ + face[1]];
            if (rank >= 0) global = of_dim_[1][rank];
        } else {
            global = find_face(pack({face.data(), static_cast<std::size_t>(s.dim)}));
            if (global >= 0) rank = rank_[global];
        }
        if (global < 0) throw StructuralError("filtration is missing a face of simplex " + std::to_string(j));
        if (global >= j) throw StructuralError("face of simplex " + std::to_string(j) + " appears after it");
        out.push_back(rank);
    }
    // Within one dimension, rank order is filtration order.
    std::sort(out.begin(), out.end());
}

namespace {

void add_column(std::vector<std::int32_t>& target, const std::vector<std::int32_t>& other,
                std::vector<std::int32_t>& scratch) {
    scratch.clear();
    std::set_symmetric_difference(target.begin(), target.end(), other.begin(), other.end(),
                                  std::back_inserter(scratch));
    target.swap(scratch);
}

}  // namespace

void BoundaryReduction::reduce_dimension(int dim, std::int64_t stop_after_pivots) {
    const bool keep_chains = dim == 1;
    auto& pivots_by_row = pivot_column_[dim];
    auto& killer_row = killer_[dim - 1];
    auto& zero_row = zero_[dim - 1];
    auto& zero_col = zero_[dim];
    auto& reduced_col = reduced_[dim];
    const auto& columns = of_dim_[dim];
    if (keep_chains) chains_.assign(columns.size(), {});

    std::vector<std::int32_t> col;
    std::vector<std::int32_t> chain;
    std::vector<std::int32_t> scratch;
    std::int64_t pivots = 0;
    const Eigen::MatrixXd* cone_check = dim == 2 ? f_->rips_distances() : nullptr;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (stop_after_pivots >= 0 && pivots >= stop_after_pivots) break;
        if (zero_col[c]) continue;  // cleared by the pass above
        if (cone_check && has_earlier_cone(*cone_check, (*f_)[static_cast<std::size_t>(columns[c])])) {
            zero_col[c] = 1;
            reduced_col[c] = 1;
            continue;
        }
        boundary_ranks(columns[c], col);
        if (keep_chains) chain.assign(1, static_cast<std::int32_t>(c));
        while (!col.empty()) {
            const std::int32_t killer = killer_row[col.back()];
            if (killer < 0) break;
            add_column(col, pivots_by_row[col.back()], scratch);
            if (keep_chains) add_column(chain, chains_[killer], scratch);
        }
        reduced_col[c] = 1;
        if (keep_chains) chains_[c] = chain;
        if (col.empty()) {
            zero_col[c] = 1;
            continue;
        }
        const std::int32_t low = col.back();
        killer_row[low] = static_cast<std::int32_t>(c);
        zero_row[low] = 1;  // clearing: a pivot row's own column reduces to zero
        pivots_by_row[low] = col;
        ++pivots;
    }
}

std::vector<std::int64_t> BoundaryReduction::lows() const {
    std::vector<std::int64_t> out(f_->size(), -1);
    for (std::size_t d = 1; d < of_dim_.size(); ++d) {
        for (std::size_t row = 0; row < killer_[d - 1].size(); ++row) {
            const std::int32_t c = killer_[d - 1][row];
            if (c >= 0) out[of_dim_[d][c]] = of_dim_[d - 1][row];
        }
    }
    return out;
}

PersistenceDiagram BoundaryReduction::diagram(int degree) const {
    if (!degrees_.contains(degree)) throw ParameterError("degree " + std::to_string(degree) + " was not computed");
    PersistenceDiagram dgm;
    dgm.degree = degree;
    if (degree > f_->max_dim()) return dgm;
    const auto& f = *f_;
    const auto& simplices = of_dim_[degree];
    for (std::size_t r = 0; r < simplices.size(); ++r) {
        if (!zero_[degree][r]) continue;  // negative simplex
        const std::int64_t i = simplices[r];
        const std::int32_t killer = killer_[degree][r];
        if (killer < 0) {
            dgm.pairs.push_back({f[i].value, std::numeric_limits<double>::infinity(), i, -1});
            continue;
        }
        const std::int64_t j = of_dim_[degree + 1][killer];
        if (f[j].value > f[i].value) dgm.pairs.push_back({f[i].value, f[j].value, i, j});
    }
    return dgm;
}

std::vector<std::int64_t> BoundaryReduction::cycle(std::int64_t birth_simplex) const {
    if (birth_simplex < 0 || static_cast<std::size_t>(birth_simplex) >= f_->size()) return {};
    const int dim = (*f_)[static_cast<std::size_t>(birth_simplex)].dim;
    const std::int32_t r = rank_[birth_simplex];
    std::vector<std::int64_t> out;
    if (dim + 1 < static_cast<int>(of_dim_.size()) && killer_[dim][r] >= 0) {
        for (std::int32_t row : pivot_column_[dim + 1][r]) out.push_back(of_dim_[dim][row]);
        return out;
    }
    if (dim == 1 && !chains_.empty() && reduced_[1][r] && zero_[1][r]) {
        for (std::int32_t c : chains_[r]) out.push_back(of_dim_[1][c]);
        std::sort(out.begin(), out.end());
    }
    return out;
}

double PersistenceDiagram::max_persistence() const {
    double best = 0.0;
    for (const auto& p : pairs) {
        if (!p.essential()) best = std::max(best, p.persistence());
    }
    return best;
}

std::size_t PersistenceDiagram::significant_count(double fraction) const {
    const double threshold = fraction * max_persistence();
    return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [&](const PersistencePair& p) {
        return !p.essential() && p.persistence() > threshold;
    }));
}

std::vector<std::pair<double, double>> PersistenceDiagram::sorted_points() const {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(pairs.size());
    for (const auto& p : pairs) pts.emplace_back(p.birth, p.death);
    std::sort(pts.begin(), pts.end());
    return pts;
}

std::vector<PersistenceDiagram> persistent_homology(const Filtration& f, const std::set<int>& degrees) {
    BoundaryReduction reduction(f, degrees);
    std::vector<PersistenceDiagram> out;
    for (int p : degrees) out.push_back(reduction.diagram(p));
    return out;
}

std::vector<RepresentativeCycle> representative_cycles(const Filtration& f, const PersistenceDiagram& diagram,
                                                       std::size_t top_k) {
    if (diagram.degree != 1) throw ParameterError("representative cycles are computed for degree 1 only");
    std::vector<std::size_t> order(diagram.pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return diagram.pairs[a].persistence() > diagram.pairs[b].persistence();
    });
    if (order.size() > top_k) order.resize(top_k);
    if (order.empty()) return {};

    BoundaryReduction reduction(f, {1});
    const PersistenceDiagram computed = reduction.diagram(1);
    std::vector<char> used(computed.pairs.size(), 0);

    std::vector<RepresentativeCycle> cycles;
    for (std::size_t idx : order) {
        const auto& pair = diagram.pairs[idx];
        std::int64_t birth = pair.birth_simplex;
        if (birth < 0) {
            for (std::size_t c = 0; c < computed.pairs.size(); ++c) {
                const auto& cp = computed.pairs[c];
                if (!used[c] && cp.birth == pair.birth && cp.death == pair.death) {
                    used[c] = 1;
                    birth = cp.birth_simplex;
                    break;
                }
            }
        }
        if (birth < 0) throw DataError("diagram pair does not match the filtration");
        RepresentativeCycle rc{1, pair.birth, pair.death, {}};
        for (std::int64_t e : reduction.cycle(birth)) {
            rc.edges.emplace_back(f[e].vertex[0], f[e].vertex[1]);
        }
        cycles.push_back(std::move(rc));
    }
    return cycles;
}

}  // namespace wormtopo
