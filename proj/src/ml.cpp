#include "wormtopo/ml.hpp"

#include "wormtopo/error.hpp"
#include "wormtopo/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace wormtopo {

namespace {

constexpr double kTau = 1e-12;

struct FeatureTransform {
    Eigen::RowVectorXd shift;
    Eigen::RowVectorXd scale;
};

FeatureTransform make_transform(const Eigen::MatrixXd& x, bool standardize) {
    FeatureTransform t{Eigen::RowVectorXd::Zero(x.cols()), Eigen::RowVectorXd::Ones(x.cols())};
    if (!standardize) return t;
    t.shift = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - t.shift;
    t.scale = (centered.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt();
    for (Eigen::Index j = 0; j < t.scale.size(); ++j) {
        if (!(t.scale(j) > 0.0)) t.scale(j) = 1.0;
    }
    return t;
}

Eigen::MatrixXd apply_transform(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& shift,
                                const Eigen::RowVectorXd& scale) {
    return (x.rowwise() - shift).array().rowwise() / scale.array();
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
    return out;
}

double compute_rho(const Eigen::VectorXd& alpha, const Eigen::VectorXd& grad, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& upper) {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t free = 0;
    for (Eigen::Index t = 0; t < alpha.size(); ++t) {
        const double yg = y(t) * grad(t);
        if (alpha(t) >= upper(t)) {
            if (y(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else if (alpha(t) <= 0.0) {
            if (y(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else {
            ++free;
            sum_free += yg;
        }
    }
    if (free > 0) return sum_free / static_cast<double>(free);
    return (ub + lb) / 2.0;
}

}  // namespace

double Kernel::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                          const Eigen::Ref<const Eigen::RowVectorXd>& b) const {
    if (type == KernelType::Linear) return a.dot(b);
    return std::exp(-gamma * (a - b).squaredNorm());
}

Eigen::MatrixXd Kernel::matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const {
    if (type == KernelType::Linear) return a * b.transpose();
    Eigen::MatrixXd k(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            k(i, j) = std::exp(-gamma * (a.row(i) - b.row(j)).squaredNorm());
        }
    }
    return k;
}

double median_heuristic_gamma(const Eigen::MatrixXd& x) {
    std::vector<double> sq;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < x.rows(); ++j) sq.push_back((x.row(i) - x.row(j)).squaredNorm());
    }
    if (sq.empty()) return 1.0;
    const auto mid = sq.begin() + static_cast<std::ptrdiff_t>(sq.size() / 2);
    std::nth_element(sq.begin(), mid, sq.end());
    double median = *mid;
    if (sq.size() % 2 == 0) {
        median = 0.5 * (median + *std::max_element(sq.begin(), mid));
    }
    return median > 0.0 ? 1.0 / median : 1.0;
}

Kernel resolve_kernel(const KernelSpec& spec, const Eigen::MatrixXd& x) {
    Kernel k{spec.type, 1.0};
    if (spec.type == KernelType::Rbf) {
        k.gamma = spec.gamma ? *spec.gamma : median_heuristic_gamma(x);
        if (!(k.gamma > 0.0)) throw ParameterError("rbf kernel gamma must be positive");
    }
    return k;
}

SmoResult solve_smo(const SmoProblem& prob, double tol, std::size_t max_iter, bool trace_objective) {
    const Eigen::Index n = prob.p.size();
    SmoResult res;
    res.alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd grad = prob.p;
    const auto& q = prob.q;
    const auto& y = prob.y;
    const auto& c = prob.upper;
    Eigen::VectorXd& alpha = res.alpha;

    const auto objective = [&] { return 0.5 * alpha.dot(grad + prob.p); };
    if (trace_objective) res.objective_trace.push_back(objective());

    while (true) {
        // Maximal violating pair: i maximises -y G over I_up, j minimises it over I_low.
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        Eigen::Index i = -1;
        Eigen::Index j = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double v = -y(t) * grad(t);
            const bool up = (y(t) > 0 && alpha(t) < c(t)) || (y(t) < 0 && alpha(t) > 0);
            const bool low = (y(t) > 0 && alpha(t) > 0) || (y(t) < 0 && alpha(t) < c(t));
            if (up && v >= gmax) { gmax = v; i = t; }
            if (low && v <= gmin) { gmin = v; j = t; }
        }
        res.kkt_violation = (i < 0 || j < 0) ? 0.0 : gmax - gmin;
        if (i < 0 || j < 0 || res.kkt_violation < tol) {
            res.converged = true;
            break;
        }
        if (res.iterations >= max_iter) break;
        ++res.iterations;

        const double old_i = alpha(i);
        const double old_j = alpha(j);
        const double ci = c(i);
        const double cj = c(j);
        if (y(i) != y(j)) {
            const double quad = std::max(q(i, i) + q(j, j) + 2.0 * q(i, j), kTau);
            const double delta = (-grad(i) - grad(j)) / quad;
            const double diff = alpha(i) - alpha(j);
            alpha(i) += delta;
            alpha(j) += delta;
            if (diff > 0) {
                if (alpha(j) < 0) { alpha(j) = 0; alpha(i) = diff; }
            } else if (alpha(i) < 0) {
                alpha(i) = 0; alpha(j) = -diff;
            }
            if (diff > ci - cj) {
                if (alpha(i) > ci) { alpha(i) = ci; alpha(j) = ci - diff; }
            } else if (alpha(j) > cj) {
                alpha(j) = cj; alpha(i) = cj + diff;
            }
        } else {
            const double quad = std::max(q(i, i) + q(j, j) - 2.0 * q(i, j), kTau);
            const double delta = (grad(i) - grad(j)) / quad;
            const double sum = alpha(i) + alpha(j);
            alpha(i) -= delta;
            alpha(j) += delta;
            if (sum > ci) {
                if (alpha(i) > ci) { alpha(i) = ci; alpha(j) = sum - ci; }
            } else if (alpha(j) < 0) {
                alpha(j) = 0; alpha(i) = sum;
            }
            if (sum > cj) {
                if (alpha(j) > cj) { alpha(j) = cj; alpha(i) = sum - cj; }
            } else if (alpha(i) < 0) {
                alpha(i) = 0; alpha(j) = sum;
            }
        }
        const double di = alpha(i) - old_i;
        const double dj = alpha(j) - old_j;
        grad.noalias() += q.col(i) * di + q.col(j) * dj;
        if (trace_objective) res.objective_trace.push_back(objective());
    }
    res.rho = compute_rho(alpha, grad, y, c);
    res.objective = objective();
    return res;
}

Eigen::MatrixXd SVMModel::transform(const Eigen::MatrixXd& x) const { return apply_transform(x, shift, scale); }

std::vector<int> SVMModel::predict(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd z = transform(x);
    const Eigen::MatrixXd k = kernel.matrix(z, train);
    std::map<int, std::size_t> index;
    for (std::size_t c = 0; c < classes.size(); ++c) index[classes[c]] = c;
    std::vector<int> out(static_cast<std::size_t>(z.rows()));
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        std::vector<int> votes(classes.size(), 0);
        std::vector<double> strength(classes.size(), 0.0);
        for (const auto& m : pairs) {
            double f = -m.rho;
            for (std::size_t s = 0; s < m.support.size(); ++s) {
                f += m.coef(static_cast<Eigen::Index>(s)) * k(r, m.support[s]);
            }
            const std::size_t pi = index[m.positive];
            const std::size_t ni = index[m.negative];
            if (f > 0) ++votes[pi]; else ++votes[ni];
            strength[pi] += f;
            strength[ni] -= f;
        }
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes.size(); ++c) {
            if (votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best])) best = c;
        }
        out[static_cast<std::size_t>(r)] = classes[best];
    }
    return out;
}

SVMModel svm_train(const Eigen::MatrixXd& x, const std::vector<int>& y, const SVMOptions& options) {
    if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw ParameterError("svm_train: label count mismatch");
    if (!(options.cost > 0.0)) throw ParameterError("svm_train: cost must be positive");
    SVMModel model;
    model.cost = options.cost;
    model.classes = y;
    std::sort(model.classes.begin(), model.classes.end());
    model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
    if (model.classes.size() < 2) throw DegenerateError("svm_train: need at least two classes");

    const FeatureTransform tf = make_transform(x, options.standardize);
    model.shift = tf.shift;
    model.scale = tf.scale;
    model.train = apply_transform(x, tf.shift, tf.scale);
    model.kernel = resolve_kernel(options.kernel, model.train);
    const Eigen::MatrixXd k = model.kernel.matrix(model.train, model.train);

    for (std::size_t a = 0; a < model.classes.size(); ++a) {
        for (std::size_t b = a + 1; b < model.classes.size(); ++b) {
            std::vector<Eigen::Index> rows;
            for (std::size_t i = 0; i < y.size(); ++i) {
                if (y[i] == model.classes[a] || y[i] == model.classes[b]) rows.push_back(static_cast<Eigen::Index>(i));
            }
            const auto m = static_cast<Eigen::Index>(rows.size());
            SmoProblem prob;
            prob.y.resize(m);
            for (Eigen::Index i = 0; i < m; ++i) prob.y(i) = y[static_cast<std::size_t>(rows[i])] == model.classes[a] ? 1.0 : -1.0;
            prob.q.resize(m, m);
            for (Eigen::Index i = 0; i < m; ++i) {
                for (Eigen::Index j = 0; j < m; ++j) prob.q(i, j) = prob.y(i) * prob.y(j) * k(rows[i], rows[j]);
            }
            prob.p = Eigen::VectorXd::Constant(m, -1.0);
            prob.upper = Eigen::VectorXd::Constant(m, options.cost);
            const SmoResult res = solve_smo(prob, options.tol, options.max_iter);

            BinarySVM machine;
            machine.positive = model.classes[a];
            machine.negative = model.classes[b];
            machine.alpha = res.alpha;
            machine.rho = res.rho;
            machine.kkt_violation = res.kkt_violation;
            machine.iterations = res.iterations;
            machine.converged = res.converged;
            std::vector<double> coef;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (res.alpha(i) > 0.0) {
                    machine.support.push_back(rows[i]);
                    coef.push_back(prob.y(i) * res.alpha(i));
                }
            }
            machine.coef = Eigen::Map<Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
            model.pairs.push_back(std::move(machine));
        }
    }
    return model;
}

namespace {

// Stratified assignment: each class is shuffled and dealt round-robin,
// continuing the rotation across classes so fold sizes stay balanced.
std::vector<std::size_t> stratified_folds(const std::vector<int>& y, std::size_t folds, CounterRng& rng) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
    std::vector<std::size_t> fold(y.size(), 0);
    std::size_t next = 0;
    for (auto& [label, idx] : by_class) {
        rng.shuffle(std::span<std::size_t>(idx));
        for (std::size_t i : idx) {
            fold[i] = next;
            next = (next + 1) % folds;
        }
    }
    return fold;
}

std::vector<std::size_t> random_folds(std::size_t n, std::size_t folds, CounterRng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::size_t> fold(n);
    for (std::size_t i = 0; i < n; ++i) fold[order[i]] = i % folds;
    return fold;
}

}  // namespace

CVReport svm_cross_validate(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t folds,
                            std::size_t repeats, std::uint64_t seed, const SVMOptions& options) {
    const std::size_t n = y.size();
    if (static_cast<Eigen::Index>(n) != x.rows()) throw ParameterError("cross_validate: label count mismatch");
    if (folds < 2 || folds > n) throw ParameterError("cross_validate: folds must lie in [2, sample count]");
    if (repeats < 1) throw ParameterError("cross_validate: repeats must be positive");
    CVReport report;
    report.classes = y;
    std::sort(report.classes.begin(), report.classes.end());
    report.classes.erase(std::unique(report.classes.begin(), report.classes.end()), report.classes.end());
    if (report.classes.size() < 2) throw DegenerateError("cross_validate: need at least two classes");
    std::map<int, Eigen::Index> class_index;
    for (std::size_t c = 0; c < report.classes.size(); ++c) class_index[report.classes[c]] = static_cast<Eigen::Index>(c);

    // Resolve the bandwidth once on the full feature set so every fold shares it.
    SVMOptions opts = options;
    if (opts.kernel.type == KernelType::Rbf && !opts.kernel.gamma) {
        const FeatureTransform tf = make_transform(x, opts.standardize);
        opts.kernel.gamma = median_heuristic_gamma(apply_transform(x, tf.shift, tf.scale));
    }
    report.gamma = opts.kernel.gamma.value_or(0.0);

    const auto nc = static_cast<Eigen::Index>(report.classes.size());
    const CounterRng root(seed);
    for (std::size_t r = 0; r < repeats; ++r) {
        CounterRng rng = root.split(r);
        const auto fold = stratified_folds(y, folds, rng);
        Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(nc, nc);
        for (std::size_t f = 0; f < folds; ++f) {
            std::vector<Eigen::Index> train_idx;
            std::vector<Eigen::Index> test_idx;
            for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? test_idx : train_idx).push_back(static_cast<Eigen::Index>(i));
            if (test_idx.empty()) continue;
            std::vector<int> train_y;
            for (auto i : train_idx) train_y.push_back(y[static_cast<std::size_t>(i)]);
            std::vector<int> predicted;
            const bool single = std::all_of(train_y.begin(), train_y.end(), [&](int v) { return v == train_y.front(); });
            if (single) {
                predicted.assign(test_idx.size(), train_y.front());
            } else {
                const SVMModel model = svm_train(rows_of(x, train_idx), train_y, opts);
                predicted = model.predict(rows_of(x, test_idx));
            }
            for (std::size_t t = 0; t < test_idx.size(); ++t) {
                confusion(class_index[y[static_cast<std::size_t>(test_idx[t])]], class_index[predicted[t]]) += 1;
            }
        }
        report.per_repeat.push_back(static_cast<double>(confusion.trace()) / static_cast<double>(n));
        if (r == 0) report.confusion = confusion;
    }
    report.accuracy_mean = std::accumulate(report.per_repeat.begin(), report.per_repeat.end(), 0.0) /
                           static_cast<double>(report.per_repeat.size());
    return report;
}

Eigen::VectorXd SVRModel::predict(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Constant(x.rows(), target_mean);
    if (target_scale == 0.0) return out;
    const Eigen::MatrixXd z = apply_transform(x, shift, scale);
    const Eigen::MatrixXd k = kernel.matrix(z, train);
    out.array() += target_scale * ((k * coef).array() - rho);
    return out;
}

SVRModel svr_train(const Eigen::MatrixXd& x, const Eigen::VectorXd& targets, const SVROptions& options) {
    if (targets.size() != x.rows() || x.rows() == 0) throw ParameterError("svr_train: target count mismatch");
    if (!(options.cost > 0.0) || options.epsilon < 0.0) throw ParameterError("svr_train: invalid cost or epsilon");
    SVRModel model;
    model.cost = options.cost;
    model.epsilon = options.epsilon;
    const auto n = x.rows();
    model.target_mean = targets.mean();
    const double sd = std::sqrt((targets.array() - model.target_mean).square().mean());
    const FeatureTransform tf = make_transform(x, options.standardize);
    model.shift = tf.shift;
    model.scale = tf.scale;
    model.train = apply_transform(x, tf.shift, tf.scale);
    model.kernel = resolve_kernel(options.kernel, model.train);
    if (!(sd > 0.0)) {
        model.target_scale = 0.0;
        model.coef = Eigen::VectorXd::Zero(n);
        model.target_mean = targets(0);
        return model;
    }
    model.target_scale = sd;
    const Eigen::VectorXd z = (targets.array() - model.target_mean) / sd;
    const Eigen::MatrixXd k = model.kernel.matrix(model.train, model.train);

    // Variables (alpha, alpha*) with y = (+1, -1).
    SmoProblem prob;
    prob.y.resize(2 * n);
    prob.p.resize(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        prob.y(i) = 1.0;
        prob.y(i + n) = -1.0;
        prob.p(i) = options.epsilon - z(i);
        prob.p(i + n) = options.epsilon + z(i);
    }
    prob.q.resize(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        for (Eigen::Index j = 0; j < 2 * n; ++j) prob.q(i, j) = prob.y(i) * prob.y(j) * k(i % n, j % n);
    }
    prob.upper = Eigen::VectorXd::Constant(2 * n, options.cost);
    model.solver = solve_smo(prob, options.tol, options.max_iter);
    model.coef = model.solver.alpha.head(n) - model.solver.alpha.tail(n);
    model.rho = model.solver.rho;
    return model;
}

Eigen::VectorXd svr_fit_predict(const Eigen::MatrixXd& x, const Eigen::VectorXd& targets, std::size_t folds,
                                std::size_t repeats, std::uint64_t seed, const SVROptions& options) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (targets.size() != x.rows()) throw ParameterError("svr_fit_predict: target count mismatch");
    if (folds < 2 || folds > n) throw ParameterError("svr_fit_predict: folds must lie in [2, sample count]");
    if (repeats < 1) throw ParameterError("svr_fit_predict: repeats must be positive");
    SVROptions opts = options;
    if (opts.kernel.type == KernelType::Rbf && !opts.kernel.gamma) {
        const FeatureTransform tf = make_transform(x, opts.standardize);
        opts.kernel.gamma = median_heuristic_gamma(apply_transform(x, tf.shift, tf.scale));
    }
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(x.rows());
    const CounterRng root(seed);
    for (std::size_t r = 0; r < repeats; ++r) {
        CounterRng rng = root.split(r);
        const auto fold = random_folds(n, folds, rng);
        for (std::size_t f = 0; f < folds; ++f) {
            std::vector<Eigen::Index> train_idx;
            std::vector<Eigen::Index> test_idx;
            for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? test_idx : train_idx).push_back(static_cast<Eigen::Index>(i));
            Eigen::VectorXd train_t(static_cast<Eigen::Index>(train_idx.size()));
            for (std::size_t i = 0; i < train_idx.size(); ++i) train_t(static_cast<Eigen::Index>(i)) = targets(train_idx[i]);
            const SVRModel model = svr_train(rows_of(x, train_idx), train_t, opts);
            const Eigen::VectorXd est = model.predict(rows_of(x, test_idx));
            for (std::size_t t = 0; t < test_idx.size(); ++t) sum(test_idx[t]) += est(static_cast<Eigen::Index>(t));
        }
    }
    return sum / static_cast<double>(repeats);
}

}  // namespace wormtopo
