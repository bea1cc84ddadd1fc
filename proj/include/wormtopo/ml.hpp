#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace wormtopo {

enum class KernelType { Linear, Rbf };

/// Kernel choice; an unset gamma is resolved from the data by the median
/// heuristic, gamma = 1 / median of squared pairwise distances.
struct KernelSpec {
    KernelType type = KernelType::Rbf;
    std::optional<double> gamma;
};

struct Kernel {
    KernelType type = KernelType::Rbf;
    double gamma = 1.0;

    double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                      const Eigen::Ref<const Eigen::RowVectorXd>& b) const;
    /// K(a_i, b_j) for all rows.
    Eigen::MatrixXd matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const;
};

double median_heuristic_gamma(const Eigen::MatrixXd& x);
Kernel resolve_kernel(const KernelSpec& spec, const Eigen::MatrixXd& x);

/// Solver for  min 0.5 a'Qa + p'a  s.t.  y'a = const, 0 <= a_i <= C_i,
/// with y_i in {-1, +1}, by SMO on the maximal violating pair.
struct SmoProblem {
    Eigen::MatrixXd q;  // Q_ij = y_i y_j K_ij
    Eigen::VectorXd p;
    Eigen::VectorXd y;
    Eigen::VectorXd upper;
};

struct SmoResult {
    Eigen::VectorXd alpha;
    double rho = 0.0;
    double objective = 0.0;
    double kkt_violation = 0.0;  // m(alpha) - M(alpha) at exit
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // filled when requested
};

SmoResult solve_smo(const SmoProblem& problem, double tol = 1e-3, std::size_t max_iter = 1'000'000,
                    bool trace_objective = false);

struct SVMOptions {
    KernelSpec kernel;
    double cost = 10.0;
    double tol = 1e-3;
    std::size_t max_iter = 1'000'000;
    bool standardize = false;
};

struct BinarySVM {
    int positive = 0;  // class id voted for by a positive decision value
    int negative = 0;
    std::vector<Eigen::Index> support;  // rows of the training matrix
    Eigen::VectorXd coef;               // y_i alpha_i of each support vector
    Eigen::VectorXd alpha;              // all dual coefficients, training order of the pair
    double rho = 0.0;
    double kkt_violation = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

struct SVMModel {
    Kernel kernel;
    double cost = 10.0;
    std::vector<int> classes;  // sorted class ids
    Eigen::MatrixXd train;     // transformed training rows
    Eigen::RowVectorXd shift;  // feature transform: (x - shift) / scale
    Eigen::RowVectorXd scale;
    std::vector<BinarySVM> pairs;

    Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
    /// Majority vote over the one-vs-one machines; ties go to the class with
    /// the larger summed decision value in its favour.
    std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

/// One-vs-one C-SVC. Requires at least two distinct classes.
SVMModel svm_train(const Eigen::MatrixXd& x, const std::vector<int>& y, const SVMOptions& options = {});

struct CVReport {
    double accuracy_mean = 0.0;
    std::vector<double> per_repeat;
    std::vector<int> classes;
    Eigen::MatrixXi confusion;  // first repeat; rows truth, columns predicted
    double gamma = 0.0;         // resolved kernel bandwidth
};

/// Repeated stratified k-fold cross-validation. Repeat r draws its fold
/// assignment from stream r of `seed`.
CVReport svm_cross_validate(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t folds = 10,
                            std::size_t repeats = 20, std::uint64_t seed = 0, const SVMOptions& options = {});

struct SVROptions {
    KernelSpec kernel;
    double cost = 10.0;
    double epsilon = 0.1;  // on standardized targets
    double tol = 1e-3;
    std::size_t max_iter = 1'000'000;
    bool standardize = false;
};

struct SVRModel {
    Kernel kernel;
    double cost = 10.0;
    double epsilon = 0.1;
    Eigen::MatrixXd train;
    Eigen::RowVectorXd shift;
    Eigen::RowVectorXd scale;
    Eigen::VectorXd coef;  // alpha_i - alpha_i^*
    double rho = 0.0;
    double target_mean = 0.0;
    double target_scale = 1.0;  // 0 for a constant predictor
    SmoResult solver;

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Epsilon-insensitive SVR on standardized targets; constant targets give a
/// constant predictor.
SVRModel svr_train(const Eigen::MatrixXd& x, const Eigen::VectorXd& targets, const SVROptions& options = {});

/// Out-of-fold estimate for every sample, averaged over `repeats` random
/// partitions into `folds` parts.
Eigen::VectorXd svr_fit_predict(const Eigen::MatrixXd& x, const Eigen::VectorXd& targets, std::size_t folds = 10,
                                std::size_t repeats = 10, std::uint64_t seed = 0, const SVROptions& options = {});

}  // namespace wormtopo
