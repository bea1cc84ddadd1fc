#pragma once

#include "wormtopo/homology.hpp"
#include "wormtopo/ingest.hpp"
#include "wormtopo/io.hpp"
#include "wormtopo/landscape.hpp"
#include "wormtopo/ml.hpp"
#include "wormtopo/stats.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wormtopo {

struct PipelineConfig {
    // input
    Eigen::Index dim = 100;
    double frame_rate_hz = 30.0;
    Eigen::Index project_k = 0;  // 0 keeps raw angles
    // topology
    Eigen::Index patch_length = 300;
    Eigen::Index overlap = 150;
    Eigen::Index window_length = 20;
    int max_dim = 2;
    std::optional<double> max_radius;  // unset: enclosing radius of each cloud
    int degree = 1;
    bool cap_essential = false;  // replace +inf deaths by the cloud's radius cap
    // landscapes
    double t_min = 0.0;
    std::optional<double> t_max;  // unset: largest finite death over the corpus
    Eigen::Index grid_samples = 501;
    Eigen::Index depths = 30;
    double significance = 0.25;
    // statistics and learning
    std::optional<std::uint64_t> seed;
    std::size_t n_perms = 10000;
    Eigen::Index pca_components = 10;
    std::size_t cv_folds = 10;
    std::size_t cv_repeats = 20;
    std::size_t svr_folds = 10;
    std::size_t svr_repeats = 10;
    KernelType kernel = KernelType::Rbf;
    std::optional<double> gamma;
    double cost = 10.0;
    double svr_epsilon = 0.1;
    bool standardize = false;
    std::map<std::string, double> targets;  // regression target per class label
    // case study
    Eigen::Index case_start = 0;
    std::size_t top_cycles = 3;
    // execution
    bool write_point_clouds = false;
    unsigned workers = 0;  // 0: hardware concurrency

    /// Recognised keys are those written by to_key_values; "target.<label>"
    /// sets a regression target. Unknown keys and bad values are
    /// ParameterErrors.
    static PipelineConfig from_key_values(const KeyValues& kv);
    /// Merges `kv` over this configuration.
    PipelineConfig with(const KeyValues& kv) const;
    KeyValues to_key_values() const;
    std::string hash() const { return config_hash(to_key_values()); }
    void validate() const;
    Grid grid(double t_max_value) const { return Grid{t_min, t_max_value, grid_samples}; }
    std::uint64_t require_seed(const std::string& stage) const;
};

struct Sample {
    std::string id;
    std::string label;
    TimeSeries series;
};

/// Topology of one point cloud.
struct CloudTopology {
    std::vector<PersistenceDiagram> diagrams;  // degrees 0..degree, essential deaths capped when requested
    double radius = 0.0;                       // filtration scale cap
};

CloudTopology cloud_topology(const PointCloud& pc, const PipelineConfig& config);

/// Mean over patches of the discretized landscapes of the chosen degree.
/// Essential pairs that survived capping are left out.
DiscretizedLandscape sample_landscape(const std::vector<std::vector<PersistenceDiagram>>& patch_diagrams,
                                      int degree, const Grid& grid, Eigen::Index depths);

struct SampleResult {
    std::string id;
    std::string label;
    std::vector<Eigen::Index> patch_starts;
    std::vector<std::vector<PersistenceDiagram>> diagrams;  // per patch
    DiscretizedLandscape landscape;
};

struct PermutationRow {
    std::string a;
    std::string b;
    PermutationResult result;
};

struct PipelineResult {
    std::string hash;
    Grid grid;
    std::vector<SampleResult> samples;
    std::vector<ClassSummary> classes;
    NormalizedDistances distances;
    std::optional<MDSEmbedding> mds;  // of the normalized class/origin distances
    std::optional<PCAResult> pca;     // over sample landscapes
    std::map<std::string, PCAResult> class_pca;
    std::map<std::string, Eigen::VectorXd> class_std;
    std::vector<PermutationRow> permutations;
    std::optional<CVReport> svm;
    std::optional<Eigen::VectorXd> svr;  // per sample, input order
    std::vector<std::string> notices;
};

/// Full corpus analysis. Writes every artifact under `out_dir` when it is
/// non-empty. Stage failures are rethrown with the stage name and sample id.
PipelineResult run_pipeline(const PipelineConfig& config, const std::vector<Sample>& samples,
                            const std::filesystem::path& out_dir);

struct CloudAnalysis {
    PointCloud cloud;
    CloudTopology topology;
    DiscretizedLandscape landscape;
    std::size_t significant = 0;
    std::vector<RepresentativeCycle> cycles;
    PCAResult pca;
    Eigen::MatrixXd projection;  // cloud in the top principal components
};

struct CaseStudyResult {
    std::string hash;
    Eigen::Index start = 0;  // first frame of the analysed segment
    Eigen::Index length = 0;
    CloudAnalysis raw;
    CloudAnalysis embedded;
};

/// Raw-versus-embedded comparison of the segment of `series` starting at
/// case_start with at most patch_length frames.
CaseStudyResult case_study(const PipelineConfig& config, const TimeSeries& series, const std::string& id,
                           const std::filesystem::path& out_dir);

/// Leading number of a label such as "1%" or "0.5", if any.
std::optional<double> numeric_label(const std::string& label);

}  // namespace wormtopo
