#pragma once

#include "xbench/configspace.hpp"
#include "xbench/runner.hpp"
#include "xbench/suite.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

/// Landscape features from a design of experiments, and multi-output trees that map
/// features to a full configuration (automated algorithm configuration, AAC).
namespace xbench::ela {

// ---------------------------------------------------------------------------
// Features

inline constexpr std::size_t kFeatureCount = 13;
inline constexpr int kDefaultSamples = 1024;
inline constexpr int kFeatureVersion = 1;
/// Ratio features whose denominator is zero (but numerator is not) report this cap.
inline constexpr double kRatioCap = 1e12;

/// Fixed, versioned order of the feature vector.
const std::array<std::string_view, kFeatureCount>& feature_names();

/// FNV-1a over the ELA feature names and the encoded columns of the shipped spaces;
/// changes whenever a model input layout changes.
std::uint64_t feature_order_hash();

using ElaFeatures = std::array<double, kFeatureCount>;

/// n x dim Latin hypercube in the box; one random point per stratum and dimension.
std::vector<std::vector<double>> latin_hypercube(int n, int dim, const suite::Bounds& bounds, std::uint64_t seed);

/// Features of an already evaluated sample. X rows are scaled to [0,1] with `bounds`
/// before distance features. Throws ValidationError when n < dim + 2 or values are not finite.
ElaFeatures compute_features(const std::vector<std::vector<double>>& X, std::span<const double> y,
                             const suite::Bounds& bounds);

/// Seeded LHS of n points, evaluated on `problem`, then compute_features.
ElaFeatures doe_features(suite::Problem& problem, int n = kDefaultSamples, std::uint64_t seed = 1);

// Pieces exposed for testing.
double skewness(std::span<const double> y);         // m3 / m2^1.5, 0 for constant samples
double excess_kurtosis(std::span<const double> y);  // m4 / m2^2 - 3, 0 for constant samples
double quantile(std::vector<double> v, double q);   // linear interpolation between order statistics

struct InstanceFeatures {
    int fid = 0;
    int dim = 0;
    int iid = 0;
    ElaFeatures values{};
};

/// Features for every (fid, dim, iid); the DOE seed is mix_seed(seed, fid, dim, iid).
/// Output order follows the input order regardless of `jobs`.
std::vector<InstanceFeatures> instance_features(const std::vector<std::array<int, 3>>& instances, int n,
                                                std::uint64_t seed, int jobs = 1);

std::string features_csv(const std::vector<InstanceFeatures>& rows);
std::vector<InstanceFeatures> parse_features(std::string_view csv_text);
std::vector<InstanceFeatures> load_features(const std::string& path);

// ---------------------------------------------------------------------------
// Multi-output trees

struct TreeNode {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    int left = -1;   // x[feature] < threshold
    int right = -1;
    Configuration value;  // leaf prediction
    std::size_t samples = 0;
    double impurity = 0.0;

    [[nodiscard]] bool is_leaf() const { return feature < 0; }
};

struct TreeParams {
    int max_depth = 7;
    int min_samples_split = 2;
    int max_features = 0;  // features tried per split; 0 = all
};

class MultiOutputTree {
public:
    std::vector<TreeNode> nodes;
    int n_features = 0;

    [[nodiscard]] const Configuration& predict(std::span<const double> x) const;
    [[nodiscard]] int depth() const;
    [[nodiscard]] std::size_t leaves() const;
};

/// Per-output impurity of a set of labels: Gini for categorical parameters, variance
/// of the encoded value (NA = -1) scaled into [0,1] for numeric ones; each is
/// normalized to [0,1] and the outputs are averaged.
double node_impurity(const std::vector<Configuration>& labels, std::span<const std::size_t> rows,
                     const ConfigurationSpace& space);

/// Sample-weighted impurity of the two children of a candidate split.
double split_impurity(const std::vector<std::vector<double>>& X, const std::vector<Configuration>& labels,
                      std::span<const std::size_t> rows, int feature, double threshold,
                      const ConfigurationSpace& space);

/// Aggregate labels into one valid configuration: per-output majority (categorical,
/// ties to the lowest label) or mean snapped to the nearest domain value (numeric),
/// decided in condition order. If the result violates a constraint, the label that
/// agrees with it on the most outputs is returned instead.
Configuration aggregate(const std::vector<Configuration>& labels, std::span<const std::size_t> rows,
                        const ConfigurationSpace& space);

/// Greedy CART on the averaged impurity. A node splits only when some threshold
/// strictly lowers it; ties go to the lowest feature, then the lowest threshold.
/// Throws ValidationError on fewer than 2 rows or invalid labels.
MultiOutputTree fit_tree(const std::vector<std::vector<double>>& X, const std::vector<Configuration>& labels,
                         const ConfigurationSpace& space, const TreeParams& params = {});

struct ForestParams {
    int n_trees = 100;
    int max_depth = 7;
    bool bootstrap = true;
    int max_features = -1;  // -1 = floor(sqrt(m)), 0 = all
    std::uint64_t seed = 1;
};

class Forest {
public:
    std::vector<MultiOutputTree> trees;
    std::vector<std::vector<int>> in_bag;  // per tree, draw count of each training row

    [[nodiscard]] Configuration predict(std::span<const double> x, const ConfigurationSpace& space) const;
    /// Fraction of training rows left out of at least one tree.
    [[nodiscard]] double oob_coverage() const;
};

Forest fit_forest(const std::vector<std::vector<double>>& X, const std::vector<Configuration>& labels,
                  const ConfigurationSpace& space, const ForestParams& params = {});

/// Indented if/else rules with the leaf configurations.
std::string tree_text(const MultiOutputTree& tree, const ConfigurationSpace& space);
std::string tree_json(const MultiOutputTree& tree, const ConfigurationSpace& space);

// ---------------------------------------------------------------------------
// AAC evaluation

enum class Mode { Lofo, Loio };
std::string_view to_string(Mode m);
Mode parse_mode(std::string_view text);

using Predictor = std::function<Configuration(std::span<const double> features)>;
/// Trains on feature rows and their single-best labels.
using Learner = std::function<Predictor(const std::vector<std::vector<double>>& X, const std::vector<Configuration>& labels)>;

Learner tree_learner(const ConfigurationSpace& space, TreeParams params = {});
Learner forest_learner(const ConfigurationSpace& space, ForestParams params = {});

/// One (fid, dim, iid) with its features and the per-config mean AOCC over reps.
struct AacInstance {
    int fid = 0;
    int dim = 0;
    int iid = 0;
    std::vector<double> features;
    std::string single_best;   // ties to the lowest config_id
    double single_best_aocc = 0.0;
    std::map<std::string, double> aocc;  // config_id -> mean AOCC
    std::map<std::string, Configuration> configs;
};

/// Joins run records and instance features; instances without features or runs
/// are dropped. Failed records are ignored.
std::vector<AacInstance> aac_instances(const std::vector<runner::RunRecord>& records,
                                       const std::vector<InstanceFeatures>& features);

struct LossRow {
    Mode mode = Mode::Lofo;
    int fold = 0;  // held-out fid (LOFO) or iid (LOIO)
    int fid = 0;
    int dim = 0;
    int iid = 0;
    std::string single_best;
    double single_best_aocc = 0.0;
    std::string predicted;     // config_id of the prediction
    std::string evaluated;     // config_id actually looked up (differs on fallback)
    bool fallback = false;
    double predicted_aocc = 0.0;
    double loss = 0.0;
    std::string avg_best;      // avg-best over the training instances
    double avg_best_loss = 0.0;
    double random_loss = 0.0;  // single-best minus the mean over all recorded configs
};

/// Leave-one-function-out or leave-one-instance-out, per dimension. A prediction
/// without a record on the held-out instance is replaced by the recorded
/// configuration with the fewest differing outputs (ties to the lowest id) and
/// flagged as fallback.
std::vector<LossRow> evaluate_aac(const std::vector<AacInstance>& instances, const ConfigurationSpace& space,
                                  Mode mode, const Learner& learner);

std::string loss_csv(const std::vector<LossRow>& rows);

struct LossSummary {
    double mean_loss = 0.0;
    double mean_avg_best_loss = 0.0;
    double mean_random_loss = 0.0;
    std::size_t fallbacks = 0;
    std::size_t rows = 0;
};
LossSummary summarize(const std::vector<LossRow>& rows);

}  // namespace xbench::ela
