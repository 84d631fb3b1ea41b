#pragma once

#include "xbench/configspace.hpp"
#include "xbench/runner.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <string>
#include <vector>

/// Gradient-boosted regression trees (squared error, exact greedy splits) and
/// path-dependent TreeSHAP attributions.
namespace xbench::gbdt {

/// Feature-count limit (coalition masks are 32-bit).
inline constexpr int kMaxFeatures = 32;

struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;  // x[feature] < threshold goes left
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output
    double cover = 0.0;  // training samples reaching the node

    [[nodiscard]] bool is_leaf() const { return feature < 0; }
};

/// Nodes in pre-order; the root is nodes[0].
struct Tree {
    std::vector<Node> nodes;

    [[nodiscard]] double predict(std::span<const double> x) const;
    [[nodiscard]] int depth() const;
    /// Cover-weighted mean of the leaves.
    [[nodiscard]] double expected_value() const;
};

struct Ensemble {
    int n_features = 0;
    double base_score = 0.0;
    double learning_rate = 0.3;
    std::vector<Tree> trees;

    /// base_score + eta * sum_t tree_t(x). Throws on width mismatch or non-finite input.
    [[nodiscard]] double predict(std::span<const double> x) const;
};

struct FitParams {
    int max_depth = 10;
    int n_trees = 300;
    double learning_rate = 0.3;
    int min_leaf = 1;
};

/// Exact greedy boosting. A node is split whenever its residuals are not all
/// equal and a split respecting min_leaf exists; the split maximizing the SSE
/// reduction wins, ties going to the lowest feature index, then the lowest
/// threshold. Constant targets give a zero-tree ensemble.
Ensemble fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y, const FitParams& params = {});

double r2_score(std::span<const double> y, std::span<const double> prediction);

struct Explanation {
    double base = 0.0;         // expected model output
    std::vector<double> phi;   // one attribution per feature
};

/// Path-dependent TreeSHAP for one tree (unscaled leaf values).
std::vector<double> tree_shap(const Tree& tree, std::span<const double> x, int n_features);
Explanation tree_shap(const Ensemble& ensemble, std::span<const double> x);

inline constexpr int kBruteForceMaxFeatures = 15;

/// Exact Shapley values by enumerating all coalitions with the same cover-weighted
/// conditional expectation TreeSHAP uses. Throws above kBruteForceMaxFeatures.
Explanation brute_shap(const Ensemble& ensemble, std::span<const double> x);

/// Cover-weighted expectation of the ensemble with the features in `mask` fixed to x.
double conditional_expectation(const Ensemble& ensemble, std::span<const double> x, std::uint32_t mask);

std::string to_json(const Ensemble& ensemble);
/// Validates structure: node links, finite thresholds, positive covers, parent
/// cover = sum of child covers.
Ensemble from_json(std::string_view text);

// ---------------------------------------------------------------------------
// Dataset-level explanation

struct SwarmRow {
    int fid = 0;
    int dim = 0;
    std::size_t record_idx = 0;
    std::string feature;
    double encoded_value = 0.0;
    double shap = 0.0;
};

struct FeatureImportance {
    std::string feature;
    double mean_abs_shap = 0.0;
};

struct GroupModel {
    int fid = 0;
    int dim = 0;
    Ensemble model;
    double r2 = 0.0;
    std::size_t n_records = 0;
    std::vector<SwarmRow> rows;
    std::vector<FeatureImportance> ranking;  // descending mean |phi|, ties by name
};

/// One model per (fid, dim) group, fitted on feature_frame columns; record_idx is
/// the position inside the group. Groups are fitted on up to `jobs` threads.
std::vector<GroupModel> explain(const std::vector<runner::RunRecord>& records, const ConfigurationSpace& space,
                                const FitParams& params = {}, int jobs = 1);

std::vector<SwarmRow> swarm_data(const runner::FeatureFrame& frame, const Ensemble& model, int fid, int dim);
std::vector<FeatureImportance> importance_ranking(const std::vector<SwarmRow>& rows);

std::string swarm_csv(const std::vector<GroupModel>& groups);
std::string importance_csv(const std::vector<GroupModel>& groups);
/// Beeswarm-style SVG for one group: one row per feature, x = SHAP value,
/// colour = encoded value (low blue to high red).
std::string swarm_svg(const GroupModel& group);

}  // namespace xbench::gbdt
