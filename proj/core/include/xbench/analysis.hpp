#pragma once

#include "xbench/configspace.hpp"
#include "xbench/runner.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

/// Rankings, gains, significance tests, module effects and framework comparison
/// over run-record datasets. Failed rows are ignored everywhere.
namespace xbench::analysis {

using runner::RunRecord;

struct ScoreStat {
    std::string config_id;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation, 0 for a single run
    std::vector<double> runs;
};

double mean(std::span<const double> v);
double sample_std(std::span<const double> v);

/// Runs of every configuration on (fid, dim), keyed by config_id.
std::map<std::string, std::vector<double>> runs_by_config(const std::vector<RunRecord>& records, int fid, int dim);

std::vector<int> fids_of(const std::vector<RunRecord>& records, int dim);
std::vector<int> dims_of(const std::vector<RunRecord>& records);

/// argmax of the per-config mean AOCC on (fid, dim); ties go to the lowest config_id.
ScoreStat single_best(const std::vector<RunRecord>& records, int fid, int dim);

struct AvgBest {
    std::string config_id;
    double mean = 0.0;                  // mean over fids of per-fid means
    std::map<int, ScoreStat> per_fid;
};

/// argmax over configs present on every fid of the mean of per-fid means.
AvgBest avg_best(const std::vector<RunRecord>& records, int dim);

/// All runs on (fid, dim) pooled over configurations.
ScoreStat all_configs(const std::vector<RunRecord>& records, int fid, int dim);

struct Gains {
    double avg_performance = 0.0;
    double gain_avg_best = 0.0;
    double gain_single_best = 0.0;
};

Gains gains(const std::vector<RunRecord>& records, int dim);

struct MannWhitney {
    double u = 0.0;  // U statistic of the first sample
    double p = 1.0;  // two-sided
    bool exact = false;
};

inline constexpr std::size_t kExactMaxSample = 8;
inline constexpr double kAlpha = 0.05;

/// Exact permutation distribution of the midrank sum (handles ties).
MannWhitney mann_whitney_exact(std::span<const double> a, std::span<const double> b);
/// Tie-corrected normal approximation with continuity correction.
MannWhitney mann_whitney_normal(std::span<const double> a, std::span<const double> b);
/// Exact when both samples have at most kExactMaxSample values.
MannWhitney mann_whitney(std::span<const double> a, std::span<const double> b);
double significance(std::span<const double> a, std::span<const double> b);

/// Higher mean and p < alpha.
bool improves(std::span<const double> a, std::span<const double> b, double alpha = kAlpha);

struct EffectDelta {
    std::string config_id;
    std::string module;
    std::string option;
    std::optional<double> delta;  // empty: no matched alternative in the dataset
    std::size_t alternatives = 0;

    [[nodiscard]] bool estimable() const { return delta.has_value(); }
};

/// For each parameter: mean(config) - mean over the per-config means of configs that
/// differ from `config` only in that parameter.
std::vector<EffectDelta> module_effects(const std::vector<RunRecord>& records, const ConfigurationSpace& space,
                                        const Configuration& config, int fid, int dim);

struct RankingRow {
    int fid = 0;
    int dim = 0;
    ScoreStat single_best;
    ScoreStat avg_best;  // the dimension's avg-best config on this fid
    ScoreStat all;
    bool single_over_avg = false;
    bool single_over_all = false;
    bool avg_over_all = false;
};

std::vector<RankingRow> ranking_table(const std::vector<RunRecord>& records, int dim);

struct HallOfFameEntry {
    std::string label;  // "avg-best" or "f<fid>"
    Configuration config;
    std::string config_id;
    double mean = 0.0;
    std::vector<EffectDelta> effects;  // avg-best: per-fid deltas averaged where estimable on every fid
};

std::vector<HallOfFameEntry> hall_of_fame(const std::vector<RunRecord>& records, const ConfigurationSpace& space, int dim);

struct ComparisonRow {
    int fid = 0;
    int dim = 0;
    ScoreStat a[3];  // single-best, avg-best, all
    ScoreStat b[3];
    bool a_better[3] = {false, false, false};
    bool b_better[3] = {false, false, false};
};

std::vector<ComparisonRow> compare_frameworks(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b, int dim);

// Reports. Markdown tables mark significant improvements in bold.
std::string ranking_markdown(const std::vector<RankingRow>& rows);
std::string ranking_csv(const std::vector<RankingRow>& rows);
std::string gains_markdown(const std::map<int, Gains>& by_dim, const std::string& family);
std::string gains_csv(const std::map<int, Gains>& by_dim);
std::string hall_of_fame_markdown(const std::vector<HallOfFameEntry>& entries, const ConfigurationSpace& space, int dim);
std::string hall_of_fame_csv(const std::vector<HallOfFameEntry>& entries, int dim);
std::string comparison_markdown(const std::vector<ComparisonRow>& rows, const std::string& name_a, const std::string& name_b);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

}  // namespace xbench::analysis
