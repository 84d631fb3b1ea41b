#pragma once

#include "xbench/configspace.hpp"
#include "xbench/optimizer.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

/// Structural-bias detection on the uniform-fitness function f0.
namespace xbench::bias {

using Optimizer = std::function<RunResult(Objective&, long budget, std::uint64_t seed)>;

Optimizer optimizer_for(const Configuration& config, const ConfigurationSpace& space);

inline constexpr int kMinRuns = 30;
inline constexpr int kDefaultRuns = 100;
inline constexpr long kDefaultBudget = 1000;
inline constexpr double kDefaultAlpha = 0.01;

/// n_runs x dim matrix of final best positions scaled to [0,1]. Run r optimizes
/// make_f0(dim, seed0 + r) with optimizer seed mix_seed(seed0, r). Rows are in run
/// order regardless of `jobs`.
std::vector<std::vector<double>> collect_f0(const Optimizer& optimizer, int dim, int n_runs, long budget,
                                            std::uint64_t seed0, int jobs = 1);

inline constexpr double kDistinctTolerance = 1e-4;

struct DimensionTest {
    double statistic = 0.0;  // Anderson-Darling A^2
    double p_ad = 1.0;
    std::size_t ties = 0;    // adjacent sorted values closer than kDistinctTolerance
    double p_ties = 1.0;     // upper binomial tail of the near-tie count under U(0,1)
    double p = 1.0;          // Bonferroni combination: min(1, 2 min(p_ad, p_ties))
};

/// A^2 of a sample against U(0,1); values are clamped to [1e-12, 1 - 1e-12] for the logs.
double anderson_darling_statistic(std::span<const double> sample);
/// P(A^2 >= z) for sample size n (Marsaglia & Marsaglia finite-n approximation).
double anderson_darling_p(double z, std::size_t n);

/// P(at least this many near ties) for a U(0,1) sample of the same size.
double near_tie_p(std::span<const double> sample, std::size_t* ties = nullptr);

/// Per-dimension AD and near-tie tests; throws on fewer than kMinRuns rows or values
/// outside [0,1].
std::vector<DimensionTest> uniformity_test(const std::vector<std::vector<double>>& positions);

enum class Verdict { None, Centre, Bounds, GapsClusters, Discretization };
std::string_view to_string(Verdict v);

inline constexpr double kCentreLow = 0.25;
inline constexpr double kCentreHigh = 0.75;
inline constexpr double kBoundaryWidth = 0.05;
inline constexpr double kBoundaryExpected = 0.1;
inline constexpr int kHistogramBins = 20;

struct Evidence {
    double central_mass = 0.0;      // fraction in [0.25, 0.75] over rejecting dimensions
    double central_p = 1.0;         // one-sided binomial vs 0.5
    bool central_mode = false;      // histogram mode inside the window and tails lighter than the middle
    double boundary_mass = 0.0;     // fraction in [0, 0.05] u [0.95, 1]
    double boundary_p = 1.0;        // one-sided binomial vs 0.1
    double median_distinct = 0.0;   // distinct values per dimension (gaps > 1e-4)
};

Evidence gather_evidence(const std::vector<std::vector<double>>& positions, const std::vector<DimensionTest>& tests,
                         double alpha = kDefaultAlpha);

/// none unless some dimension has p < alpha / dim. Then, in order: bounds,
/// discretization (2 <= median distinct < n/5), centre (significant central mass with
/// a central mode), otherwise gaps/clusters.
Verdict classify(const std::vector<std::vector<double>>& positions, const std::vector<DimensionTest>& tests,
                 double alpha = kDefaultAlpha);

struct BiasReport {
    std::string config_id;
    int dim = 0;
    int n_runs = 0;
    long budget = 0;
    std::vector<DimensionTest> tests;
    Verdict verdict = Verdict::None;
    Evidence evidence;
    std::vector<std::vector<int>> histograms;  // per dimension, kHistogramBins counts

    [[nodiscard]] double min_p() const;
};

std::vector<std::vector<int>> histograms(const std::vector<std::vector<double>>& positions, int bins = kHistogramBins);

BiasReport analyze(const std::vector<std::vector<double>>& positions, std::string config_id, long budget,
                   double alpha = kDefaultAlpha);

/// collect_f0 + analyze for a configuration.
BiasReport run_bias(const Configuration& config, const ConfigurationSpace& space, int dim, int n_runs = kDefaultRuns,
                    long budget = kDefaultBudget, std::uint64_t seed0 = 1, int jobs = 1, double alpha = kDefaultAlpha);

std::string reports_csv(const std::vector<BiasReport>& reports);
std::string histogram_json(const BiasReport& report);

}  // namespace xbench::bias
