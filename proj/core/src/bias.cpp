#include "xbench/bias.hpp"

#include "xbench/common.hpp"
#include "xbench/runner.hpp"
#include "xbench/suite.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace xbench::bias {

namespace {

// Marsaglia & Marsaglia (2004), asymptotic CDF of A^2.
double adinf(double z) {
    if (z < 2.0) {
        return std::exp(-1.2337141 / z) / std::sqrt(z) *
               (2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z);
    }
    return std::exp(-std::exp(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z));
}

constexpr double kErrfixResidual =
    -130.2137 + 745.2337 - 1705.091 + 1950.646 - 1116.360 + 255.7844;

// Finite-n correction to adinf.
double errfix(double n, double x) {
    if (x > 0.8) {
        // The published polynomial leaves -0.0006 at x = 1; that residual is removed
        // linearly over (0.8, 1] so p-values can reach 0 in the far tail.
        const double g = -130.2137 + (745.2337 - (1705.091 - (1950.646 - (1116.360 - 255.7844 * x) * x) * x) * x) * x;
        return (g - kErrfixResidual * (x - 0.8) / 0.2) / n;
    }
    const double c = 0.01265 + 0.1757 / n;
    if (x < c) {
        double t = x / c;
        t = std::sqrt(t) * (1.0 - t) * (49.0 * t - 102.0);
        return t * (0.0037 / (n * n) + 0.00078 / n + 0.00006) / n;
    }
    double t = (x - c) / (0.8 - c);
    t = -0.00022633 + (6.54034 - (14.6538 - (14.458 - (8.259 - 1.91864 * t) * t) * t) * t) * t;
    return t * (0.04213 / n + 0.01365 / (n * n)) / n;
}

double binomial_upper_p(std::size_t hits, std::size_t n, double p0) {
    if (n == 0 || hits == 0) return 1.0;
    const boost::math::binomial_distribution<double> dist(static_cast<double>(n), p0);
    return boost::math::cdf(boost::math::complement(dist, static_cast<double>(hits - 1)));
}

int distinct_count(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    int count = 1;
    for (std::size_t i = 1; i < v.size(); ++i) count += v[i] - v[i - 1] > kDistinctTolerance;
    return count;
}

void check_positions(const std::vector<std::vector<double>>& positions) {
    if (positions.size() < static_cast<std::size_t>(kMinRuns)) {
        throw ValidationError("bias: need at least " + std::to_string(kMinRuns) + " runs, got " +
                              std::to_string(positions.size()));
    }
    const std::size_t dim = positions.front().size();
    if (dim == 0) throw ValidationError("bias: zero-dimensional positions");
    for (const auto& row : positions) {
        if (row.size() != dim) throw ValidationError("bias: ragged position matrix");
        for (double v : row) {
            if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("bias: position " + format_double(v) + " outside [0, 1]");
        }
    }
}

std::vector<double> column(const std::vector<std::vector<double>>& positions, std::size_t j) {
    std::vector<double> out;
    out.reserve(positions.size());
    for (const auto& row : positions) out.push_back(row[j]);
    return out;
}

std::vector<std::size_t> rejecting(const std::vector<DimensionTest>& tests, double alpha) {
    std::vector<std::size_t> out;
    const double level = alpha / static_cast<double>(tests.size());
    for (std::size_t j = 0; j < tests.size(); ++j) {
        if (tests[j].p < level) out.push_back(j);
    }
    return out;
}

}  // namespace

Optimizer optimizer_for(const Configuration& config, const ConfigurationSpace& space) {
    return [config, space](Objective& objective, long budget, std::uint64_t seed) {
        return runner::run_configuration(config, space, objective, budget, seed);
    };
}

std::vector<std::vector<double>> collect_f0(const Optimizer& optimizer, int dim, int n_runs, long budget,
                                            std::uint64_t seed0, int jobs) {
    if (n_runs < kMinRuns) throw ValidationError("bias: n_runs must be at least " + std::to_string(kMinRuns));
    if (dim < 1) throw ValidationError("bias: dim must be positive");
    if (budget < 1) throw ValidationError("bias: budget must be positive");
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(n_runs));
    std::vector<std::string> errors(rows.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < rows.size(); r = next++) {
            try {
                auto problem = suite::make_f0(dim, seed0 + r);
                const auto bounds = problem.bounds();
                Objective objective{dim, bounds, [&](std::span<const double> x) { return problem.evaluate(x); }};
                const auto result = optimizer(objective, budget, mix_seed(seed0, r));
                if (result.best_x.size() != static_cast<std::size_t>(dim)) {
                    throw ValidationError("optimizer returned no incumbent");
                }
                auto& row = rows[r];
                for (double v : result.best_x) {
                    row.push_back(std::clamp((v - bounds.lower) / (bounds.upper - bounds.lower), 0.0, 1.0));
                }
            } catch (const std::exception& e) {
                errors[r] = e.what();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const int n = std::clamp(jobs, 1, n_runs);
        for (int t = 1; t < n; ++t) pool.emplace_back(worker);
        worker();
    }
    for (std::size_t r = 0; r < errors.size(); ++r) {
        if (!errors[r].empty()) throw std::runtime_error("bias: run " + std::to_string(r) + " failed: " + errors[r]);
    }
    return rows;
}

double anderson_darling_statistic(std::span<const double> sample) {
    if (sample.empty()) throw ValidationError("anderson_darling: empty sample");
    std::vector<double> u(sample.begin(), sample.end());
    for (double& v : u) v = std::clamp(v, 1e-12, 1.0 - 1e-12);
    std::sort(u.begin(), u.end());
    const auto n = u.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += static_cast<double>(2 * i + 1) * (std::log(u[i]) + std::log1p(-u[n - 1 - i]));
    }
    return -static_cast<double>(n) - s / static_cast<double>(n);
}

double anderson_darling_p(double z, std::size_t n) {
    if (!(z > 0.0)) return 1.0;
    const double x = adinf(z);
    // upper tail of adinf without cancellation
    const double tail = z < 2.0 ? 1.0 - x
                                : -std::expm1(-std::exp(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z));
    return std::clamp(tail - errfix(static_cast<double>(n), x), 0.0, 1.0);
}

double near_tie_p(std::span<const double> sample, std::size_t* ties_out) {
    std::vector<double> v(sample.begin(), sample.end());
    std::sort(v.begin(), v.end());
    std::size_t ties = 0;
    for (std::size_t i = 1; i < v.size(); ++i) ties += v[i] - v[i - 1] <= kDistinctTolerance;
    if (ties_out) *ties_out = ties;
    if (v.size() < 2) return 1.0;
    // a uniform spacing is Beta(1, n): P(spacing <= t) = 1 - (1 - t)^n
    const double q = -std::expm1(static_cast<double>(v.size()) * std::log1p(-kDistinctTolerance));
    return binomial_upper_p(ties, v.size() - 1, q);
}

std::vector<DimensionTest> uniformity_test(const std::vector<std::vector<double>>& positions) {
    check_positions(positions);
    std::vector<DimensionTest> out;
    for (std::size_t j = 0; j < positions.front().size(); ++j) {
        const auto col = column(positions, j);
        DimensionTest t;
        t.statistic = anderson_darling_statistic(col);
        t.p_ad = anderson_darling_p(t.statistic, col.size());
        t.p_ties = near_tie_p(col, &t.ties);
        t.p = std::min(1.0, 2.0 * std::min(t.p_ad, t.p_ties));
        out.push_back(t);
    }
    return out;
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::None: return "none";
        case Verdict::Centre: return "centre";
        case Verdict::Bounds: return "bounds";
        case Verdict::GapsClusters: return "gaps/clusters";
        case Verdict::Discretization: return "discretization";
    }
    return "?";
}

Evidence gather_evidence(const std::vector<std::vector<double>>& positions, const std::vector<DimensionTest>& tests,
                         double alpha) {
    check_positions(positions);
    Evidence e;
    auto dims = rejecting(tests, alpha);
    if (dims.empty()) {
        for (std::size_t j = 0; j < tests.size(); ++j) dims.push_back(j);
    }
    std::vector<double> pooled;
    std::vector<int> distinct;
    for (std::size_t j : dims) {
        const auto col = column(positions, j);
        pooled.insert(pooled.end(), col.begin(), col.end());
        distinct.push_back(distinct_count(col));
    }
    std::size_t central = 0;
    std::size_t boundary = 0;
    std::vector<std::size_t> hist(kHistogramBins, 0);
    for (double v : pooled) {
        central += v >= kCentreLow && v <= kCentreHigh;
        boundary += v <= kBoundaryWidth || v >= 1.0 - kBoundaryWidth;
        ++hist[std::min<std::size_t>(static_cast<std::size_t>(v * kHistogramBins), kHistogramBins - 1)];
    }
    const auto n = pooled.size();
    e.central_mass = static_cast<double>(central) / static_cast<double>(n);
    e.central_p = binomial_upper_p(central, n, 0.5);
    e.boundary_mass = static_cast<double>(boundary) / static_cast<double>(n);
    e.boundary_p = binomial_upper_p(boundary, n, kBoundaryExpected);

    const auto mode = static_cast<std::size_t>(std::max_element(hist.begin(), hist.end()) - hist.begin());
    const auto lo = static_cast<std::size_t>(kCentreLow * kHistogramBins);
    const auto hi = static_cast<std::size_t>(kCentreHigh * kHistogramBins);
    std::size_t left = 0, middle = 0, right = 0;
    for (std::size_t b = 0; b < hist.size(); ++b) (b < lo ? left : b < hi ? middle : right) += hist[b];
    e.central_mode = mode >= lo && mode < hi && left < middle && right < middle;

    std::sort(distinct.begin(), distinct.end());
    const auto m = distinct.size();
    e.median_distinct = m % 2 ? distinct[m / 2] : (distinct[m / 2 - 1] + distinct[m / 2]) / 2.0;
    return e;
}

Verdict classify(const std::vector<std::vector<double>>& positions, const std::vector<DimensionTest>& tests,
                 double alpha) {
    if (tests.size() != positions.front().size()) throw ValidationError("bias: tests do not match the positions");
    if (rejecting(tests, alpha).empty()) return Verdict::None;
    const auto e = gather_evidence(positions, tests, alpha);
    const double n = static_cast<double>(positions.size());
    if (e.boundary_mass > kBoundaryExpected && e.boundary_p < alpha) return Verdict::Bounds;
    if (e.median_distinct >= 2 && e.median_distinct < n / 5.0) return Verdict::Discretization;
    if (e.central_mass > 0.5 && e.central_p < alpha && e.central_mode) return Verdict::Centre;
    return Verdict::GapsClusters;
}

double BiasReport::min_p() const {
    double p = 1.0;
    for (const auto& t : tests) p = std::min(p, t.p);
    return p;
}

std::vector<std::vector<int>> histograms(const std::vector<std::vector<double>>& positions, int bins) {
    check_positions(positions);
    std::vector<std::vector<int>> out(positions.front().size(), std::vector<int>(static_cast<std::size_t>(bins), 0));
    for (const auto& row : positions) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            const auto b = std::min(static_cast<int>(row[j] * bins), bins - 1);
            ++out[j][static_cast<std::size_t>(b)];
        }
    }
    return out;
}

BiasReport analyze(const std::vector<std::vector<double>>& positions, std::string config_id, long budget, double alpha) {
    BiasReport r;
    r.config_id = std::move(config_id);
    r.dim = static_cast<int>(positions.empty() ? 0 : positions.front().size());
    r.n_runs = static_cast<int>(positions.size());
    r.budget = budget;
    r.tests = uniformity_test(positions);
    r.verdict = classify(positions, r.tests, alpha);
    r.evidence = gather_evidence(positions, r.tests, alpha);
    r.histograms = histograms(positions);
    return r;
}

BiasReport run_bias(const Configuration& config, const ConfigurationSpace& space, int dim, int n_runs, long budget,
                    std::uint64_t seed0, int jobs, double alpha) {
    const auto positions = collect_f0(optimizer_for(config, space), dim, n_runs, budget, seed0, jobs);
    return analyze(positions, xbench::config_id(config, space), budget, alpha);
}

std::string reports_csv(const std::vector<BiasReport>& reports) {
    std::ostringstream os;
    os << "config_id,dim,verdict,min_p,n_runs,budget,central_mass,boundary_mass,median_distinct,p_values\n";
    for (const auto& r : reports) {
        os << r.config_id << ',' << r.dim << ',' << to_string(r.verdict) << ',' << format_double(r.min_p()) << ','
           << r.n_runs << ',' << r.budget << ',' << format_double(r.evidence.central_mass) << ','
           << format_double(r.evidence.boundary_mass) << ',' << format_double(r.evidence.median_distinct) << ',';
        for (std::size_t j = 0; j < r.tests.size(); ++j) os << (j ? ";" : "") << format_double(r.tests[j].p);
        os << '\n';
    }
    return os.str();
}

std::string histogram_json(const BiasReport& report) {
    nlohmann::ordered_json doc;
    doc["config_id"] = report.config_id;
    doc["dim"] = report.dim;
    doc["n_runs"] = report.n_runs;
    doc["budget"] = report.budget;
    doc["verdict"] = std::string(to_string(report.verdict));
    doc["bins"] = kHistogramBins;
    auto dims = nlohmann::ordered_json::array();
    for (std::size_t j = 0; j < report.histograms.size(); ++j) {
        dims.push_back({{"dimension", j},
                        {"ad_statistic", report.tests[j].statistic},
                        {"p_ad", report.tests[j].p_ad},
                        {"near_ties", report.tests[j].ties},
                        {"p_ties", report.tests[j].p_ties},
                        {"p", report.tests[j].p},
                        {"counts", report.histograms[j]}});
    }
    doc["dimensions"] = std::move(dims);
    return doc.dump(1) + "\n";
}

}  // namespace xbench::bias
