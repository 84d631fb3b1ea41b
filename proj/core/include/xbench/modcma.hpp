#pragma once

#include "xbench/common.hpp"
#include "xbench/configspace.hpp"
#include "xbench/optimizer.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <vector>

/// Modular CMA-ES. Every Table-of-modules option is a switch on one
/// (mu/mu_w, lambda)-CMA-ES loop:
///   sample -> saturate to the box -> evaluate -> rank -> update (mean, paths,
///   covariance, step size) -> optional restart.
namespace xbench::modcma {

enum class BaseSampler { Gaussian, Halton, Sobol };
enum class Mirror { Off, Mirrored, Pairwise };
enum class Weights { Default, Equal, LambdaDecay };
enum class StepSize { CSA, PSR };
enum class Restart { None, IPOP, BIPOP };

struct CmaConfig {
    bool covariance = true;
    bool active = false;
    BaseSampler sampler = BaseSampler::Gaussian;
    bool elitist = false;
    Mirror mirrored = Mirror::Off;
    Weights weights = Weights::Default;
    StepSize ssa = StepSize::CSA;
    Restart restart = Restart::None;
    int lambda = 8;
    int mu = 4;
};

CmaConfig from_configuration(const Configuration& config, const ConfigurationSpace& space);

/// 4 + floor(3 ln d)
int default_lambda(int dim);

/// Unnormalized lambda-decay weights 1/2^i + 1/(lambda 2^lambda), i = 1..count.
std::vector<double> lambda_decay_raw(int lambda, int count);

/// Positive recombination weights, length mu, summing to 1.
/// default: ln(max((lambda+1)/2, mu+1/2)) - ln i (the max keeps all mu weights
/// positive when mu > lambda/2); equal: 1/mu; lambda-decay: normalized raw values.
std::vector<double> recombination_weights(Weights kind, int lambda, int mu);

// ---------------------------------------------------------------------------
// Samplers

/// Standard normal quantile; p outside (0,1) gives -inf / +inf.
double inverse_normal_cdf(double p);

/// Raw (unshifted) Sobol point `index` (0-based) in [0,1)^dim.
std::vector<double> sobol_raw_point(int dim, std::uint64_t index);

/// Raw Halton point `index` (1-based) using the first `dim` primes.
std::vector<double> halton_raw_point(int dim, std::uint64_t index);

std::vector<int> first_primes(int count);

/// Produces standard-normal-like vectors z. Halton points get a per-run random
/// Cranley-Patterson shift, Sobol points a per-run random digital (XOR) shift;
/// both go through the normal quantile coordinate-wise.
class DirectionSampler {
public:
    DirectionSampler(BaseSampler kind, int dim, Rng& rng);
    DirectionSampler(const DirectionSampler&);
    DirectionSampler& operator=(const DirectionSampler&);
    DirectionSampler(DirectionSampler&&) noexcept;
    DirectionSampler& operator=(DirectionSampler&&) noexcept;
    ~DirectionSampler();

    Eigen::VectorXd next(Rng& rng);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Strategy parameters and state

struct StrategyParameters {
    int lambda = 0;      // offspring per generation
    int selected = 0;    // candidates entering ranking (ceil(lambda/2) with pairwise mirroring)
    int mu = 0;          // parents, <= selected
    std::vector<double> weights;           // length mu, sum 1
    std::vector<double> negative_weights;  // length selected-mu, sum -alpha_neg (active only)
    double mueff = 0.0;
    double c_sigma = 0.0;
    double d_sigma = 0.0;
    double c_c = 0.0;
    double c1 = 0.0;
    double cmu = 0.0;
    double chi_n = 0.0;  // E||N(0,I)||
    int eigen_interval = 1;
};

StrategyParameters strategy_parameters(const CmaConfig& config, int dim, int lambda, int mu);

inline constexpr double kSigmaMin = 1e-12;
inline constexpr double kSigmaMax = 1e12;
inline constexpr double kEigenFloor = 1e-14;
inline constexpr double kPsrTarget = 0.25;
inline constexpr double kPsrDamping = 2.0;
inline constexpr double kPsrSmoothing = 0.3;

struct CmaState {
    int dim = 0;
    suite::Bounds bounds;
    StrategyParameters params;
    Eigen::VectorXd mean;
    double sigma = 1.0;
    double sigma0 = 1.0;
    Eigen::MatrixXd C;
    Eigen::MatrixXd B;          // eigenvectors of C
    Eigen::VectorXd D;          // sqrt of eigenvalues
    Eigen::MatrixXd inv_sqrt_C;
    Eigen::VectorXd p_sigma;
    Eigen::VectorXd p_c;
    long generation = 0;
    long eigen_generation = -1;
    bool eigen_fresh = false;
    // PSR memory.
    std::vector<double> previous_fitness;
    double psr_s = 0.0;
    // Elitism: last generation's parents.
    std::vector<Eigen::VectorXd> parents;
    std::vector<double> parent_fitness;
    // Restart bookkeeping.
    std::deque<double> best_history;
    int restarts = 0;
    std::unique_ptr<DirectionSampler> sampler;
};

/// Fresh state: mean uniform in the box, sigma0 = 0.2 (upper - lower), C = I.
CmaState init_state(const CmaConfig& config, int dim, const suite::Bounds& bounds, int lambda, int mu, Rng& rng);

/// Recomputes B, D and C^{-1/2} if stale (or forced).
void refresh_eigen(CmaState& state, bool force = false);

struct Candidate {
    Eigen::VectorXd x;  // unsaturated sample
    Eigen::VectorXd z;  // sampler output (mirrored: negated partner)
    int pair = -1;      // pair id under mirroring
    double f = 0.0;
};

/// lambda points x = m + sigma B D z.
std::vector<Candidate> sample_offspring(CmaState& state, const CmaConfig& config, Rng& rng);

/// Pairwise mirroring: keep the better member of each pair. Otherwise identity.
std::vector<Candidate> collapse_pairs(std::vector<Candidate> evaluated, const CmaConfig& config);

/// One generation update from candidates sorted by ascending f (already collapsed
/// and, for elitism, merged with the retained parents). Steps: mean, p_sigma, p_c,
/// covariance (+ active part), step size.
void update(CmaState& state, const CmaConfig& config, const std::vector<Candidate>& ranked);

/// sigma exp((c_sigma/d_sigma)(||p_sigma||/chi_n - 1)), clamped.
double csa_sigma(double sigma, double p_sigma_norm, const StrategyParameters& p);

/// Rank-sum success measure in [-1,1] from merged previous/current fitness values;
/// positive when the current population ranks better.
double psr_success(const std::vector<double>& previous, const std::vector<double>& current);

/// True when C is symmetric within tol and Cholesky succeeds.
bool is_symmetric_positive_definite(const Eigen::MatrixXd& C, double tol = 1e-12);

/// Which restart condition fired, if any.
enum class StopReason { None, TolFun, Condition, NoEffectAxis, TolX };
StopReason check_stop(const CmaState& state, const CmaConfig& config);

/// Chooses the population size for each BIPOP restart by balancing the budget
/// spent in each regime.
class BipopScheduler {
public:
    BipopScheduler(int lambda0, double sigma0);

    struct Plan {
        bool large = true;
        int lambda = 0;
        double sigma = 0.0;
    };

    /// Records the evaluations consumed by the run that just ended.
    void record(long evaluations);
    /// Next restart: large when the large regime has not used more than the small one.
    Plan next(Rng& rng);

    [[nodiscard]] long large_budget() const { return large_budget_; }
    [[nodiscard]] long small_budget() const { return small_budget_; }
    [[nodiscard]] int large_restarts() const { return large_count_; }

private:
    int lambda0_;
    double sigma0_;
    int large_count_ = 0;
    bool current_large_ = true;
    bool started_ = false;
    long large_budget_ = 0;
    long small_budget_ = 0;
};

/// Called after every update, before any restart.
using GenerationObserver = std::function<void(const CmaState&)>;

/// Budget-exact run; trajectory length equals `budget`.
RunResult run(const CmaConfig& config, Objective& objective, long budget, std::uint64_t seed,
              const GenerationObserver& observer = {});

}  // namespace xbench::modcma
