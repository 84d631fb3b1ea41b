#include "xbench/modcma.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace xbench::modcma {

namespace {

const std::string& label_of(const Configuration& c, const ConfigurationSpace& s, std::string_view name) {
    return c.get(s, name).as_label();
}

constexpr double kTwoTo64 = 18446744073709551616.0;

double clamp_open(double u) {
    constexpr double eps = 0x1p-53;
    return std::clamp(u, eps, 1.0 - eps);
}

}  // namespace

CmaConfig from_configuration(const Configuration& config, const ConfigurationSpace& space) {
    CmaConfig c;
    c.covariance = label_of(config, space, "covariance") == "true";
    c.active = label_of(config, space, "active") == "true";
    const std::string& sampler = label_of(config, space, "base_sampler");
    c.sampler = sampler == "Halton" ? BaseSampler::Halton : sampler == "Sobol" ? BaseSampler::Sobol : BaseSampler::Gaussian;
    c.elitist = label_of(config, space, "elitist") == "true";
    const std::string& mirrored = label_of(config, space, "mirrored");
    c.mirrored = mirrored == "mirrored" ? Mirror::Mirrored : mirrored == "pairwise" ? Mirror::Pairwise : Mirror::Off;
    const std::string& weights = label_of(config, space, "weights_option");
    c.weights = weights == "equal" ? Weights::Equal : weights == "lambda-decay" ? Weights::LambdaDecay : Weights::Default;
    c.ssa = label_of(config, space, "step_size_adaptation") == "PSR" ? StepSize::PSR : StepSize::CSA;
    const std::string& restart = label_of(config, space, "local_restart");
    c.restart = restart == "IPOP" ? Restart::IPOP : restart == "BIPOP" ? Restart::BIPOP : Restart::None;
    c.lambda = static_cast<int>(config.get(space, "lambda").as_number());
    c.mu = static_cast<int>(config.get(space, "mu").as_number());
    return c;
}

int default_lambda(int dim) { return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dim)))); }

std::vector<double> lambda_decay_raw(int lambda, int count) {
    std::vector<double> w(static_cast<std::size_t>(std::max(count, 0)));
    const double tail = 1.0 / (lambda * std::ldexp(1.0, lambda));
    for (int i = 1; i <= count; ++i) w[static_cast<std::size_t>(i - 1)] = std::ldexp(1.0, -i) + tail;
    return w;
}

std::vector<double> recombination_weights(Weights kind, int lambda, int mu) {
    mu = std::max(mu, 1);
    std::vector<double> w(static_cast<std::size_t>(mu));
    switch (kind) {
        case Weights::Equal: std::fill(w.begin(), w.end(), 1.0 / mu); return w;
        case Weights::LambdaDecay: w = lambda_decay_raw(lambda, mu); break;
        case Weights::Default: {
            const double top = std::log(std::max((lambda + 1) / 2.0, mu + 0.5));
            for (int i = 1; i <= mu; ++i) w[static_cast<std::size_t>(i - 1)] = top - std::log(static_cast<double>(i));
            break;
        }
    }
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= sum;
    return w;
}

// ---------------------------------------------------------------------------

double inverse_normal_cdf(double p) {
    if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
    if (!(p < 1.0)) return std::numeric_limits<double>::infinity();
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

std::vector<int> first_primes(int count) {
    std::vector<int> primes;
    for (int n = 2; static_cast<int>(primes.size()) < count; ++n) {
        bool prime = true;
        for (int p : primes) {
            if (p * p > n) break;
            if (n % p == 0) {
                prime = false;
                break;
            }
        }
        if (prime) primes.push_back(n);
    }
    return primes;
}

namespace {
double radical_inverse(std::uint64_t n, int base) {
    double r = 0.0;
    double f = 1.0;
    while (n > 0) {
        f /= base;
        r += f * static_cast<double>(n % static_cast<std::uint64_t>(base));
        n /= static_cast<std::uint64_t>(base);
    }
    return r;
}
}  // namespace

std::vector<double> halton_raw_point(int dim, std::uint64_t index) {
    const auto primes = first_primes(dim);
    std::vector<double> u(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) u[static_cast<std::size_t>(j)] = radical_inverse(index, primes[static_cast<std::size_t>(j)]);
    return u;
}

std::vector<double> sobol_raw_point(int dim, std::uint64_t index) {
    boost::random::sobol gen(static_cast<std::size_t>(dim));
    gen.seed(index);
    std::vector<double> u(static_cast<std::size_t>(dim));
    for (double& v : u) v = static_cast<double>(gen()) / kTwoTo64;
    return u;
}

struct DirectionSampler::Impl {
    BaseSampler kind;
    int dim;
    std::uint64_t index = 1;
    std::vector<int> primes;
    std::vector<double> shift;
    std::vector<std::uint64_t> xor_shift;
    std::unique_ptr<boost::random::sobol> sobol;

    Impl(const Impl& o)
        : kind(o.kind), dim(o.dim), index(o.index), primes(o.primes), shift(o.shift), xor_shift(o.xor_shift),
          sobol(o.sobol ? std::make_unique<boost::random::sobol>(*o.sobol) : nullptr) {}
    Impl(BaseSampler k, int d) : kind(k), dim(d) {}
};

DirectionSampler::DirectionSampler(BaseSampler kind, int dim, Rng& rng) : impl_(std::make_unique<Impl>(kind, dim)) {
    if (kind == BaseSampler::Halton) {
        impl_->primes = first_primes(dim);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int j = 0; j < dim; ++j) impl_->shift.push_back(u(rng));
    } else if (kind == BaseSampler::Sobol) {
        impl_->sobol = std::make_unique<boost::random::sobol>(static_cast<std::size_t>(dim));
        for (int j = 0; j < dim; ++j) impl_->xor_shift.push_back(rng());
    }
}

DirectionSampler::DirectionSampler(const DirectionSampler& o) : impl_(std::make_unique<Impl>(*o.impl_)) {}
DirectionSampler& DirectionSampler::operator=(const DirectionSampler& o) {
    if (this != &o) impl_ = std::make_unique<Impl>(*o.impl_);
    return *this;
}
DirectionSampler::DirectionSampler(DirectionSampler&&) noexcept = default;
DirectionSampler& DirectionSampler::operator=(DirectionSampler&&) noexcept = default;
DirectionSampler::~DirectionSampler() = default;

Eigen::VectorXd DirectionSampler::next(Rng& rng) {
    Impl& s = *impl_;
    Eigen::VectorXd z(s.dim);
    switch (s.kind) {
        case BaseSampler::Gaussian: {
            std::normal_distribution<double> n(0.0, 1.0);
            for (int j = 0; j < s.dim; ++j) z[j] = n(rng);
            break;
        }
        case BaseSampler::Halton: {
            for (int j = 0; j < s.dim; ++j) {
                double u = radical_inverse(s.index, s.primes[static_cast<std::size_t>(j)]) + s.shift[static_cast<std::size_t>(j)];
                u -= std::floor(u);
                z[j] = inverse_normal_cdf(clamp_open(u));
            }
            ++s.index;
            break;
        }
        case BaseSampler::Sobol: {
            for (int j = 0; j < s.dim; ++j) {
                const std::uint64_t v = (*s.sobol)() ^ s.xor_shift[static_cast<std::size_t>(j)];
                z[j] = inverse_normal_cdf(clamp_open(static_cast<double>(v) / kTwoTo64 + 0x1p-65));
            }
            break;
        }
    }
    return z;
}

// ---------------------------------------------------------------------------

StrategyParameters strategy_parameters(const CmaConfig& config, int dim, int lambda, int mu) {
    StrategyParameters p;
    const double d = dim;
    p.lambda = std::max(lambda, 1);
    p.selected = config.mirrored == Mirror::Pairwise ? (p.lambda + 1) / 2 : p.lambda;
    p.mu = std::clamp(mu, 1, p.selected);
    p.weights = recombination_weights(config.weights, p.selected, p.mu);

    double sq = 0.0;
    for (double w : p.weights) sq += w * w;
    p.mueff = 1.0 / sq;

    p.c_sigma = (p.mueff + 2.0) / (d + p.mueff + 5.0);
    p.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((p.mueff - 1.0) / (d + 1.0)) - 1.0) + p.c_sigma;
    p.c_c = (4.0 + p.mueff / d) / (d + 4.0 + 2.0 * p.mueff / d);
    p.c1 = 2.0 / ((d + 1.3) * (d + 1.3) + p.mueff);
    p.cmu = std::min(1.0 - p.c1, 2.0 * (p.mueff - 2.0 + 1.0 / p.mueff) / ((d + 2.0) * (d + 2.0) + p.mueff));
    p.cmu = std::max(p.cmu, 0.0);
    p.chi_n = std::sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d));

    const int n_neg = p.selected - p.mu;
    if (config.active && config.covariance && n_neg > 0 && p.cmu > 0.0) {
        // Same weight kind over the worst individuals, largest magnitude for the worst.
        std::vector<double> pattern = recombination_weights(config.weights, p.selected, n_neg);
        std::reverse(pattern.begin(), pattern.end());
        double psq = 0.0;
        for (double w : pattern) psq += w * w;
        const double mueff_neg = 1.0 / psq;
        const double alpha = std::min({1.0 + p.c1 / p.cmu, 1.0 + 2.0 * mueff_neg / (p.mueff + 2.0),
                                       (1.0 - p.c1 - p.cmu) / (d * p.cmu)});
        for (double w : pattern) p.negative_weights.push_back(-alpha * w);
    }

    const double rate = 10.0 * d * (p.c1 + p.cmu);
    p.eigen_interval = rate > 0.0 ? std::max(1, static_cast<int>(std::floor(1.0 / rate))) : 1;
    return p;
}

CmaState init_state(const CmaConfig& config, int dim, const suite::Bounds& bounds, int lambda, int mu, Rng& rng) {
    CmaState s;
    s.dim = dim;
    s.bounds = bounds;
    s.params = strategy_parameters(config, dim, lambda, mu);
    std::uniform_real_distribution<double> u(bounds.lower, bounds.upper);
    s.mean.resize(dim);
    for (int j = 0; j < dim; ++j) s.mean[j] = u(rng);
    s.sigma0 = 0.2 * (bounds.upper - bounds.lower);
    s.sigma = s.sigma0;
    s.C = Eigen::MatrixXd::Identity(dim, dim);
    s.B = Eigen::MatrixXd::Identity(dim, dim);
    s.D = Eigen::VectorXd::Ones(dim);
    s.inv_sqrt_C = Eigen::MatrixXd::Identity(dim, dim);
    s.p_sigma = Eigen::VectorXd::Zero(dim);
    s.p_c = Eigen::VectorXd::Zero(dim);
    s.eigen_fresh = true;
    s.eigen_generation = 0;
    s.sampler = std::make_unique<DirectionSampler>(config.sampler, dim, rng);
    return s;
}

namespace {
void decompose(CmaState& s) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.C);
    Eigen::VectorXd values = eig.eigenvalues();
    s.B = eig.eigenvectors();
    if (values.minCoeff() <= kEigenFloor) {
        values = values.cwiseMax(kEigenFloor);
        s.C = s.B * values.asDiagonal() * s.B.transpose();
        s.C = 0.5 * (s.C + s.C.transpose()).eval();
    }
    s.D = values.cwiseSqrt();
    s.inv_sqrt_C = s.B * s.D.cwiseInverse().asDiagonal() * s.B.transpose();
    s.eigen_generation = s.generation;
    s.eigen_fresh = true;
}
}  // namespace

void refresh_eigen(CmaState& state, bool force) {
    if (state.eigen_fresh && !force) return;
    if (!force && state.generation - state.eigen_generation < state.params.eigen_interval) return;
    decompose(state);
}

std::vector<Candidate> sample_offspring(CmaState& state, const CmaConfig& config, Rng& rng) {
    refresh_eigen(state);
    const int lambda = state.params.lambda;
    std::vector<Candidate> out(static_cast<std::size_t>(lambda));
    for (int i = 0; i < lambda; ++i) {
        Candidate& c = out[static_cast<std::size_t>(i)];
        if (config.mirrored != Mirror::Off) {
            c.pair = i / 2;
            c.z = (i % 2 == 1) ? Eigen::VectorXd(-out[static_cast<std::size_t>(i - 1)].z) : state.sampler->next(rng);
        } else {
            c.z = state.sampler->next(rng);
        }
        c.x = state.mean + state.sigma * (state.B * state.D.cwiseProduct(c.z));
    }
    return out;
}

std::vector<Candidate> collapse_pairs(std::vector<Candidate> evaluated, const CmaConfig& config) {
    if (config.mirrored != Mirror::Pairwise) return evaluated;
    std::vector<Candidate> kept;
    for (std::size_t i = 0; i < evaluated.size(); i += 2) {
        if (i + 1 < evaluated.size() && evaluated[i + 1].f < evaluated[i].f)
            kept.push_back(std::move(evaluated[i + 1]));
        else
            kept.push_back(std::move(evaluated[i]));
    }
    return kept;
}

double csa_sigma(double sigma, double p_sigma_norm, const StrategyParameters& p) {
    const double s = sigma * std::exp((p.c_sigma / p.d_sigma) * (p_sigma_norm / p.chi_n - 1.0));
    return std::clamp(s, kSigmaMin, kSigmaMax);
}

double psr_success(const std::vector<double>& previous, const std::vector<double>& current) {
    const std::size_t np = previous.size();
    const std::size_t nc = current.size();
    if (np == 0 || nc == 0) return 0.0;
    struct Entry {
        double f;
        bool prev;
    };
    std::vector<Entry> all;
    for (double f : previous) all.push_back({f, true});
    for (double f : current) all.push_back({f, false});
    std::stable_sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.f < b.f; });
    double sum_prev = 0.0;
    double sum_curr = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j].f == all[i].f) ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) (all[k].prev ? sum_prev : sum_curr) += mid;
        i = j;
    }
    const double diff = sum_prev / static_cast<double>(np) - sum_curr / static_cast<double>(nc);
    return std::clamp(2.0 * diff / static_cast<double>(np + nc), -1.0, 1.0);
}

bool is_symmetric_positive_definite(const Eigen::MatrixXd& C, double tol) {
    if ((C - C.transpose()).cwiseAbs().maxCoeff() > tol) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    return llt.info() == Eigen::Success;
}

void update(CmaState& state, const CmaConfig& config, const std::vector<Candidate>& ranked) {
    const StrategyParameters& p = state.params;
    const int d = state.dim;
    const int mu = std::min<int>(p.mu, static_cast<int>(ranked.size()));
    const Eigen::VectorXd m_old = state.mean;

    std::vector<Eigen::VectorXd> y(ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) y[i] = (ranked[i].x - m_old) / state.sigma;

    Eigen::VectorXd y_w = Eigen::VectorXd::Zero(d);
    double wsum = 0.0;
    for (int i = 0; i < mu; ++i) wsum += p.weights[static_cast<std::size_t>(i)];
    for (int i = 0; i < mu; ++i) y_w += (p.weights[static_cast<std::size_t>(i)] / wsum) * y[static_cast<std::size_t>(i)];
    state.mean = m_old + state.sigma * y_w;

    const double cs = p.c_sigma;
    state.p_sigma = (1.0 - cs) * state.p_sigma + std::sqrt(cs * (2.0 - cs) * p.mueff) * (state.inv_sqrt_C * y_w);
    const double ps_norm = state.p_sigma.norm();
    const double decay = 1.0 - std::pow(1.0 - cs, 2.0 * static_cast<double>(state.generation + 1));
    const bool h_sigma = ps_norm / std::sqrt(decay) < (1.4 + 2.0 / (d + 1.0)) * p.chi_n;
    const double cc = p.c_c;
    state.p_c = (1.0 - cc) * state.p_c + (h_sigma ? std::sqrt(cc * (2.0 - cc) * p.mueff) : 0.0) * y_w;

    if (config.covariance) {
        const double delta_h = h_sigma ? 0.0 : cc * (2.0 - cc);
        Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(d, d);
        double total_w = 0.0;
        for (int i = 0; i < mu; ++i) {
            const double w = p.weights[static_cast<std::size_t>(i)];
            rank_mu += w * y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)].transpose();
            total_w += w;
        }
        // Negative weights apply to the worst entries of the ranking.
        const std::size_t n_neg = std::min(p.negative_weights.size(), ranked.size() - static_cast<std::size_t>(mu));
        for (std::size_t k = 0; k < n_neg; ++k) {
            const std::size_t idx = ranked.size() - n_neg + k;
            const double w = p.negative_weights[p.negative_weights.size() - n_neg + k];
            const double mahal = (state.inv_sqrt_C * y[idx]).squaredNorm();
            const double scale = mahal > 0.0 ? static_cast<double>(d) / mahal : 0.0;
            rank_mu += (w * scale) * y[idx] * y[idx].transpose();
            total_w += w;
        }
        state.C = (1.0 + p.c1 * delta_h - p.c1 - p.cmu * total_w) * state.C + p.c1 * state.p_c * state.p_c.transpose() +
                  p.cmu * rank_mu;
        state.C = 0.5 * (state.C + state.C.transpose()).eval();
        state.eigen_fresh = false;
        if (!is_symmetric_positive_definite(state.C)) decompose(state);
    }

    if (config.ssa == StepSize::CSA) {
        state.sigma = csa_sigma(state.sigma, ps_norm, p);
    } else {
        std::vector<double> current;
        current.reserve(ranked.size());
        for (const auto& c : ranked) current.push_back(c.f);
        if (!state.previous_fitness.empty()) {
            const double z = psr_success(state.previous_fitness, current);
            state.psr_s = (1.0 - kPsrSmoothing) * state.psr_s + kPsrSmoothing * (z - kPsrTarget);
            state.sigma = std::clamp(state.sigma * std::exp(state.psr_s / kPsrDamping), kSigmaMin, kSigmaMax);
        }
        state.previous_fitness = std::move(current);
    }
    ++state.generation;
}

StopReason check_stop(const CmaState& state, const CmaConfig& config) {
    const int d = state.dim;
    const auto window = static_cast<std::size_t>(
        10 + static_cast<int>(std::ceil(30.0 * d / static_cast<double>(state.params.lambda))));
    if (state.best_history.size() >= window) {
        const auto [lo, hi] = std::minmax_element(state.best_history.end() - static_cast<std::ptrdiff_t>(window),
                                                  state.best_history.end());
        if (*hi - *lo < 1e-12) return StopReason::TolFun;
    }
    if (config.covariance) {
        const double ratio = state.D.maxCoeff() / state.D.minCoeff();
        if (ratio * ratio > 1e14) return StopReason::Condition;
        const int axis = static_cast<int>(state.generation % d);
        const Eigen::VectorXd shifted = state.mean + 0.1 * state.sigma * state.D[axis] * state.B.col(axis);
        if (shifted == state.mean) return StopReason::NoEffectAxis;
    }
    const double tolx = 1e-12 * state.sigma0;
    bool small = true;
    for (int j = 0; j < d && small; ++j)
        small = state.sigma * std::sqrt(state.C(j, j)) < tolx && state.sigma * std::abs(state.p_c[j]) < tolx;
    if (small) return StopReason::TolX;
    return StopReason::None;
}

BipopScheduler::BipopScheduler(int lambda0, double sigma0) : lambda0_(lambda0), sigma0_(sigma0) {}

void BipopScheduler::record(long evaluations) {
    if (!started_) {
        started_ = true;  // the default first run counts towards neither regime
        return;
    }
    (current_large_ ? large_budget_ : small_budget_) += evaluations;
}

BipopScheduler::Plan BipopScheduler::next(Rng& rng) {
    started_ = true;
    Plan plan;
    if (large_budget_ <= small_budget_) {
        ++large_count_;
        plan.large = true;
        plan.lambda = lambda0_ << large_count_;
        plan.sigma = sigma0_;
    } else {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double u1 = u(rng);
        const double u2 = u(rng);
        const double large_lambda = static_cast<double>(lambda0_ << large_count_);
        plan.large = false;
        plan.lambda = std::max(
            2, static_cast<int>(std::floor(lambda0_ * std::pow(0.5 * large_lambda / lambda0_, u1 * u1))));
        plan.sigma = sigma0_ * std::pow(10.0, -2.0 * u2);
    }
    current_large_ = plan.large;
    return plan;
}

RunResult run(const CmaConfig& config, Objective& objective, long budget, std::uint64_t seed,
              const GenerationObserver& observer) {
    Rng rng(seed);
    EvaluationBudget eval(objective, budget);
    const int lambda0 = std::max(config.lambda, 1);
    const int mu0 = std::clamp(config.mu, 1, lambda0);
    CmaState state = init_state(config, objective.dim, objective.bounds, lambda0, mu0, rng);
    BipopScheduler bipop(lambda0, state.sigma0);
    long run_start = 0;
    int restarts = 0;

    while (!eval.exhausted()) {
        std::vector<Candidate> offspring = sample_offspring(state, config, rng);
        bool complete = true;
        for (Candidate& c : offspring) {
            if (eval.exhausted()) {
                complete = false;
                break;
            }
            saturate(std::span<double>(c.x.data(), static_cast<std::size_t>(c.x.size())), objective.bounds);
            c.f = eval(std::span<const double>(c.x.data(), static_cast<std::size_t>(c.x.size())));
        }
        if (!complete) break;

        std::vector<Candidate> ranked = collapse_pairs(std::move(offspring), config);
        const std::size_t keep = ranked.size();
        if (config.elitist)
            for (std::size_t k = 0; k < state.parents.size(); ++k)
                ranked.push_back({state.parents[k], Eigen::VectorXd(), -1, state.parent_fitness[k]});
        std::stable_sort(ranked.begin(), ranked.end(), [](const Candidate& a, const Candidate& b) { return a.f < b.f; });
        ranked.resize(keep);

        update(state, config, ranked);

        state.parents.clear();
        state.parent_fitness.clear();
        for (int i = 0; i < std::min<int>(state.params.mu, static_cast<int>(ranked.size())); ++i) {
            state.parents.push_back(ranked[static_cast<std::size_t>(i)].x);
            state.parent_fitness.push_back(ranked[static_cast<std::size_t>(i)].f);
        }
        state.best_history.push_back(ranked.front().f);
        if (state.best_history.size() > 1000) state.best_history.pop_front();
        if (observer) observer(state);

        if (config.restart == Restart::None || eval.exhausted()) continue;
        if (check_stop(state, config) == StopReason::None) continue;

        ++restarts;
        int lambda = lambda0;
        double sigma = -1.0;
        if (config.restart == Restart::IPOP) {
            lambda = lambda0 << std::min(restarts, 20);
        } else {
            bipop.record(eval.used() - run_start);
            const auto plan = bipop.next(rng);
            lambda = plan.lambda;
            sigma = plan.sigma;
        }
        // A generation larger than the remaining budget can never complete.
        lambda = static_cast<int>(std::min<long>(lambda, eval.remaining() + 1));
        const int mu = std::clamp(static_cast<int>(static_cast<long long>(mu0) * lambda / lambda0), 1, lambda);
        state = init_state(config, objective.dim, objective.bounds, lambda, mu, rng);
        if (sigma > 0.0) state.sigma = sigma;
        run_start = eval.used();
    }
    return std::move(eval).finish(restarts);
}

}  // namespace xbench::modcma
