#include "xbench/modcma.hpp"
#include "xbench/suite.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

using namespace xbench;
using namespace xbench::modcma;

namespace {

Objective sphere(int dim) {
    Objective o;
    o.dim = dim;
    o.bounds = {-5.0, 5.0};
    o.f = [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
    };
    return o;
}

// Solves A x = b by Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

TEST(ModCMA, DefaultLambda) {
    EXPECT_EQ(default_lambda(5), 8);
    EXPECT_EQ(default_lambda(30), 14);
    EXPECT_EQ(default_lambda(2), 6);
}

TEST(ModCMA, EqualWeights) {
    const auto w = recombination_weights(Weights::Equal, 8, 4);
    ASSERT_EQ(w.size(), 4U);
    for (double v : w) EXPECT_EQ(v, 0.25);
}

TEST(ModCMA, LambdaDecayRawValues) {
    const auto w = lambda_decay_raw(4, 4);
    EXPECT_EQ(w, (std::vector<double>{0.515625, 0.265625, 0.140625, 0.078125}));
    const auto n = recombination_weights(Weights::LambdaDecay, 4, 2);
    EXPECT_NEAR(n[0], 0.515625 / (0.515625 + 0.265625), 1e-15);
}

TEST(ModCMA, DefaultWeightsDecreasing) {
    const auto w = recombination_weights(Weights::Default, 8, 4);
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-15);
    for (std::size_t i = 1; i < w.size(); ++i) EXPECT_LT(w[i], w[i - 1]);
    EXPECT_GT(w.back(), 0.0);
    const double top = std::log(4.5);
    const double norm = 4 * top - std::log(24.0);
    EXPECT_NEAR(w[0], top / norm, 1e-15);
}

TEST(ModCMA, WeightsValidOverWholeDomain) {
    for (int lambda : {5, 8, 10, 14, 20, 200})
        for (int mu : {2, 4, 5, 7, 10, 20, 100}) {
            if (mu > lambda) continue;
            for (Weights k : {Weights::Default, Weights::Equal, Weights::LambdaDecay}) {
                const auto w = recombination_weights(k, lambda, mu);
                EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
                for (std::size_t i = 0; i < w.size(); ++i) {
                    EXPECT_GT(w[i], 0.0);
                    if (i > 0) EXPECT_LE(w[i], w[i - 1]);
                }
            }
        }
}

TEST(ModCMA, InverseNormalCdf) {
    EXPECT_EQ(inverse_normal_cdf(0.5), 0.0);
    EXPECT_NEAR(inverse_normal_cdf(0.975), 1.959963984540054, 1e-12);
    EXPECT_NEAR(inverse_normal_cdf(0.025), -1.959963984540054, 1e-12);
    EXPECT_NEAR(inverse_normal_cdf(1e-10), -6.361340902404056, 1e-9);
    EXPECT_TRUE(std::isinf(inverse_normal_cdf(0.0)));
}

TEST(ModCMA, RawSobolFirstPointIsCentre) {
    for (double u : sobol_raw_point(7, 0)) {
        EXPECT_EQ(u, 0.5);
        EXPECT_EQ(inverse_normal_cdf(u), 0.0);
    }
    const auto p = sobol_raw_point(2, 1);
    EXPECT_EQ(p[0], 0.75);
    EXPECT_EQ(p[1], 0.25);
}

TEST(ModCMA, HaltonRawPoints) {
    EXPECT_EQ(first_primes(5), (std::vector<int>{2, 3, 5, 7, 11}));
    const auto p = halton_raw_point(2, 1);
    EXPECT_EQ(p[0], 0.5);
    EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-15);
    const auto q = halton_raw_point(2, 5);  // 5 = 101b, 12 in base 3
    EXPECT_EQ(q[0], 0.625);
    EXPECT_NEAR(q[1], 2.0 / 3.0 + 1.0 / 9.0, 1e-15);
}

TEST(ModCMA, GaussianSamplerMean) {
    Rng rng(5);
    DirectionSampler s(BaseSampler::Gaussian, 5, rng);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(5);
    for (int i = 0; i < 100000; ++i) sum += s.next(rng);
    sum /= 100000.0;
    for (int j = 0; j < 5; ++j) EXPECT_LE(std::abs(sum[j]), 0.02);
}

TEST(ModCMA, LowDiscrepancySamplersLookNormal) {
    for (BaseSampler k : {BaseSampler::Halton, BaseSampler::Sobol}) {
        Rng rng(9);
        DirectionSampler s(k, 5, rng);
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(5);
        Eigen::VectorXd sq = Eigen::VectorXd::Zero(5);
        constexpr int n = 4096;
        for (int i = 0; i < n; ++i) {
            const auto z = s.next(rng);
            EXPECT_TRUE(z.allFinite());
            sum += z;
            sq += z.cwiseProduct(z);
        }
        for (int j = 0; j < 5; ++j) {
            EXPECT_LE(std::abs(sum[j] / n), 0.02);
            EXPECT_NEAR(sq[j] / n, 1.0, 0.05);
        }
    }
}

TEST(ModCMA, SamplersDifferPerRun) {
    Rng a(1);
    Rng b(2);
    DirectionSampler sa(BaseSampler::Sobol, 3, a);
    DirectionSampler sb(BaseSampler::Sobol, 3, b);
    EXPECT_NE(sa.next(a), sb.next(b));
}

TEST(ModCMA, MirroredPairsSumToTwiceMean) {
    for (BaseSampler k : {BaseSampler::Gaussian, BaseSampler::Halton, BaseSampler::Sobol})
        for (Mirror m : {Mirror::Mirrored, Mirror::Pairwise}) {
            CmaConfig c;
            c.sampler = k;
            c.mirrored = m;
            c.lambda = 10;
            Rng rng(3);
            auto s = init_state(c, 5, {-5, 5}, 10, 5, rng);
            s.C = Eigen::MatrixXd::Identity(5, 5);
            s.C(0, 1) = s.C(1, 0) = 0.5;
            s.C(2, 2) = 9.0;
            refresh_eigen(s, true);
            const auto off = sample_offspring(s, c, rng);
            const double scale = s.sigma * s.D.maxCoeff();
            for (std::size_t i = 0; i + 1 < off.size(); i += 2) {
                EXPECT_EQ(off[i].pair, off[i + 1].pair);
                EXPECT_LE((off[i].x + off[i + 1].x - 2.0 * s.mean).cwiseAbs().maxCoeff(), 1e-12 * scale);
            }
        }
}

TEST(ModCMA, PairwiseKeepsBetterOfPair) {
    CmaConfig c;
    c.mirrored = Mirror::Pairwise;
    std::vector<Candidate> v(5);
    const std::vector<double> f{3, 1, 2, 5, 4};
    for (std::size_t i = 0; i < 5; ++i) {
        v[i].f = f[i];
        v[i].pair = static_cast<int>(i / 2);
    }
    const auto kept = collapse_pairs(v, c);
    ASSERT_EQ(kept.size(), 3U);
    EXPECT_EQ(kept[0].f, 1);
    EXPECT_EQ(kept[1].f, 2);
    EXPECT_EQ(kept[2].f, 4);
    EXPECT_EQ(strategy_parameters(c, 5, 5, 4).mu, 3);
}

TEST(ModCMA, EqualWeightsFullSelectionMovesMeanToCentroid) {
    CmaConfig c;
    c.weights = Weights::Equal;
    c.lambda = 6;
    c.mu = 6;
    Rng rng(4);
    auto s = init_state(c, 3, {-5, 5}, 6, 6, rng);
    auto off = sample_offspring(s, c, rng);
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(3);
    for (std::size_t i = 0; i < off.size(); ++i) {
        off[i].f = static_cast<double>(i);
        centroid += off[i].x;
    }
    centroid /= 6.0;
    update(s, c, off);
    EXPECT_LE((s.mean - centroid).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ModCMA, CovarianceOffKeepsIdentity) {
    CmaConfig c;
    c.covariance = false;
    c.active = true;
    Objective o = sphere(5);
    o.f = [](std::span<const double> x) { return 1e6 * x[0] * x[0] + x[1] * x[1]; };
    int gens = 0;
    run(c, o, 3000, 2, [&](const CmaState& s) {
        ++gens;
        EXPECT_TRUE(s.C == Eigen::MatrixXd::Identity(5, 5));
    });
    EXPECT_GT(gens, 100);
}

TEST(ModCMA, ActiveUpdateMatchesHandComputedOracle) {
    constexpr int d = 4;
    CmaConfig c;
    c.active = true;
    c.lambda = 10;
    c.mu = 3;
    Rng rng(21);
    auto s = init_state(c, d, {-5, 5}, 10, 3, rng);
    // Non-trivial prior covariance and step size.
    std::vector<std::vector<double>> C0{{2.0, 0.3, 0.0, 0.1}, {0.3, 1.0, -0.2, 0.0}, {0.0, -0.2, 1.5, 0.4},
                                        {0.1, 0.0, 0.4, 0.8}};
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s.C(i, j) = C0[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    s.sigma = 0.7;
    refresh_eigen(s, true);
    auto off = sample_offspring(s, c, rng);
    for (std::size_t i = 0; i < off.size(); ++i) off[i].f = static_cast<double>(i);  // already ranked

    const StrategyParameters p = s.params;
    ASSERT_EQ(p.negative_weights.size(), 7U);
    // alpha from the documented bound
    double pos_sq = 0.0;
    for (double w : p.weights) pos_sq += w * w;
    const double mueff = 1.0 / pos_sq;
    double neg_sum = 0.0;
    double neg_sq = 0.0;
    for (double w : p.negative_weights) {
        EXPECT_LT(w, 0.0);
        neg_sum += w;
        neg_sq += w * w;
    }
    const double mueff_neg = neg_sum * neg_sum / neg_sq;
    const double alpha = std::min({1.0 + p.c1 / p.cmu, 1.0 + 2.0 * mueff_neg / (mueff + 2.0),
                                   (1.0 - p.c1 - p.cmu) / (d * p.cmu)});
    EXPECT_NEAR(neg_sum, -alpha, 1e-12);
    // worst individual carries the largest magnitude
    EXPECT_LE(p.negative_weights.back(), p.negative_weights.front());

    // Oracle with plain vectors.
    std::vector<std::vector<double>> y;
    for (const auto& cand : off) {
        std::vector<double> v(d);
        for (int j = 0; j < d; ++j) v[static_cast<std::size_t>(j)] = (cand.x[j] - s.mean[j]) / s.sigma;
        y.push_back(v);
    }
    std::vector<double> yw(d, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < d; ++j) yw[static_cast<std::size_t>(j)] += p.weights[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    const double cs = p.c_sigma;
    const double ps_norm = std::sqrt(cs * (2 - cs) * mueff * dot(yw, solve(C0, yw)));
    const bool hs = ps_norm / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0)) < (1.4 + 2.0 / (d + 1.0)) * p.chi_n;
    std::vector<double> pc(d);
    for (int j = 0; j < d; ++j)
        pc[static_cast<std::size_t>(j)] = (hs ? std::sqrt(p.c_c * (2 - p.c_c) * mueff) : 0.0) * yw[static_cast<std::size_t>(j)];
    double wsum = 1.0 + neg_sum;
    const double delta = hs ? 0.0 : p.c_c * (2 - p.c_c);
    std::vector<std::vector<double>> expected(d, std::vector<double>(d));
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            const auto ua = static_cast<std::size_t>(a);
            const auto ub = static_cast<std::size_t>(b);
            double v = (1.0 + p.c1 * delta - p.c1 - p.cmu * wsum) * C0[ua][ub] + p.c1 * pc[ua] * pc[ub];
            for (std::size_t i = 0; i < 10; ++i) {
                double w = i < 3 ? p.weights[i] : p.negative_weights[i - 3];
                if (w < 0) w *= d / dot(y[i], solve(C0, y[i]));
                v += p.cmu * w * y[i][ua] * y[i][ub];
            }
            expected[ua][ub] = v;
        }
    update(s, c, off);
    double err = 0.0;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            err = std::max(err, std::abs(s.C(a, b) - expected[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]));
    EXPECT_LE(err, 1e-10);
}

TEST(ModCMA, CsaNeutralPath) {
    CmaConfig c;
    const auto p = strategy_parameters(c, 5, 8, 4);
    EXPECT_DOUBLE_EQ(csa_sigma(1.7, p.chi_n, p), 1.7);
    EXPECT_GT(csa_sigma(1.7, 2 * p.chi_n, p), 1.7);
    EXPECT_LT(csa_sigma(1.7, 0.5 * p.chi_n, p), 1.7);
    EXPECT_EQ(csa_sigma(1e-13, 0.0, p), kSigmaMin);
}

TEST(ModCMA, CsaContractsOnSphere) {
    const auto space = modcma_space();
    const CmaConfig c = from_configuration(space.default_configuration(), space);
    for (int seed = 0; seed < 10; ++seed) {
        auto prob = suite::make_problem(1, 5, 1);
        Objective o{5, prob.bounds(), [&](std::span<const double> x) { return prob.evaluate(x); }};
        double sigma = -1;
        double sigma0 = -1;
        run(c, o, 2000, static_cast<std::uint64_t>(seed), [&](const CmaState& s) {
            sigma = s.sigma;
            sigma0 = s.sigma0;
        });
        EXPECT_EQ(sigma0, 2.0);
        EXPECT_LT(sigma, 2.0);
    }
}

TEST(ModCMA, PsrSuccessSign) {
    EXPECT_EQ(psr_success({5, 6, 7, 8}, {1, 2, 3, 4}), 1.0);
    EXPECT_EQ(psr_success({1, 2, 3, 4}, {5, 6, 7, 8}), -1.0);
    EXPECT_EQ(psr_success({1, 2, 3, 4}, {1, 2, 3, 4}), 0.0);
    // 4+4 merge: current ranks {1,3,4,6}, previous {2,5,7,8} -> (22/4 - 14/4) * 2/8 = 0.5
    EXPECT_DOUBLE_EQ(psr_success({2, 5, 7, 8}, {1, 3, 4, 6}), 0.5);
}

TEST(ModCMA, PsrIncreasesSigmaWhenCurrentDominates) {
    CmaConfig c;
    c.ssa = StepSize::PSR;
    Rng rng(2);
    auto s = init_state(c, 3, {-5, 5}, 4, 2, rng);
    s.previous_fitness = {5, 6, 7, 8};
    auto off = sample_offspring(s, c, rng);
    for (std::size_t i = 0; i < off.size(); ++i) off[i].f = 1.0 + static_cast<double>(i);
    const double before = s.sigma;
    update(s, c, off);
    EXPECT_GT(s.sigma, before);
}

TEST(ModCMA, CovarianceStaysSymmetricPositiveDefinite) {
    const auto space = modcma_space();
    int checked = 0;
    for (const auto& cfg : sample_random(space, 30, 8)) {
        CmaConfig c = from_configuration(cfg, space);
        if (!c.covariance) continue;
        auto prob = suite::make_problem(10, 5, 1);
        Objective o{5, prob.bounds(), [&](std::span<const double> x) { return prob.evaluate(x); }};
        int gens = 0;
        run(c, o, 50L * c.lambda, 1, [&](const CmaState& s) {
            ++gens;
            ++checked;
            EXPECT_LE((s.C - s.C.transpose()).cwiseAbs().maxCoeff(), 1e-12);
            EXPECT_TRUE(is_symmetric_positive_definite(s.C));
            EXPECT_GT(s.sigma, 0.0);
        });
    }
    EXPECT_GT(checked, 200);
}

TEST(ModCMA, ElitistParentsMonotoneOnF0) {
    CmaConfig c;
    c.elitist = true;
    for (int seed = 0; seed < 5; ++seed) {
        auto f0 = suite::make_f0(5, static_cast<std::uint64_t>(seed));
        Objective o{5, f0.bounds(), [&](std::span<const double> x) { return f0.evaluate(x); }};
        double last = std::numeric_limits<double>::infinity();
        run(c, o, 2000, static_cast<std::uint64_t>(seed), [&](const CmaState& s) {
            EXPECT_LE(s.parent_fitness.front(), last);
            last = s.parent_fitness.front();
        });
    }
}

TEST(ModCMA, NoRestartKeepsLambda) {
    CmaConfig c;
    Objective o = sphere(3);
    o.f = [](std::span<const double>) { return 1.0; };
    run(c, o, 3000, 1, [&](const CmaState& s) { EXPECT_EQ(s.params.lambda, 8); });
}

TEST(ModCMA, IpopDoublesPopulation) {
    CmaConfig c;
    c.restart = Restart::IPOP;
    Objective o = sphere(3);
    o.f = [](std::span<const double>) { return 1.0; };  // tolfun fires quickly
    std::vector<int> lambdas;
    const auto r = run(c, o, 5000, 1, [&](const CmaState& s) {
        if (lambdas.empty() || lambdas.back() != s.params.lambda) lambdas.push_back(s.params.lambda);
    });
    ASSERT_GE(lambdas.size(), 3U);
    EXPECT_EQ(lambdas[0], 8);
    EXPECT_EQ(lambdas[1], 16);
    EXPECT_EQ(lambdas[2], 32);
    EXPECT_GE(r.restarts, 2);
}

TEST(ModCMA, BipopSchedulerBalancesRegimes) {
    BipopScheduler b(8, 2.0);
    Rng rng(3);
    b.record(1000);  // default first run
    const std::vector<long> spent{4000, 300, 500, 9000, 200, 700, 100};
    int larges = 0;
    int smalls = 0;
    for (long e : spent) {
        const long lb = b.large_budget();
        const long sb = b.small_budget();
        const auto plan = b.next(rng);
        if (plan.large) {
            ++larges;
            EXPECT_LE(lb, sb);
            EXPECT_EQ(plan.lambda, 8 << b.large_restarts());
            EXPECT_EQ(plan.sigma, 2.0);
        } else {
            ++smalls;
            EXPECT_GT(lb, sb);
            EXPECT_GE(plan.lambda, 2);
            EXPECT_LE(plan.lambda, 8 << (b.large_restarts() - 1));
            EXPECT_LE(plan.sigma, 2.0);
            EXPECT_GE(plan.sigma, 0.02);
        }
        b.record(e);
    }
    EXPECT_GE(larges, 2);
    EXPECT_GE(smalls, 2);
}

TEST(ModCMA, BipopRunRestarts) {
    CmaConfig c;
    c.restart = Restart::BIPOP;
    Objective o = sphere(3);
    o.f = [](std::span<const double>) { return 1.0; };
    const auto r = run(c, o, 5000, 1);
    EXPECT_GE(r.restarts, 2);
    EXPECT_EQ(r.trajectory.size(), 5000U);
}

TEST(ModCMA, BudgetEqualsLambdaGivesRunningMinimum) {
    CmaConfig c;
    std::vector<double> seen;
    Objective o = sphere(4);
    auto inner = o.f;
    o.f = [&](std::span<const double> x) {
        seen.push_back(inner(x));
        return seen.back();
    };
    const auto r = run(c, o, 8, 3);
    ASSERT_EQ(r.trajectory.size(), 8U);
    double m = seen[0];
    for (std::size_t i = 0; i < 8; ++i) {
        m = std::min(m, seen[i]);
        EXPECT_EQ(r.trajectory[i], m);
    }
}

TEST(ModCMA, BudgetExactDeterministicInBox) {
    const auto space = modcma_space();
    for (const auto& cfg : sample_random(space, 40, 12)) {
        const CmaConfig c = from_configuration(cfg, space);
        Objective o = sphere(5);
        long calls = 0;
        auto inner = o.f;
        o.f = [&](std::span<const double> x) {
            ++calls;
            for (double v : x) {
                EXPECT_GE(v, -5.0);
                EXPECT_LE(v, 5.0);
            }
            return inner(x);
        };
        const auto a = run(c, o, 1500, 4);
        EXPECT_EQ(calls, 1500);
        ASSERT_EQ(a.trajectory.size(), 1500U);
        for (std::size_t i = 1; i < a.trajectory.size(); ++i) EXPECT_LE(a.trajectory[i], a.trajectory[i - 1]);
        EXPECT_EQ(run(c, o, 1500, 4).trajectory, a.trajectory);
    }
}

TEST(ModCMA, DefaultReachesPrecisionOnSphere) {
    const auto space = modcma_space();
    const CmaConfig c = from_configuration(space.default_configuration(), space);
    int solved = 0;
    for (int seed = 0; seed < 5; ++seed) {
        auto prob = suite::make_problem(1, 5, 1);
        Objective o{5, prob.bounds(), [&](std::span<const double> x) { return prob.gap(x); }};
        solved += run(c, o, 10000, static_cast<std::uint64_t>(seed)).best_f <= 1e-8;
    }
    EXPECT_GE(solved, 4);
}
