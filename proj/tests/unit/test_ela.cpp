#include "xbench/ela.hpp"
#include "xbench/common.hpp"

#include "../support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <set>

using namespace xbench;
using namespace xbench::ela;

namespace {

std::vector<std::vector<double>> splitmix_design(std::size_t n, std::size_t d, double lo, double hi) {
    std::vector<std::vector<double>> X(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n * d; ++i) {
        X[i / d][i % d] = lo + (hi - lo) * static_cast<double>(splitmix64(i) >> 11) * 0x1p-53;
    }
    return X;
}

ConfigurationSpace toy_space() {
    return ConfigurationSpace("toy", {fixtures::cat("kind", {"a", "b", "c"}), fixtures::num("size", {1, 2, 4, 8})}, {});
}

Configuration toy(const ConfigurationSpace& s, const std::string& kind, double size) {
    auto c = s.default_configuration();
    c.set(s, "kind", ParamValue::label(kind));
    c.set(s, "size", ParamValue::number(size));
    return c;
}

// Two functions, five instances each, on the full toy grid. Function 1 favours (a, 1),
// function 2 favours (c, 8); feature 0 separates the functions.
struct ToyGrid {
    ConfigurationSpace space = toy_space();
    std::vector<runner::RunRecord> records;
    std::vector<InstanceFeatures> features;
};

ToyGrid toy_grid() {
    ToyGrid g;
    const auto grid = enumerate_grid(g.space);
    for (int fid : {1, 2}) {
        for (int iid = 1; iid <= 5; ++iid) {
            InstanceFeatures f{fid, 5, iid, {}};
            for (std::size_t j = 0; j < kFeatureCount; ++j) {
                f.values[j] = std::sin(static_cast<double>(7 * iid + 3 * static_cast<int>(j)));
            }
            f.values[0] = (fid == 1 ? 0.0 : 10.0) + 0.1 * iid;
            g.features.push_back(f);
            for (const auto& c : grid) {
                const bool a = c.get(g.space, "kind").as_label() == "a";
                const bool cc = c.get(g.space, "kind").as_label() == "c";
                const double size = c.get(g.space, "size").as_number();
                const double score = fid == 1 ? (a ? 0.5 : 0.2) + 0.05 * (8 - size) / 7
                                              : (cc ? 0.5 : 0.3) + 0.05 * (size - 1) / 7;
                for (int rep = 0; rep < 2; ++rep) {
                    g.records.push_back(fixtures::record(c, g.space, fid, 5, iid, rep, score + 0.001 * rep));
                }
            }
        }
    }
    return g;
}

}  // namespace

// ---------------------------------------------------------------------------
// Features

TEST(ElaFeatures, MomentsMatchReference) {
    const std::vector<double> y{0, 0, 0, 1};
    // scipy.stats.skew / kurtosis (population, excess)
    EXPECT_NEAR(skewness(y), 2.0 / std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(skewness(y), 1.1547005383792515, 1e-12);
    EXPECT_NEAR(excess_kurtosis(y), -0.6666666666666665, 1e-12);
}

TEST(ElaFeatures, QuantileMatchesLinearInterpolation) {
    const std::vector<double> v{3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5};
    EXPECT_DOUBLE_EQ(quantile(v, 0.10), 1.0);
    EXPECT_DOUBLE_EQ(quantile(v, 0.25), 2.5);
    EXPECT_DOUBLE_EQ(quantile(v, 0.90), 6.0);
    EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile(v, 1.0), 9.0);
}

TEST(ElaFeatures, FixtureMatchesIndependentImplementation) {
    // numpy/scipy reimplementation of every feature on the same 12 x 2 sample
    const auto X = splitmix_design(12, 2, -5, 5);
    std::vector<double> y;
    for (const auto& x : X) y.push_back(x[0] * x[0] + 3 * x[1] + x[0] * x[1]);
    const auto f = compute_features(X, y, {-5, 5});
    const double expected[kFeatureCount] = {
        0.11780122942457094, -0.47942482857684565, 0.3197711135126441, 0.4941465937686156, 0.36467317940691646,
        10.90048575665001,   30.583398060648193,   2.8056913006826614, 0.6984012586913777, 2.562299411676453,
        0.6423234466662615,  0.6349120258454896,   0.7970725283648925,
    };
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        EXPECT_NEAR(f[j], expected[j], 1e-9 * std::max(1.0, std::abs(expected[j]))) << feature_names()[j];
    }
}

TEST(ElaFeatures, LinearFunctionHasUnitR2) {
    const auto X = latin_hypercube(1024, 5, {-5, 5}, 3);
    std::vector<double> y;
    for (const auto& x : X) y.push_back(std::accumulate(x.begin(), x.end(), 0.0));
    const auto f = compute_features(X, y, {-5, 5});
    EXPECT_NEAR(f[4], 1.0, 1e-9);
    // scaled coefficients are the box width
    EXPECT_NEAR(f[5], 10.0, 1e-9);
    EXPECT_NEAR(f[6], 10.0, 1e-9);
    EXPECT_NEAR(f[7], 1.0, 1e-9);
    EXPECT_NEAR(f[8], 1.0, 1e-9);
}

TEST(ElaFeatures, SeparableQuadraticIsFittedExactly) {
    const auto X = latin_hypercube(200, 3, {-5, 5}, 4);
    std::vector<double> y;
    for (const auto& x : X) y.push_back(x[0] * x[0] + 4 * x[1] * x[1] + x[2]);
    const auto f = compute_features(X, y, {-5, 5});
    EXPECT_NEAR(f[8], 1.0, 1e-9);
    // quadratic coefficients 100, 400 and ~0 (x scaled to [0,1])
    EXPECT_GT(f[9], 1e6);
}

TEST(ElaFeatures, ConstantFunctionMapsToConventions) {
    const auto X = latin_hypercube(64, 3, {-5, 5}, 5);
    const std::vector<double> y(64, 7.25);
    const auto f = compute_features(X, y, {-5, 5});
    EXPECT_EQ(f[0], 0.0);
    EXPECT_EQ(f[1], 0.0);
    EXPECT_EQ(f[4], 0.0);
    EXPECT_EQ(f[8], 0.0);
    for (std::size_t j = 0; j < kFeatureCount; ++j) EXPECT_TRUE(std::isfinite(f[j])) << feature_names()[j];
}

TEST(ElaFeatures, DuplicatePointsAreDeduplicated) {
    auto X = splitmix_design(20, 2, 0, 1);
    std::vector<double> y;
    for (const auto& x : X) y.push_back(x[0] + 2 * x[1] * x[1]);
    const auto base = compute_features(X, y, {0, 1});
    auto X2 = X;
    auto y2 = y;
    X2.push_back(X[3]);
    y2.push_back(y[3] + 1.0);  // worse duplicate: dropped
    const auto dup = compute_features(X2, y2, {0, 1});
    EXPECT_DOUBLE_EQ(dup[10], base[10]);
    EXPECT_DOUBLE_EQ(dup[11], base[11]);
    EXPECT_DOUBLE_EQ(dup[12], base[12]);
}

TEST(ElaFeatures, InvariantUnderPositiveAffineTransformOfY) {
    const auto X = latin_hypercube(300, 4, {-5, 5}, 6);
    std::vector<double> y, z;
    for (const auto& x : X) {
        y.push_back(std::sin(x[0]) + x[1] * x[2] + x[3] * x[3]);
        z.push_back(3.0 * y.back() + 11.0);
    }
    const auto a = compute_features(X, y, {-5, 5});
    const auto b = compute_features(X, z, {-5, 5});
    for (std::size_t j : {0, 1, 2, 3, 4, 7, 8, 9, 10, 11, 12}) {
        EXPECT_NEAR(a[j], b[j], 1e-9 * std::max(1.0, std::abs(a[j]))) << feature_names()[j];
    }
    EXPECT_NEAR(b[6], 3.0 * a[6], 1e-9 * a[6]);
}

TEST(ElaFeatures, LatinHypercubeStratifies) {
    const int n = 50;
    const auto X = latin_hypercube(n, 4, {-5, 5}, 7);
    for (int j = 0; j < 4; ++j) {
        std::set<int> strata;
        for (const auto& x : X) strata.insert(static_cast<int>(std::floor((x[static_cast<std::size_t>(j)] + 5) / 10 * n)));
        EXPECT_EQ(strata.size(), static_cast<std::size_t>(n));
    }
    EXPECT_EQ(X, latin_hypercube(n, 4, {-5, 5}, 7));
    EXPECT_NE(X, latin_hypercube(n, 4, {-5, 5}, 8));
}

TEST(ElaFeatures, DoeFeaturesDeterministicAndFinite) {
    for (int fid : suite::native_fids()) {
        auto p = suite::make_problem(fid, 5, 1);
        const auto f = doe_features(p, 256, 9);
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            EXPECT_TRUE(std::isfinite(f[j])) << "f" << fid << " " << feature_names()[j];
        }
        auto q = suite::make_problem(fid, 5, 1);
        EXPECT_EQ(f, doe_features(q, 256, 9)) << fid;
    }
}

TEST(ElaFeatures, InputValidation) {
    auto p = suite::make_problem(1, 5, 1);
    EXPECT_THROW(doe_features(p, 6, 1), ValidationError);
    const auto X = splitmix_design(10, 2, 0, 1);
    std::vector<double> y(10, 1.0);
    y[4] = std::nan("");
    EXPECT_THROW(compute_features(X, y, {0, 1}), ValidationError);
}

TEST(ElaFeatures, InstanceFeaturesJobIndependentAndCsvRoundTrip) {
    const std::vector<std::array<int, 3>> inst{{1, 2, 1}, {2, 2, 1}, {1, 2, 2}, {8, 2, 3}};
    const auto a = instance_features(inst, 64, 3, 1);
    const auto b = instance_features(inst, 64, 3, 3);
    ASSERT_EQ(a.size(), 4u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].values, b[i].values);
        EXPECT_EQ(a[i].fid, inst[i][0]);
    }
    const auto csv = features_csv(a);
    const auto back = parse_features(csv);
    ASSERT_EQ(back.size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(back[i].values, a[i].values);

    auto bad = csv;
    bad.replace(bad.find("lm_r2"), 5, "lm_xx");
    try {
        parse_features(bad);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("lm_r2"), std::string::npos);
    }
    EXPECT_THROW(parse_features("fid,dim\n"), ValidationError);
}

TEST(ElaFeatures, OrderHashIsStable) {
    EXPECT_EQ(feature_order_hash(), feature_order_hash());
    EXPECT_EQ(feature_names().front(), "y_skewness");
    EXPECT_EQ(feature_names().back(), "nb_nn_ratio");
}

// ---------------------------------------------------------------------------
// Trees

namespace {

// Independent impurity: per-output Gini / scaled variance written out longhand.
double oracle_impurity(const std::vector<Configuration>& labels, const std::vector<std::size_t>& rows,
                       const ConfigurationSpace& s) {
    if (rows.empty()) return 0.0;
    const double n = static_cast<double>(rows.size());
    std::map<std::string, double> kinds;
    for (auto r : rows) kinds[labels[r].get(s, "kind").as_label()] += 1.0;
    double gini = 1.0;
    for (const auto& [k, c] : kinds) gini -= (c / n) * (c / n);
    gini /= 1.0 - 1.0 / 3.0;
    double mean = 0.0;
    for (auto r : rows) mean += (labels[r].get(s, "size").as_number() - 1.0) / 7.0;
    mean /= n;
    double var = 0.0;
    for (auto r : rows) {
        const double v = (labels[r].get(s, "size").as_number() - 1.0) / 7.0 - mean;
        var += v * v;
    }
    var /= n;
    return (gini + 4.0 * var) / 2.0;
}

}  // namespace

TEST(AacTree, SingleLabelGivesSingleLeaf) {
    const auto s = toy_space();
    const auto X = splitmix_design(20, 3, 0, 1);
    const std::vector<Configuration> labels(20, toy(s, "b", 4));
    const auto t = fit_tree(X, labels, s);
    ASSERT_EQ(t.nodes.size(), 1u);
    EXPECT_EQ(t.predict(X[5]), labels[0]);
}

TEST(AacTree, SeparableClustersGiveDepthOne) {
    const auto s = toy_space();
    std::vector<std::vector<double>> X;
    std::vector<Configuration> labels;
    for (int i = 0; i < 20; ++i) {
        X.push_back({std::sin(i * 1.0), i < 10 ? 0.1 * i : 5.0 + 0.1 * i});
        labels.push_back(i < 10 ? toy(s, "a", 1) : toy(s, "c", 8));
    }
    const auto t = fit_tree(X, labels, s);
    EXPECT_EQ(t.depth(), 1);
    EXPECT_EQ(t.nodes[0].feature, 1);
    for (std::size_t i = 0; i < X.size(); ++i) EXPECT_EQ(t.predict(X[i]), labels[i]);
}

TEST(AacTree, SplitImpurityMatchesOracle) {
    const auto s = toy_space();
    const auto X = splitmix_design(10, 2, 0, 1);
    const char* kinds[] = {"a", "b", "c", "a", "a", "c", "b", "b", "a", "c"};
    const double sizes[] = {1, 2, 8, 4, 1, 8, 2, 4, 1, 8};
    std::vector<Configuration> labels;
    for (int i = 0; i < 10; ++i) labels.push_back(toy(s, kinds[i], sizes[i]));
    std::vector<std::size_t> rows(10);
    std::iota(rows.begin(), rows.end(), 0);
    EXPECT_NEAR(node_impurity(labels, rows, s), oracle_impurity(labels, rows, s), 1e-12);
    for (int f = 0; f < 2; ++f) {
        for (double thr : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            std::vector<std::size_t> l, r;
            for (auto i : rows) (X[i][static_cast<std::size_t>(f)] < thr ? l : r).push_back(i);
            const double expect =
                (static_cast<double>(l.size()) * oracle_impurity(labels, l, s) +
                 static_cast<double>(r.size()) * oracle_impurity(labels, r, s)) / 10.0;
            EXPECT_NEAR(split_impurity(X, labels, rows, f, thr, s), expect, 1e-12) << f << " " << thr;
        }
    }
}

TEST(AacTree, ChosenSplitIsTheBestCandidate) {
    const auto s = toy_space();
    const auto X = splitmix_design(30, 3, 0, 1);
    std::vector<Configuration> labels;
    for (std::size_t i = 0; i < 30; ++i) {
        labels.push_back(toy(s, X[i][2] > 0.5 ? "a" : (X[i][0] > 0.3 ? "b" : "c"), X[i][1] > 0.6 ? 8 : 2));
    }
    const auto t = fit_tree(X, labels, s, {.max_depth = 1});
    ASSERT_EQ(t.nodes.size(), 3u);
    std::vector<std::size_t> rows(30);
    std::iota(rows.begin(), rows.end(), 0);
    const double chosen = split_impurity(X, labels, rows, t.nodes[0].feature, t.nodes[0].threshold, s);
    for (int f = 0; f < 3; ++f) {
        for (std::size_t i = 0; i < 30; ++i) {
            EXPECT_LE(chosen, split_impurity(X, labels, rows, f, X[i][static_cast<std::size_t>(f)], s) + 1e-12);
        }
    }
}

TEST(AacTree, DepthBoundAndValidLeavesOnModcmaLabels) {
    const auto s = modcma_space();
    const auto labels = sample_random(s, 80, 3);
    const auto X = splitmix_design(80, 6, 0, 1);
    for (int depth : {0, 2, 7}) {
        const auto t = fit_tree(X, labels, s, {.max_depth = depth});
        EXPECT_LE(t.depth(), depth);
        for (const auto& n : t.nodes) {
            if (n.is_leaf()) EXPECT_TRUE(validate(n.value, s).empty());
        }
    }
    // unbounded depth memorizes distinct feature rows
    const auto deep = fit_tree(X, labels, s, {.max_depth = 100});
    for (std::size_t i = 0; i < X.size(); ++i) EXPECT_EQ(deep.predict(X[i]), labels[i]);
}

TEST(AacTree, AggregateRepairsConstraintViolations) {
    // numeric means can produce mu > lambda; aggregate must return a valid configuration
    const auto s = modcma_space();
    const auto labels = sample_random(s, 200, 11);
    for (std::size_t start = 0; start + 5 <= labels.size(); start += 5) {
        std::vector<std::size_t> rows{start, start + 1, start + 2, start + 3, start + 4};
        EXPECT_TRUE(validate(aggregate(labels, rows, s), s).empty());
    }
}

TEST(AacTree, Determinism) {
    const auto s = modcma_space();
    const auto labels = sample_random(s, 60, 4);
    const auto X = splitmix_design(60, 5, 0, 1);
    EXPECT_EQ(tree_json(fit_tree(X, labels, s), s), tree_json(fit_tree(X, labels, s), s));
}

TEST(AacTree, RejectsBadInput) {
    const auto s = toy_space();
    EXPECT_THROW(fit_tree({{1.0}}, {toy(s, "a", 1)}, s), ValidationError);
    EXPECT_THROW(fit_tree({{1.0}, {std::nan("")}}, {toy(s, "a", 1), toy(s, "a", 1)}, s), ValidationError);
    auto bad = toy(s, "a", 1);
    bad.values[1] = ParamValue::number(3);
    EXPECT_THROW(fit_tree({{1.0}, {2.0}}, {toy(s, "a", 1), bad}, s), ValidationError);
}

TEST(AacTree, Exports) {
    const auto s = toy_space();
    std::vector<std::vector<double>> X;
    std::vector<Configuration> labels;
    for (int i = 0; i < 6; ++i) {
        std::vector<double> row(kFeatureCount, 0.0);
        row[4] = i;
        X.push_back(row);
        labels.push_back(i < 3 ? toy(s, "a", 1) : toy(s, "b", 2));
    }
    const auto t = fit_tree(X, labels, s);
    const auto text = tree_text(t, s);
    EXPECT_NE(text.find("if lm_r2 < 2.5:"), std::string::npos);
    EXPECT_NE(text.find("kind=a,size=1"), std::string::npos);
    const auto json = tree_json(t, s);
    EXPECT_NE(json.find("\"xbench-aac-tree\""), std::string::npos);
    EXPECT_NE(json.find("\"threshold\": 2.5"), std::string::npos);
}

TEST(AacForest, SingleTreeWithoutBaggingEqualsFitTree) {
    const auto s = modcma_space();
    const auto labels = sample_random(s, 40, 5);
    const auto X = splitmix_design(40, 6, 0, 1);
    const auto forest = fit_forest(X, labels, s, {.n_trees = 1, .max_depth = 7, .bootstrap = false, .max_features = 0});
    EXPECT_EQ(tree_json(forest.trees.front(), s), tree_json(fit_tree(X, labels, s), s));
    for (const auto& x : X) EXPECT_EQ(forest.predict(x, s), fit_tree(X, labels, s).predict(x));
}

TEST(AacForest, DeterministicAndOutOfBagCoverage) {
    const auto s = modcma_space();
    const auto labels = sample_random(s, 50, 6);
    const auto X = splitmix_design(50, 13, 0, 1);
    const ForestParams p{.n_trees = 10, .max_depth = 7, .bootstrap = true, .max_features = -1, .seed = 3};
    const auto a = fit_forest(X, labels, s, p);
    const auto b = fit_forest(X, labels, s, p);
    ASSERT_EQ(a.trees.size(), 10u);
    for (std::size_t t = 0; t < a.trees.size(); ++t) EXPECT_EQ(tree_json(a.trees[t], s), tree_json(b.trees[t], s));
    EXPECT_GT(a.oob_coverage(), 0.0);
    // P(row in every bag) = (1 - e^-1)^10 ~ 1%
    EXPECT_GT(a.oob_coverage(), 0.9);
    for (const auto& bag : a.in_bag) EXPECT_EQ(std::accumulate(bag.begin(), bag.end(), 0), 50);
    for (const auto& x : X) EXPECT_TRUE(validate(a.predict(x, s), s).empty());
}

// ---------------------------------------------------------------------------
// AAC evaluation

TEST(AacEvaluate, InstancesCarrySingleBest) {
    const auto g = toy_grid();
    const auto inst = aac_instances(g.records, g.features);
    ASSERT_EQ(inst.size(), 10u);
    for (const auto& i : inst) {
        EXPECT_EQ(i.aocc.size(), 12u);
        const auto expect = i.fid == 1 ? toy(g.space, "a", 1) : toy(g.space, "c", 8);
        EXPECT_EQ(i.single_best, config_id(expect, g.space));
        EXPECT_NEAR(i.single_best_aocc, 0.5505, 1e-12);
    }
    auto partial = g.features;
    partial.pop_back();
    EXPECT_EQ(aac_instances(g.records, partial).size(), 9u);
}

TEST(AacEvaluate, OracleLeakHasZeroLoss) {
    const auto g = toy_grid();
    const auto inst = aac_instances(g.records, g.features);
    std::map<std::vector<double>, Configuration> answer;
    for (const auto& i : inst) answer[i.features] = i.configs.at(i.single_best);
    const Learner leak = [&](const auto&, const auto&) {
        return Predictor([&](std::span<const double> x) { return answer.at({x.begin(), x.end()}); });
    };
    for (Mode m : {Mode::Lofo, Mode::Loio}) {
        const auto rows = evaluate_aac(inst, g.space, m, leak);
        EXPECT_EQ(rows.size(), 10u);
        for (const auto& r : rows) {
            EXPECT_EQ(r.loss, 0.0);
            EXPECT_FALSE(r.fallback);
        }
    }
}

TEST(AacEvaluate, LossesAreNonNegative) {
    const auto g = toy_grid();
    const auto inst = aac_instances(g.records, g.features);
    for (Mode m : {Mode::Lofo, Mode::Loio}) {
        for (const auto& r : evaluate_aac(inst, g.space, m, tree_learner(g.space))) {
            EXPECT_GE(r.loss, 0.0);
            EXPECT_GE(r.avg_best_loss, 0.0);
            EXPECT_GE(r.random_loss, 0.0);
        }
    }
}

TEST(AacEvaluate, SeparableLoioTreeBeatsAvgBest) {
    const auto g = toy_grid();
    const auto inst = aac_instances(g.records, g.features);
    const auto rows = evaluate_aac(inst, g.space, Mode::Loio, tree_learner(g.space));
    const auto s = summarize(rows);
    EXPECT_LE(s.mean_loss, s.mean_avg_best_loss);
    EXPECT_EQ(s.mean_loss, 0.0);
    EXPECT_GT(s.mean_avg_best_loss, 0.0);
    EXPECT_EQ(s.fallbacks, 0u);

    // LOFO cannot see the held-out function; expected to be no better
    const auto lofo = summarize(evaluate_aac(inst, g.space, Mode::Lofo, tree_learner(g.space)));
    EXPECT_GE(lofo.mean_loss, s.mean_loss);
}

TEST(AacEvaluate, MissingPredictionIsReportedAsFallback) {
    const auto g = toy_grid();
    std::vector<runner::RunRecord> records;
    const auto missing = config_id(toy(g.space, "b", 4), g.space);
    for (const auto& r : g.records) {
        if (r.config_id != missing) records.push_back(r);
    }
    const auto inst = aac_instances(records, g.features);
    const Learner constant = [&](const auto&, const auto&) {
        return Predictor([&](std::span<const double>) { return toy(g.space, "b", 4); });
    };
    const auto rows = evaluate_aac(inst, g.space, Mode::Loio, constant);
    for (const auto& r : rows) {
        EXPECT_TRUE(r.fallback);
        EXPECT_EQ(r.predicted, missing);
        EXPECT_NE(r.evaluated, missing);
        // nearest: one differing output, lowest id among (a,4), (c,4), (b,1), (b,2), (b,8)
        const auto& cfg = inst.front().configs.at(r.evaluated);
        const int diff = (cfg.get(g.space, "kind").as_label() != "b") + (cfg.get(g.space, "size").as_number() != 4);
        EXPECT_EQ(diff, 1);
    }
    const auto csv = loss_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "mode,fold,fid,dim,iid,single_best,single_best_aocc,predicted,evaluated,fallback,predicted_aocc,loss,"
              "avg_best,avg_best_loss,random_loss");
    EXPECT_NE(csv.find(",true,"), std::string::npos);
}

TEST(AacEvaluate, NeedsTwoFolds) {
    const auto g = toy_grid();
    auto inst = aac_instances(g.records, g.features);
    std::erase_if(inst, [](const AacInstance& i) { return i.fid == 2; });
    EXPECT_THROW(evaluate_aac(inst, g.space, Mode::Lofo, tree_learner(g.space)), ValidationError);
    EXPECT_NO_THROW(evaluate_aac(inst, g.space, Mode::Loio, tree_learner(g.space)));
    EXPECT_EQ(parse_mode("lofo"), Mode::Lofo);
    EXPECT_THROW(parse_mode("kfold"), ValidationError);
}

TEST(AacEvaluate, ForestLearnerRunsEndToEnd) {
    const auto g = toy_grid();
    const auto inst = aac_instances(g.records, g.features);
    const auto rows = evaluate_aac(inst, g.space, Mode::Loio, forest_learner(g.space, {.n_trees = 15, .seed = 2}));
    ASSERT_EQ(rows.size(), 10u);
    for (const auto& r : rows) EXPECT_GE(r.loss, 0.0);
}
