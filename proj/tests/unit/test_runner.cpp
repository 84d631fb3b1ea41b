#include "xbench/runner.hpp"
#include "xbench/suite.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace xbench;
using namespace xbench::runner;

namespace {

// Literal transcription of the AOCC definition with log-then-clamp order.
double aocc_log_then_clamp(const std::vector<double>& y, double lb, double ub) {
    double s = 0.0;
    for (double v : y) {
        const double l = v <= 0 ? std::log10(lb) : std::log10(v);
        const double c = std::clamp(l, std::log10(lb), std::log10(ub));
        s += 1.0 - (c - std::log10(lb)) / (std::log10(ub) - std::log10(lb));
    }
    return s / static_cast<double>(y.size());
}

std::vector<double> random_trajectory(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> e(-12.0, 6.0);
    std::vector<double> y(n);
    for (auto& v : y) v = std::pow(10.0, e(rng));
    return y;
}

ExperimentPlan tiny_plan(const std::string& family, std::size_t n_configs, std::vector<int> iids, int reps, long budget) {
    ExperimentPlan p;
    p.space = resolve_space(family);
    p.configs = p.space.params().empty() ? std::vector<Configuration>{p.space.default_configuration()}
                                         : sample_random(p.space, n_configs, 3);
    p.fids = {1};
    p.dims = {5};
    p.iids = std::move(iids);
    p.reps = reps;
    p.budget = budget;
    return p;
}

}  // namespace

TEST(Aocc, HandCases) {
    EXPECT_EQ(aocc(std::vector<double>(10, 1e-8), 1e-8, 1e2), 1.0);
    EXPECT_EQ(aocc(std::vector<double>(10, 0.0), 1e-8, 1e2), 1.0);
    EXPECT_EQ(aocc(std::vector<double>(10, -3.0), 1e-8, 1e2), 1.0);
    EXPECT_EQ(aocc(std::vector<double>(10, 1e2), 1e-8, 1e2), 0.0);
    EXPECT_EQ(aocc(std::vector<double>(10, 1e9), 1e-8, 1e2), 0.0);
    EXPECT_NEAR(aocc(std::vector<double>{1e2, 1e-8}, 1e-8, 1e2), 0.5, 1e-12);
    EXPECT_NEAR(aocc(std::vector<double>(7, 1e-3), 1e-8, 1e2), 0.5, 1e-12);
}

TEST(Aocc, RejectsBadBounds) {
    const std::vector<double> y{1.0};
    EXPECT_THROW(aocc(y, 0.0, 1.0), ValidationError);
    EXPECT_THROW(aocc(y, 1.0, 1.0), ValidationError);
    EXPECT_THROW(aocc(std::vector<double>{}, 1e-8, 1e2), ValidationError);
}

TEST(Aocc, DefaultBounds) {
    EXPECT_EQ(default_bounds(5).ub, 1e2);
    EXPECT_EQ(default_bounds(30).ub, 1e8);
    EXPECT_EQ(default_bounds(5).lb, 1e-8);
}

TEST(Aocc, BoundedMonotoneAndClampOrderAgnostic) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> shrink(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        auto b = random_trajectory(rng, 50);
        auto a = b;
        for (auto& v : a) v *= shrink(rng);
        const double fa = aocc(a, 1e-8, 1e2);
        const double fb = aocc(b, 1e-8, 1e2);
        EXPECT_GE(fa, fb);
        EXPECT_GE(fa, 0.0);
        EXPECT_LE(fa, 1.0);
        EXPECT_NEAR(fb, aocc_log_then_clamp(b, 1e-8, 1e2), 1e-12);
    }
}

TEST(Aocc, ScaleEquivalence) {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 100; ++k) {
        auto y = random_trajectory(rng, 30);
        const double base = aocc(y, 1e-8, 1e8);
        for (double c : {1e-3, 7.5, 1e4}) {
            auto s = y;
            for (auto& v : s) v *= c;
            EXPECT_NEAR(aocc(s, 1e-8 * c, 1e8 * c), base, 1e-12);
        }
    }
}

TEST(Runner, JobSeedDependsOnIdentityOnly) {
    EXPECT_EQ(job_seed("abc", 1, 5, 1, 0), job_seed("abc", 1, 5, 1, 0));
    EXPECT_NE(job_seed("abc", 1, 5, 1, 0), job_seed("abc", 1, 5, 1, 1));
    EXPECT_NE(job_seed("abc", 1, 5, 1, 0), job_seed("abd", 1, 5, 1, 0));
}

TEST(Runner, ProductCount) {
    auto plan = tiny_plan("modde", 2, {1, 2}, 2, 200);
    EXPECT_EQ(plan.job_count(), 8U);
    const auto recs = execute(plan);
    ASSERT_EQ(recs.size(), 8U);
    for (const auto& r : recs) {
        EXPECT_TRUE(r.ok());
        EXPECT_GE(r.aocc, 0.0);
        EXPECT_LE(r.aocc, 1.0);
        EXPECT_EQ(r.wall_ms, 0.0);
    }
}

TEST(Runner, ParallelismIndependentFiles) {
    const auto dir = std::filesystem::temp_directory_path() / "xbench_runner_par";
    std::filesystem::remove_all(dir);
    auto plan = tiny_plan("modcma", 6, {1, 2}, 2, 500);
    plan.fids = {1, 3};
    ExecuteOptions one;
    one.output_path = (dir / "a.csv").string();
    ExecuteOptions eight;
    eight.jobs = 8;
    eight.output_path = (dir / "b.csv").string();
    execute(plan, one);
    execute(plan, eight);
    EXPECT_EQ(read_file(one.output_path), read_file(eight.output_path));
    EXPECT_FALSE(std::filesystem::exists(one.output_path + ".partial"));
}

TEST(Runner, CsvRoundTrip) {
    auto plan = tiny_plan("modcma", 3, {1}, 2, 300);
    const auto recs = execute(plan);
    const auto text = records_to_csv(recs, plan.space);
    EXPECT_EQ(detect_family(text), "modcma");
    const auto back = parse_records(text, plan.space);
    ASSERT_EQ(back.size(), recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(back[i].config, recs[i].config);
        EXPECT_EQ(back[i].aocc, recs[i].aocc);
        EXPECT_EQ(back[i].final_gap, recs[i].final_gap);
    }
    EXPECT_EQ(records_to_csv(back, plan.space), text);
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "config_id,family,covariance,active,base_sampler,elitist,mirrored,weights_option,step_size_adaptation,"
              "local_restart,lambda,mu,fid,dim,iid,seed,aocc,final_gap,restarts,status,wall_ms");
}

TEST(Runner, CsvRejectsBadInput) {
    const auto space = modde_space();
    EXPECT_THROW(parse_records("nope\n", space), ValidationError);
    auto plan = tiny_plan("modde", 1, {1}, 1, 100);
    auto text = records_to_csv(execute(plan), plan.space);
    EXPECT_THROW(parse_records(text + text.substr(text.find('\n') + 1), space), ValidationError);  // duplicate
    EXPECT_THROW(parse_records(text, modcma_space()), ValidationError);
}

TEST(Runner, FailedJobsAreRecorded) {
    suite::PluginObjective bad;
    bad.id = 9001;
    bad.name = "explodes";
    bad.evaluate = [](std::span<const double>) -> double { throw std::runtime_error("boom, really"); };
    suite::register_objective(bad);
    auto plan = tiny_plan("random", 1, {1}, 2, 50);
    plan.fids = {1, 9001};
    auto recs = execute(plan, {});
    ASSERT_EQ(recs.size(), 4U);
    int failed = 0;
    for (const auto& r : recs)
        if (!r.ok()) {
            ++failed;
            EXPECT_EQ(r.fid, 9001);
            EXPECT_EQ(r.status.find(','), std::string::npos);
        }
    EXPECT_EQ(failed, 2);
    const auto text = records_to_csv(recs, plan.space);
    auto back = parse_records(text, plan.space);
    EXPECT_EQ(drop_failed(back), 2U);
    EXPECT_EQ(back.size(), 2U);
}

TEST(Runner, FeatureFrameColumns) {
    auto plan = tiny_plan("modcma", 2, {1}, 4, 100);
    const auto recs = execute(plan);
    const auto f = feature_frame(recs, plan.space);
    EXPECT_EQ(f.columns.size(), plan.space.size() + 2);
    EXPECT_EQ(f.columns.back(), "seed");
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(f.X[i].back(), static_cast<double>(recs[i].seed));
        EXPECT_EQ(f.X[i][f.columns.size() - 2], static_cast<double>(recs[i].iid));
        EXPECT_EQ(f.y[i], recs[i].aocc);
    }
    const auto g = feature_frame(recs, plan.space);
    EXPECT_EQ(f.X, g.X);
    auto mixed = recs;
    mixed[0].config.family = "modde";
    EXPECT_THROW(feature_frame(mixed, plan.space), ValidationError);
}

TEST(Runner, PlanParsing) {
    const auto plan = parse_plan(R"(
space = "modcma"
design = "list"
configs = ["lambda=20,mu=10", "active=true"]
fids = [1, 2]
dims = [5, 30]
iids = [1, 2]
reps = 3
budget = 500

[[bounds]]
dim = 30
lb = 1e-6
ub = 1e6
)");
    EXPECT_EQ(plan.configs.size(), 2U);
    EXPECT_EQ(plan.job_count(), 2U * 2 * 2 * 2 * 3);
    EXPECT_EQ(plan.bounds_for(30).ub, 1e6);
    EXPECT_EQ(plan.bounds_for(5).ub, 1e2);
    EXPECT_EQ(plan.budget, 500);

    const auto grid = parse_plan("space = \"modde\"\ndesign = \"grid\"\nfids = [1]\ndims = [5]\n");
    EXPECT_EQ(grid.configs.size(), 86400U);
    EXPECT_EQ(grid.iids, (std::vector<int>{1, 2, 3, 4, 5}));
    EXPECT_EQ(grid.reps, 5);
    EXPECT_EQ(grid.budget, 10000);

    EXPECT_THROW(parse_plan("space = \"modde\"\nfids = [99]\ndims = [5]\n"), ValidationError);
    EXPECT_THROW(parse_plan("space = \"modde\"\nfids = [1]\n"), ValidationError);
    EXPECT_THROW(parse_plan("space = \"nosuch.toml\"\nfids = [1]\ndims = [5]\n"), std::exception);
}

TEST(Runner, ShippedPlansParse) {
    for (const auto& e : std::filesystem::directory_iterator(std::string(XBENCH_SOURCE_DIR) + "/data/plans")) {
        EXPECT_NO_THROW(load_plan(e.path().string())) << e.path();
    }
}

TEST(Runner, TrajectoryFiles) {
    const auto dir = std::filesystem::temp_directory_path() / "xbench_traj";
    std::filesystem::remove_all(dir);
    auto plan = tiny_plan("random", 1, {1}, 1, 25);
    ExecuteOptions o;
    o.trajectory_dir = dir.string();
    execute(plan, o);
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        ++files;
        const auto text = read_file(e.path().string());
        EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 26);
    }
    EXPECT_EQ(files, 1U);
}

TEST(Runner, SphereDifficultyInstanceInvariant) {
    auto plan = tiny_plan("random", 1, {1, 2, 3, 4, 5}, 10, 2000);
    const auto recs = execute(plan, {4});
    std::vector<double> mean(6, 0.0);
    for (const auto& r : recs) mean[static_cast<std::size_t>(r.iid)] += r.aocc / 10.0;
    double avg = 0.0;
    for (int i = 1; i <= 5; ++i) avg += mean[static_cast<std::size_t>(i)] / 5.0;
    double mad = 0.0;
    for (int i = 1; i <= 5; ++i) mad += std::abs(mean[static_cast<std::size_t>(i)] - avg) / 5.0;
    EXPECT_LE(mad, 0.05);
}
