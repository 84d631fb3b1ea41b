#include "cli.hpp"

#include "xbench/common.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

namespace fs = std::filesystem;
using xbench::cli::run;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result xbench_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("xbench_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write_plan(int samples, const std::string& fids, const std::string& iids, int reps, long budget) {
        const auto p = path("plan.toml");
        xbench::write_file_atomic(p, "space = \"modcma\"\ndesign = \"random\"\nsamples = " + std::to_string(samples) +
                                         "\nseed = 7\nfids = " + fids + "\ndims = [5]\niids = " + iids +
                                         "\nreps = " + std::to_string(reps) + "\nbudget = " + std::to_string(budget) + "\n");
        return p;
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, VersionAndHelp) {
    const auto v = xbench_cli({"--version"});
    EXPECT_EQ(v.code, 0);
    EXPECT_EQ(v.out, xbench::cli::version_string() + "\n");
    EXPECT_NE(v.out.find("feature order "), std::string::npos);
    EXPECT_EQ(xbench_cli({"--help"}).code, 0);
    EXPECT_EQ(xbench_cli({"rank", "--help"}).code, 0);
}

TEST_F(CliTest, SpaceCount) {
    const auto r = xbench_cli({"space", "--file", "modcma", "--count"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "38880\n");
    const auto s = xbench_cli({"space", "--file", "modde", "--sample", "5", "--seed", "3"});
    EXPECT_EQ(s.code, 0);
    EXPECT_EQ(std::count(s.out.begin(), s.out.end(), '\n'), 6);
    EXPECT_EQ(s.out, xbench_cli({"space", "--file", "modde", "--sample", "5", "--seed", "3"}).out);
}

TEST_F(CliTest, ValidationErrorsExitOneWithOneLine) {
    const std::vector<std::vector<std::string>> cases = {
        {},
        {"frobnicate"},
        {"space", "--file", "modcma"},
        {"space", "--file", "modcma", "--count", "--enumerate"},
        {"space", "--file", path("missing.toml"), "--count"},
        {"rank", "--runs", path("missing.csv"), "--out-dir", path("o")},
        {"rank", "--runs", path("plan.toml"), "--out-dir", path("o"), "--unknown"},
        {"bias", "--space", "modcma", "--config-id", "0000000000000000"},
        {"bias", "--space", "modcma", "--runs", "5"},
        {"aac", "--runs", path("x.csv"), "--out-dir", path("o"), "--mode", "kfold"},
    };
    write_plan(2, "[1]", "[1]", 1, 100);
    for (const auto& args : cases) {
        const auto r = xbench_cli(args);
        std::string joined;
        for (const auto& a : args) joined += a + " ";
        EXPECT_EQ(r.code, 1) << joined << r.err;
        EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << joined << r.err;
    }
    EXPECT_FALSE(fs::exists(path("o")));
}

TEST_F(CliTest, MalformedCsvNamesTheField) {
    xbench::write_file_atomic(path("runs.csv"), "hello,world\n1,2\n");
    const auto r = xbench_cli({"rank", "--runs", path("runs.csv"), "--out-dir", path("o")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("family"), std::string::npos) << r.err;

    const auto plan = write_plan(2, "[1]", "[1]", 1, 50);
    ASSERT_EQ(xbench_cli({"run", "--plan", plan, "--out", path("ok.csv")}).code, 0);
    auto text = xbench::read_file(path("ok.csv"));
    const auto line2 = text.find('\n') + 1;
    const auto comma = text.find(',', line2);
    text.replace(line2, comma - line2, "not-a-hash");
    xbench::write_file_atomic(path("bad.csv"), text);
    const auto b = xbench_cli({"rank", "--runs", path("bad.csv"), "--out-dir", path("o")});
    EXPECT_EQ(b.code, 1);
    EXPECT_NE(b.err.find("config_id"), std::string::npos) << b.err;
}

TEST_F(CliTest, RuntimeFailureExitsTwo) {
    xbench::write_file_atomic(path("file"), "x");
    const auto r = xbench_cli({"space", "--file", "modcma", "--count", "--out", path("file") + "/sub/out.txt"});
    EXPECT_EQ(r.code, 2) << r.err;
}

TEST_F(CliTest, RunIsDeterministicAcrossJobs) {
    const auto plan = write_plan(6, "[1, 2]", "[1, 2]", 2, 300);
    ASSERT_EQ(xbench_cli({"run", "--plan", plan, "--out", path("a.csv"), "--jobs", "1"}).code, 0);
    ASSERT_EQ(xbench_cli({"run", "--plan", plan, "--out", path("b.csv"), "--jobs", "8"}).code, 0);
    ASSERT_EQ(xbench_cli({"run", "--plan", plan, "--out", path("c.csv"), "--jobs", "1"}).code, 0);
    const auto a = xbench::read_file(path("a.csv"));
    EXPECT_EQ(a, xbench::read_file(path("b.csv")));
    EXPECT_EQ(a, xbench::read_file(path("c.csv")));
    EXPECT_FALSE(fs::exists(path("a.csv.partial")));
}

TEST_F(CliTest, SmokePipeline) {
    // 20 configurations x 2 functions, d = 5, budget 1000
    const auto plan = write_plan(20, "[1, 2]", "[1, 2]", 2, 1000);
    const auto runs = path("runs.csv");
    ASSERT_EQ(xbench_cli({"run", "--plan", plan, "--out", runs, "--jobs", "2"}).code, 0);
    const auto before = xbench::read_file(runs);

    const auto e = xbench_cli({"explain", "--runs", runs, "--out-dir", path("explain"), "--svg", "--trees", "60"});
    ASSERT_EQ(e.code, 0) << e.err;
    for (const char* f : {"model_f1_d5.json", "model_f2_d5.json", "swarm_f1_d5.csv", "swarm_f2_d5.csv",
                          "swarm_f1_d5.svg", "importance.csv"}) {
        EXPECT_TRUE(fs::exists(dir_ / "explain" / f)) << f;
    }

    const auto r = xbench_cli({"rank", "--runs", runs, "--out-dir", path("rank")});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"ranking_d5.md", "ranking_d5.csv", "gains.md", "gains.csv", "hall_of_fame_d5.md",
                          "hall_of_fame_d5.csv"}) {
        EXPECT_TRUE(fs::exists(dir_ / "rank" / f)) << f;
    }

    const auto id = before.substr(before.find('\n') + 1, 16);
    const auto b = xbench_cli({"bias", "--space", "modcma", "--config-id", id, "--runs", "30", "--dim", "3",
                               "--budget", "200", "--out-dir", path("bias")});
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_TRUE(fs::exists(dir_ / "bias" / "bias.csv"));
    EXPECT_NE(b.out.find(id), std::string::npos);

    const auto a = xbench_cli({"aac", "--runs", runs, "--out-dir", path("aac"), "--doe", "64"});
    ASSERT_EQ(a.code, 0) << a.err;
    for (const char* f : {"features.csv", "loss_lofo.csv", "loss_loio.csv", "tree_d5.txt", "tree_d5.json"}) {
        EXPECT_TRUE(fs::exists(dir_ / "aac" / f)) << f;
    }
    const auto again = xbench_cli({"aac", "--runs", runs, "--features", path("aac/features.csv"), "--mode", "loio",
                                   "--model", "forest", "--trees", "10", "--out-dir", path("aac2")});
    ASSERT_EQ(again.code, 0) << again.err;

    const auto rep = xbench_cli({"report", "--runs", runs, "--out-dir", path("report"), "--trees", "30", "--doe", "64",
                                 "--bias-runs", "30", "--bias-budget", "100"});
    ASSERT_EQ(rep.code, 0) << rep.err;
    const auto index = xbench::read_file(path("report/index.md"));
    for (const char* f : {"rank/ranking_d5.md", "explain/model_f1_d5.json", "aac/loss_lofo.csv", "bias/bias.csv"}) {
        EXPECT_NE(index.find(f), std::string::npos) << f;
        EXPECT_TRUE(fs::exists(dir_ / "report" / f)) << f;
    }

    // inputs are never modified
    EXPECT_EQ(xbench::read_file(runs), before);
}

TEST_F(CliTest, CompareTwoFrameworks) {
    const auto plan = write_plan(4, "[1, 2]", "[1]", 2, 200);
    ASSERT_EQ(xbench_cli({"run", "--plan", plan, "--out", path("cma.csv")}).code, 0);
    xbench::write_file_atomic(path("de.toml"),
                              "space = \"modde\"\nsamples = 4\nseed = 2\nfids = [1, 2]\ndims = [5]\niids = [1]\nreps = 2\n"
                              "budget = 200\n");
    ASSERT_EQ(xbench_cli({"run", "--plan", path("de.toml"), "--out", path("de.csv")}).code, 0);
    const auto c = xbench_cli({"compare", "--a", path("cma.csv"), "--b", path("de.csv")});
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_NE(c.out.find("modcma"), std::string::npos);
    EXPECT_NE(c.out.find("modde"), std::string::npos);
}
