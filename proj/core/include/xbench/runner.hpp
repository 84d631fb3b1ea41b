#pragma once

#include "xbench/configspace.hpp"
#include "xbench/optimizer.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace xbench::runner {

struct AoccBounds {
    double lb = 1e-8;
    double ub = 1e2;
};

/// (1e-8, 1e2) below 30 dimensions, (1e-8, 1e8) from 30 up.
AoccBounds default_bounds(int dim);

/// Normalized area over the log-scaled convergence curve:
///   (1/B) sum_i 1 - (clamp(log10 y_i, log10 lb, log10 ub) - log10 lb) / (log10 ub - log10 lb)
/// with y_i <= 0 treated as lb. Throws ValidationError on lb <= 0, ub <= lb or an empty trajectory.
double aocc(std::span<const double> trajectory, double lb, double ub);

struct ExperimentPlan {
    ConfigurationSpace space = random_search_space();
    std::vector<Configuration> configs;
    std::vector<int> fids;
    std::vector<int> dims;
    std::vector<int> iids{1, 2, 3, 4, 5};
    int reps = 5;
    long budget = 10'000;
    std::map<int, AoccBounds> bounds;  // per-dimension overrides

    [[nodiscard]] std::size_t job_count() const {
        return configs.size() * fids.size() * dims.size() * iids.size() * static_cast<std::size_t>(reps);
    }
    [[nodiscard]] AoccBounds bounds_for(int dim) const;
};

/// Plan file (TOML subset):
///   space   = "modcma" | "modde" | "random" | "<path to space file>"
///   design  = "grid" | "random" | "list"      (default "random")
///   samples = 100          # random design size
///   seed    = 1            # random design seed
///   configs = ["lambda=20,mu=10", ...]       # list design
///   fids = [1, 2]   dims = [5]   iids = [1, 2, 3, 4, 5]   reps = 5   budget = 10000
///   [[bounds]] dim = 30  lb = 1e-8  ub = 1e8
/// Relative space paths resolve against `base_dir`.
ExperimentPlan parse_plan(std::string_view text, const std::string& base_dir = ".");
ExperimentPlan load_plan(const std::string& path);

/// Resolves a builtin space name or loads a space file.
ConfigurationSpace resolve_space(const std::string& name_or_path, const std::string& base_dir = ".");

struct RunRecord {
    std::string config_id;
    Configuration config;
    int fid = 0;
    int dim = 0;
    int iid = 0;
    int seed = 0;  // repetition index
    double aocc = 0.0;
    double final_gap = 0.0;
    int restarts = 0;
    std::string status = "ok";
    double wall_ms = 0.0;

    [[nodiscard]] bool ok() const { return status == "ok"; }
};

/// Per-job RNG seed from the job identity; independent of scheduling.
std::uint64_t job_seed(const std::string& config_id, int fid, int dim, int iid, int rep);

/// Runs one configuration of any supported family ("modcma", "modde", "random").
RunResult run_configuration(const Configuration& config, const ConfigurationSpace& space, Objective& objective,
                            long budget, std::uint64_t seed);

/// Uniform random search in the box; the baseline family "random".
RunResult random_search(Objective& objective, long budget, std::uint64_t seed);

struct ExecuteOptions {
    int jobs = 1;
    std::string output_path;      // when set: stream to <path>.partial, final sorted file at <path>
    std::string trajectory_dir;   // when set: one eval_index,best_so_far CSV per job
    bool record_time = false;     // wall_ms stays 0 otherwise so files are reproducible
    std::function<void(std::size_t done, std::size_t total)> on_progress;
};

/// Executes every job; records come back in canonical order.
std::vector<RunRecord> execute(const ExperimentPlan& plan, const ExecuteOptions& options = {});

/// Canonical order: (config_id, fid, dim, iid, seed).
void sort_records(std::vector<RunRecord>& records);

std::string records_header(const ConfigurationSpace& space);
std::string record_row(const RunRecord& record, const ConfigurationSpace& space);
/// Header plus rows in canonical order.
std::string records_to_csv(std::vector<RunRecord> records, const ConfigurationSpace& space);

/// Parses a run-record CSV produced for `space`; throws ValidationError on header
/// mismatch, malformed rows, mixed families, or duplicate identity tuples.
std::vector<RunRecord> parse_records(std::string_view text, const ConfigurationSpace& space);
std::vector<RunRecord> load_records(const std::string& path, const ConfigurationSpace& space);

/// Reads the family column of the first data row.
std::string detect_family(std::string_view csv_text);

/// Drops failed rows; returns how many were dropped.
std::size_t drop_failed(std::vector<RunRecord>& records);

struct FeatureFrame {
    std::vector<std::string> columns;     // encoded parameters, then "iid", "seed"
    std::vector<std::vector<double>> X;   // row-major
    std::vector<double> y;                // aocc
};

FeatureFrame feature_frame(const std::vector<RunRecord>& records, const ConfigurationSpace& space);

void write_trajectory_csv(const std::string& path, std::span<const double> trajectory);

}  // namespace xbench::runner
