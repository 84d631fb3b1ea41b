#include "cli.hpp"

#include "xbench/analysis.hpp"
#include "xbench/bias.hpp"
#include "xbench/common.hpp"
#include "xbench/ela.hpp"
#include "xbench/gbdt.hpp"
#include "xbench/runner.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>

#ifndef XBENCH_VERSION
#define XBENCH_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace xbench::cli {

namespace {

// Largest grid the CLI will enumerate to resolve a --config-id.
constexpr std::uint64_t kMaxLookupGrid = 2'000'000;

struct Runs {
    ConfigurationSpace space = random_search_space();
    std::vector<runner::RunRecord> records;
    std::size_t dropped = 0;
};

Runs load_runs(const std::string& path, const std::string& space_arg) {
    const auto text = read_file(path);
    Runs r;
    r.space = runner::resolve_space(space_arg.empty() ? runner::detect_family(text) : space_arg);
    r.records = runner::parse_records(text, r.space);
    r.dropped = runner::drop_failed(r.records);
    if (r.records.empty()) throw ValidationError("--runs: " + path + " has no successful records");
    return r;
}

class Writer {
public:
    explicit Writer(std::string dir) : dir_(std::move(dir)) {}

    void prepare() const { fs::create_directories(dir_); }

    std::string put(const std::string& name, std::string_view content) {
        const auto path = (fs::path(dir_) / name).string();
        write_file_atomic(path, content);
        files_.push_back(name);
        return path;
    }

    [[nodiscard]] const std::vector<std::string>& files() const { return files_; }
    [[nodiscard]] const std::string& dir() const { return dir_; }

private:
    std::string dir_;
    std::vector<std::string> files_;
};

std::string suffix(int fid, int dim) { return "f" + std::to_string(fid) + "_d" + std::to_string(dim); }

std::vector<int> all_dims(const std::vector<runner::RunRecord>& records) { return analysis::dims_of(records); }

// ---------------------------------------------------------------------------
// Verb bodies shared by the single verbs and `report`

void do_rank(const Runs& runs, Writer& w, std::ostream& out) {
    std::map<int, analysis::Gains> by_dim;
    for (int dim : all_dims(runs.records)) {
        const auto rows = analysis::ranking_table(runs.records, dim);
        w.put("ranking_d" + std::to_string(dim) + ".md", analysis::ranking_markdown(rows));
        w.put("ranking_d" + std::to_string(dim) + ".csv", analysis::ranking_csv(rows));
        const auto hof = analysis::hall_of_fame(runs.records, runs.space, dim);
        w.put("hall_of_fame_d" + std::to_string(dim) + ".md", analysis::hall_of_fame_markdown(hof, runs.space, dim));
        w.put("hall_of_fame_d" + std::to_string(dim) + ".csv", analysis::hall_of_fame_csv(hof, dim));
        by_dim[dim] = analysis::gains(runs.records, dim);
        out << "d" << dim << ": avg-best " << analysis::avg_best(runs.records, dim).config_id << " over " << rows.size()
            << " functions\n";
    }
    w.put("gains.md", analysis::gains_markdown(by_dim, runs.space.family()));
    w.put("gains.csv", analysis::gains_csv(by_dim));
}

void do_explain(const Runs& runs, const gbdt::FitParams& params, int jobs, bool svg, Writer& w, std::ostream& out) {
    const auto groups = gbdt::explain(runs.records, runs.space, params, jobs);
    for (const auto& g : groups) {
        const auto s = suffix(g.fid, g.dim);
        w.put("model_" + s + ".json", gbdt::to_json(g.model));
        w.put("swarm_" + s + ".csv", gbdt::swarm_csv({g}));
        if (svg) w.put("swarm_" + s + ".svg", gbdt::swarm_svg(g));
        out << s << ": " << g.n_records << " records, R2 " << format_double(g.r2) << ", top "
            << (g.ranking.empty() ? std::string("-") : g.ranking.front().feature) << "\n";
    }
    w.put("importance.csv", gbdt::importance_csv(groups));
}

struct AacOptions {
    std::string features_path;
    std::string mode = "both";
    std::string model = "tree";
    int depth = 7;
    int trees = 100;
    std::uint64_t seed = 1;
    int doe = ela::kDefaultSamples;
    int jobs = 1;
};

std::vector<ela::InstanceFeatures> features_for(const Runs& runs, const AacOptions& o, Writer& w) {
    if (!o.features_path.empty()) return ela::load_features(o.features_path);
    std::set<std::array<int, 3>> seen;
    for (const auto& r : runs.records) seen.insert({r.fid, r.dim, r.iid});
    const std::vector<std::array<int, 3>> inst(seen.begin(), seen.end());
    auto f = ela::instance_features(inst, o.doe, o.seed, o.jobs);
    w.put("features.csv", ela::features_csv(f));
    return f;
}

void do_aac(const Runs& runs, const AacOptions& o, Writer& w, std::ostream& out) {
    const auto features = features_for(runs, o, w);
    const auto instances = ela::aac_instances(runs.records, features);
    if (instances.empty()) throw ValidationError("aac: no instance has both runs and features");
    const ela::Learner learner =
        o.model == "forest"
            ? ela::forest_learner(runs.space, {.n_trees = o.trees, .max_depth = o.depth, .seed = o.seed})
            : ela::tree_learner(runs.space, {.max_depth = o.depth});

    std::vector<ela::Mode> modes;
    if (o.mode != "loio") modes.push_back(ela::Mode::Lofo);
    if (o.mode != "lofo") modes.push_back(ela::Mode::Loio);
    std::string summary = "| mode | rows | loss | avg-best loss | random loss | fallbacks |\n|---|---|---|---|---|---|\n";
    for (auto m : modes) {
        const auto rows = ela::evaluate_aac(instances, runs.space, m, learner);
        const auto name = std::string(ela::to_string(m));
        w.put("loss_" + name + ".csv", ela::loss_csv(rows));
        const auto s = ela::summarize(rows);
        summary += "| " + name + " | " + std::to_string(s.rows) + " | " + format_double(s.mean_loss) + " | " +
                   format_double(s.mean_avg_best_loss) + " | " + format_double(s.mean_random_loss) + " | " +
                   std::to_string(s.fallbacks) + " |\n";
        out << name << ": mean loss " << format_double(s.mean_loss) << " (avg-best " << format_double(s.mean_avg_best_loss)
            << ", random " << format_double(s.mean_random_loss) << ", " << s.fallbacks << " fallbacks)\n";
    }
    // one tree on every instance of each dimension, for inspection
    std::set<int> dims;
    for (const auto& i : instances) dims.insert(i.dim);
    for (int dim : dims) {
        std::vector<std::vector<double>> X;
        std::vector<Configuration> labels;
        for (const auto& i : instances) {
            if (i.dim != dim) continue;
            X.push_back(i.features);
            labels.push_back(i.configs.at(i.single_best));
        }
        if (X.size() < 2) continue;
        const auto tree = ela::fit_tree(X, labels, runs.space, {.max_depth = o.depth});
        w.put("tree_d" + std::to_string(dim) + ".txt", ela::tree_text(tree, runs.space));
        w.put("tree_d" + std::to_string(dim) + ".json", ela::tree_json(tree, runs.space));
    }
    w.put("aac_summary.md", "# AAC losses (" + runs.space.family() + ", " + o.model + ")\n\n" + summary);
}

Configuration find_config(const ConfigurationSpace& space, const std::string& id, const std::string& assignment) {
    if (!assignment.empty()) {
        auto c = parse_assignment(assignment, space);
        const auto v = validate(c, space);
        if (!v.empty()) throw ValidationError("--config: " + v.front().subject + ": " + v.front().message);
        return c;
    }
    if (id.empty()) return space.default_configuration();
    if (count_grid(space) > kMaxLookupGrid) throw ValidationError("--config-id: grid too large to search; use --config");
    for (auto& c : enumerate_grid(space)) {
        if (config_id(c, space) == id) return c;
    }
    throw ValidationError("--config-id: " + id + " is not in the " + space.family() + " grid");
}

void do_bias(const Configuration& config, const ConfigurationSpace& space, int dim, int n_runs, long budget,
             std::uint64_t seed, int jobs, double alpha, Writer* w, std::ostream& out,
             std::vector<bias::BiasReport>* collected = nullptr) {
    auto report = bias::run_bias(config, space, dim, n_runs, budget, seed, jobs, alpha);
    out << report.config_id << " d" << dim << ": " << bias::to_string(report.verdict) << " (min p "
        << format_double(report.min_p()) << ")\n";
    if (w != nullptr) w->put("histograms_" + report.config_id + "_d" + std::to_string(dim) + ".json", bias::histogram_json(report));
    if (collected != nullptr) collected->push_back(std::move(report));
}

std::string index_markdown(const std::string& family, const std::vector<std::pair<std::string, std::vector<std::string>>>& sections,
                           std::size_t records, std::size_t dropped) {
    std::string md = "# xbench report\n\nFamily: " + family + ". Records: " + std::to_string(records) +
                     " (" + std::to_string(dropped) + " failed rows dropped).\n";
    for (const auto& [dir, files] : sections) {
        md += "\n## " + dir + "\n\n";
        for (const auto& f : files) md += "- [" + f + "](" + dir + "/" + f + ")\n";
    }
    return md;
}

// ---------------------------------------------------------------------------

void add_jobs(CLI::App* app, int& jobs) {
    app->add_option("--jobs,-j", jobs, "Worker threads")->check(CLI::Range(1, 1024));
}

}  // namespace

std::string version_string() {
    return std::string("xbench ") + XBENCH_VERSION + " (feature order " + to_hex(ela::feature_order_hash()) + ")";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Modular optimizer benchmarking, explanation and bias analysis", "xbench"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    std::function<void()> action;

    // space
    std::string space_file;
    bool count = false, enumerate = false;
    std::size_t sample = 0;
    std::uint64_t seed = 1;
    std::string out_path;
    auto* space = app.add_subcommand("space", "Inspect a configuration space");
    space->add_option("--file", space_file, "Space file or builtin name (modcma, modde, random)")->required();
    auto* count_opt = space->add_flag("--count", count, "Print the grid size");
    auto* enum_opt = space->add_flag("--enumerate", enumerate, "Write the full grid as CSV");
    auto* sample_opt = space->add_option("--sample", sample, "Write N random configurations as CSV");
    count_opt->excludes(enum_opt)->excludes(sample_opt);
    enum_opt->excludes(sample_opt);
    space->add_option("--seed", seed, "Sampling seed");
    space->add_option("--out", out_path, "Output file (default stdout)");
    space->callback([&] {
        action = [&] {
            const auto s = runner::resolve_space(space_file);
            if (!count && !enumerate && sample == 0) throw ValidationError("space: one of --count, --enumerate, --sample is required");
            std::string text;
            if (count) {
                text = std::to_string(count_grid(s)) + "\n";
            } else {
                const auto configs = enumerate ? enumerate_grid(s) : sample_random(s, sample, seed);
                text = config_csv_header(s) + "\n";
                for (const auto& c : configs) text += config_csv_row(c, s) + "\n";
            }
            if (out_path.empty()) {
                out << text;
            } else {
                write_file_atomic(out_path, text);
            }
        };
    });

    // run
    std::string plan_path, trajectories;
    int jobs = 1;
    bool timing = false;
    auto* run_cmd = app.add_subcommand("run", "Execute an experiment plan");
    run_cmd->add_option("--plan", plan_path, "Plan file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--out", out_path, "Run-record CSV")->required();
    run_cmd->add_option("--trajectories", trajectories, "Directory for per-job trajectories");
    run_cmd->add_flag("--time", timing, "Record wall-clock time (makes output non-reproducible)");
    add_jobs(run_cmd, jobs);
    run_cmd->callback([&] {
        action = [&] {
            const auto plan = runner::load_plan(plan_path);
            if (plan.job_count() == 0) throw ValidationError("--plan: no jobs (check configs, fids, dims, iids, reps)");
            if (!trajectories.empty()) fs::create_directories(trajectories);
            runner::ExecuteOptions o;
            o.jobs = jobs;
            o.output_path = out_path;
            o.trajectory_dir = trajectories;
            o.record_time = timing;
            const auto records = runner::execute(plan, o);
            const auto failed = std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.ok(); });
            out << "wrote " << records.size() << " records to " << out_path << " (" << failed << " failed)\n";
        };
    });

    // explain
    std::string runs_path, space_arg, out_dir;
    bool svg = false;
    gbdt::FitParams fit;
    auto* explain = app.add_subcommand("explain", "Fit per-function surrogates and write SHAP data");
    explain->add_option("--runs", runs_path, "Run-record CSV")->required()->check(CLI::ExistingFile);
    explain->add_option("--space", space_arg, "Space file or builtin name (default: family column)");
    explain->add_option("--out-dir", out_dir, "Output directory")->required();
    explain->add_flag("--svg", svg, "Also write beeswarm SVGs");
    explain->add_option("--trees", fit.n_trees, "Boosting rounds")->check(CLI::Range(1, 100000));
    explain->add_option("--depth", fit.max_depth, "Maximum tree depth")->check(CLI::Range(1, 64));
    explain->add_option("--learning-rate", fit.learning_rate, "Shrinkage")->check(CLI::Range(1e-6, 1.0));
    add_jobs(explain, jobs);
    explain->callback([&] {
        action = [&] {
            const auto runs = load_runs(runs_path, space_arg);
            Writer w(out_dir);
            w.prepare();
            do_explain(runs, fit, jobs, svg, w, out);
        };
    });

    // rank
    auto* rank = app.add_subcommand("rank", "Rankings, gains, module effects and hall of fame");
    rank->add_option("--runs", runs_path, "Run-record CSV")->required()->check(CLI::ExistingFile);
    rank->add_option("--space", space_arg, "Space file or builtin name (default: family column)");
    rank->add_option("--out-dir", out_dir, "Output directory")->required();
    rank->callback([&] {
        action = [&] {
            const auto runs = load_runs(runs_path, space_arg);
            Writer w(out_dir);
            w.prepare();
            do_rank(runs, w, out);
        };
    });

    // compare
    std::string a_path, b_path, a_space, b_space, a_name, b_name;
    auto* compare = app.add_subcommand("compare", "Compare two frameworks on shared functions");
    compare->add_option("--a", a_path, "First run-record CSV")->required()->check(CLI::ExistingFile);
    compare->add_option("--b", b_path, "Second run-record CSV")->required()->check(CLI::ExistingFile);
    compare->add_option("--space-a", a_space, "Space of --a (default: family column)");
    compare->add_option("--space-b", b_space, "Space of --b (default: family column)");
    compare->add_option("--name-a", a_name, "Label for --a");
    compare->add_option("--name-b", b_name, "Label for --b");
    compare->add_option("--out-dir", out_dir, "Write comparison files here instead of stdout");
    compare->callback([&] {
        action = [&] {
            const auto a = load_runs(a_path, a_space);
            const auto b = load_runs(b_path, b_space);
            const auto na = a_name.empty() ? a.space.family() : a_name;
            const auto nb = b_name.empty() ? b.space.family() : b_name;
            std::vector<int> dims;
            const auto da = all_dims(a.records), db = all_dims(b.records);
            std::set_intersection(da.begin(), da.end(), db.begin(), db.end(), std::back_inserter(dims));
            if (dims.empty()) throw ValidationError("compare: --a and --b share no dimension");
            std::optional<Writer> w;
            if (!out_dir.empty()) {
                w.emplace(out_dir);
                w->prepare();
            }
            for (int dim : dims) {
                const auto rows = analysis::compare_frameworks(a.records, b.records, dim);
                const auto md = analysis::comparison_markdown(rows, na, nb);
                if (w) {
                    w->put("compare_d" + std::to_string(dim) + ".md", md);
                    w->put("compare_d" + std::to_string(dim) + ".csv", analysis::comparison_csv(rows));
                } else {
                    out << md;
                }
            }
        };
    });

    // bias
    std::string config_id_arg, config_arg;
    int bias_runs = bias::kDefaultRuns, dim = 5;
    long budget = bias::kDefaultBudget;
    double alpha = bias::kDefaultAlpha;
    auto* bias_cmd = app.add_subcommand("bias", "Structural-bias test on the uniform-fitness function");
    bias_cmd->add_option("--space", space_arg, "Space file or builtin name")->required();
    auto* id_opt = bias_cmd->add_option("--config-id", config_id_arg, "Configuration id from a run file");
    bias_cmd->add_option("--config", config_arg, "Configuration as name=value,...")->excludes(id_opt);
    bias_cmd->add_option("--runs", bias_runs, "Independent f0 runs")->check(CLI::Range(bias::kMinRuns, 1'000'000));
    bias_cmd->add_option("--dim", dim, "Dimension")->check(CLI::Range(1, 1000));
    bias_cmd->add_option("--budget", budget, "Evaluations per run")->check(CLI::Range(1L, 100'000'000L));
    bias_cmd->add_option("--seed", seed, "Base seed");
    bias_cmd->add_option("--alpha", alpha, "Family-wise significance level")->check(CLI::Range(1e-12, 0.5));
    bias_cmd->add_option("--out-dir", out_dir, "Write bias.csv and histogram JSON here");
    add_jobs(bias_cmd, jobs);
    bias_cmd->callback([&] {
        action = [&] {
            const auto s = runner::resolve_space(space_arg);
            const auto config = find_config(s, config_id_arg, config_arg);
            std::optional<Writer> w;
            if (!out_dir.empty()) {
                w.emplace(out_dir);
                w->prepare();
            }
            std::vector<bias::BiasReport> reports;
            do_bias(config, s, dim, bias_runs, budget, seed, jobs, alpha, w ? &*w : nullptr, out, &reports);
            if (w) w->put("bias.csv", bias::reports_csv(reports));
        };
    });

    // aac
    AacOptions aac_opts;
    auto* aac = app.add_subcommand("aac", "Feature-based configuration selection, LOFO/LOIO");
    aac->add_option("--runs", runs_path, "Run-record CSV")->required()->check(CLI::ExistingFile);
    aac->add_option("--space", space_arg, "Space file or builtin name (default: family column)");
    aac->add_option("--features", aac_opts.features_path, "Features CSV (computed when omitted)")->check(CLI::ExistingFile);
    aac->add_option("--mode", aac_opts.mode, "lofo, loio or both")->check(CLI::IsMember({"lofo", "loio", "both"}));
    aac->add_option("--model", aac_opts.model, "tree or forest")->check(CLI::IsMember({"tree", "forest"}));
    aac->add_option("--depth", aac_opts.depth, "Maximum tree depth")->check(CLI::Range(0, 64));
    aac->add_option("--trees", aac_opts.trees, "Forest size")->check(CLI::Range(1, 10000));
    aac->add_option("--seed", aac_opts.seed, "Seed for the DOE and the forest");
    aac->add_option("--doe", aac_opts.doe, "DOE sample size when computing features")->check(CLI::Range(3, 1'000'000));
    aac->add_option("--out-dir", out_dir, "Output directory")->required();
    add_jobs(aac, aac_opts.jobs);
    aac->callback([&] {
        action = [&] {
            const auto runs = load_runs(runs_path, space_arg);
            Writer w(out_dir);
            w.prepare();
            do_aac(runs, aac_opts, w, out);
        };
    });

    // report
    bool no_aac = false;
    int report_bias_runs = 0;
    auto* report = app.add_subcommand("report", "Rank, explain, AAC and bias into one directory with an index");
    report->add_option("--runs", runs_path, "Run-record CSV")->required()->check(CLI::ExistingFile);
    report->add_option("--space", space_arg, "Space file or builtin name (default: family column)");
    report->add_option("--out-dir", out_dir, "Output directory")->required();
    report->add_option("--trees", fit.n_trees, "Boosting rounds for explain")->check(CLI::Range(1, 100000));
    report->add_option("--doe", aac_opts.doe, "DOE sample size for AAC features")->check(CLI::Range(3, 1'000'000));
    report->add_flag("--no-aac", no_aac, "Skip the AAC section");
    report->add_option("--bias-runs", report_bias_runs, "Bias-test the avg-best configuration of each dimension (0 = skip)")
        ->check(CLI::Range(0, 1'000'000));
    report->add_option("--bias-budget", budget, "Evaluations per bias run")->check(CLI::Range(1L, 100'000'000L));
    add_jobs(report, jobs);
    report->callback([&] {
        action = [&] {
            const auto runs = load_runs(runs_path, space_arg);
            if (report_bias_runs != 0 && report_bias_runs < bias::kMinRuns) {
                throw ValidationError("--bias-runs: need 0 or at least " + std::to_string(bias::kMinRuns));
            }
            fs::create_directories(out_dir);
            std::vector<std::pair<std::string, std::vector<std::string>>> sections;

            Writer rank_w((fs::path(out_dir) / "rank").string());
            rank_w.prepare();
            do_rank(runs, rank_w, out);
            sections.emplace_back("rank", rank_w.files());

            Writer explain_w((fs::path(out_dir) / "explain").string());
            explain_w.prepare();
            do_explain(runs, fit, jobs, true, explain_w, out);
            sections.emplace_back("explain", explain_w.files());

            std::set<int> fids, iids;
            for (const auto& r : runs.records) {
                fids.insert(r.fid);
                iids.insert(r.iid);
            }
            if (!no_aac && fids.size() >= 2 && iids.size() >= 2) {
                Writer aac_w((fs::path(out_dir) / "aac").string());
                aac_w.prepare();
                aac_opts.jobs = jobs;
                do_aac(runs, aac_opts, aac_w, out);
                sections.emplace_back("aac", aac_w.files());
            }

            if (report_bias_runs > 0) {
                Writer bias_w((fs::path(out_dir) / "bias").string());
                bias_w.prepare();
                std::vector<bias::BiasReport> reports;
                for (int d : all_dims(runs.records)) {
                    const auto best = analysis::avg_best(runs.records, d);
                    const auto& cfg = std::find_if(runs.records.begin(), runs.records.end(), [&](const auto& r) {
                                          return r.config_id == best.config_id;
                                      })->config;
                    do_bias(cfg, runs.space, d, report_bias_runs, budget, seed, jobs, alpha, &bias_w, out, &reports);
                }
                bias_w.put("bias.csv", bias::reports_csv(reports));
                sections.emplace_back("bias", bias_w.files());
            }
            write_file_atomic((fs::path(out_dir) / "index.md").string(),
                              index_markdown(runs.space.family(), sections, runs.records.size(), runs.dropped));
            out << "report written to " << out_dir << "/index.md\n";
        };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << version_string() << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "xbench: error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        if (action) action();
        return kExitOk;
    } catch (const ValidationError& e) {
        err << "xbench: error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "xbench: failure: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace xbench::cli
