#include "xbench/runner.hpp"

#include "xbench/modcma.hpp"
#include "xbench/modde.hpp"
#include "xbench/suite.hpp"
#include "xbench/toml_lite.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

namespace xbench::runner {

namespace fs = std::filesystem;

AoccBounds default_bounds(int dim) { return dim < 30 ? AoccBounds{1e-8, 1e2} : AoccBounds{1e-8, 1e8}; }

AoccBounds ExperimentPlan::bounds_for(int dim) const {
    const auto it = bounds.find(dim);
    return it != bounds.end() ? it->second : default_bounds(dim);
}

double aocc(std::span<const double> trajectory, double lb, double ub) {
    if (!(lb > 0.0) || !(ub > lb)) throw ValidationError("aocc: need 0 < lb < ub");
    if (trajectory.empty()) throw ValidationError("aocc: empty trajectory");
    const double llb = std::log10(lb);
    const double lub = std::log10(ub);
    const double span = lub - llb;
    double sum = 0.0;
    for (const double y : trajectory) {
        const double v = (y <= lb || std::isnan(y)) ? (std::isnan(y) ? lub : llb) : std::min(std::log10(y), lub);
        sum += 1.0 - (v - llb) / span;
    }
    return std::clamp(sum / static_cast<double>(trajectory.size()), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Plans

ConfigurationSpace resolve_space(const std::string& name_or_path, const std::string& base_dir) {
    if (name_or_path == "modcma") return modcma_space();
    if (name_or_path == "modde") return modde_space();
    if (name_or_path == "random") return random_search_space();
    fs::path p(name_or_path);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    return load_space(p.string());
}

namespace {

std::vector<int> int_list(const toml::Table& t, std::string_view key, std::vector<int> fallback) {
    const auto* v = t.find(key);
    if (!v) return fallback;
    std::vector<int> out;
    if (v->kind == toml::Value::Kind::Number) {
        out.push_back(static_cast<int>(v->as_number(key)));
        return out;
    }
    for (const auto& item : v->as_array(key)) {
        const double d = item.as_number(key);
        if (d != std::floor(d)) throw ValidationError("plan: '" + std::string(key) + "' must hold integers");
        out.push_back(static_cast<int>(d));
    }
    if (out.empty()) throw ValidationError("plan: '" + std::string(key) + "' is empty");
    return out;
}

}  // namespace

ExperimentPlan parse_plan(std::string_view text, const std::string& base_dir) {
    const auto doc = toml::parse(text);
    const auto& root = doc.root;
    ExperimentPlan plan;
    plan.space = resolve_space(root.at("space").as_string("space"), base_dir);

    const std::string design = root.contains("design") ? root.at("design").as_string("design") : "random";
    if (design == "grid") {
        plan.configs = enumerate_grid(plan.space);
    } else if (design == "random") {
        const auto n = root.contains("samples") ? static_cast<std::size_t>(root.at("samples").as_number("samples")) : 100;
        const auto seed = root.contains("seed") ? static_cast<std::uint64_t>(root.at("seed").as_number("seed")) : 1;
        plan.configs = plan.space.params().empty() ? std::vector<Configuration>{plan.space.default_configuration()}
                                                   : sample_random(plan.space, n, seed);
    } else if (design == "list") {
        for (const auto& item : root.at("configs").as_array("configs"))
            plan.configs.push_back(parse_assignment(item.as_string("configs"), plan.space));
    } else {
        throw ValidationError("plan: unknown design '" + design + "' (grid|random|list)");
    }

    plan.fids = int_list(root, "fids", {});
    plan.dims = int_list(root, "dims", {});
    if (plan.fids.empty()) throw ValidationError("plan: 'fids' is required");
    if (plan.dims.empty()) throw ValidationError("plan: 'dims' is required");
    plan.iids = int_list(root, "iids", plan.iids);
    if (root.contains("reps")) plan.reps = static_cast<int>(root.at("reps").as_number("reps"));
    if (root.contains("budget")) plan.budget = static_cast<long>(root.at("budget").as_number("budget"));
    if (plan.reps < 1) throw ValidationError("plan: reps must be >= 1");
    if (plan.budget < 1) throw ValidationError("plan: budget must be >= 1");
    for (int fid : plan.fids)
        if (!suite::is_supported(fid)) suite::make_problem(fid, 2, 1);  // throws the listing error
    for (int d : plan.dims)
        if (d < 2) throw ValidationError("plan: dimension must be >= 2");
    for (int iid : plan.iids)
        if (iid < 1) throw ValidationError("plan: instance ids start at 1");

    for (const auto& t : doc.array("bounds")) {
        const int dim = static_cast<int>(t.at("dim").as_number("dim"));
        AoccBounds b{t.at("lb").as_number("lb"), t.at("ub").as_number("ub")};
        if (!(b.lb > 0.0) || !(b.ub > b.lb)) throw ValidationError("plan: bounds need 0 < lb < ub");
        plan.bounds[dim] = b;
    }
    return plan;
}

ExperimentPlan load_plan(const std::string& path) {
    try {
        return parse_plan(read_file(path), fs::path(path).parent_path().string());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Execution

std::uint64_t job_seed(const std::string& config_id, int fid, int dim, int iid, int rep) {
    return mix_seed(fnv1a(config_id), static_cast<std::uint64_t>(fid), static_cast<std::uint64_t>(dim),
                    static_cast<std::uint64_t>(iid), static_cast<std::uint64_t>(rep));
}

RunResult random_search(Objective& objective, long budget, std::uint64_t seed) {
    Rng rng(seed);
    EvaluationBudget eval(objective, budget);
    std::uniform_real_distribution<double> u(objective.bounds.lower, objective.bounds.upper);
    std::vector<double> x(static_cast<std::size_t>(objective.dim));
    while (!eval.exhausted()) {
        for (double& v : x) v = u(rng);
        eval(x);
    }
    return std::move(eval).finish(0);
}

RunResult run_configuration(const Configuration& config, const ConfigurationSpace& space, Objective& objective,
                            long budget, std::uint64_t seed) {
    const std::string& family = space.family();
    if (family == "modcma") return modcma::run(modcma::from_configuration(config, space), objective, budget, seed);
    if (family == "modde") return modde::run(modde::from_configuration(config, space), objective, budget, seed);
    if (family == "random") return random_search(objective, budget, seed);
    throw ValidationError("no optimizer for family '" + family + "' (modcma|modde|random)");
}

namespace {

struct Job {
    std::size_t config;
    int fid;
    int dim;
    int iid;
    int rep;
};

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
    return s;
}

RunRecord run_job(const ExperimentPlan& plan, const std::vector<std::string>& ids, const Job& job,
                  const ExecuteOptions& options) {
    RunRecord r;
    r.config = plan.configs[job.config];
    r.config_id = ids[job.config];
    r.fid = job.fid;
    r.dim = job.dim;
    r.iid = job.iid;
    r.seed = job.rep;
    const auto start = std::chrono::steady_clock::now();
    try {
        auto problem = suite::make_problem(job.fid, job.dim, job.iid);
        Objective objective{job.dim, problem.bounds(), [&](std::span<const double> x) { return problem.gap(x); }};
        const auto result = run_configuration(r.config, plan.space, objective, plan.budget,
                                              job_seed(r.config_id, job.fid, job.dim, job.iid, job.rep));
        const auto b = plan.bounds_for(job.dim);
        r.aocc = aocc(result.trajectory, b.lb, b.ub);
        r.final_gap = result.trajectory.back();
        r.restarts = result.restarts;
        if (!options.trajectory_dir.empty()) {
            const auto name = r.config_id + "_f" + std::to_string(r.fid) + "_d" + std::to_string(r.dim) + "_i" +
                              std::to_string(r.iid) + "_s" + std::to_string(r.seed) + ".csv";
            write_trajectory_csv((fs::path(options.trajectory_dir) / name).string(), result.trajectory);
        }
    } catch (const std::exception& e) {
        r.status = "failed: " + sanitize(e.what());
        r.aocc = 0.0;
        r.final_gap = std::numeric_limits<double>::quiet_NaN();
    }
    if (options.record_time)
        r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace

std::vector<RunRecord> execute(const ExperimentPlan& plan, const ExecuteOptions& options) {
    std::vector<std::string> ids;
    ids.reserve(plan.configs.size());
    for (const auto& c : plan.configs) ids.push_back(config_id(c, plan.space));

    std::vector<Job> jobs;
    jobs.reserve(plan.job_count());
    for (std::size_t c = 0; c < plan.configs.size(); ++c)
        for (int fid : plan.fids)
            for (int dim : plan.dims)
                for (int iid : plan.iids)
                    for (int rep = 0; rep < plan.reps; ++rep) jobs.push_back({c, fid, dim, iid, rep});

    std::vector<RunRecord> records(jobs.size());
    std::ofstream partial;
    std::string partial_path;
    if (!options.output_path.empty()) {
        partial_path = options.output_path + ".partial";
        const auto parent = fs::path(options.output_path).parent_path();
        if (!parent.empty()) fs::create_directories(parent);
        partial.open(partial_path, std::ios::binary | std::ios::trunc);
        if (!partial) throw std::runtime_error("cannot write " + partial_path);
        partial << records_header(plan.space) << '\n';
    }
    if (!options.trajectory_dir.empty()) fs::create_directories(options.trajectory_dir);

    std::atomic<std::size_t> next{0};
    std::size_t done = 0;
    std::mutex sink;
    auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
            records[k] = run_job(plan, ids, jobs[k], options);
            const std::lock_guard lock(sink);
            if (partial.is_open()) partial << record_row(records[k], plan.space) << '\n' << std::flush;
            ++done;
            if (options.on_progress) options.on_progress(done, jobs.size());
        }
    };
    const int workers = std::clamp(options.jobs, 1, std::max(1, static_cast<int>(jobs.size())));
    {
        std::vector<std::jthread> pool;
        for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
    }

    sort_records(records);
    if (!options.output_path.empty()) {
        partial.close();
        write_file_atomic(options.output_path, records_to_csv(records, plan.space));
        std::error_code ec;
        fs::remove(partial_path, ec);
    }
    return records;
}

void sort_records(std::vector<RunRecord>& records) {
    std::stable_sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
        return std::tie(a.config_id, a.fid, a.dim, a.iid, a.seed) < std::tie(b.config_id, b.fid, b.dim, b.iid, b.seed);
    });
}

// ---------------------------------------------------------------------------
// CSV

namespace {
constexpr std::string_view kTail = "fid,dim,iid,seed,aocc,final_gap,restarts,status,wall_ms";

std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto end = line.find(',', start);
        out.emplace_back(line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}
}  // namespace

std::string records_header(const ConfigurationSpace& space) {
    std::string h = "config_id,family";
    for (const auto& p : space.params()) h += "," + p.name;
    h += ",";
    h += kTail;
    return h;
}

std::string record_row(const RunRecord& r, const ConfigurationSpace& space) {
    std::string row = r.config_id + "," + space.family();
    for (const auto& v : r.config.values) row += "," + v.text();
    row += "," + std::to_string(r.fid) + "," + std::to_string(r.dim) + "," + std::to_string(r.iid) + "," +
           std::to_string(r.seed) + "," + format_double(r.aocc) + "," + format_double(r.final_gap) + "," +
           std::to_string(r.restarts) + "," + r.status + "," + format_double(r.wall_ms);
    return row;
}

std::string records_to_csv(std::vector<RunRecord> records, const ConfigurationSpace& space) {
    sort_records(records);
    std::string out = records_header(space) + "\n";
    for (const auto& r : records) out += record_row(r, space) + "\n";
    return out;
}

std::string detect_family(std::string_view text) {
    const auto first = text.find('\n');
    if (first == std::string_view::npos) throw ValidationError("run file: no data rows");
    if (!text.starts_with("config_id,family,")) throw ValidationError("run file: header must start with 'config_id,family'");
    const auto second = text.find('\n', first + 1);
    const auto row = split_csv(text.substr(first + 1, second == std::string_view::npos ? std::string_view::npos
                                                                                       : second - first - 1));
    if (row.size() < 2 || row[1].empty()) throw ValidationError("run file: no data rows");
    return row[1];
}

std::vector<RunRecord> parse_records(std::string_view text, const ConfigurationSpace& space) {
    std::vector<RunRecord> out;
    const std::string header = records_header(space);
    std::size_t pos = 0;
    int line_no = 0;
    std::set<std::tuple<std::string, int, int, int, int>> seen;
    const std::size_t n_params = space.size();
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != header)
                throw ValidationError("run file header does not match space '" + space.family() + "': expected '" +
                                      header + "'");
            continue;
        }
        const auto cells = split_csv(line);
        const auto where = "run file line " + std::to_string(line_no) + ": ";
        if (cells.size() != n_params + 11)
            throw ValidationError(where + "expected " + std::to_string(n_params + 11) + " fields, got " +
                                  std::to_string(cells.size()));
        try {
            RunRecord r;
            r.config_id = cells[0];
            if (cells[1] != space.family())
                throw ValidationError("family '" + cells[1] + "' in a '" + space.family() + "' dataset");
            r.config = Configuration{space.family(), {}};
            for (std::size_t i = 0; i < n_params; ++i)
                r.config.values.push_back(parse_value_for(space.params()[i], cells[2 + i]));
            if (const auto id = config_id(r.config, space); id != r.config_id)
                throw ValidationError("field 'config_id': '" + r.config_id + "' does not match the configuration (" + id + ")");
            std::size_t k = 2 + n_params;
            r.fid = static_cast<int>(parse_int(cells[k++], "fid"));
            r.dim = static_cast<int>(parse_int(cells[k++], "dim"));
            r.iid = static_cast<int>(parse_int(cells[k++], "iid"));
            r.seed = static_cast<int>(parse_int(cells[k++], "seed"));
            r.aocc = parse_double(cells[k++], "aocc");
            r.final_gap = parse_double(cells[k++], "final_gap");
            r.restarts = static_cast<int>(parse_int(cells[k++], "restarts"));
            r.status = cells[k++];
            r.wall_ms = parse_double(cells[k++], "wall_ms");
            if (r.ok() && !(r.aocc >= 0.0 && r.aocc <= 1.0)) throw ValidationError("aocc outside [0,1]");
            if (!seen.emplace(r.config_id, r.fid, r.dim, r.iid, r.seed).second)
                throw ValidationError("duplicate run identity");
            out.push_back(std::move(r));
        } catch (const ValidationError& e) {
            throw ValidationError(where + e.what());
        }
    }
    return out;
}

std::vector<RunRecord> load_records(const std::string& path, const ConfigurationSpace& space) {
    try {
        return parse_records(read_file(path), space);
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::size_t drop_failed(std::vector<RunRecord>& records) {
    const auto before = records.size();
    std::erase_if(records, [](const RunRecord& r) { return !r.ok(); });
    return before - records.size();
}

FeatureFrame feature_frame(const std::vector<RunRecord>& records, const ConfigurationSpace& space) {
    if (records.empty()) throw ValidationError("feature_frame: empty dataset");
    FeatureFrame f;
    for (const auto& p : space.params()) f.columns.push_back(p.name);
    f.columns.emplace_back("iid");
    f.columns.emplace_back("seed");
    for (const auto& r : records) {
        if (r.config.family != space.family())
            throw ValidationError("feature_frame: mixed families ('" + r.config.family + "' vs '" + space.family() + "')");
        auto row = encode(r.config, space);
        row.push_back(r.iid);
        row.push_back(r.seed);
        f.X.push_back(std::move(row));
        f.y.push_back(r.aocc);
    }
    return f;
}

void write_trajectory_csv(const std::string& path, std::span<const double> trajectory) {
    std::string out = "eval_index,best_so_far\n";
    for (std::size_t i = 0; i < trajectory.size(); ++i)
        out += std::to_string(i + 1) + "," + format_double(trajectory[i]) + "\n";
    write_file_atomic(path, out);
}

}  // namespace xbench::runner
