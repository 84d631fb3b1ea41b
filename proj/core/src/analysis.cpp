#include "xbench/analysis.hpp"

#include "xbench/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

namespace xbench::analysis {

namespace {

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.3f", v);
    return buf;
}

std::string cell(const ScoreStat& s, bool bold) {
    const std::string text = fixed2(s.mean) + " (" + fixed2(s.std) + ")";
    return bold ? "**" + text + "**" : text;
}

ScoreStat make_stat(std::string id, std::vector<double> runs) {
    ScoreStat s;
    s.config_id = std::move(id);
    s.mean = mean(runs);
    s.std = sample_std(runs);
    s.runs = std::move(runs);
    return s;
}

std::map<std::string, Configuration> configs_by_id(const std::vector<RunRecord>& records) {
    std::map<std::string, Configuration> out;
    for (const auto& r : records) out.emplace(r.config_id, r.config);
    return out;
}

std::vector<double> midranks(const std::vector<double>& pooled) {
    std::vector<std::size_t> order(pooled.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
    std::vector<double> ranks(pooled.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

void check_samples(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ValidationError("mann_whitney: empty sample");
    for (double v : a) {
        if (!std::isfinite(v)) throw ValidationError("mann_whitney: non-finite value");
    }
    for (double v : b) {
        if (!std::isfinite(v)) throw ValidationError("mann_whitney: non-finite value");
    }
}

}  // namespace

// Shifted by the first value and Neumaier-compensated: a constant sample
// returns its value exactly.
double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    const double shift = v.front();
    double sum = 0.0;
    double carry = 0.0;
    for (double x : v) {
        const double d = x - shift;
        const double t = sum + d;
        carry += std::abs(sum) >= std::abs(d) ? (sum - t) + d : (d - t) + sum;
        sum = t;
    }
    return shift + (sum + carry) / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::map<std::string, std::vector<double>> runs_by_config(const std::vector<RunRecord>& records, int fid, int dim) {
    std::map<std::string, std::vector<double>> out;
    for (const auto& r : records) {
        if (r.ok() && r.fid == fid && r.dim == dim) out[r.config_id].push_back(r.aocc);
    }
    return out;
}

std::vector<int> fids_of(const std::vector<RunRecord>& records, int dim) {
    std::set<int> s;
    for (const auto& r : records) {
        if (r.ok() && r.dim == dim) s.insert(r.fid);
    }
    return {s.begin(), s.end()};
}

std::vector<int> dims_of(const std::vector<RunRecord>& records) {
    std::set<int> s;
    for (const auto& r : records) {
        if (r.ok()) s.insert(r.dim);
    }
    return {s.begin(), s.end()};
}

ScoreStat single_best(const std::vector<RunRecord>& records, int fid, int dim) {
    auto runs = runs_by_config(records, fid, dim);
    if (runs.empty()) {
        throw ValidationError("single_best: no runs for f" + std::to_string(fid) + " d" + std::to_string(dim));
    }
    // map iteration is in ascending config_id, so strict > keeps the lowest id on ties
    const std::string* best = nullptr;
    double best_mean = 0.0;
    for (const auto& [id, v] : runs) {
        const double m = mean(v);
        if (best == nullptr || m > best_mean) {
            best = &id;
            best_mean = m;
        }
    }
    return make_stat(*best, runs.at(*best));
}

AvgBest avg_best(const std::vector<RunRecord>& records, int dim) {
    const auto fids = fids_of(records, dim);
    if (fids.empty()) throw ValidationError("avg_best: no runs for d" + std::to_string(dim));
    std::vector<std::map<std::string, std::vector<double>>> per_fid;
    for (int f : fids) per_fid.push_back(runs_by_config(records, f, dim));

    AvgBest out;
    bool found = false;
    for (const auto& [id, first] : per_fid.front()) {
        double total = 0.0;
        bool everywhere = true;
        for (const auto& m : per_fid) {
            const auto it = m.find(id);
            if (it == m.end()) {
                everywhere = false;
                break;
            }
            total += mean(it->second);
        }
        if (!everywhere) continue;
        const double avg = total / static_cast<double>(fids.size());
        if (!found || avg > out.mean) {
            out.config_id = id;
            out.mean = avg;
            found = true;
        }
    }
    if (!found) throw ValidationError("avg_best: no configuration was run on every function of d" + std::to_string(dim));
    for (std::size_t k = 0; k < fids.size(); ++k) {
        out.per_fid[fids[k]] = make_stat(out.config_id, per_fid[k].at(out.config_id));
    }
    return out;
}

ScoreStat all_configs(const std::vector<RunRecord>& records, int fid, int dim) {
    std::vector<double> runs;
    for (const auto& r : records) {
        if (r.ok() && r.fid == fid && r.dim == dim) runs.push_back(r.aocc);
    }
    if (runs.empty()) throw ValidationError("all_configs: no runs for f" + std::to_string(fid) + " d" + std::to_string(dim));
    return make_stat("all", std::move(runs));
}

Gains gains(const std::vector<RunRecord>& records, int dim) {
    const auto fids = fids_of(records, dim);
    if (fids.empty()) throw ValidationError("gains: no runs for d" + std::to_string(dim));
    std::vector<double> every;
    for (const auto& r : records) {
        if (r.ok() && r.dim == dim) every.push_back(r.aocc);
    }
    const auto ab = avg_best(records, dim);
    Gains g;
    g.avg_performance = mean(every);
    for (int f : fids) {
        const double all = all_configs(records, f, dim).mean;
        g.gain_avg_best += ab.per_fid.at(f).mean - all;
        g.gain_single_best += single_best(records, f, dim).mean - all;
    }
    g.gain_avg_best /= static_cast<double>(fids.size());
    g.gain_single_best /= static_cast<double>(fids.size());
    return g;
}

MannWhitney mann_whitney_exact(std::span<const double> a, std::span<const double> b) {
    check_samples(a, b);
    const std::size_t na = a.size();
    const std::size_t n = a.size() + b.size();
    if (n > 60) throw ValidationError("mann_whitney_exact: at most 60 values in total");
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = midranks(pooled);
    // doubled midranks are integers
    std::vector<int> r2(n);
    for (std::size_t i = 0; i < n; ++i) r2[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
    const int max_sum = std::accumulate(r2.begin(), r2.end(), 0);
    // ways[k][s]: subsets of size k with doubled rank sum s
    std::vector<std::vector<double>> ways(na + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = std::min(na, i + 1); k >= 1; --k) {
            for (int s = max_sum; s >= r2[i]; --s) {
                ways[k][static_cast<std::size_t>(s)] += ways[k - 1][static_cast<std::size_t>(s - r2[i])];
            }
        }
    }
    int observed = 0;
    for (std::size_t i = 0; i < na; ++i) observed += r2[i];
    const long expected2 = static_cast<long>(na) * static_cast<long>(n + 1);  // 2 * na (n+1) / 2
    const long dev = std::labs(static_cast<long>(observed) - expected2);
    double hit = 0.0;
    double total = 0.0;
    for (int s = 0; s <= max_sum; ++s) {
        const double w = ways[na][static_cast<std::size_t>(s)];
        total += w;
        if (std::labs(static_cast<long>(s) - expected2) >= dev) hit += w;
    }
    MannWhitney out;
    out.exact = true;
    out.u = observed / 2.0 - static_cast<double>(na * (na + 1)) / 2.0;
    out.p = std::min(1.0, hit / total);
    return out;
}

MannWhitney mann_whitney_normal(std::span<const double> a, std::span<const double> b) {
    check_samples(a, b);
    const auto na = static_cast<double>(a.size());
    const auto nb = static_cast<double>(b.size());
    const double n = na + nb;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = midranks(pooled);
    double ra = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ra += ranks[i];
    MannWhitney out;
    out.u = ra - na * (na + 1) / 2.0;

    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double ties = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const auto t = static_cast<double>(j - i);
        ties += t * t * t - t;
        i = j;
    }
    const double var = na * nb / 12.0 * ((n + 1) - ties / (n * (n - 1)));
    if (!(var > 0.0)) {
        out.p = 1.0;
        return out;
    }
    const double z = (std::abs(out.u - na * nb / 2.0) - 0.5) / std::sqrt(var);
    out.p = z <= 0.0 ? 1.0 : std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return out;
}

MannWhitney mann_whitney(std::span<const double> a, std::span<const double> b) {
    if (a.size() <= kExactMaxSample && b.size() <= kExactMaxSample) return mann_whitney_exact(a, b);
    return mann_whitney_normal(a, b);
}

double significance(std::span<const double> a, std::span<const double> b) { return mann_whitney(a, b).p; }

bool improves(std::span<const double> a, std::span<const double> b, double alpha) {
    return mean(a) > mean(b) && significance(a, b) < alpha;
}

std::vector<EffectDelta> module_effects(const std::vector<RunRecord>& records, const ConfigurationSpace& space,
                                        const Configuration& config, int fid, int dim) {
    const auto runs = runs_by_config(records, fid, dim);
    const auto configs = configs_by_id(records);
    const std::string id = config_id(config, space);
    const auto self = runs.find(id);
    if (self == runs.end()) {
        throw ValidationError("module_effects: configuration " + id + " has no runs on f" + std::to_string(fid) + " d" +
                              std::to_string(dim));
    }
    const double own = mean(self->second);
    std::vector<EffectDelta> out;
    for (std::size_t p = 0; p < space.size(); ++p) {
        EffectDelta d;
        d.config_id = id;
        d.module = space.params()[p].name;
        d.option = config.values[p].text();
        double total = 0.0;
        for (const auto& [other_id, v] : runs) {
            if (other_id == id) continue;
            const auto& other = configs.at(other_id);
            if (other.values[p] == config.values[p]) continue;
            bool matched = true;
            for (std::size_t q = 0; q < space.size() && matched; ++q) {
                matched = q == p || other.values[q] == config.values[q];
            }
            if (!matched) continue;
            total += mean(v);
            ++d.alternatives;
        }
        if (d.alternatives > 0) d.delta = own - total / static_cast<double>(d.alternatives);
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<RankingRow> ranking_table(const std::vector<RunRecord>& records, int dim) {
    const auto ab = avg_best(records, dim);
    std::vector<RankingRow> rows;
    for (int f : fids_of(records, dim)) {
        RankingRow row;
        row.fid = f;
        row.dim = dim;
        row.single_best = single_best(records, f, dim);
        row.avg_best = ab.per_fid.at(f);
        row.all = all_configs(records, f, dim);
        row.single_over_avg = row.single_best.config_id != row.avg_best.config_id &&
                              improves(row.single_best.runs, row.avg_best.runs);
        row.single_over_all = improves(row.single_best.runs, row.all.runs);
        row.avg_over_all = improves(row.avg_best.runs, row.all.runs);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<HallOfFameEntry> hall_of_fame(const std::vector<RunRecord>& records, const ConfigurationSpace& space, int dim) {
    const auto configs = configs_by_id(records);
    const auto fids = fids_of(records, dim);
    const auto ab = avg_best(records, dim);
    std::vector<HallOfFameEntry> out;

    HallOfFameEntry top;
    top.label = "avg-best";
    top.config_id = ab.config_id;
    top.config = configs.at(ab.config_id);
    top.mean = ab.mean;
    std::vector<std::vector<EffectDelta>> per_fid;
    for (int f : fids) per_fid.push_back(module_effects(records, space, top.config, f, dim));
    for (std::size_t p = 0; p < space.size(); ++p) {
        EffectDelta d = per_fid.front()[p];
        double total = 0.0;
        bool estimable = true;
        for (const auto& e : per_fid) {
            estimable = estimable && e[p].estimable();
            if (estimable) total += *e[p].delta;
            d.alternatives = std::min(d.alternatives, e[p].alternatives);
        }
        d.delta = estimable ? std::optional<double>(total / static_cast<double>(per_fid.size())) : std::nullopt;
        top.effects.push_back(std::move(d));
    }
    out.push_back(std::move(top));

    for (int f : fids) {
        const auto sb = single_best(records, f, dim);
        HallOfFameEntry e;
        e.label = "f" + std::to_string(f);
        e.config_id = sb.config_id;
        e.config = configs.at(sb.config_id);
        e.mean = sb.mean;
        e.effects = module_effects(records, space, e.config, f, dim);
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<ComparisonRow> compare_frameworks(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b, int dim) {
    const auto fa = fids_of(a, dim);
    const auto fb = fids_of(b, dim);
    if (fa != fb) throw ValidationError("compare: datasets cover different functions in d" + std::to_string(dim));
    const auto ab_a = avg_best(a, dim);
    const auto ab_b = avg_best(b, dim);
    std::vector<ComparisonRow> rows;
    for (int f : fa) {
        ComparisonRow row;
        row.fid = f;
        row.dim = dim;
        row.a[0] = single_best(a, f, dim);
        row.a[1] = ab_a.per_fid.at(f);
        row.a[2] = all_configs(a, f, dim);
        row.b[0] = single_best(b, f, dim);
        row.b[1] = ab_b.per_fid.at(f);
        row.b[2] = all_configs(b, f, dim);
        for (int k = 0; k < 3; ++k) {
            row.a_better[k] = improves(row.a[k].runs, row.b[k].runs);
            row.b_better[k] = improves(row.b[k].runs, row.a[k].runs);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------

std::string ranking_markdown(const std::vector<RankingRow>& rows) {
    std::ostringstream os;
    os << "| fid | dim | single-best | avg-best | all | single-best config |\n";
    os << "|---:|---:|---:|---:|---:|:---|\n";
    for (const auto& r : rows) {
        os << "| " << r.fid << " | " << r.dim << " | " << cell(r.single_best, r.single_over_all) << " | "
           << cell(r.avg_best, r.avg_over_all) << " | " << cell(r.all, false) << " | `" << r.single_best.config_id
           << "` |\n";
    }
    if (!rows.empty()) os << "\navg-best config: `" << rows.front().avg_best.config_id << "`\n";
    return os.str();
}

std::string ranking_csv(const std::vector<RankingRow>& rows) {
    std::ostringstream os;
    os << "fid,dim,single_best_id,single_best_mean,single_best_std,avg_best_id,avg_best_mean,avg_best_std,all_mean,"
          "all_std,single_over_avg,single_over_all,avg_over_all\n";
    for (const auto& r : rows) {
        os << r.fid << ',' << r.dim << ',' << r.single_best.config_id << ',' << format_double(r.single_best.mean) << ','
           << format_double(r.single_best.std) << ',' << r.avg_best.config_id << ',' << format_double(r.avg_best.mean)
           << ',' << format_double(r.avg_best.std) << ',' << format_double(r.all.mean) << ','
           << format_double(r.all.std) << ',' << r.single_over_avg << ',' << r.single_over_all << ','
           << r.avg_over_all << '\n';
    }
    return os.str();
}

std::string gains_markdown(const std::map<int, Gains>& by_dim, const std::string& family) {
    std::ostringstream os;
    os << "| family | dim | avg performance | gain avg-best | gain single-best |\n";
    os << "|:---|---:|---:|---:|---:|\n";
    for (const auto& [dim, g] : by_dim) {
        os << "| " << family << " | " << dim << " | " << fixed2(g.avg_performance) << " | " << fixed2(g.gain_avg_best)
           << " | " << fixed2(g.gain_single_best) << " |\n";
    }
    return os.str();
}

std::string gains_csv(const std::map<int, Gains>& by_dim) {
    std::ostringstream os;
    os << "dim,avg_performance,gain_avg_best,gain_single_best\n";
    for (const auto& [dim, g] : by_dim) {
        os << dim << ',' << format_double(g.avg_performance) << ',' << format_double(g.gain_avg_best) << ','
           << format_double(g.gain_single_best) << '\n';
    }
    return os.str();
}

std::string hall_of_fame_markdown(const std::vector<HallOfFameEntry>& entries, const ConfigurationSpace& space, int dim) {
    std::ostringstream os;
    os << "Hall of fame, d = " << dim << ". Each cell shows the option and, in brackets, the mean AOCC change versus "
          "the other options with everything else fixed (n/e: no matched alternative in the data).\n\n";
    os << "| entry | AOCC |";
    for (const auto& p : space.params()) os << ' ' << p.name << " |";
    os << "\n|:---|---:|";
    for (std::size_t p = 0; p < space.size(); ++p) os << ":---|";
    os << '\n';
    for (const auto& e : entries) {
        os << "| " << e.label << " | " << fixed2(e.mean) << " |";
        for (std::size_t p = 0; p < space.size(); ++p) {
            const auto& d = e.effects[p];
            os << ' ' << e.config.values[p].text() << " (" << (d.estimable() ? fixed3(*d.delta) : "n/e") << ") |";
        }
        os << '\n';
    }
    return os.str();
}

std::string hall_of_fame_csv(const std::vector<HallOfFameEntry>& entries, int dim) {
    std::ostringstream os;
    os << "dim,entry,config_id,mean_aocc,module,option,delta,alternatives\n";
    for (const auto& e : entries) {
        for (const auto& d : e.effects) {
            os << dim << ',' << e.label << ',' << e.config_id << ',' << format_double(e.mean) << ',' << d.module << ','
               << d.option << ',' << (d.estimable() ? format_double(*d.delta) : "not-estimable") << ','
               << d.alternatives << '\n';
        }
    }
    return os.str();
}

std::string comparison_markdown(const std::vector<ComparisonRow>& rows, const std::string& name_a, const std::string& name_b) {
    std::ostringstream os;
    os << "| fid | dim | " << name_a << " single-best | " << name_b << " single-best | " << name_a << " avg-best | "
       << name_b << " avg-best | " << name_a << " all | " << name_b << " all |\n";
    os << "|---:|---:|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& r : rows) {
        os << "| " << r.fid << " | " << r.dim;
        for (int k = 0; k < 3; ++k) os << " | " << cell(r.a[k], r.a_better[k]) << " | " << cell(r.b[k], r.b_better[k]);
        os << " |\n";
    }
    return os.str();
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    static const char* kinds[] = {"single_best", "avg_best", "all"};
    std::ostringstream os;
    os << "fid,dim,kind,a_mean,a_std,b_mean,b_std,p_value,a_better,b_better\n";
    for (const auto& r : rows) {
        for (int k = 0; k < 3; ++k) {
            os << r.fid << ',' << r.dim << ',' << kinds[k] << ',' << format_double(r.a[k].mean) << ','
               << format_double(r.a[k].std) << ',' << format_double(r.b[k].mean) << ',' << format_double(r.b[k].std)
               << ',' << format_double(significance(r.a[k].runs, r.b[k].runs)) << ',' << r.a_better[k] << ','
               << r.b_better[k] << '\n';
        }
    }
    return os.str();
}

}  // namespace xbench::analysis
