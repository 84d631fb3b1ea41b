#include "xbench/ela.hpp"

#include "xbench/common.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace xbench::ela {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "y_skewness",    "y_kurtosis",    "y_q10_q90",        "y_q25_q75",       "lm_r2",
    "lm_coef_min",   "lm_coef_max",   "lm_coef_ratio",    "qm_adj_r2",       "qm_cond",
    "disp_ratio_05", "disp_ratio_25", "nb_nn_ratio",
};

double ratio(double num, double den) {
    if (den > 0.0) return num / den;
    return num == 0.0 ? 1.0 : kRatioCap;
}

struct Moments {
    double m2 = 0, m3 = 0, m4 = 0;
    bool constant = true;
};

Moments central_moments(std::span<const double> y) {
    Moments m;
    if (y.empty()) return m;
    const double n = static_cast<double>(y.size());
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    for (double v : y) {
        const double d = v - mean;
        m.m2 += d * d;
        m.m3 += d * d * d;
        m.m4 += d * d * d * d;
    }
    m.m2 /= n;
    m.m3 /= n;
    m.m4 /= n;
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    // relative floor so rounding noise of a constant sample does not produce moments
    m.constant = *lo == *hi || m.m2 <= 1e-28 * std::max(1.0, mean * mean);
    return m;
}

// Least squares of y on [1, columns]; returns coefficients and R^2 (0 for constant y).
struct Fit {
    Eigen::VectorXd beta;
    double r2 = 0.0;
};

Fit least_squares(const Eigen::MatrixXd& A, std::span<const double> y) {
    const Eigen::Map<const Eigen::VectorXd> b(y.data(), static_cast<Eigen::Index>(y.size()));
    Fit fit;
    fit.beta = A.colPivHouseholderQr().solve(b);
    const double mean = b.mean();
    const double sst = (b.array() - mean).square().sum();
    if (!(sst > 0.0)) return fit;
    const double ssr = (b - A * fit.beta).squaredNorm();
    fit.r2 = 1.0 - ssr / sst;
    return fit;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return std::sqrt(s);
}

double mean_pairwise(const std::vector<std::vector<double>>& X, std::span<const std::size_t> idx) {
    double s = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
            s += distance(X[idx[a]], X[idx[b]]);
            ++pairs;
        }
    }
    return pairs ? s / static_cast<double>(pairs) : 0.0;
}

}  // namespace

const std::array<std::string_view, kFeatureCount>& feature_names() { return kNames; }

std::uint64_t feature_order_hash() {
    std::string text = "ela" + std::to_string(kFeatureVersion);
    for (auto n : kNames) (text += ',') += n;
    for (const auto& space : {modcma_space(), modde_space()}) {
        (text += '|') += space.family();
        for (const auto& p : space.params()) (text += ',') += p.name;
    }
    return fnv1a(text);
}

double skewness(std::span<const double> y) {
    const auto m = central_moments(y);
    return m.constant ? 0.0 : m.m3 / std::pow(m.m2, 1.5);
}

double excess_kurtosis(std::span<const double> y) {
    const auto m = central_moments(y);
    return m.constant ? 0.0 : m.m4 / (m.m2 * m.m2) - 3.0;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw ValidationError("quantile: empty sample");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<std::vector<double>> latin_hypercube(int n, int dim, const suite::Bounds& bounds, std::uint64_t seed) {
    if (n < 1 || dim < 1) throw ValidationError("latin_hypercube: n and dim must be positive");
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> X(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(dim)));
    std::vector<int> perm(static_cast<std::size_t>(n));
    const double width = bounds.upper - bounds.lower;
    for (int j = 0; j < dim; ++j) {
        std::iota(perm.begin(), perm.end(), 0);
        // Fisher-Yates with explicit draws so the layout does not depend on the std::shuffle implementation
        for (std::size_t i = perm.size() - 1; i > 0; --i) {
            const auto k = static_cast<std::size_t>(rng() % (i + 1));
            std::swap(perm[i], perm[k]);
        }
        for (int i = 0; i < n; ++i) {
            const double t = (perm[static_cast<std::size_t>(i)] + u(rng)) / n;
            X[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = bounds.lower + width * t;
        }
    }
    return X;
}

ElaFeatures compute_features(const std::vector<std::vector<double>>& X_raw, std::span<const double> y,
                             const suite::Bounds& bounds) {
    const std::size_t n = y.size();
    if (X_raw.size() != n) throw ValidationError("ela: X and y differ in length");
    if (n == 0) throw ValidationError("ela: empty sample");
    const std::size_t d = X_raw.front().size();
    if (n < d + 2) throw ValidationError("ela: need at least dim + 2 samples");
    if (!(bounds.upper > bounds.lower)) throw ValidationError("ela: empty box");
    for (double v : y) {
        if (!std::isfinite(v)) throw ValidationError("ela: objective values must be finite");
    }

    const double width = bounds.upper - bounds.lower;
    std::vector<std::vector<double>> X(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (X_raw[i].size() != d) throw ValidationError("ela: ragged design");
        X[i].resize(d);
        for (std::size_t j = 0; j < d; ++j) X[i][j] = (X_raw[i][j] - bounds.lower) / width;
    }

    ElaFeatures f{};
    f[0] = skewness(y);
    f[1] = excess_kurtosis(y);

    std::vector<double> shifted(y.begin(), y.end());
    const double ymin = *std::min_element(shifted.begin(), shifted.end());
    for (double& v : shifted) v -= ymin;
    f[2] = ratio(quantile(shifted, 0.10), quantile(shifted, 0.90));
    f[3] = ratio(quantile(shifted, 0.25), quantile(shifted, 0.75));

    const auto rows = static_cast<Eigen::Index>(n);
    const auto cols = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd A(rows, cols + 1);
    for (Eigen::Index i = 0; i < rows; ++i) {
        A(i, 0) = 1.0;
        for (Eigen::Index j = 0; j < cols; ++j) A(i, j + 1) = X[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    const Fit lin = least_squares(A, y);
    const Eigen::VectorXd coef = lin.beta.tail(cols).cwiseAbs();
    f[4] = lin.r2;
    f[5] = coef.minCoeff();
    f[6] = coef.maxCoeff();
    f[7] = ratio(f[6], f[5]);

    if (n > 2 * d + 1) {
        Eigen::MatrixXd Q(rows, 2 * cols + 1);
        Q.leftCols(cols + 1) = A;
        Q.rightCols(cols) = A.rightCols(cols).array().square().matrix();
        const Fit quad = least_squares(Q, y);
        const double p = static_cast<double>(2 * d);
        const bool flat = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
        f[8] = flat ? 0.0 : 1.0 - (1.0 - quad.r2) * (static_cast<double>(n) - 1.0) / (static_cast<double>(n) - p - 1.0);
        const Eigen::VectorXd qc = quad.beta.tail(cols).cwiseAbs();
        f[9] = ratio(qc.maxCoeff(), qc.minCoeff());
    } else {
        f[8] = 0.0;
        f[9] = 1.0;
    }

    // distance features on deduplicated points; a repeated point keeps its lowest value
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (X[a] != X[b]) return X[a] < X[b];
        if (y[a] != y[b]) return y[a] < y[b];
        return a < b;
    });
    std::vector<std::size_t> unique;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k == 0 || X[order[k]] != X[order[k - 1]]) unique.push_back(order[k]);
    }
    std::sort(unique.begin(), unique.end(), [&](std::size_t a, std::size_t b) {
        if (y[a] != y[b]) return y[a] < y[b];
        return a < b;
    });
    const std::size_t m = unique.size();
    if (m < 2) {
        f[10] = f[11] = f[12] = 1.0;
        return f;
    }
    const double all = mean_pairwise(X, unique);
    const double thresholds[2] = {0.05, 0.25};
    for (int t = 0; t < 2; ++t) {
        const auto k = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::ceil(thresholds[t] * static_cast<double>(m))), 2, m);
        f[10 + static_cast<std::size_t>(t)] = ratio(mean_pairwise(X, std::span(unique).first(k)), all);
    }

    // unique is sorted by value, so every better point precedes i
    double nn_sum = 0.0, nb_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t a = 0; a < m; ++a) {
        double nn = std::numeric_limits<double>::infinity();
        double nb = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < m; ++b) {
            if (a == b) continue;
            const double dist = distance(X[unique[a]], X[unique[b]]);
            nn = std::min(nn, dist);
            if (y[unique[b]] < y[unique[a]]) nb = std::min(nb, dist);
        }
        if (std::isfinite(nb)) {
            nn_sum += nn;
            nb_sum += nb;
            ++counted;
        }
    }
    f[12] = counted ? ratio(nn_sum, nb_sum) : 1.0;
    return f;
}

ElaFeatures doe_features(suite::Problem& problem, int n, std::uint64_t seed) {
    if (n < problem.dim() + 2) throw ValidationError("doe_features: need at least dim + 2 samples");
    const auto X = latin_hypercube(n, problem.dim(), problem.bounds(), seed);
    std::vector<double> y(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) y[i] = problem.evaluate(X[i]);
    return compute_features(X, y, problem.bounds());
}

std::vector<InstanceFeatures> instance_features(const std::vector<std::array<int, 3>>& instances, int n,
                                                std::uint64_t seed, int jobs) {
    std::vector<InstanceFeatures> out(instances.size());
    std::vector<std::string> errors(instances.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < instances.size(); i = next++) {
            const auto [fid, dim, iid] = instances[i];
            try {
                auto problem = suite::make_problem(fid, dim, iid);
                const auto s = mix_seed(seed, static_cast<std::uint64_t>(fid), static_cast<std::uint64_t>(dim),
                                        static_cast<std::uint64_t>(iid));
                out[i] = {fid, dim, iid, doe_features(problem, n, s)};
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const int threads = std::clamp(jobs, 1, std::max(1, static_cast<int>(instances.size())));
        for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }
    for (const auto& e : errors) {
        if (!e.empty()) throw ValidationError(e);
    }
    return out;
}

std::string features_csv(const std::vector<InstanceFeatures>& rows) {
    std::string out = "fid,dim,iid";
    for (auto n : kNames) (out += ',') += n;
    out += '\n';
    for (const auto& r : rows) {
        out += std::to_string(r.fid) + ',' + std::to_string(r.dim) + ',' + std::to_string(r.iid);
        for (double v : r.values) (out += ',') += format_double(v);
        out += '\n';
    }
    return out;
}

std::vector<InstanceFeatures> parse_features(std::string_view text) {
    std::vector<InstanceFeatures> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    const std::size_t width = 3 + kFeatureCount;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (header.empty()) {
            header = cells;
            const std::vector<std::string> want = [] {
                std::vector<std::string> w{"fid", "dim", "iid"};
                for (auto n : kNames) w.emplace_back(n);
                return w;
            }();
            for (std::size_t j = 0; j < std::max(want.size(), header.size()); ++j) {
                if (j >= header.size() || j >= want.size() || header[j] != want[j]) {
                    throw ValidationError("features: header column " + std::to_string(j + 1) + " should be '" +
                                          (j < want.size() ? want[j] : std::string("<none>")) + "'");
                }
            }
            continue;
        }
        if (cells.size() != width) {
            throw ValidationError("features: line " + std::to_string(line_no) + " has " +
                                  std::to_string(cells.size()) + " fields, expected " + std::to_string(width));
        }
        InstanceFeatures r;
        const std::string where = "line " + std::to_string(line_no) + " ";
        r.fid = static_cast<int>(parse_int(cells[0], where + "fid"));
        r.dim = static_cast<int>(parse_int(cells[1], where + "dim"));
        r.iid = static_cast<int>(parse_int(cells[2], where + "iid"));
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            r.values[j] = parse_double(cells[3 + j], where + std::string(kNames[j]));
            if (!std::isfinite(r.values[j])) throw ValidationError("features: " + where + std::string(kNames[j]) + " is not finite");
        }
        out.push_back(r);
    }
    if (header.empty()) throw ValidationError("features: empty file");
    return out;
}

std::vector<InstanceFeatures> load_features(const std::string& path) { return parse_features(read_file(path)); }

// ---------------------------------------------------------------------------
// Multi-output trees

namespace {

// Per-output view of the labels: class ids for categorical outputs, scaled values
// in [0,1] for numeric ones.
struct Outputs {
    struct Column {
        bool categorical = true;
        int classes = 1;
        std::vector<int> cls;
        std::vector<double> s;
    };
    std::vector<Column> cols;

    Outputs(const std::vector<Configuration>& labels, const ConfigurationSpace& space) {
        const auto& params = space.params();
        cols.resize(params.size());
        for (std::size_t j = 0; j < params.size(); ++j) {
            const auto& p = params[j];
            auto& c = cols[j];
            c.categorical = p.kind == ParamKind::Categorical;
            const bool conditional = !p.condition.empty();
            if (c.categorical) {
                c.classes = static_cast<int>(p.domain.size()) + (conditional ? 1 : 0);
                c.cls.resize(labels.size());
                for (std::size_t r = 0; r < labels.size(); ++r) {
                    const auto& v = labels[r].values[j];
                    const auto it = std::find(p.domain.begin(), p.domain.end(), v);
                    c.cls[r] = it == p.domain.end() ? static_cast<int>(p.domain.size())
                                                    : static_cast<int>(it - p.domain.begin());
                }
            } else {
                double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                for (const auto& v : p.domain) {
                    lo = std::min(lo, v.as_number());
                    hi = std::max(hi, v.as_number());
                }
                if (conditional) lo = std::min(lo, -1.0);
                c.s.resize(labels.size());
                for (std::size_t r = 0; r < labels.size(); ++r) {
                    const auto& v = labels[r].values[j];
                    const double x = v.is_na() ? -1.0 : v.as_number();
                    c.s[r] = hi > lo ? (x - lo) / (hi - lo) : 0.0;
                }
            }
        }
    }
};

// Running sufficient statistics of a label multiset.
struct Accumulator {
    std::vector<std::vector<double>> counts;  // categorical outputs
    std::vector<double> sum, sumsq;           // numeric outputs
    double n = 0.0;

    explicit Accumulator(const Outputs& o) : counts(o.cols.size()), sum(o.cols.size()), sumsq(o.cols.size()) {
        for (std::size_t j = 0; j < o.cols.size(); ++j) {
            if (o.cols[j].categorical) counts[j].assign(static_cast<std::size_t>(o.cols[j].classes), 0.0);
        }
    }

    void add(const Outputs& o, std::size_t r, double w) {
        n += w;
        for (std::size_t j = 0; j < o.cols.size(); ++j) {
            const auto& c = o.cols[j];
            if (c.categorical) {
                counts[j][static_cast<std::size_t>(c.cls[r])] += w;
            } else {
                sum[j] += w * c.s[r];
                sumsq[j] += w * c.s[r] * c.s[r];
            }
        }
    }

    [[nodiscard]] double impurity(const Outputs& o) const {
        if (n <= 0.0 || o.cols.empty()) return 0.0;
        double total = 0.0;
        for (std::size_t j = 0; j < o.cols.size(); ++j) {
            const auto& c = o.cols[j];
            if (c.categorical) {
                if (c.classes < 2) continue;
                double sq = 0.0;
                for (double k : counts[j]) sq += (k / n) * (k / n);
                total += (1.0 - sq) / (1.0 - 1.0 / c.classes);
            } else {
                const double mean = sum[j] / n;
                total += 4.0 * std::max(0.0, sumsq[j] / n - mean * mean);
            }
        }
        return total / static_cast<double>(o.cols.size());
    }
};

void check_labels(const std::vector<Configuration>& labels, const ConfigurationSpace& space) {
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r].values.size() != space.size()) {
            throw ValidationError("aac: label " + std::to_string(r) + " does not match the space");
        }
        const auto v = validate(labels[r], space);
        if (!v.empty()) {
            throw ValidationError("aac: label " + std::to_string(r) + " invalid: " + v.front().subject + ": " +
                                  v.front().message);
        }
    }
}

class Builder {
public:
    Builder(const std::vector<std::vector<double>>& X, const std::vector<Configuration>& labels,
            const ConfigurationSpace& space, const TreeParams& params, Rng* rng)
        : X_(X), labels_(labels), space_(space), params_(params), rng_(rng), out_(labels, space),
          m_(static_cast<int>(X.front().size())) {}

    MultiOutputTree build(std::vector<std::size_t> rows) {
        MultiOutputTree tree;
        tree.n_features = m_;
        grow(tree, std::move(rows), 0);
        return tree;
    }

private:
    std::vector<int> candidate_features() {
        std::vector<int> f(static_cast<std::size_t>(m_));
        std::iota(f.begin(), f.end(), 0);
        const int k = params_.max_features;
        if (k <= 0 || k >= m_ || rng_ == nullptr) return f;
        for (int i = 0; i < k; ++i) {
            const auto span = static_cast<std::uint64_t>(m_ - i);
            std::swap(f[static_cast<std::size_t>(i)], f[static_cast<std::size_t>(i) + (*rng_)() % span]);
        }
        f.resize(static_cast<std::size_t>(k));
        std::sort(f.begin(), f.end());
        return f;
    }

    int grow(MultiOutputTree& tree, std::vector<std::size_t> rows, int depth) {
        Accumulator all(out_);
        for (auto r : rows) all.add(out_, r, 1.0);
        const double parent = all.impurity(out_);

        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.back().samples = rows.size();
        tree.nodes.back().impurity = parent;

        int best_f = -1;
        double best_thr = 0.0;
        double best_imp = parent - 1e-12;  // splits must strictly lower the impurity
        if (parent > 0.0 && depth < params_.max_depth &&
            static_cast<int>(rows.size()) >= std::max(2, params_.min_samples_split)) {
            std::vector<std::size_t> sorted = rows;
            for (int f : candidate_features()) {
                const auto fj = static_cast<std::size_t>(f);
                std::stable_sort(sorted.begin(), sorted.end(),
                                 [&](std::size_t a, std::size_t b) { return X_[a][fj] < X_[b][fj]; });
                Accumulator left(out_);
                for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
                    left.add(out_, sorted[k], 1.0);
                    const double lo = X_[sorted[k]][fj];
                    const double hi = X_[sorted[k + 1]][fj];
                    if (!(lo < hi)) continue;
                    double thr = lo + (hi - lo) / 2.0;
                    if (!(lo < thr)) thr = hi;
                    Accumulator right = all;
                    subtract(right, left);
                    const double imp = (left.n * left.impurity(out_) + right.n * right.impurity(out_)) / all.n;
                    if (imp < best_imp) {
                        best_imp = imp;
                        best_f = f;
                        best_thr = thr;
                    }
                }
            }
        }

        if (best_f < 0) {
            tree.nodes[static_cast<std::size_t>(id)].value = aggregate(labels_, rows, space_);
            return id;
        }
        std::vector<std::size_t> l, r;
        for (auto i : rows) (X_[i][static_cast<std::size_t>(best_f)] < best_thr ? l : r).push_back(i);
        rows.clear();
        rows.shrink_to_fit();
        const int left = grow(tree, std::move(l), depth + 1);
        const int right = grow(tree, std::move(r), depth + 1);
        auto& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = best_f;
        node.threshold = best_thr;
        node.left = left;
        node.right = right;
        return id;
    }

    static void subtract(Accumulator& a, const Accumulator& b) {
        a.n -= b.n;
        for (std::size_t j = 0; j < a.counts.size(); ++j) {
            for (std::size_t k = 0; k < a.counts[j].size(); ++k) a.counts[j][k] -= b.counts[j][k];
            a.sum[j] -= b.sum[j];
            a.sumsq[j] -= b.sumsq[j];
        }
    }

    const std::vector<std::vector<double>>& X_;
    const std::vector<Configuration>& labels_;
    const ConfigurationSpace& space_;
    TreeParams params_;
    Rng* rng_;
    Outputs out_;
    int m_;
};

void check_training(const std::vector<std::vector<double>>& X, const std::vector<Configuration>& labels,
                    const ConfigurationSpace& space) {
    if (X.size() < 2) throw ValidationError("fit_tree: need at least 2 rows");
    if (X.size() != labels.size()) throw ValidationError("fit_tree: features and labels differ in length");
    const std::size_t m = X.front().size();
    if (m == 0) throw ValidationError("fit_tree: no features");
    for (const auto& row : X) {
        if (row.size() != m) throw ValidationError("fit_tree: ragged feature rows");
        for (double v : row) {
            if (!std::isfinite(v)) throw ValidationError("fit_tree: features must be finite");
        }
    }
    check_labels(labels, space);
}

std::string assignment_text(const Configuration& c, const ConfigurationSpace& space) {
    std::string out;
    for (std::size_t j = 0; j < space.size(); ++j) {
        if (c.values[j].is_na()) continue;
        if (!out.empty()) out += ',';
        out += space.params()[j].name + '=' + c.values[j].text();
    }
    return out;
}

std::string feature_label(int f, int n_features) {
    if (n_features == static_cast<int>(kFeatureCount)) return std::string(kNames[static_cast<std::size_t>(f)]);
    return "x" + std::to_string(f);
}

}  // namespace

double node_impurity(const std::vector<Configuration>& labels, std::span<const std::size_t> rows,
                     const ConfigurationSpace& space) {
    const Outputs out(labels, space);
    Accumulator acc(out);
    for (auto r : rows) acc.add(out, r, 1.0);
    return acc.impurity(out);
}

double split_impurity(const std::vector<std::vector<double>>& X, const std::vector<Configuration>& labels,
                      std::span<const std::size_t> rows, int feature, double threshold,
                      const ConfigurationSpace& space) {
    const Outputs out(labels, space);
    Accumulator l(out), r(out);
    for (auto i : rows) (X[i][static_cast<std::size_t>(feature)] < threshold ? l : r).add(out, i, 1.0);
    const double n = l.n + r.n;
    return n > 0 ? (l.n * l.impurity(out) + r.n * r.impurity(out)) / n : 0.0;
}

Configuration aggregate(const std::vector<Configuration>& labels, std::span<const std::size_t> rows,
                        const ConfigurationSpace& space) {
    if (rows.empty()) throw ValidationError("aggregate: no labels");
    const auto& params = space.params();
    std::vector<ParamValue> values(params.size());
    for (std::size_t j : space.evaluation_order()) {
        const auto& p = params[j];
        if (!evaluate_predicate(p.condition, space, values)) continue;  // inactive stays NA
        std::vector<const ParamValue*> seen;
        for (auto r : rows) {
            if (!labels[r].values[j].is_na()) seen.push_back(&labels[r].values[j]);
        }
        if (seen.empty()) {
            values[j] = p.default_value;
            continue;
        }
        if (p.kind == ParamKind::Categorical) {
            std::map<ParamValue, std::size_t> votes;
            for (const auto* v : seen) ++votes[*v];
            const ParamValue* best = nullptr;
            std::size_t most = 0;
            for (const auto& [v, c] : votes) {
                if (c > most) {  // map order: lowest label wins ties
                    most = c;
                    best = &v;
                }
            }
            values[j] = *best;
        } else {
            double mean = 0.0;
            for (const auto* v : seen) mean += v->as_number();
            mean /= static_cast<double>(seen.size());
            const ParamValue* best = nullptr;
            double gap = std::numeric_limits<double>::infinity();
            for (const auto& v : p.domain) {
                const double g = std::abs(v.as_number() - mean);
                if (g < gap || (g == gap && v.as_number() < best->as_number())) {
                    gap = g;
                    best = &v;
                }
            }
            values[j] = *best;
        }
    }
    Configuration candidate{space.family(), std::move(values)};
    if (validate(candidate, space).empty()) return candidate;

    std::size_t best_row = rows.front();
    std::size_t best_agree = 0;
    bool first = true;
    for (auto r : rows) {
        std::size_t agree = 0;
        for (std::size_t j = 0; j < params.size(); ++j) agree += labels[r].values[j] == candidate.values[j];
        if (first || agree > best_agree) {
            best_agree = agree;
            best_row = r;
            first = false;
        }
    }
    return labels[best_row];
}

const Configuration& MultiOutputTree::predict(std::span<const double> x) const {
    if (nodes.empty()) throw ValidationError("predict: empty tree");
    if (static_cast<int>(x.size()) != n_features) {
        throw ValidationError("predict: expected " + std::to_string(n_features) + " features, got " +
                              std::to_string(x.size()));
    }
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

int MultiOutputTree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    // children always come after their parent
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (!nodes[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return best;
}

std::size_t MultiOutputTree::leaves() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

MultiOutputTree fit_tree(const std::vector<std::vector<double>>& X, const std::vector<Configuration>& labels,
                         const ConfigurationSpace& space, const TreeParams& params) {
    check_training(X, labels, space);
    std::vector<std::size_t> rows(X.size());
    std::iota(rows.begin(), rows.end(), 0);
    return Builder(X, labels, space, params, nullptr).build(std::move(rows));
}

Configuration Forest::predict(std::span<const double> x, const ConfigurationSpace& space) const {
    if (trees.empty()) throw ValidationError("predict: empty forest");
    std::vector<Configuration> votes;
    votes.reserve(trees.size());
    for (const auto& t : trees) votes.push_back(t.predict(x));
    std::vector<std::size_t> rows(votes.size());
    std::iota(rows.begin(), rows.end(), 0);
    return aggregate(votes, rows, space);
}

double Forest::oob_coverage() const {
    if (in_bag.empty()) return 0.0;
    const std::size_t n = in_bag.front().size();
    std::size_t covered = 0;
    for (std::size_t r = 0; r < n; ++r) {
        covered += std::any_of(in_bag.begin(), in_bag.end(), [r](const std::vector<int>& b) { return b[r] == 0; });
    }
    return n ? static_cast<double>(covered) / static_cast<double>(n) : 0.0;
}

Forest fit_forest(const std::vector<std::vector<double>>& X, const std::vector<Configuration>& labels,
                  const ConfigurationSpace& space, const ForestParams& params) {
    check_training(X, labels, space);
    if (params.n_trees < 1) throw ValidationError("fit_forest: n_trees must be positive");
    const int m = static_cast<int>(X.front().size());
    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.max_features = params.max_features < 0 ? std::max(1, static_cast<int>(std::floor(std::sqrt(m))))
                                              : params.max_features;
    Forest forest;
    const std::size_t n = X.size();
    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
        std::vector<int> bag(n, 1);
        std::vector<std::size_t> rows;
        if (params.bootstrap) {
            std::fill(bag.begin(), bag.end(), 0);
            for (std::size_t k = 0; k < n; ++k) ++bag[static_cast<std::size_t>(rng() % n)];
        }
        for (std::size_t r = 0; r < n; ++r) rows.insert(rows.end(), static_cast<std::size_t>(bag[r]), r);
        forest.trees.push_back(Builder(X, labels, space, tp, &rng).build(std::move(rows)));
        forest.in_bag.push_back(std::move(bag));
    }
    return forest;
}

std::string tree_text(const MultiOutputTree& tree, const ConfigurationSpace& space) {
    std::ostringstream out;
    auto walk = [&](auto&& self, int i, int indent) -> void {
        const auto& n = tree.nodes[static_cast<std::size_t>(i)];
        const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
        if (n.is_leaf()) {
            out << pad << "-> " << config_id(n.value, space) << " [n=" << n.samples << "] "
                << assignment_text(n.value, space) << '\n';
            return;
        }
        const auto name = feature_label(n.feature, tree.n_features);
        out << pad << "if " << name << " < " << format_double(n.threshold) << ":\n";
        self(self, n.left, indent + 1);
        out << pad << "else:\n";
        self(self, n.right, indent + 1);
    };
    if (!tree.nodes.empty()) walk(walk, 0, 0);
    return out.str();
}

std::string tree_json(const MultiOutputTree& tree, const ConfigurationSpace& space) {
    nlohmann::ordered_json j;
    j["format"] = "xbench-aac-tree";
    j["family"] = space.family();
    j["n_features"] = tree.n_features;
    nlohmann::ordered_json names = nlohmann::ordered_json::array();
    for (int f = 0; f < tree.n_features; ++f) names.push_back(feature_label(f, tree.n_features));
    j["feature_names"] = names;
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto& n : tree.nodes) {
        nlohmann::ordered_json o;
        if (n.is_leaf()) {
            o["config_id"] = config_id(n.value, space);
            nlohmann::ordered_json cfg;
            for (std::size_t k = 0; k < space.size(); ++k) cfg[space.params()[k].name] = n.value.values[k].text();
            o["config"] = cfg;
        } else {
            o["feature"] = n.feature;
            o["threshold"] = n.threshold;
            o["left"] = n.left;
            o["right"] = n.right;
        }
        o["samples"] = n.samples;
        o["impurity"] = n.impurity;
        nodes.push_back(o);
    }
    j["nodes"] = nodes;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// AAC evaluation

std::string_view to_string(Mode m) { return m == Mode::Lofo ? "lofo" : "loio"; }

Mode parse_mode(std::string_view text) {
    if (text == "lofo") return Mode::Lofo;
    if (text == "loio") return Mode::Loio;
    throw ValidationError("mode: expected lofo or loio, got '" + std::string(text) + "'");
}

Learner tree_learner(const ConfigurationSpace& space, TreeParams params) {
    return [space, params](const std::vector<std::vector<double>>& X, const std::vector<Configuration>& labels) {
        auto tree = std::make_shared<MultiOutputTree>(fit_tree(X, labels, space, params));
        return Predictor([tree](std::span<const double> x) { return tree->predict(x); });
    };
}

Learner forest_learner(const ConfigurationSpace& space, ForestParams params) {
    return [space, params](const std::vector<std::vector<double>>& X, const std::vector<Configuration>& labels) {
        auto forest = std::make_shared<Forest>(fit_forest(X, labels, space, params));
        return Predictor([forest, space](std::span<const double> x) { return forest->predict(x, space); });
    };
}

std::vector<AacInstance> aac_instances(const std::vector<runner::RunRecord>& records,
                                       const std::vector<InstanceFeatures>& features) {
    std::map<std::array<int, 3>, const InstanceFeatures*> feat;
    for (const auto& f : features) feat[{f.dim, f.fid, f.iid}] = &f;

    std::map<std::array<int, 3>, std::map<std::string, std::vector<double>>> runs;
    std::map<std::array<int, 3>, std::map<std::string, Configuration>> configs;
    for (const auto& r : records) {
        if (!r.ok()) continue;
        const std::array<int, 3> key{r.dim, r.fid, r.iid};
        runs[key][r.config_id].push_back(r.aocc);
        configs[key].emplace(r.config_id, r.config);
    }

    std::vector<AacInstance> out;
    for (auto& [key, by_config] : runs) {
        const auto f = feat.find(key);
        if (f == feat.end()) continue;
        AacInstance inst;
        inst.dim = key[0];
        inst.fid = key[1];
        inst.iid = key[2];
        inst.features.assign(f->second->values.begin(), f->second->values.end());
        bool first = true;
        for (const auto& [id, v] : by_config) {
            double m = 0.0;
            for (double a : v) m += a;
            m /= static_cast<double>(v.size());
            inst.aocc[id] = m;
            if (first || m > inst.single_best_aocc) {
                inst.single_best = id;
                inst.single_best_aocc = m;
                first = false;
            }
        }
        inst.configs = std::move(configs[key]);
        out.push_back(std::move(inst));
    }
    return out;
}

namespace {

// Recorded configuration closest to `c` in number of differing outputs; ties to the lowest id.
std::string nearest_recorded(const Configuration& c, const AacInstance& inst) {
    std::string best;
    std::size_t best_diff = std::numeric_limits<std::size_t>::max();
    for (const auto& [id, cfg] : inst.configs) {
        std::size_t diff = 0;
        for (std::size_t j = 0; j < cfg.values.size() && j < c.values.size(); ++j) diff += !(cfg.values[j] == c.values[j]);
        if (diff < best_diff) {
            best_diff = diff;
            best = id;
        }
    }
    return best;
}

std::string training_avg_best(const std::vector<const AacInstance*>& train) {
    std::string best;
    double best_mean = 0.0;
    for (const auto& [id, first] : train.front()->aocc) {
        double total = 0.0;
        bool everywhere = true;
        for (const auto* t : train) {
            const auto it = t->aocc.find(id);
            if (it == t->aocc.end()) {
                everywhere = false;
                break;
            }
            total += it->second;
        }
        if (!everywhere) continue;
        const double m = total / static_cast<double>(train.size());
        if (best.empty() || m > best_mean) {
            best = id;
            best_mean = m;
        }
    }
    return best;
}

}  // namespace

std::vector<LossRow> evaluate_aac(const std::vector<AacInstance>& instances, const ConfigurationSpace& space,
                                  Mode mode, const Learner& learner) {
    std::vector<LossRow> out;
    std::set<int> dims;
    for (const auto& i : instances) dims.insert(i.dim);
    for (int dim : dims) {
        std::set<int> folds;
        for (const auto& i : instances) {
            if (i.dim == dim) folds.insert(mode == Mode::Lofo ? i.fid : i.iid);
        }
        if (folds.size() < 2) {
            throw ValidationError(std::string("evaluate_aac: ") + (mode == Mode::Lofo ? "LOFO needs at least 2 functions"
                                                                                       : "LOIO needs at least 2 instances") +
                                  " in d" + std::to_string(dim));
        }
        for (int fold : folds) {
            std::vector<const AacInstance*> train, test;
            for (const auto& i : instances) {
                if (i.dim != dim) continue;
                ((mode == Mode::Lofo ? i.fid : i.iid) == fold ? test : train).push_back(&i);
            }
            std::vector<std::vector<double>> X;
            std::vector<Configuration> labels;
            for (const auto* t : train) {
                X.push_back(t->features);
                labels.push_back(t->configs.at(t->single_best));
            }
            const Predictor predict = learner(X, labels);
            const std::string ab = training_avg_best(train);

            for (const auto* t : test) {
                LossRow row;
                row.mode = mode;
                row.fold = fold;
                row.fid = t->fid;
                row.dim = t->dim;
                row.iid = t->iid;
                row.single_best = t->single_best;
                row.single_best_aocc = t->single_best_aocc;
                const Configuration pred = predict(t->features);
                row.predicted = config_id(pred, space);
                row.evaluated = row.predicted;
                if (!t->aocc.contains(row.predicted)) {
                    row.evaluated = nearest_recorded(pred, *t);
                    row.fallback = true;
                }
                row.predicted_aocc = t->aocc.at(row.evaluated);
                row.loss = row.single_best_aocc - row.predicted_aocc;
                row.avg_best = ab;
                const auto it = ab.empty() ? t->aocc.end() : t->aocc.find(ab);
                row.avg_best_loss = it == t->aocc.end() ? std::numeric_limits<double>::quiet_NaN()
                                                        : row.single_best_aocc - it->second;
                double all = 0.0;
                for (const auto& [id, a] : t->aocc) all += a;
                row.random_loss = row.single_best_aocc - all / static_cast<double>(t->aocc.size());
                out.push_back(std::move(row));
            }
        }
    }
    return out;
}

std::string loss_csv(const std::vector<LossRow>& rows) {
    std::string out =
        "mode,fold,fid,dim,iid,single_best,single_best_aocc,predicted,evaluated,fallback,predicted_aocc,loss,"
        "avg_best,avg_best_loss,random_loss\n";
    for (const auto& r : rows) {
        out += std::string(to_string(r.mode)) + ',' + std::to_string(r.fold) + ',' + std::to_string(r.fid) + ',' +
               std::to_string(r.dim) + ',' + std::to_string(r.iid) + ',' + r.single_best + ',' +
               format_double(r.single_best_aocc) + ',' + r.predicted + ',' + r.evaluated + ',' +
               (r.fallback ? "true" : "false") + ',' + format_double(r.predicted_aocc) + ',' + format_double(r.loss) +
               ',' + r.avg_best + ',' + format_double(r.avg_best_loss) + ',' + format_double(r.random_loss) + '\n';
    }
    return out;
}

LossSummary summarize(const std::vector<LossRow>& rows) {
    LossSummary s;
    std::size_t with_ab = 0;
    for (const auto& r : rows) {
        s.mean_loss += r.loss;
        s.mean_random_loss += r.random_loss;
        if (std::isfinite(r.avg_best_loss)) {
            s.mean_avg_best_loss += r.avg_best_loss;
            ++with_ab;
        }
        s.fallbacks += r.fallback;
    }
    s.rows = rows.size();
    if (s.rows) {
        s.mean_loss /= static_cast<double>(s.rows);
        s.mean_random_loss /= static_cast<double>(s.rows);
    }
    s.mean_avg_best_loss = with_ab ? s.mean_avg_best_loss / static_cast<double>(with_ab)
                                   : std::numeric_limits<double>::quiet_NaN();
    return s;
}

}  // namespace xbench::ela
