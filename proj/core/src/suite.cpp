#include "xbench/suite.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace xbench::suite {

namespace {

// Counter-based uniform in [0, 1): splitmix64 of (key, counter).
double unit(std::uint64_t key, std::uint64_t counter) {
    const std::uint64_t bits = splitmix64(key ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
    return static_cast<double>(bits >> 11U) * 0x1.0p-53;
}

class CounterStream {
public:
    explicit CounterStream(std::uint64_t key) : key_(key) {}
    double uniform() { return unit(key_, counter_++); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    double sign() { return uniform() < 0.5 ? -1.0 : 1.0; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

enum Stream : std::uint64_t { kXopt = 1, kRotR = 2, kRotQ = 3, kFopt = 4, kSigns = 5, kPeaks = 6 };

std::uint64_t stream_key(int fid, int dim, int iid, Stream s) {
    return mix_seed(static_cast<std::uint64_t>(fid), static_cast<std::uint64_t>(iid), static_cast<std::uint64_t>(dim),
                    static_cast<std::uint64_t>(s));
}

// 1-D maximizer of z*sin(sqrt(z)) on [0, 500].
constexpr double kSchwefelArgmax = 420.968746359982025;

double tosz(double x) {
    if (x == 0.0) return 0.0;
    const double xh = std::log(std::abs(x));
    const double c1 = x > 0 ? 10.0 : 5.5;
    const double c2 = x > 0 ? 7.9 : 3.1;
    return std::copysign(std::exp(xh + 0.049 * (std::sin(c1 * xh) + std::sin(c2 * xh))), x);
}

void tosz(std::vector<double>& z) {
    for (auto& v : z) v = tosz(v);
}

void tasy(std::vector<double>& z, double beta) {
    const double d1 = static_cast<double>(z.size() - 1);
    for (std::size_t i = 0; i < z.size(); ++i)
        if (z[i] > 0) z[i] = std::pow(z[i], 1.0 + beta * (static_cast<double>(i) / d1) * std::sqrt(z[i]));
}

double lambda_alpha(std::size_t i, std::size_t dim, double alpha) {
    return std::pow(alpha, 0.5 * static_cast<double>(i) / static_cast<double>(dim - 1));
}

void scale_lambda(std::vector<double>& z, double alpha) {
    for (std::size_t i = 0; i < z.size(); ++i) z[i] *= lambda_alpha(i, z.size(), alpha);
}

std::vector<double> mul(const Matrix& m, const std::vector<double>& v) {
    std::vector<double> out(v.size(), 0.0);
    for (int i = 0; i < m.n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.n; ++j) s += m(i, j) * v[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = s;
    }
    return out;
}

std::vector<double> shifted(std::span<const double> x, const std::vector<double>& xopt) {
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - xopt[i];
    return z;
}

double fpen(std::span<const double> x) {
    double s = 0.0;
    for (const double v : x) {
        const double e = std::abs(v) - 5.0;
        if (e > 0) s += e * e;
    }
    return s;
}

double rastrigin_core(const std::vector<double>& z) {
    double c = 0.0;
    double q = 0.0;
    for (const double v : z) {
        c += std::cos(2.0 * std::numbers::pi * v);
        q += v * v;
    }
    return 10.0 * (static_cast<double>(z.size()) - c) + q;
}

struct Peak {
    std::vector<double> rotated_center;  // R * y
    std::vector<double> scales;          // diagonal of C_i
    double weight = 0.0;
};

}  // namespace

namespace detail {

struct Function {
    int fid = 0;
    int dim = 0;
    InstanceTransform t;
    std::vector<double> signs;
    std::vector<Peak> peaks;
    double schwefel_offset = 0.0;

    double raw(std::span<const double> x) const;
    double schwefel_sum(std::span<const double> x) const;
};

double Function::schwefel_sum(std::span<const double> x) const {
    const auto d = static_cast<std::size_t>(dim);
    std::vector<double> xh(d);
    for (std::size_t i = 0; i < d; ++i) xh[i] = 2.0 * signs[i] * x[i];
    std::vector<double> zh(xh);
    for (std::size_t i = 1; i < d; ++i) zh[i] = xh[i] + 0.25 * (xh[i - 1] - 2.0 * std::abs(t.xopt[i - 1]));
    double s = 0.0;
    std::vector<double> z(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double two_abs = 2.0 * std::abs(t.xopt[i]);
        z[i] = 100.0 * (lambda_alpha(i, d, 10.0) * (zh[i] - two_abs) + two_abs);
        s += z[i] * std::sin(std::sqrt(std::abs(z[i])));
    }
    double pen = 0.0;
    for (const double v : z) {
        const double e = std::abs(v / 100.0) - 5.0;
        if (e > 0) pen += e * e;
    }
    return -s / (100.0 * dim) + 100.0 * pen;
}

double Function::raw(std::span<const double> x) const {
    const auto d = static_cast<std::size_t>(dim);
    switch (fid) {
        case 1: {
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i) s += (x[i] - t.xopt[i]) * (x[i] - t.xopt[i]);
            return s;
        }
        case 2: {
            auto z = shifted(x, t.xopt);
            tosz(z);
            return ellipsoid_core(z);
        }
        case 3: {
            auto z = shifted(x, t.xopt);
            tosz(z);
            tasy(z, 0.2);
            scale_lambda(z, 10.0);
            return rastrigin_core(z);
        }
        case 4: {
            auto z = shifted(x, t.xopt);
            tosz(z);
            for (std::size_t i = 0; i < d; ++i) {
                double s = lambda_alpha(i, d, 10.0);
                if (z[i] > 0 && i % 2 == 0) s *= 10.0;
                z[i] *= s;
            }
            return rastrigin_core(z) + 100.0 * fpen(x);
        }
        case 5: {
            double f = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double s = std::copysign(std::pow(10.0, static_cast<double>(i) / static_cast<double>(d - 1)), t.xopt[i]);
                const double zi = x[i] * t.xopt[i] < 25.0 ? x[i] : t.xopt[i];
                f += 5.0 * std::abs(s) - s * zi;
            }
            return f;
        }
        case 6: {
            auto z = mul(t.R, shifted(x, t.xopt));
            scale_lambda(z, 10.0);
            z = mul(t.Q, z);
            double f = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double s = z[i] * t.xopt[i] > 0 ? 100.0 : 1.0;
                f += (s * z[i]) * (s * z[i]);
            }
            return std::pow(tosz(f), 0.9);
        }
        case 7: {
            auto zh = mul(t.R, shifted(x, t.xopt));
            scale_lambda(zh, 10.0);
            std::vector<double> zt(d);
            for (std::size_t i = 0; i < d; ++i)
                zt[i] = std::abs(zh[i]) > 0.5 ? std::floor(0.5 + zh[i]) : std::floor(0.5 + 10.0 * zh[i]) / 10.0;
            const auto z = mul(t.Q, zt);
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i)
                s += std::pow(10.0, 2.0 * static_cast<double>(i) / static_cast<double>(d - 1)) * z[i] * z[i];
            return 0.1 * std::max(std::abs(zh[0]) / 1e4, s) + fpen(x);
        }
        case 8:
        case 9: {
            const double scale = std::max(1.0, std::sqrt(static_cast<double>(d)) / 8.0);
            auto z = shifted(x, t.xopt);
            if (fid == 9) z = mul(t.R, z);
            for (auto& v : z) v = scale * v + 1.0;
            double f = 0.0;
            for (std::size_t i = 0; i + 1 < d; ++i) {
                const double a = z[i] * z[i] - z[i + 1];
                f += 100.0 * a * a + (z[i] - 1.0) * (z[i] - 1.0);
            }
            return f;
        }
        case 10: {
            auto z = mul(t.R, shifted(x, t.xopt));
            tosz(z);
            return ellipsoid_core(z);
        }
        case 11: {
            auto z = mul(t.R, shifted(x, t.xopt));
            tosz(z);
            double f = 1e6 * z[0] * z[0];
            for (std::size_t i = 1; i < d; ++i) f += z[i] * z[i];
            return f;
        }
        case 12: {
            auto z = mul(t.R, shifted(x, t.xopt));
            tasy(z, 0.5);
            z = mul(t.R, z);
            double f = 0.0;
            for (std::size_t i = 1; i < d; ++i) f += z[i] * z[i];
            return z[0] * z[0] + 1e6 * f;
        }
        case 13: {
            auto z = mul(t.R, shifted(x, t.xopt));
            scale_lambda(z, 10.0);
            z = mul(t.Q, z);
            double f = 0.0;
            for (std::size_t i = 1; i < d; ++i) f += z[i] * z[i];
            return z[0] * z[0] + 100.0 * std::sqrt(f);
        }
        case 14: {
            const auto z = mul(t.R, shifted(x, t.xopt));
            double f = 0.0;
            for (std::size_t i = 0; i < d; ++i)
                f += std::pow(std::abs(z[i]), 2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(d - 1));
            return std::sqrt(f);
        }
        case 15: {
            auto z = mul(t.R, shifted(x, t.xopt));
            tosz(z);
            tasy(z, 0.2);
            z = mul(t.Q, z);
            scale_lambda(z, 10.0);
            z = mul(t.R, z);
            return rastrigin_core(z);
        }
        case 20:
            return schwefel_sum(x) + schwefel_offset;
        case 21:
        case 22: {
            const std::vector<double> xv(x.begin(), x.end());
            const auto rx = mul(t.R, xv);
            double best = 0.0;
            for (const auto& p : peaks) {
                double q = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    const double v = rx[k] - p.rotated_center[k];
                    q += p.scales[k] * v * v;
                }
                best = std::max(best, p.weight * std::exp(-q / (2.0 * dim)));
            }
            const double g = tosz(10.0 - best);
            return g * g + fpen(x);
        }
        default:
            break;
    }
    throw std::logic_error("unreachable function id");
}

}  // namespace detail

double ellipsoid_core(std::span<const double> z) {
    const std::size_t d = z.size();
    double f = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double e = d > 1 ? 6.0 * static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
        f += std::pow(10.0, e) * z[i] * z[i];
    }
    return f;
}

Matrix random_rotation(int dim, std::uint64_t seed) {
    CounterStream s(seed);
    Matrix m{dim, std::vector<double>(static_cast<std::size_t>(dim * dim))};
    for (auto& v : m.a) v = s.normal();
    // Modified Gram-Schmidt on rows.
    for (int i = 0; i < dim; ++i) {
        for (int k = 0; k < i; ++k) {
            double dot = 0.0;
            for (int j = 0; j < dim; ++j) dot += m(i, j) * m(k, j);
            for (int j = 0; j < dim; ++j) m(i, j) -= dot * m(k, j);
        }
        double norm = 0.0;
        for (int j = 0; j < dim; ++j) norm += m(i, j) * m(i, j);
        norm = std::sqrt(norm);
        for (int j = 0; j < dim; ++j) m(i, j) /= norm;
    }
    return m;
}

InstanceTransform make_instance(int fid, int dim, int iid) {
    InstanceTransform t;
    CounterStream xs(stream_key(fid, dim, iid, kXopt));
    t.xopt.resize(static_cast<std::size_t>(dim));
    for (auto& v : t.xopt) v = xs.uniform(-4.0, 4.0);
    CounterStream fs(stream_key(fid, dim, iid, kFopt));
    const double cauchy = 100.0 * fs.normal() / fs.normal();
    t.fopt = std::clamp(std::round(100.0 * cauchy) / 100.0, -1000.0, 1000.0);
    t.R = random_rotation(dim, stream_key(fid, dim, iid, kRotR));
    t.Q = random_rotation(dim, stream_key(fid, dim, iid, kRotQ));
    return t;
}

const std::vector<int>& native_fids() {
    static const std::vector<int> ids{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 20, 21, 22};
    return ids;
}

namespace {

const char* function_name(int fid) {
    switch (fid) {
        case 1: return "Sphere";
        case 2: return "Ellipsoid";
        case 3: return "Rastrigin";
        case 4: return "BuecheRastrigin";
        case 5: return "LinearSlope";
        case 6: return "AttractiveSector";
        case 7: return "StepEllipsoid";
        case 8: return "Rosenbrock";
        case 9: return "RosenbrockRotated";
        case 10: return "EllipsoidRotated";
        case 11: return "Discus";
        case 12: return "BentCigar";
        case 13: return "SharpRidge";
        case 14: return "DifferentPowers";
        case 15: return "RastriginRotated";
        case 20: return "Schwefel";
        case 21: return "Gallagher101";
        case 22: return "Gallagher21";
        default: return "?";
    }
}

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

std::map<int, std::shared_ptr<const PluginObjective>>& registry() {
    static std::map<int, std::shared_ptr<const PluginObjective>> r;
    return r;
}

std::shared_ptr<const PluginObjective> find_plugin(int id) {
    const std::lock_guard lock(registry_mutex());
    const auto it = registry().find(id);
    return it == registry().end() ? nullptr : it->second;
}

std::vector<Peak> make_peaks(int fid, int dim, int iid, const Matrix& R) {
    const std::size_t d = static_cast<std::size_t>(dim);
    const int n = fid == 21 ? 101 : 21;
    const double first_cond = fid == 21 ? 1000.0 : 1e6;
    const double y1_range = fid == 21 ? 4.0 : 3.92;
    CounterStream s(stream_key(fid, dim, iid, kPeaks));

    // Conditioning exponents 1000^(2j/(n-2)), j = 0..n-2, shuffled.
    std::vector<double> alphas(static_cast<std::size_t>(n - 1));
    for (std::size_t j = 0; j < alphas.size(); ++j)
        alphas[j] = std::pow(1000.0, 2.0 * static_cast<double>(j) / static_cast<double>(n - 2));
    for (std::size_t j = alphas.size(); j > 1; --j)
        std::swap(alphas[j - 1], alphas[static_cast<std::size_t>(s.uniform() * static_cast<double>(j))]);

    std::vector<Peak> peaks;
    for (int i = 0; i < n; ++i) {
        Peak p;
        const double range = i == 0 ? y1_range : 4.9;
        std::vector<double> y(d);
        for (auto& v : y) v = s.uniform(-range, range);
        p.rotated_center = mul(R, y);
        const double alpha = i == 0 ? first_cond : alphas[static_cast<std::size_t>(i - 1)];
        p.scales.resize(d);
        for (std::size_t k = 0; k < d; ++k) p.scales[k] = lambda_alpha(k, d, alpha) / std::pow(alpha, 0.25);
        for (std::size_t k = d; k > 1; --k)
            std::swap(p.scales[k - 1], p.scales[static_cast<std::size_t>(s.uniform() * static_cast<double>(k))]);
        p.weight = i == 0 ? 10.0 : 1.1 + 8.0 * static_cast<double>(i - 1) / static_cast<double>(n - 2);
        if (i == 0) p.rotated_center.swap(y);  // keep y1 itself; rotated below
        peaks.push_back(std::move(p));
    }
    return peaks;
}

}  // namespace

bool is_supported(int fid) {
    const auto& ids = native_fids();
    return std::find(ids.begin(), ids.end(), fid) != ids.end() || find_plugin(fid) != nullptr;
}

void register_objective(PluginObjective objective) {
    const auto& ids = native_fids();
    if (std::find(ids.begin(), ids.end(), objective.id) != ids.end() || objective.id == 0)
        throw ValidationError("plug-in id " + std::to_string(objective.id) + " clashes with a native function");
    if (!objective.evaluate) throw ValidationError("plug-in '" + objective.name + "' has no evaluate function");
    const std::lock_guard lock(registry_mutex());
    const int id = objective.id;
    registry()[id] = std::make_shared<const PluginObjective>(std::move(objective));
}

std::vector<int> plugin_ids() {
    const std::lock_guard lock(registry_mutex());
    std::vector<int> out;
    for (const auto& [id, p] : registry()) out.push_back(id);
    return out;
}

Problem make_problem(int fid, int dim, int iid) {
    if (dim < 2) throw ValidationError("make_problem: dim must be >= 2");
    if (iid < 1) throw ValidationError("make_problem: iid must be >= 1");
    Problem p;
    p.fid_ = fid;
    p.dim_ = dim;
    p.iid_ = iid;
    const auto& ids = native_fids();
    if (std::find(ids.begin(), ids.end(), fid) == ids.end()) {
        auto plugin = find_plugin(fid);
        if (!plugin) {
            std::ostringstream msg;
            msg << "unsupported function " << fid << "; supported ids:";
            for (const int id : ids) msg << ' ' << id;
            for (const int id : plugin_ids()) msg << ' ' << id;
            throw ValidationError(msg.str());
        }
        p.bounds_ = plugin->bounds;
        p.fopt_ = plugin->fopt;
        p.name_ = plugin->name;
        p.plugin_ = std::move(plugin);
        return p;
    }

    auto fn = std::make_shared<detail::Function>();
    fn->fid = fid;
    fn->dim = dim;
    fn->t = make_instance(fid, dim, iid);
    auto& xopt = fn->t.xopt;
    const auto d = static_cast<std::size_t>(dim);
    CounterStream signs(stream_key(fid, dim, iid, kSigns));
    switch (fid) {
        case 4:
            for (std::size_t i = 0; i < d; i += 2) xopt[i] = std::abs(xopt[i]);
            break;
        case 5:
            for (auto& v : xopt) v = 5.0 * signs.sign();
            break;
        case 8:
        case 9:
            for (auto& v : xopt) v *= 0.75;
            break;
        case 20: {
            fn->signs.resize(d);
            for (std::size_t i = 0; i < d; ++i) {
                fn->signs[i] = signs.sign();
                xopt[i] = fn->signs[i] * (kSchwefelArgmax / 200.0);
            }
            fn->schwefel_offset = 0.0;
            fn->schwefel_offset = -fn->schwefel_sum(xopt);
            break;
        }
        case 21:
        case 22: {
            fn->peaks = make_peaks(fid, dim, iid, fn->t.R);
            xopt = fn->peaks.front().rotated_center;
            fn->peaks.front().rotated_center = mul(fn->t.R, xopt);
            break;
        }
        default:
            break;
    }
    p.bounds_ = {-5.0, 5.0};
    p.fopt_ = fn->t.fopt;
    p.xopt_ = xopt;
    p.name_ = function_name(fid);
    p.fn_ = std::move(fn);
    return p;
}

Problem make_f0(int dim, std::uint64_t run_seed) {
    if (dim < 1) throw ValidationError("make_f0: dim must be >= 1");
    Problem p;
    p.fid_ = 0;
    p.dim_ = dim;
    p.iid_ = 0;
    p.bounds_ = {0.0, 1.0};
    p.name_ = "UniformFitness";
    p.stream_.emplace(mix_seed(run_seed, 0xf0f0f0f0ULL));
    return p;
}

const InstanceTransform* Problem::transform() const { return fn_ ? &fn_->t : nullptr; }

double Problem::evaluate(std::span<const double> x) {
    if (static_cast<int>(x.size()) != dim_)
        throw ValidationError("evaluate: expected " + std::to_string(dim_) + " coordinates, got " +
                              std::to_string(x.size()));
    if (stream_) return std::uniform_real_distribution<double>(0.0, 1.0)(*stream_);
    if (plugin_) return plugin_->evaluate(x);
    return fn_->raw(x) + fn_->t.fopt;
}

double Problem::gap(std::span<const double> x) {
    if (fn_) {
        if (static_cast<int>(x.size()) != dim_) return evaluate(x);
        return fn_->raw(x);
    }
    const double f = evaluate(x);
    return fopt_ ? f - *fopt_ : f;
}

}  // namespace xbench::suite
