#pragma once

#include "xbench/common.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace xbench::suite {

struct Bounds {
    double lower = -5.0;
    double upper = 5.0;
};

/// Row-major square matrix.
struct Matrix {
    int n = 0;
    std::vector<double> a;

    [[nodiscard]] double operator()(int i, int j) const { return a[static_cast<std::size_t>(i * n + j)]; }
    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i * n + j)]; }
};

/// Seeded instance data: optimum location/value and two rotations, derived
/// deterministically from (fid, iid, dim).
struct InstanceTransform {
    std::vector<double> xopt;
    double fopt = 0.0;
    Matrix R;
    Matrix Q;
};

InstanceTransform make_instance(int fid, int dim, int iid);

/// Orthogonal matrix by modified Gram-Schmidt over a seeded standard-normal matrix.
Matrix random_rotation(int dim, std::uint64_t seed);

/// External objective. `id` must not clash with a native function id.
struct PluginObjective {
    int id = 0;
    std::string name;
    Bounds bounds;
    std::function<double(std::span<const double>)> evaluate;
    std::optional<double> fopt;
};

/// Registers (or replaces) a plug-in objective; thread-safe.
void register_objective(PluginObjective objective);
std::vector<int> plugin_ids();

class Problem;
namespace detail {
struct Function;
}

/// Native function ids (1..15, 20, 21, 22).
const std::vector<int>& native_fids();
bool is_supported(int fid);

/// Throws ValidationError("unsupported function ...") listing the supported ids.
Problem make_problem(int fid, int dim, int iid);

/// Uniform-fitness f0 on [0,1]^dim; every call returns a fresh U(0,1) draw.
Problem make_f0(int dim, std::uint64_t run_seed);

class Problem {
public:
    [[nodiscard]] int fid() const { return fid_; }
    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] int iid() const { return iid_; }
    [[nodiscard]] const Bounds& bounds() const { return bounds_; }
    [[nodiscard]] std::optional<double> fopt() const { return fopt_; }
    /// Empty for f0 and plug-ins.
    [[nodiscard]] const std::vector<double>& xopt() const { return xopt_; }
    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] const InstanceTransform* transform() const;

    /// Objective value. Non-const: f0 advances its value stream.
    double evaluate(std::span<const double> x);

    /// f - fopt computed without adding and removing fopt (native functions);
    /// plain f when fopt is unknown.
    double gap(std::span<const double> x);

private:
    friend Problem make_problem(int, int, int);
    friend Problem make_f0(int, std::uint64_t);
    Problem() = default;

    int fid_ = 0;
    int dim_ = 0;
    int iid_ = 0;
    Bounds bounds_;
    std::optional<double> fopt_;
    std::vector<double> xopt_;
    std::string name_;
    std::shared_ptr<const detail::Function> fn_;
    std::shared_ptr<const PluginObjective> plugin_;
    std::optional<Rng> stream_;
};

/// Raw separable ellipsoid core (no transform): sum_i 10^(6(i-1)/(d-1)) z_i^2.
double ellipsoid_core(std::span<const double> z);

}  // namespace xbench::suite
