#pragma once

#include "xbench/suite.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace xbench {

/// What an optimizer sees: a box-constrained black box.
struct Objective {
    int dim = 0;
    suite::Bounds bounds;
    std::function<double(std::span<const double>)> f;
};

/// Best-so-far values y_1..y_B (one per evaluation) plus the final incumbent.
struct RunResult {
    std::vector<double> trajectory;
    std::vector<double> best_x;
    double best_f = std::numeric_limits<double>::infinity();
    int restarts = 0;
};

/// Counts evaluations against a hard budget and records the best-so-far trace.
class EvaluationBudget {
public:
    EvaluationBudget(Objective& objective, long budget) : objective_(objective), budget_(budget) {
        result_.trajectory.reserve(static_cast<std::size_t>(std::max(0L, budget)));
    }

    [[nodiscard]] bool exhausted() const { return used_ >= budget_; }
    [[nodiscard]] long used() const { return used_; }
    [[nodiscard]] long remaining() const { return budget_ - used_; }
    [[nodiscard]] long budget() const { return budget_; }
    [[nodiscard]] double best() const { return result_.best_f; }

    /// Evaluates x; must not be called once exhausted().
    double operator()(std::span<const double> x) {
        const double f = objective_.f(x);
        ++used_;
        if (f < result_.best_f || result_.best_x.empty()) {
            result_.best_f = f;
            result_.best_x.assign(x.begin(), x.end());
        }
        result_.trajectory.push_back(result_.best_f);
        return f;
    }

    RunResult finish(int restarts) && {
        result_.restarts = restarts;
        return std::move(result_);
    }

private:
    Objective& objective_;
    long budget_;
    long used_ = 0;
    RunResult result_;
};

inline void saturate(std::span<double> x, const suite::Bounds& b) {
    for (double& v : x) v = std::clamp(v, b.lower, b.upper);
}

}  // namespace xbench
