#include "xbench/modde.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace xbench::modde {

namespace {

const std::string& label_of(const Configuration& c, const ConfigurationSpace& s, std::string_view name) {
    return c.get(s, name).as_label();
}

double number_of(const Configuration& c, const ConfigurationSpace& s, std::string_view name) {
    return c.get(s, name).as_number();
}

bool flag_of(const Configuration& c, const ConfigurationSpace& s, std::string_view name) {
    return label_of(c, s, name) == "true";
}

// Draws indices without replacement from [0, n) minus `excluded`; once everything
// has been drawn the pool refills (small populations) so the draw never fails.
class IndexPool {
public:
    IndexPool(std::size_t n, std::size_t excluded) : n_(n), excluded_(excluded) {}

    std::size_t draw(Rng& rng, std::size_t upper) {
        std::vector<std::size_t> free;
        for (std::size_t k = 0; k < upper; ++k)
            if (k != excluded_ && std::find(used_.begin(), used_.end(), k) == used_.end()) free.push_back(k);
        if (free.empty()) {
            if (used_.empty()) return excluded_;  // nothing but the target exists
            used_.clear();
            return draw(rng, upper);
        }
        std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
        const std::size_t k = free[pick(rng)];
        used_.push_back(k);
        return k;
    }

    std::size_t draw(Rng& rng) { return draw(rng, n_); }

    void mark(std::size_t k) { used_.push_back(k); }

private:
    std::size_t n_;
    std::size_t excluded_;
    std::vector<std::size_t> used_;
};

std::vector<std::size_t> ranking(const std::vector<double>& fitness) {
    std::vector<std::size_t> order(fitness.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });
    return order;
}

}  // namespace

DeConfig from_configuration(const Configuration& config, const ConfigurationSpace& space) {
    DeConfig c;
    const std::string& base = label_of(config, space, "base");
    c.base = base == "best" ? Base::Best : base == "rand" ? Base::Rand : Base::Target;
    const std::string& ref = label_of(config, space, "ref");
    c.ref = ref == "none" ? Ref::None : ref == "best" ? Ref::Best : ref == "pbest" ? Ref::PBest : Ref::Rand;
    c.diffs = static_cast<int>(number_of(config, space, "diffs"));
    c.archive = flag_of(config, space, "archive");
    c.crossover = label_of(config, space, "crossover") == "exp" ? Crossover::Exp : Crossover::Bin;
    const std::string& adapt = label_of(config, space, "adaptation_method");
    c.adaptation = adapt == "jDE" ? Adaptation::JDE : adapt == "shade" ? Adaptation::Shade : Adaptation::None;
    c.lpsr = flag_of(config, space, "lpsr");
    c.lambda = static_cast<int>(number_of(config, space, "lambda"));
    c.F = number_of(config, space, "F");
    c.CR = number_of(config, space, "CR");
    return c;
}

std::size_t DeState::best_index() const {
    return static_cast<std::size_t>(std::min_element(fitness.begin(), fitness.end()) - fitness.begin());
}

std::size_t shade_memory_size(int dim) { return static_cast<std::size_t>(std::max(5, 6 * dim)); }

DeState init_state(const DeConfig& config, int dim, const suite::Bounds& bounds, Rng& rng) {
    DeState s;
    s.dim = dim;
    s.bounds = bounds;
    s.lambda_init = std::max(config.lambda, kMinLambda);
    std::uniform_real_distribution<double> u(bounds.lower, bounds.upper);
    s.population.assign(static_cast<std::size_t>(s.lambda_init), std::vector<double>(static_cast<std::size_t>(dim)));
    for (auto& x : s.population)
        for (double& v : x) v = u(rng);
    s.fitness.assign(s.population.size(), std::numeric_limits<double>::infinity());
    s.F_i.assign(s.population.size(), config.F);
    s.CR_i.assign(s.population.size(), config.CR);
    s.memory_F.assign(shade_memory_size(dim), config.F);
    s.memory_CR.assign(shade_memory_size(dim), config.CR);
    return s;
}

std::vector<double> mutate(const DeState& state, const DeConfig& config, std::size_t target, double F, Rng& rng,
                           MutationTrace* trace) {
    const std::size_t n = state.size();
    IndexPool pool(n, target);
    MutationTrace t;

    std::size_t best = state.best_index();
    auto pbest = [&] {
        const auto order = ranking(state.fitness);
        const auto top = static_cast<std::size_t>(std::ceil(kPBestFraction * static_cast<double>(n)));
        std::uniform_int_distribution<std::size_t> pick(0, std::max<std::size_t>(top, 1) - 1);
        return order[pick(rng)];
    };

    switch (config.base) {
        case Base::Best: t.base = best; break;
        case Base::Rand: t.base = pool.draw(rng); break;
        case Base::Target: t.base = target; break;
    }
    if (t.base != target) pool.mark(t.base);

    switch (config.ref) {
        case Ref::None: break;
        case Ref::Best: t.ref = best; break;
        case Ref::PBest: t.ref = pbest(); break;
        case Ref::Rand: t.ref = pool.draw(rng); break;
    }
    if (t.ref && *t.ref != target) pool.mark(*t.ref);

    const std::size_t archive_n = config.archive ? state.archive.size() : 0;
    for (int k = 0; k < config.diffs; ++k) {
        t.plus.push_back(pool.draw(rng));
        const bool last = k + 1 == config.diffs;
        t.minus.push_back(last ? pool.draw(rng, n + archive_n) : pool.draw(rng));
    }

    auto point = [&](std::size_t idx) -> const std::vector<double>& {
        return idx < n ? state.population[idx] : state.archive[idx - n];
    };

#ifndef NDEBUG
    if (n >= static_cast<std::size_t>(2 + 2 * config.diffs) + (config.ref ? 1 : 0)) {
        std::vector<std::size_t> drawn{target};
        if (config.base == Base::Rand) drawn.push_back(t.base);
        if (config.ref == Ref::Rand) drawn.push_back(*t.ref);
        drawn.insert(drawn.end(), t.plus.begin(), t.plus.end());
        drawn.insert(drawn.end(), t.minus.begin(), t.minus.end());
        std::sort(drawn.begin(), drawn.end());
        assert(std::adjacent_find(drawn.begin(), drawn.end()) == drawn.end());
    }
#endif

    const auto d = static_cast<std::size_t>(state.dim);
    std::vector<double> v = point(t.base);
    if (t.ref) {
        const auto& r = point(*t.ref);
        for (std::size_t j = 0; j < d; ++j) v[j] += F * (r[j] - point(t.base)[j]);
    }
    for (std::size_t k = 0; k < t.plus.size(); ++k) {
        const auto& a = point(t.plus[k]);
        const auto& b = point(t.minus[k]);
        for (std::size_t j = 0; j < d; ++j) v[j] += F * (a[j] - b[j]);
    }
    if (trace) *trace = std::move(t);
    return v;
}

std::vector<double> crossover(std::span<const double> target, std::span<const double> donor, double CR, Crossover kind,
                              Rng& rng) {
    assert(target.size() == donor.size());
    const std::size_t d = target.size();
    std::vector<double> trial(target.begin(), target.end());
    if (d == 0) return trial;
    std::uniform_int_distribution<std::size_t> pick(0, d - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (kind == Crossover::Bin) {
        const std::size_t forced = pick(rng);
        for (std::size_t j = 0; j < d; ++j)
            if (j == forced || u(rng) < CR) trial[j] = donor[j];
    } else {
        std::size_t j = pick(rng);
        std::size_t len = 0;
        do {
            trial[j] = donor[j];
            j = (j + 1) % d;
            ++len;
        } while (len < d && u(rng) < CR);
    }
    return trial;
}

ControlSample sample_control(const DeState& state, const DeConfig& config, std::size_t target, Rng& rng) {
    ControlSample out{config.F, config.CR, false, false};
    std::uniform_real_distribution<double> u(0.0, 1.0);
    switch (config.adaptation) {
        case Adaptation::None: break;
        case Adaptation::JDE:
            out.F = state.F_i[target];
            out.CR = state.CR_i[target];
            if (u(rng) < kJdeTau) {
                out.F = 0.1 + 0.9 * u(rng);
                out.resampled_F = true;
            }
            if (u(rng) < kJdeTau) {
                out.CR = u(rng);
                out.resampled_CR = true;
            }
            break;
        case Adaptation::Shade: {
            std::uniform_int_distribution<std::size_t> slot(0, state.memory_F.size() - 1);
            const std::size_t r = slot(rng);
            std::normal_distribution<double> normal(state.memory_CR[r], 0.1);
            out.CR = std::clamp(normal(rng), 0.0, 1.0);
            std::cauchy_distribution<double> cauchy(state.memory_F[r], 0.1);
            double f = 0.0;
            do {
                f = cauchy(rng);
            } while (f <= 0.0);
            out.F = std::min(f, 1.0);
            break;
        }
    }
    return out;
}

void adapt(DeState& state, const DeConfig& config, std::span<const SuccessRecord> successes) {
    if (successes.empty()) return;
    if (config.adaptation == Adaptation::JDE) {
        for (const auto& s : successes) {
            state.F_i[s.index] = s.F;
            state.CR_i[s.index] = s.CR;
        }
    } else if (config.adaptation == Adaptation::Shade) {
        double total = 0.0;
        for (const auto& s : successes) total += s.improvement;
        double f_num = 0.0;
        double f_den = 0.0;
        double cr = 0.0;
        for (const auto& s : successes) {
            const double w = total > 0.0 ? s.improvement / total : 1.0 / static_cast<double>(successes.size());
            f_num += w * s.F * s.F;
            f_den += w * s.F;
            cr += w * s.CR;
        }
        if (f_den > 0.0) state.memory_F[state.memory_pos] = f_num / f_den;
        state.memory_CR[state.memory_pos] = cr;
        state.memory_pos = (state.memory_pos + 1) % state.memory_F.size();
    }
}

int lpsr_schedule(int lambda_init, int lambda_min, long budget, long evals) {
    if (budget <= 0) return lambda_init;
    const double frac = static_cast<double>(std::clamp(evals, 0L, budget)) / static_cast<double>(budget);
    return static_cast<int>(std::lround(lambda_init + (lambda_min - lambda_init) * frac));
}

void shrink_population(DeState& state, std::size_t new_size, Rng& rng) {
    if (new_size >= state.size()) return;
    auto order = ranking(state.fitness);
    order.resize(new_size);
    DeState kept = state;
    kept.population.clear();
    kept.fitness.clear();
    kept.F_i.clear();
    kept.CR_i.clear();
    for (std::size_t k : order) {
        kept.population.push_back(state.population[k]);
        kept.fitness.push_back(state.fitness[k]);
        kept.F_i.push_back(state.F_i[k]);
        kept.CR_i.push_back(state.CR_i[k]);
    }
    state = std::move(kept);
    while (state.archive.size() > state.size()) {
        std::uniform_int_distribution<std::size_t> pick(0, state.archive.size() - 1);
        state.archive.erase(state.archive.begin() + static_cast<std::ptrdiff_t>(pick(rng)));
    }
}

void archive_insert(DeState& state, std::vector<double> parent, Rng& rng) {
    if (state.size() == 0) return;
    if (state.archive.size() >= state.size()) {
        std::uniform_int_distribution<std::size_t> pick(0, state.archive.size() - 1);
        state.archive[pick(rng)] = std::move(parent);
    } else {
        state.archive.push_back(std::move(parent));
    }
}

RunResult run(const DeConfig& config, Objective& objective, long budget, std::uint64_t seed,
              const GenerationObserver& observer) {
    Rng rng(seed);
    EvaluationBudget eval(objective, budget);
    DeState state = init_state(config, objective.dim, objective.bounds, rng);

    for (std::size_t i = 0; i < state.size() && !eval.exhausted(); ++i) state.fitness[i] = eval(state.population[i]);

    std::vector<std::vector<double>> trials;
    std::vector<double> trial_f;
    std::vector<ControlSample> controls;
    std::vector<SuccessRecord> successes;
    while (!eval.exhausted()) {
        const std::size_t n = state.size();
        trials.clear();
        trial_f.clear();
        controls.clear();
        for (std::size_t i = 0; i < n && !eval.exhausted(); ++i) {
            const ControlSample cs = sample_control(state, config, i, rng);
            std::vector<double> donor = mutate(state, config, i, cs.F, rng);
            std::vector<double> trial = crossover(state.population[i], donor, cs.CR, config.crossover, rng);
            saturate(trial, objective.bounds);
            trial_f.push_back(eval(trial));
            trials.push_back(std::move(trial));
            controls.push_back(cs);
        }

        successes.clear();
        for (std::size_t i = 0; i < trials.size(); ++i) {
            if (!(trial_f[i] <= state.fitness[i])) continue;
            if (trial_f[i] < state.fitness[i]) {
                successes.push_back({i, controls[i].F, controls[i].CR, state.fitness[i] - trial_f[i]});
                if (config.archive) archive_insert(state, state.population[i], rng);
            }
            state.population[i] = std::move(trials[i]);
            state.fitness[i] = trial_f[i];
        }
        // jDE: resampled values persist only on success.
        adapt(state, config, successes);

        if (config.lpsr) {
            const int target =
                std::max(kMinLambda, lpsr_schedule(state.lambda_init, kMinLambda, eval.budget(), eval.used()));
            shrink_population(state, static_cast<std::size_t>(target), rng);
        }
        if (observer && trials.size() == n) observer(state);
    }
    return std::move(eval).finish(0);
}

}  // namespace xbench::modde
