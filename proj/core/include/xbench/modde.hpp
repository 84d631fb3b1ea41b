#pragma once

#include "xbench/common.hpp"
#include "xbench/configspace.hpp"
#include "xbench/optimizer.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

/// Modular differential evolution.
///
/// Donor vectors follow one composition rule covering the base/reference/difference
/// modules:
///     v = x_base + F (x_ref - x_base) [ref != none] + sum_k F (x_r_k - x_s_k)
/// which gives DE/rand/1, DE/best/1, DE/current-to-pbest/1 and friends as special
/// cases. Boundary handling is saturation to the box.
namespace xbench::modde {

enum class Base { Best, Rand, Target };
enum class Ref { None, Best, PBest, Rand };
enum class Crossover { Bin, Exp };
enum class Adaptation { None, JDE, Shade };

struct DeConfig {
    Base base = Base::Rand;
    Ref ref = Ref::None;
    int diffs = 1;
    bool archive = false;
    Crossover crossover = Crossover::Bin;
    Adaptation adaptation = Adaptation::None;
    bool lpsr = false;
    int lambda = 8;
    double F = 0.5;
    double CR = 0.5;
};

DeConfig from_configuration(const Configuration& config, const ConfigurationSpace& space);

inline constexpr int kMinLambda = 4;
inline constexpr double kPBestFraction = 0.1;
inline constexpr double kJdeTau = 0.1;

struct DeState {
    int dim = 0;
    suite::Bounds bounds;
    std::vector<std::vector<double>> population;
    std::vector<double> fitness;
    std::vector<std::vector<double>> archive;
    // jDE: per-individual control parameters.
    std::vector<double> F_i;
    std::vector<double> CR_i;
    // SHADE: success-history memories and write position.
    std::vector<double> memory_F;
    std::vector<double> memory_CR;
    std::size_t memory_pos = 0;
    int lambda_init = 0;

    [[nodiscard]] std::size_t size() const { return population.size(); }
    [[nodiscard]] std::size_t best_index() const;
};

/// SHADE memory length: max(5, 6 d).
std::size_t shade_memory_size(int dim);

/// Fresh state: population uniform in the box (not yet evaluated; fitness = +inf)
/// and adaptation memories seeded from the configured F and CR.
DeState init_state(const DeConfig& config, int dim, const suite::Bounds& bounds, Rng& rng);

/// Indices used for one donor; archive members are numbered size()+j.
struct MutationTrace {
    std::size_t base = 0;
    std::optional<std::size_t> ref;
    std::vector<std::size_t> plus;   // r_k
    std::vector<std::size_t> minus;  // s_k
};

std::vector<double> mutate(const DeState& state, const DeConfig& config, std::size_t target, double F, Rng& rng,
                           MutationTrace* trace = nullptr);

std::vector<double> crossover(std::span<const double> target, std::span<const double> donor, double CR, Crossover kind,
                              Rng& rng);

struct ControlSample {
    double F = 0.0;
    double CR = 0.0;
    bool resampled_F = false;
    bool resampled_CR = false;
};

/// F and CR for one trial: configured values (none), jDE resampling, or a draw
/// from a random SHADE memory slot.
ControlSample sample_control(const DeState& state, const DeConfig& config, std::size_t target, Rng& rng);

struct SuccessRecord {
    std::size_t index = 0;
    double F = 0.0;
    double CR = 0.0;
    double improvement = 0.0;  // parent fitness - trial fitness, > 0
};

/// jDE keeps successful F/CR per individual; SHADE writes the weighted Lehmer mean
/// of F and weighted mean of CR into the next memory slot. No successes, no change.
void adapt(DeState& state, const DeConfig& config, std::span<const SuccessRecord> successes);

/// round(lambda_init + (lambda_min - lambda_init) * evals / budget)
int lpsr_schedule(int lambda_init, int lambda_min, long budget, long evals);

/// Keeps the `new_size` best individuals (and their jDE parameters); trims the archive.
void shrink_population(DeState& state, std::size_t new_size, Rng& rng);

/// Adds a replaced parent, evicting a random entry once the archive holds size() points.
void archive_insert(DeState& state, std::vector<double> parent, Rng& rng);

/// Called after every completed generation (selection, adaptation and LPSR applied).
using GenerationObserver = std::function<void(const DeState&)>;

/// Budget-exact run; trajectory length equals `budget`.
RunResult run(const DeConfig& config, Objective& objective, long budget, std::uint64_t seed,
              const GenerationObserver& observer = {});

}  // namespace xbench::modde
