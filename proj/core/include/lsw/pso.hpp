#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace lsw {

/// Global-best particle swarm settings. Bounds are given per dimension.
struct PsoConfig {
    int n_particles = 160;
    int n_dims = 240;
    double inertia_w = 0.729;
    double cognitive_c1 = 1.49445;
    double social_c2 = 1.49445;
    int max_iterations = 500;
    std::vector<double> lower;
    std::vector<double> upper;
    double v_max = 1.0;
    std::uint64_t seed = 1;
    /// Perturbation half-width for seeded particles, as a fraction of each
    /// dimension's range.
    double init_spread = 0.05;
    /// Stop after this many iterations without a global-best gain > 1e-12.
    int patience = 50;

    /// Fills lower/upper with the same interval in every dimension.
    void set_uniform_bounds(double lo, double hi);
    void validate() const;
};

struct PsoResult {
    std::vector<double> best_position;
    double best_fitness = 0.0;
    /// Global best after initialisation (entry 0) and after every iteration.
    std::vector<double> fitness_history;
    std::int64_t evaluations = 0;
    int iterations = 0;
    bool stagnated = false;
};

using FitnessFn = std::function<double(std::span<const double>)>;

/// Synchronous global-best PSO. Random draws are keyed by
/// (seed, particle, iteration, stream), so results do not depend on `workers`.
/// When `seed_positions` is non-empty the first half of the swarm starts at
/// those positions (cycled), perturbed by init_spread; particle 0 keeps its
/// seed exactly. The rest start uniformly in bounds.
/// Throws EvaluationError when the fitness returns a non-finite value.
PsoResult pso_optimize(const FitnessFn& fitness, const PsoConfig& cfg,
                       std::span<const std::vector<double>> seed_positions = {}, int workers = 1);

nlohmann::json pso_result_to_json(const PsoResult& r, bool include_position);
/// CSV with columns iteration,best_fitness.
void write_convergence_csv(std::ostream& os, const PsoResult& r);

}  // namespace lsw
