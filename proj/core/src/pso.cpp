#include "lsw/pso.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "lsw/errors.hpp"
#include "lsw/format.hpp"

namespace lsw {

namespace {

enum Stream : std::uint64_t { kInitPosition = 0, kInitVelocity = 1, kCognitive = 2, kSocial = 3 };

/// Uniform [0, 1) doubles from a generator keyed by the draw's coordinates.
class KeyedUniform {
public:
    KeyedUniform(std::uint64_t seed, std::size_t particle, std::size_t iteration, Stream stream) {
        auto split = [](std::uint64_t v) {
            return std::pair{static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(v >> 32)};
        };
        const auto [s0, s1] = split(seed);
        const auto [p0, p1] = split(particle);
        const auto [i0, i1] = split(iteration);
        std::seed_seq seq{s0, s1, p0, p1, i0, i1, static_cast<std::uint32_t>(stream)};
        gen_.seed(seq);
    }

    double operator()() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 gen_;
};

void evaluate_all(const FitnessFn& fitness, const std::vector<std::vector<double>>& positions,
                  std::vector<double>& out, int workers, std::size_t iteration) {
    const std::size_t n = positions.size();
    std::vector<std::exception_ptr> errors(n);
    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                out[i] = fitness(positions[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, n);
    if (w == 1) {
        run_range(0, n);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(w);
        for (std::size_t t = 0; t < w; ++t) pool.emplace_back(run_range, t * n / w, (t + 1) * n / w);
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        if (!std::isfinite(out[i])) throw EvaluationError(i, iteration, out[i]);
    }
}

}  // namespace

void PsoConfig::set_uniform_bounds(double lo, double hi) {
    lower.assign(static_cast<std::size_t>(std::max(n_dims, 0)), lo);
    upper.assign(static_cast<std::size_t>(std::max(n_dims, 0)), hi);
}

void PsoConfig::validate() const {
    if (n_particles < 2) throw std::invalid_argument("PSO needs at least 2 particles");
    if (n_dims < 1) throw std::invalid_argument("PSO needs at least 1 dimension");
    if (max_iterations < 0) throw std::invalid_argument("PSO max_iterations must be non-negative");
    if (lower.size() != static_cast<std::size_t>(n_dims) || upper.size() != static_cast<std::size_t>(n_dims))
        throw std::invalid_argument("PSO bounds must have n_dims entries");
    for (std::size_t d = 0; d < lower.size(); ++d)
        if (!(lower[d] < upper[d])) throw std::invalid_argument("PSO bounds need lo < hi in every dimension");
    if (!(v_max > 0.0)) throw std::invalid_argument("PSO v_max must be positive");
    if (!(init_spread >= 0.0)) throw std::invalid_argument("PSO init_spread must be non-negative");
    if (patience < 1) throw std::invalid_argument("PSO patience must be at least 1");
}

PsoResult pso_optimize(const FitnessFn& fitness, const PsoConfig& cfg,
                       std::span<const std::vector<double>> seed_positions, int workers) {
    cfg.validate();
    const auto np = static_cast<std::size_t>(cfg.n_particles);
    const auto nd = static_cast<std::size_t>(cfg.n_dims);
    for (const auto& s : seed_positions)
        if (s.size() != nd) throw std::invalid_argument("PSO seed position has the wrong dimension");

    std::vector<std::vector<double>> x(np, std::vector<double>(nd));
    std::vector<std::vector<double>> v(np, std::vector<double>(nd));
    const std::size_t seeded = seed_positions.empty() ? 0 : np / 2;
    for (std::size_t p = 0; p < np; ++p) {
        KeyedUniform rx(cfg.seed, p, 0, kInitPosition);
        KeyedUniform rv(cfg.seed, p, 0, kInitVelocity);
        for (std::size_t d = 0; d < nd; ++d) {
            const double range = cfg.upper[d] - cfg.lower[d];
            const double r = rx();
            if (p < seeded) {
                const double base = seed_positions[p % seed_positions.size()][d];
                const double jitter = p == 0 ? 0.0 : (2.0 * r - 1.0) * cfg.init_spread * range;
                x[p][d] = std::clamp(base + jitter, cfg.lower[d], cfg.upper[d]);
            } else {
                x[p][d] = cfg.lower[d] + r * range;
            }
            v[p][d] = (2.0 * rv() - 1.0) * 0.5 * std::min(cfg.v_max, range);
        }
    }

    std::vector<double> f(np);
    evaluate_all(fitness, x, f, workers, 0);
    std::vector<std::vector<double>> pbest = x;
    std::vector<double> pbest_f = f;
    std::size_t g = 0;
    for (std::size_t p = 1; p < np; ++p)
        if (pbest_f[p] < pbest_f[g]) g = p;
    std::vector<double> gbest = pbest[g];
    double gbest_f = pbest_f[g];

    PsoResult res;
    res.evaluations = static_cast<std::int64_t>(np);
    res.fitness_history.push_back(gbest_f);

    int stall = 0;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        const auto iter = static_cast<std::size_t>(it);
        for (std::size_t p = 0; p < np; ++p) {
            KeyedUniform r1(cfg.seed, p, iter, kCognitive);
            KeyedUniform r2(cfg.seed, p, iter, kSocial);
            for (std::size_t d = 0; d < nd; ++d) {
                double vel = cfg.inertia_w * v[p][d] + cfg.cognitive_c1 * r1() * (pbest[p][d] - x[p][d]) +
                             cfg.social_c2 * r2() * (gbest[d] - x[p][d]);
                vel = std::clamp(vel, -cfg.v_max, cfg.v_max);
                v[p][d] = vel;
                x[p][d] = std::clamp(x[p][d] + vel, cfg.lower[d], cfg.upper[d]);
            }
        }
        evaluate_all(fitness, x, f, workers, iter);
        res.evaluations += static_cast<std::int64_t>(np);
        for (std::size_t p = 0; p < np; ++p) {
            if (f[p] < pbest_f[p]) {
                pbest_f[p] = f[p];
                pbest[p] = x[p];
            }
        }
        std::size_t best = np;
        double best_f = gbest_f;
        for (std::size_t p = 0; p < np; ++p) {
            if (pbest_f[p] < best_f) {
                best_f = pbest_f[p];
                best = p;
            }
        }
        const double gain = gbest_f - best_f;
        if (best != np) {
            gbest = pbest[best];
            gbest_f = best_f;
        }
        stall = gain > 1e-12 ? 0 : stall + 1;
        res.fitness_history.push_back(gbest_f);
        res.iterations = it;
        if (stall >= cfg.patience) {
            res.stagnated = true;
            break;
        }
    }
    res.best_position = std::move(gbest);
    res.best_fitness = gbest_f;
    return res;
}

nlohmann::json pso_result_to_json(const PsoResult& r, bool include_position) {
    nlohmann::json j{{"best_fitness", r.best_fitness},
                     {"iterations", r.iterations},
                     {"evaluations", r.evaluations},
                     {"stagnated", r.stagnated},
                     {"fitness_history", r.fitness_history}};
    if (include_position) j["best_position"] = r.best_position;
    return j;
}

void write_convergence_csv(std::ostream& os, const PsoResult& r) {
    os << "iteration,best_fitness\n";
    for (std::size_t i = 0; i < r.fitness_history.size(); ++i)
        os << i << ',' << format_number(r.fitness_history[i]) << '\n';
}

}  // namespace lsw
