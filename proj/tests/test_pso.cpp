#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lsw/errors.hpp"
#include "lsw/pso.hpp"

using lsw::PsoConfig;
using lsw::PsoResult;

namespace {

PsoConfig bowl_config(std::uint64_t seed, int iterations = 200, int dims = 2) {
    PsoConfig c;
    c.n_particles = 40;
    c.n_dims = dims;
    c.max_iterations = iterations;
    c.set_uniform_bounds(-5.0, 5.0);
    c.v_max = 2.0;
    c.seed = seed;
    c.patience = std::max(iterations, 1);
    return c;
}

double bowl(std::span<const double> x) {
    const double dx = x[0] - 1.25, dy = x[1] + 0.5;
    return dx * dx + dy * dy;
}

double rastrigin(std::span<const double> x) {
    double s = 10.0 * static_cast<double>(x.size());
    for (double v : x) s += v * v - 10.0 * std::cos(2 * 3.141592653589793 * v);
    return s;
}

void expect_identical(const PsoResult& a, const PsoResult& b) {
    EXPECT_EQ(a.best_position, b.best_position);
    EXPECT_EQ(a.best_fitness, b.best_fitness);
    EXPECT_EQ(a.fitness_history, b.fitness_history);
    EXPECT_EQ(a.evaluations, b.evaluations);
    EXPECT_EQ(a.iterations, b.iterations);
}

}  // namespace

TEST(Pso, ConvexBowlConverges) {
    const auto r = lsw::pso_optimize(bowl, bowl_config(1));
    EXPECT_LT(r.best_fitness, 1e-6);
    EXPECT_LE(r.iterations, 200);
    EXPECT_NEAR(r.best_position[0], 1.25, 1e-3);
    EXPECT_NEAR(r.best_position[1], -0.5, 1e-3);
}

TEST(Pso, HistoryNonIncreasingAndEndsAtBest) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        PsoConfig c = bowl_config(seed, 60, 6);
        c.set_uniform_bounds(-5.12, 5.12);
        const auto r = lsw::pso_optimize(rastrigin, c);
        ASSERT_EQ(r.fitness_history.size(), static_cast<std::size_t>(r.iterations) + 1);
        for (std::size_t i = 1; i < r.fitness_history.size(); ++i)
            ASSERT_LE(r.fitness_history[i], r.fitness_history[i - 1]) << seed << ' ' << i;
        EXPECT_EQ(r.best_fitness, r.fitness_history.back());
        EXPECT_DOUBLE_EQ(rastrigin(r.best_position), r.best_fitness);
    }
}

TEST(Pso, ConstantFitnessGivesFlatHistory) {
    PsoConfig c = bowl_config(3, 30);
    const auto r = lsw::pso_optimize([](std::span<const double>) { return 4.5; }, c);
    EXPECT_EQ(r.best_fitness, 4.5);
    for (double f : r.fitness_history) EXPECT_EQ(f, 4.5);
}

TEST(Pso, StagnationStopsAfterPatience) {
    PsoConfig c = bowl_config(3, 100);
    c.patience = 7;
    const auto r = lsw::pso_optimize([](std::span<const double>) { return 1.0; }, c);
    EXPECT_TRUE(r.stagnated);
    EXPECT_EQ(r.iterations, 7);
    EXPECT_EQ(r.evaluations, static_cast<std::int64_t>(c.n_particles) * 8);
}

TEST(Pso, TiesGoToLowestParticleIndex) {
    PsoConfig c = bowl_config(5, 10);
    const std::vector<std::vector<double>> seeds{{0.75, -2.0}};
    const auto r = lsw::pso_optimize([](std::span<const double>) { return 0.0; }, c, seeds);
    EXPECT_EQ(r.best_position, seeds[0]);
}

TEST(Pso, SeedParticleStartsExactlyAtSeed) {
    PsoConfig c = bowl_config(8, 0);
    const std::vector<std::vector<double>> seeds{{1.25, -0.5}};
    const auto r = lsw::pso_optimize(bowl, c, seeds);
    EXPECT_EQ(r.best_fitness, 0.0);
    EXPECT_EQ(r.best_position, seeds[0]);
    EXPECT_EQ(r.iterations, 0);
    EXPECT_EQ(r.fitness_history.size(), 1u);
    EXPECT_EQ(r.evaluations, c.n_particles);
}

TEST(Pso, SameSeedIsBitwiseIdentical) {
    const PsoConfig c = bowl_config(42, 80, 5);
    expect_identical(lsw::pso_optimize(rastrigin, c), lsw::pso_optimize(rastrigin, c));
}

TEST(Pso, DifferentSeedsDifferButStayMonotone) {
    const PsoConfig a = bowl_config(1, 40, 4), b = bowl_config(2, 40, 4);
    const auto ra = lsw::pso_optimize(rastrigin, a), rb = lsw::pso_optimize(rastrigin, b);
    EXPECT_NE(ra.best_position, rb.best_position);
}

TEST(Pso, SerialAndParallelAgree) {
    const PsoConfig c = bowl_config(17, 60, 8);
    const auto serial = lsw::pso_optimize(rastrigin, c, {}, 1);
    for (int workers : {2, 3, 8}) expect_identical(serial, lsw::pso_optimize(rastrigin, c, {}, workers));
}

TEST(Pso, EvaluatedPositionsStayInBounds) {
    PsoConfig c = bowl_config(9, 50, 3);
    c.lower = {-1.0, 0.0, 2.0};
    c.upper = {1.0, 0.5, 9.0};
    std::mutex mu;
    bool ok = true;
    const auto f = [&](std::span<const double> x) {
        std::lock_guard lock(mu);
        for (std::size_t d = 0; d < x.size(); ++d) ok = ok && x[d] >= c.lower[d] && x[d] <= c.upper[d];
        return (x[0] - 5) * (x[0] - 5) + x[1] + x[2];  // optimum pushes against the bounds
    };
    const auto r = lsw::pso_optimize(f, c, {}, 2);
    EXPECT_TRUE(ok);
    EXPECT_NEAR(r.best_position[0], 1.0, 1e-9);
}

TEST(Pso, NonFiniteFitnessReportsParticleAndIteration) {
    PsoConfig c = bowl_config(4, 10);
    std::atomic<int> calls{0};
    const auto f = [&](std::span<const double>) {
        return ++calls > c.n_particles * 3 + 5 ? std::nan("") : 1.0;
    };
    try {
        (void)lsw::pso_optimize(f, c);
        FAIL() << "expected EvaluationError";
    } catch (const lsw::EvaluationError& e) {
        EXPECT_EQ(e.iteration(), 3u);
        EXPECT_EQ(e.particle(), 5u);
    }
}

TEST(Pso, ConfigValidation) {
    PsoConfig c = bowl_config(1);
    c.n_particles = 1;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = bowl_config(1);
    c.lower = {0.0, 1.0};
    c.upper = {1.0, 1.0};
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = bowl_config(1);
    c.v_max = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = bowl_config(1);
    c.lower = {0.0};
    EXPECT_THROW(c.validate(), std::invalid_argument);
    EXPECT_THROW((void)lsw::pso_optimize(bowl, c), std::invalid_argument);
}

TEST(Pso, JsonAndConvergenceCsv) {
    const auto r = lsw::pso_optimize(bowl, bowl_config(1, 5));
    const auto j = lsw::pso_result_to_json(r, false);
    EXPECT_FALSE(j.contains("best_position"));
    EXPECT_TRUE(lsw::pso_result_to_json(r, true).contains("best_position"));
    EXPECT_EQ(j.at("evaluations").get<std::int64_t>(), r.evaluations);
    std::stringstream ss;
    lsw::write_convergence_csv(ss, r);
    std::string line;
    std::getline(ss, line);
    EXPECT_EQ(line, "iteration,best_fitness");
    int rows = 0;
    while (std::getline(ss, line)) ++rows;
    EXPECT_EQ(rows, r.iterations + 1);
}
