#include <benchmark/benchmark.h>

#include "lsw/preemph.hpp"
#include "lsw/pso.hpp"
#include "lsw/soa_optimizer.hpp"
#include "lsw/system.hpp"

namespace {

// One gate-drive fitness evaluation: generator chain, carrier ODE, MSE.
void BM_SoaFitness(benchmark::State& state) {
    const lsw::SoaGateProblem problem(lsw::SoaParams{}, lsw::AwgModel::soa_gate_default(), {});
    const auto drive = problem.square_drive();
    for (auto _ : state) benchmark::DoNotOptimize(problem.fitness(drive));
}
BENCHMARK(BM_SoaFitness);

void BM_PsoIterationSphere(benchmark::State& state) {
    lsw::PsoConfig cfg;
    cfg.n_particles = 160;
    cfg.n_dims = 240;
    cfg.max_iterations = 1;
    cfg.set_uniform_bounds(-1.0, 1.0);
    cfg.v_max = 0.2;
    const lsw::FitnessFn sphere = [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
    };
    for (auto _ : state) benchmark::DoNotOptimize(lsw::pso_optimize(sphere, cfg).best_fitness);
}
BENCHMARK(BM_PsoIterationSphere);

void BM_WorstCaseSwitchEvent(benchmark::State& state) {
    const auto laser = lsw::DsdbrParams::default_params();
    const auto event = lsw::make_switch_event(0, laser.plan.count - 1, laser);
    const lsw::RegressionConfig cfg;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            lsw::optimize_preemphasis(event, laser, cfg, lsw::AwgModel::laser_default()).iterations_used);
}
BENCHMARK(BM_WorstCaseSwitchEvent);

void BM_TransmitterSimulation(benchmark::State& state) {
    const lsw::DeviceSet devices;
    const auto assignment = lsw::SlotAssignment::alternating({0, 115, 121, 6});
    lsw::RegressionConfig rc;
    rc.deadline_s = 15e-9;
    const auto table =
        lsw::optimize_assignment_preemphasis(assignment, devices.laser, rc, lsw::AwgModel::laser_default());
    const lsw::SoaGateProblem problem(devices.soa, lsw::AwgModel::soa_gate_default(), {});
    const auto drive = problem.drive_waveform(problem.square_drive());
    for (auto _ : state) {
        auto r = lsw::simulate_transmitter(assignment, lsw::transmitter_devices(devices), lsw::build_schedule(),
                                           lsw::AwgModel::laser_default(), lsw::AwgModel::soa_gate_default(), table,
                                           drive);
        benchmark::DoNotOptimize(r.extinction_db);
    }
}
BENCHMARK(BM_TransmitterSimulation)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
