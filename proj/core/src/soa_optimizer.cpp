#include "lsw/soa_optimizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lsw/errors.hpp"

namespace lsw {

int SoaDriveConfig::samples_per_period() const {
    return static_cast<int>(std::llround(gate_period_s() * drive_rate_hz));
}

void SoaDriveConfig::validate() const {
    if (!(slot_s > 0.0)) throw std::invalid_argument("slot duration must be positive");
    if (!(drive_rate_hz > 0.0) || !(sim_rate_hz > 0.0)) throw std::invalid_argument("rates must be positive");
    if (!(input_power_mw > 0.0)) throw std::invalid_argument("input power must be positive");
    const int n = samples_per_period();
    if (n < 4 || n % 2 != 0)
        throw std::invalid_argument("gate period must hold an even number (>= 4) of drive samples");
    if (std::abs(n / drive_rate_hz - gate_period_s()) > 1e-6 / drive_rate_hz)
        throw std::invalid_argument("gate period is not a whole number of drive samples");
}

SoaGateProblem::SoaGateProblem(const SoaParams& soa, const AwgModel& awg, const SoaDriveConfig& cfg)
    : soa_(soa), awg_(awg), cfg_(cfg), n_(0), set_point_({0.0}, 1.0, Units::mW) {
    soa_.validate();
    awg_.validate();
    cfg_.validate();
    n_ = cfg_.samples_per_period();
    on_level_ = steady_output(cfg_.on_current_ma);
    off_level_ = steady_output(cfg_.off_current_ma);

    const auto m = static_cast<std::size_t>(std::llround(cfg_.gate_period_s() * cfg_.sim_rate_hz));
    std::vector<double> sp(m, off_level_);
    for (std::size_t i = 0; i < m / 2; ++i) sp[i] = on_level_;
    set_point_ = SampledWaveform(std::move(sp), cfg_.sim_rate_hz, Units::mW);
}

double SoaGateProblem::steady_output(double drive_ma) const {
    // Constant drive through the same generator chain (clamping and quantisation).
    const SampledWaveform held(std::vector<double>(8, drive_ma), cfg_.drive_rate_hz, Units::mA);
    const double level = apply_awg(held, awg_).samples().back();
    return soa_steady_output_mw(level, soa_, cfg_.input_power_mw);
}

std::vector<double> SoaGateProblem::square_drive() const {
    std::vector<double> d(static_cast<std::size_t>(n_), cfg_.off_current_ma);
    for (int i = 0; i < n_ / 2; ++i) d[static_cast<std::size_t>(i)] = cfg_.on_current_ma;
    return d;
}

SampledWaveform SoaGateProblem::drive_waveform(std::span<const double> samples) const {
    if (samples.size() != static_cast<std::size_t>(n_))
        throw std::invalid_argument("drive has " + std::to_string(samples.size()) + " samples, expected " +
                                    std::to_string(n_));
    return SampledWaveform(std::vector<double>(samples.begin(), samples.end()), cfg_.drive_rate_hz, Units::mA);
}

SampledWaveform SoaGateProblem::simulate_with_lead(std::span<const double> samples) const {
    const auto half = static_cast<std::size_t>(n_ / 2);
    std::vector<double> seq;
    seq.reserve(half + samples.size());
    seq.insert(seq.end(), samples.begin() + static_cast<std::ptrdiff_t>(half), samples.end());
    seq.insert(seq.end(), samples.begin(), samples.end());
    const SampledWaveform drive(std::move(seq), cfg_.drive_rate_hz, Units::mA, -0.5 * cfg_.gate_period_s());
    const SampledWaveform current = apply_awg(drive, awg_, cfg_.sim_rate_hz);
    return soa_response(current, soa_, cfg_.input_power_mw);
}

SampledWaveform SoaGateProblem::simulate(std::span<const double> samples) const {
    if (samples.size() != static_cast<std::size_t>(n_))
        throw std::invalid_argument("drive has the wrong number of samples for one gate period");
    const SampledWaveform full = simulate_with_lead(samples);
    const std::size_t lead = full.size() - set_point_.size();
    return SampledWaveform(std::vector<double>(full.values().begin() + static_cast<std::ptrdiff_t>(lead),
                                               full.values().end()),
                           full.sample_rate_hz(), Units::mW, 0.0);
}

double SoaGateProblem::fitness(std::span<const double> samples) const {
    return mse_fitness(simulate(samples), set_point_);
}

SoaDriveEvaluation SoaGateProblem::evaluate(std::span<const double> samples) const {
    const SampledWaveform full = simulate_with_lead(samples);
    const std::size_t lead = full.size() - set_point_.size();
    SampledWaveform period(std::vector<double>(full.values().begin() + static_cast<std::ptrdiff_t>(lead),
                                               full.values().end()),
                           full.sample_rate_hz(), Units::mW, 0.0);

    const double slot = cfg_.slot_s;
    // Rising edge at t = 0, viewed over half a slot either side so the shaping
    // that anticipates the closing edge stays out of the edge metrics.
    SampledWaveform view = full.slice(-0.5 * slot, 0.5 * slot);
    SwitchMetrics m;
    try {
        m.rise_10_90_s = rise_time_10_90(view, 0.0);
        m.overshoot_fraction = overshoot_fraction(view, 0.0);
    } catch (const NoTransitionError&) {
    }
    const double settle = settling_time(view, on_level_, 0.05, 0.0);
    if (std::isfinite(settle)) m.settle_pm5pct_s = settle;
    const auto on = period.slice(0.5 * slot, slot);
    const auto off = period.slice(1.5 * slot, 2.0 * slot);
    if (off.samples().front() > 0.0) m.extinction_db = extinction_ratio_db(on, off, 0.0);
    return SoaDriveEvaluation{std::move(period), std::move(view), m};
}

SoaOptimization optimize_soa_drive(const SoaParams& soa, const AwgModel& awg, PsoConfig pso,
                                   const SoaDriveConfig& cfg, int workers) {
    const SoaGateProblem problem(soa, awg, cfg);
    if (pso.n_dims != cfg.samples_per_period())
        throw std::invalid_argument("PSO n_dims (" + std::to_string(pso.n_dims) +
                                    ") must equal the drive samples per gate period (" +
                                    std::to_string(cfg.samples_per_period()) + ")");
    if (pso.lower.empty() && pso.upper.empty()) pso.set_uniform_bounds(awg.amplitude_min, awg.amplitude_max);

    const std::vector<std::vector<double>> seeds{problem.square_drive()};
    PsoResult res = pso_optimize([&](std::span<const double> x) { return problem.fitness(x); }, pso, seeds,
                                 workers);
    SoaOptimization out{problem.drive_waveform(res.best_position),
                        problem.drive_waveform(seeds.front()),
                        problem.evaluate(res.best_position),
                        problem.evaluate(seeds.front()),
                        std::move(res)};
    const auto settle = [](const SoaDriveEvaluation& e) {
        return e.metrics.settle_pm5pct_s.value_or(std::numeric_limits<double>::infinity());
    };
    if (settle(out.optimized) > settle(out.baseline)) {
        out.drive = out.baseline_drive;
        out.optimized = out.baseline;
        out.square_fallback = true;
    }
    return out;
}

}  // namespace lsw
