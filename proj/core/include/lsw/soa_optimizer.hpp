#pragma once

#include <vector>

#include "lsw/device.hpp"
#include "lsw/metrics.hpp"
#include "lsw/pso.hpp"
#include "lsw/signal.hpp"

namespace lsw {

/// Gate-drive optimisation problem. One gate period is open for its first
/// half and closed for the second; particles encode one drive current per
/// sample of that period at drive_rate_hz.
struct SoaDriveConfig {
    double slot_s = 20e-9;            ///< gate period is two slots
    double drive_rate_hz = 6e9;
    double input_power_mw = 0.1;
    double sim_rate_hz = 50e9;
    double on_current_ma = 45.0;      ///< square baseline levels
    double off_current_ma = 0.0;

    double gate_period_s() const noexcept { return 2.0 * slot_s; }
    int samples_per_period() const;
    void validate() const;
};

/// Simulated response of one drive over a gate period.
struct SoaDriveEvaluation {
    SampledWaveform output;    ///< optical power over the scored period (mW)
    SampledWaveform rise_view; ///< window around the rising edge used for metrics
    SwitchMetrics metrics;
};

/// Plant and set point shared by fitness evaluations.
class SoaGateProblem {
public:
    SoaGateProblem(const SoaParams& soa, const AwgModel& awg, const SoaDriveConfig& cfg);

    /// Square drive at the configured on/off currents.
    std::vector<double> square_drive() const;
    SampledWaveform drive_waveform(std::span<const double> samples) const;

    /// Optical output over one gate period, simulated after half a period of
    /// the drive's own closed state so the gate starts from its off level.
    SampledWaveform simulate(std::span<const double> samples) const;
    double fitness(std::span<const double> samples) const;
    SoaDriveEvaluation evaluate(std::span<const double> samples) const;

    const SampledWaveform& set_point() const noexcept { return set_point_; }
    double on_level_mw() const noexcept { return on_level_; }
    double off_level_mw() const noexcept { return off_level_; }
    const SoaDriveConfig& config() const noexcept { return cfg_; }

private:
    SampledWaveform simulate_with_lead(std::span<const double> samples) const;
    double steady_output(double drive_ma) const;

    SoaParams soa_;
    AwgModel awg_;
    SoaDriveConfig cfg_;
    int n_;
    double on_level_ = 0.0;
    double off_level_ = 0.0;
    SampledWaveform set_point_;
};

struct SoaOptimization {
    SampledWaveform drive;           ///< optimised drive at drive_rate_hz (mA)
    SampledWaveform baseline_drive;  ///< square drive
    SoaDriveEvaluation optimized;
    SoaDriveEvaluation baseline;
    PsoResult pso;
    /// True when the swarm's best drive settled more slowly than the square
    /// drive, in which case `drive` and `optimized` are the square baseline.
    bool square_fallback = false;
};

/// Optimises the gate drive with PSO against the ideal square set point.
/// The returned drive never settles later than the square drive.
/// Empty bounds in `pso` default to the AWG amplitude range. Throws
/// std::invalid_argument when pso.n_dims does not match one gate period.
SoaOptimization optimize_soa_drive(const SoaParams& soa, const AwgModel& awg, PsoConfig pso,
                                   const SoaDriveConfig& cfg = {}, int workers = 1);

}  // namespace lsw
