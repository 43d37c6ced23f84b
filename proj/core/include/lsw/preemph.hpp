#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lsw/device.hpp"
#include "lsw/metrics.hpp"
#include "lsw/signal.hpp"

namespace lsw {

/// Overshoot added to a section current right after it is switched. The
/// shape is rectangular, or exponentially decaying when decay_tau_s is set.
struct SectionPreemphasis {
    double overshoot_amplitude_ma = 0.0;
    double overshoot_duration_s = 0.0;
    std::optional<double> decay_tau_s;

    /// Overshoot value `dt` seconds after the switch.
    double value_at(double dt) const noexcept;
};

using PreemphasisParams = std::map<std::string, SectionPreemphasis>;

/// Zero-amplitude pre-emphasis using each section's default shape.
PreemphasisParams initial_preemphasis(const DsdbrParams& laser);

struct SwitchEvent {
    int from_channel = 0;
    int to_channel = 0;
    std::map<std::string, SectionSwing> currents;

    bool zero_swing() const noexcept;
};

/// Event between two channel-table entries. Throws NotFoundError.
SwitchEvent make_switch_event(int from_channel, int to_channel, const DsdbrParams& laser);

enum class RegressionBasis { amplitude_only, amplitude_and_duration };

struct RegressionConfig {
    int max_iterations = 20;
    double learning_rate = 1.0;
    /// Least-squares window, relative to the switch instant.
    double error_window_start_s = 8e-9;
    double error_window_end_s = 20e-9;
    double tol_ghz = 5.0;
    /// An event passes when it stays within tol_ghz from this time on.
    double deadline_s = 20e-9;
    RegressionBasis basis = RegressionBasis::amplitude_only;
    /// When false the error is averaged over one generator sample before
    /// fitting, which removes the generator's sample-rate ripple.
    bool include_awg_ripple = true;
    double sim_rate_hz = 10e9;
    double lead_s = 8e-9;    ///< time simulated at the old currents before the switch
    double burst_s = 40e-9;  ///< time simulated after the switch

    void validate() const;
};

/// One piece of a section drive: `level_ma` from `start_s` on, plus the
/// overshoot measured from `start_s`.
struct DriveSegment {
    double start_s = 0.0;
    double level_ma = 0.0;
    SectionPreemphasis overshoot;
};

/// Raw (pre-generator) drive built from time-ordered segments over
/// [t0, t0 + duration). Throws std::invalid_argument naming the section when
/// the current leaves [0, max_current_ma].
SampledWaveform piecewise_section_drive(std::span<const DriveSegment> segments, double t0_s, double duration_s,
                                        double rate_hz, double max_current_ma, const std::string& section);

/// Raw periodic square drive per section, before the generator model.
std::map<std::string, SampledWaveform> build_raw_drive_with_preemphasis(
    const SwitchEvent& event, const PreemphasisParams& pe, double period_s, const DsdbrParams& laser,
    double rate_hz, const std::optional<PreemphasisParams>& reverse = std::nullopt, int n_periods = 1);

/// Periodic square drive per section: the event's target current (with the
/// forward overshoot) for the first half period, then back to the source
/// current with the reverse overshoot. `reverse` defaults to the mirrored
/// forward amplitudes. The result has passed through the generator model and
/// is sampled at output_rate_hz.
std::map<std::string, SampledWaveform> build_drive_with_preemphasis(
    const SwitchEvent& event, const PreemphasisParams& pe, double period_s, const AwgModel& awg,
    const DsdbrParams& laser, double output_rate_hz, const std::optional<PreemphasisParams>& reverse = std::nullopt,
    int n_periods = 1);

/// Frequency offset from the event's target, on [-lead, burst) with t = 0 at
/// the switch.
SampledWaveform simulate_switch_event(const SwitchEvent& event, const PreemphasisParams& pe,
                                      const DsdbrParams& laser, const AwgModel& awg, const RegressionConfig& cfg);

/// Frequency response to a unit overshoot of `section` with shape `shape`
/// through the linear part of the generator and the section's lag model,
/// on the same grid as simulate_switch_event.
SampledWaveform preemphasis_basis_response(const std::string& section, const SectionPreemphasis& shape,
                                           const DsdbrParams& laser, const AwgModel& awg, const RegressionConfig& cfg);

/// One least-squares step: fits the windowed error against the per-section
/// basis responses and moves the parameters by learning_rate times the
/// solution. Amplitudes are clamped to the current headroom of the target
/// level; clamped parameters are held and the rest re-solved. Throws
/// DegenerateBasisError when the basis is rank deficient.
PreemphasisParams regression_update(const SampledWaveform& error_trace, const PreemphasisParams& pe,
                                    const SwitchEvent& event, const DsdbrParams& laser, const AwgModel& awg,
                                    const RegressionConfig& cfg);

struct PreemphasisResult {
    PreemphasisParams params;
    SwitchMetrics metrics;        ///< frequency fields of the returned parameters
    int iterations_used = 0;
    bool converged = false;
    SampledWaveform offset;       ///< frequency trace of the returned parameters
    SampledWaveform unoptimized;  ///< trace with the initial parameters
};

/// Iterates simulate -> measure -> regression_update until the event meets
/// the criterion or the budget is spent. Returns the best parameters seen
/// (by time to within tolerance, then |offset at the deadline|).
PreemphasisResult optimize_preemphasis(const SwitchEvent& event, const DsdbrParams& laser, const RegressionConfig& cfg,
                                       const AwgModel& awg, const std::optional<PreemphasisParams>& initial = std::nullopt);

struct MatrixEvent {
    int from_channel = 0;
    int to_channel = 0;
    std::optional<PreemphasisResult> result;  ///< absent when the event failed
    std::string error;
};

struct MatrixResult {
    std::vector<MatrixEvent> events;
    std::optional<Cdf> cdf;  ///< over time_to_within of the evaluated events
    double worst_time_s = 0.0;
    double worst_offset_ghz = 0.0;  ///< signed offset with the largest magnitude at 20 ns
    int converged = 0;
};

/// Optimises every ordered pair of distinct channels. Events are independent
/// and may run on `workers` threads; results do not depend on the count.
MatrixResult run_switch_matrix(const std::vector<int>& channels, const DsdbrParams& laser, const RegressionConfig& cfg,
                               const AwgModel& awg, int workers = 1);

/// Channels spread evenly over the plan, both extremes included.
std::vector<int> spread_channels(const ChannelPlan& plan, int count);

// Output files.
void write_matrix_csv(std::ostream& os, const MatrixResult& m);
nlohmann::json matrix_summary_json(const MatrixResult& m);

/// Optimised parameters keyed by (from, to) channel.
using PreemphasisTable = std::map<std::pair<int, int>, PreemphasisParams>;

nlohmann::json preemphasis_table_to_json(const PreemphasisTable& t);
PreemphasisTable preemphasis_table_from_json(const nlohmann::json& j);
/// Throws NotFoundError naming the event.
const PreemphasisParams& lookup_preemphasis(const PreemphasisTable& t, int from_channel, int to_channel);

nlohmann::json to_json(const RegressionConfig& c);
RegressionConfig regression_config_from_json(const nlohmann::json& j);

}  // namespace lsw
