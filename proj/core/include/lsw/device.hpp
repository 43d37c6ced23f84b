#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lsw/signal.hpp"

namespace lsw {

// ---------------------------------------------------------------------------
// SOA gate
// ---------------------------------------------------------------------------

/// Semiconductor optical amplifier used as an on/off gate.
///
/// The carrier population is reduced to a dimensionless proxy x(t) that obeys
/// a driven second-order linear system
///
///     x'' + 2 zeta wn x' + wn^2 x = wn^2 u(t),
///     u = (I - I_transparency) / (I_bias - I_transparency),
///
/// so x = 1 at bias. Gain rises from the off-state absorption towards the
/// small-signal gain as 1 - exp(-gain_knee * x), and the output is compressed
/// pointwise by gain saturation. noise_figure_db is carried but not simulated.
struct SoaParams {
    double small_signal_gain_db = 20.0;
    double saturation_power_dbm = 10.0;  ///< +inf disables saturation
    double noise_figure_db = 7.0;
    double bias_current_ma = 45.0;
    double transparency_current_ma = 10.0;
    double natural_freq_hz = 220e6;
    double damping_ratio = 0.4;
    double off_attenuation_db = 25.0;
    double gain_knee = 1.0;

    void validate() const;
};

/// Carrier proxy x(t) for a drive current waveform (units mA). RK4 (sub-stepped for stiff
/// parameters) with the drive held over each sample; starts at rest at
/// the first sample's steady state.
SampledWaveform soa_carrier(const SampledWaveform& drive, const SoaParams& p);

/// Small-signal gain (linear) for a carrier proxy value.
double soa_gain_linear(double carrier, const SoaParams& p) noexcept;

/// Output power solving P = Pin * G / (1 + P / Psat).
double soa_saturated_output_mw(double input_mw, double gain_linear, double saturation_mw) noexcept;

/// Optical output power (mW) for a drive current (mA) and constant input power.
SampledWaveform soa_response(const SampledWaveform& drive, const SoaParams& p, double input_power_mw);

/// As above with a time-varying input power (mW) on the drive's time grid.
SampledWaveform soa_response(const SampledWaveform& drive, const SoaParams& p,
                             const SampledWaveform& input_power);

/// Steady-state output for a constant drive current.
double soa_steady_output_mw(double drive_ma, const SoaParams& p, double input_power_mw);

// ---------------------------------------------------------------------------
// DS-DBR tunable laser
// ---------------------------------------------------------------------------

struct LagTerm {
    double weight = 1.0;
    double tau_s = 1e-9;
};

/// One tuning section. The frequency contribution is sensitivity times the
/// weighted sum of first-order lags of the section current. The
/// preemphasis_* fields give the overshoot shape the regression optimizer
/// starts from.
struct LaserSection {
    std::string name;
    double sensitivity_ghz_per_ma = 1.0;
    std::vector<LagTerm> lags;
    double preemphasis_duration_s = 4e-9;
    std::optional<double> preemphasis_decay_tau_s;
};

struct ChannelSetting {
    std::map<std::string, double> currents_ma;
    double power_offset_db = 0.0;
};

struct ChannelPlan {
    double first_frequency_ghz = 190650.0;
    double spacing_ghz = 50.0;
    int count = 122;

    void validate() const;
    double span_ghz() const noexcept { return (count - 1) * spacing_ghz; }
};

std::vector<double> channel_frequencies(const ChannelPlan& plan);
double frequency_ghz_to_wavelength_nm(double f_ghz) noexcept;

/// Parametric DS-DBR model. Frequencies are reported as offsets from the
/// target channel; the lag model describes the residual transient left after
/// the cavity has hopped to the new supermode.
struct DsdbrParams {
    std::vector<LaserSection> sections;
    std::map<int, ChannelSetting> channel_table;
    double max_current_ma = 80.0;
    ChannelPlan plan;
    double output_power_mw = 0.1;         ///< optical power launched into the gate
    double reconfig_dip_fraction = 0.5;   ///< intensity dip right after a retune
    double reconfig_dip_tau_s = 3e-9;

    void validate() const;
    const LaserSection& section(const std::string& name) const;
    const ChannelSetting& channel(int index) const;

    /// Rear/front sections with a linear channel table spanning [5, 50] mA,
    /// so the extreme channels differ by a 45 mA rear swing.
    static DsdbrParams default_params();
};

/// Linear channel table: each named section goes from `first` to `last`
/// current across the plan. Adds a small deterministic per-channel power
/// ripple of the given amplitude.
std::map<int, ChannelSetting> linear_channel_table(
    const ChannelPlan& plan, const std::map<std::string, std::pair<double, double>>& ranges,
    double power_ripple_db);

/// Weighted sum of first-order lags of `x` (exact zero-order-hold
/// discretization, steady state at the first sample).
SampledWaveform lag_filter(const SampledWaveform& x, const std::vector<LagTerm>& lags);

/// Instantaneous frequency offset (GHz) from `target_channel`. Sections not
/// present in `section_drives` are taken to sit at their target current.
SampledWaveform dsdbr_frequency_response(const std::map<std::string, SampledWaveform>& section_drives,
                                         const DsdbrParams& p, int target_channel);

/// Offset against a time-varying reference current per section (the table
/// currents of whatever channel is currently targeted).
SampledWaveform dsdbr_frequency_offset(const std::map<std::string, SampledWaveform>& section_drives,
                                       const DsdbrParams& p,
                                       const std::map<std::string, SampledWaveform>& reference_currents);

struct SectionSwing {
    double from_ma = 0.0;
    double to_ma = 0.0;
    double swing() const noexcept { return to_ma - from_ma; }
};

/// Per-section currents for a channel change. Throws NotFoundError when a
/// channel is missing from the table.
std::map<std::string, SectionSwing> switch_event_currents(int from_channel, int to_channel,
                                                          const DsdbrParams& p);

// ---------------------------------------------------------------------------
// Device parameter documents (JSON). Unknown fields are rejected.
// ---------------------------------------------------------------------------

struct DeviceSet {
    SoaParams soa;
    DsdbrParams laser = DsdbrParams::default_params();
};

DeviceSet device_set_from_json(const nlohmann::json& j);
nlohmann::json device_set_to_json(const DeviceSet& d);
DeviceSet load_device_set(const std::string& path);

}  // namespace lsw
