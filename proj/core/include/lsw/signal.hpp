#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace lsw {

enum class Units { mA, V, mW, GHz, dimensionless };

std::string_view to_string(Units u);
/// Throws std::invalid_argument for an unknown tag.
Units units_from_string(std::string_view s);

/// Uniformly sampled real-valued signal. Immutable once built.
///
/// Sample i sits at start_time_s + i / sample_rate_hz and represents the
/// interval up to the next sample (zero-order-hold semantics), so
/// duration == size() / sample_rate_hz.
class SampledWaveform {
public:
    /// Throws std::invalid_argument on empty samples, non-positive rate or
    /// non-finite values.
    SampledWaveform(std::vector<double> samples, double sample_rate_hz, Units units,
                    double start_time_s = 0.0);

    std::span<const double> samples() const noexcept { return samples_; }
    const std::vector<double>& values() const noexcept { return samples_; }
    double sample_rate_hz() const noexcept { return rate_; }
    double start_time_s() const noexcept { return start_; }
    Units units() const noexcept { return units_; }

    std::size_t size() const noexcept { return samples_.size(); }
    double dt() const noexcept { return 1.0 / rate_; }
    double duration_s() const noexcept { return static_cast<double>(samples_.size()) / rate_; }
    double end_time_s() const noexcept { return start_ + duration_s(); }
    double time_at(std::size_t i) const noexcept { return start_ + static_cast<double>(i) / rate_; }
    double operator[](std::size_t i) const noexcept { return samples_[i]; }

    /// Linear interpolation between sample instants, clamped at both ends.
    double value_at(double t) const noexcept;

    /// Index of the first sample at or after t (clamped to [0, size()]).
    std::size_t index_at_or_after(double t) const noexcept;

    /// Samples whose time lies in [t0, t1). Throws if the range selects nothing.
    SampledWaveform slice(double t0, double t1) const;

    /// New waveform with the same timing and units but different values.
    SampledWaveform with_values(std::vector<double> values) const;
    SampledWaveform with_start(double start_time_s) const;
    SampledWaveform with_units(Units units) const;

private:
    std::vector<double> samples_;
    double rate_;
    Units units_;
    double start_;
};

/// Arbitrary waveform generator channel: clamp, quantize, sample-and-hold,
/// then a single-pole analog low-pass.
struct AwgModel {
    double sample_rate_hz = 12e9;
    double analog_bandwidth_hz = 3e9;
    double amplitude_min = 0.0;
    double amplitude_max = 1.0;
    std::optional<int> quantization_bits;
    Units units = Units::dimensionless;

    /// Throws std::invalid_argument when the invariants do not hold.
    void validate() const;

    /// The 12 GS/s SOA gate generator, expressed in drive current after the
    /// amplifier and bias tee.
    static AwgModel soa_gate_default();
    /// The 250 MS/s / 125 MHz laser section generator.
    static AwgModel laser_default();
};

struct SquareWaveSpec {
    double period_s = 80e-9;
    double high = 1.0;
    double low = 0.0;
    double duty = 0.5;
    double phase_s = 0.0;
    int n_periods = 1;
};

/// Periodic square wave: `high` on [phase, phase + duty * period) modulo the
/// period, `low` elsewhere.
SampledWaveform synthesize_square(const SquareWaveSpec& spec, double sample_rate_hz, Units units);

/// Zero-order-hold upsampling, area-weighted (boxcar) averaging downsampling.
SampledWaveform resample(const SampledWaveform& w, double new_rate_hz);

/// Exact step-invariant discretization of a unity-DC-gain single-pole
/// low-pass. The filter starts in steady state at the first sample.
SampledWaveform lowpass_first_order(const SampledWaveform& w, double corner_hz);

/// Mid-rise uniform quantizer over [lo, hi] with 2^bits levels.
double quantize_mid_rise(double x, double lo, double hi, int bits) noexcept;

/// Clamp, quantize, resample to the AWG clock, low-pass at the AWG clock.
SampledWaveform apply_awg(const SampledWaveform& w, const AwgModel& awg);

/// Same chain, but the analog filter runs at `output_rate_hz` after the DAC
/// samples are held on that finer grid. Used to feed simulations.
SampledWaveform apply_awg(const SampledWaveform& w, const AwgModel& awg, double output_rate_hz);

/// Concatenate waveforms that share rate and units; timing follows `parts[0]`.
SampledWaveform concatenate(std::span<const SampledWaveform> parts);

/// Repeat a waveform `count` times end to end.
SampledWaveform tile(const SampledWaveform& w, int count);

double mean(std::span<const double> xs);
double median(std::span<const double> xs);

// Serialization: CSV (time_s,value) and a JSON envelope.
void write_waveform_csv(std::ostream& os, const SampledWaveform& w);
SampledWaveform read_waveform_csv(std::istream& is, Units units);
nlohmann::json waveform_to_json(const SampledWaveform& w);
SampledWaveform waveform_from_json(const nlohmann::json& j);

}  // namespace lsw
