#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lsw/signal.hpp"

namespace lsw {

/// Switching figures of merit for one event or slot. Absent fields were not
/// measured or are undefined (e.g. a trace that never settles).
struct SwitchMetrics {
    std::optional<double> rise_10_90_s;
    std::optional<double> settle_pm5pct_s;
    std::optional<double> transition_90_90_s;
    std::optional<double> freq_offset_at_deadline_ghz;
    std::optional<double> time_to_within_5ghz_s;
    std::optional<double> overshoot_fraction;
    std::optional<double> extinction_db;
};

nlohmann::json to_json(const SwitchMetrics& m);
/// Column names matching metrics_csv_row (times in ns).
std::string metrics_csv_header();
std::string metrics_csv_row(const SwitchMetrics& m);

/// How steady levels and sustained crossings are detected.
struct LevelOptions {
    double head_fraction = 0.1;   ///< pre-event level = median of this leading share
    double tail_fraction = 0.1;   ///< post-event level = median of this trailing share
    double min_change = 1e-9;     ///< level change below this (relative) is no transition
    int sustain_samples = 3;
};

struct Levels {
    double before;
    double after;
};

Levels steady_levels(const SampledWaveform& w, const LevelOptions& opt = {});

/// 10 % -> 90 % of the level change, first crossings after t_event, linearly
/// interpolated. Throws NoTransitionError when the levels coincide.
double rise_time_10_90(const SampledWaveform& w, double t_event_s, const LevelOptions& opt = {});

/// Time after t_event at which the signal last enters the band
/// target * (1 +- band_fraction); 0 if it never leaves the band, +inf if it
/// is still outside at the end of the record.
double settling_time(const SampledWaveform& w, double target_level, double band_fraction, double t_event_s);

/// Time from the last crossing of 90 % of the old level (falling side) to the
/// first sustained crossing of 90 % of the new level, around t_switch.
/// Throws NoTransitionError when the two steady levels coincide.
double transition_time_90_90(const SampledWaveform& w, double t_switch_s, const LevelOptions& opt = {});

struct FreqOffsetStats {
    double offset_at_deadline_ghz = 0.0;
    double time_to_within_s = 0.0;  ///< +inf when the trace ends outside tolerance
};

/// Frequency trace statistics with times measured from the trace start.
/// Throws std::invalid_argument when the trace is shorter than the deadline.
FreqOffsetStats freq_offset_stats(const SampledWaveform& offset, double deadline_s = 20e-9, double tol_ghz = 5.0);

/// Mean squared error after resampling `w` to the set point's rate.
double mse_fitness(const SampledWaveform& w, const SampledWaveform& set_point);

/// 10 log10 of the ratio of steady means (leading `head_fraction` skipped).
double extinction_ratio_db(const SampledWaveform& on, const SampledWaveform& off, double head_fraction = 0.1);

/// Peak excursion past the final level as a fraction of the level change.
double overshoot_fraction(const SampledWaveform& w, double t_event_s, const LevelOptions& opt = {});

/// Empirical CDF: one point per sample, ties share the cumulative fraction.
struct Cdf {
    std::vector<double> values;
    std::vector<double> fractions;

    double max() const { return values.back(); }
    /// Smallest value whose cumulative fraction reaches q.
    double quantile(double q) const;
};

Cdf build_cdf(std::span<const double> samples);
void write_cdf_csv(std::ostream& os, const Cdf& cdf, double value_scale = 1.0, const std::string& value_column = "value");

}  // namespace lsw
