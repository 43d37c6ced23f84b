#include "lsw/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lsw/errors.hpp"
#include "lsw/format.hpp"

namespace lsw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t window_count(std::size_t n, double fraction) {
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, n);
}

/// Time at which the segment (i-1, i) crosses `level`; t_i when i == 0.
double crossing_time(const SampledWaveform& w, std::size_t i, double level) {
    if (i == 0) return w.time_at(0);
    const double a = w[i - 1];
    const double b = w[i];
    if (a == b) return w.time_at(i);
    const double frac = std::clamp((level - a) / (b - a), 0.0, 1.0);
    return w.time_at(i - 1) + frac * w.dt();
}

bool distinct(double a, double b, double rel_tol) {
    const double scale = std::max({std::abs(a), std::abs(b), std::numeric_limits<double>::min()});
    return std::abs(a - b) > rel_tol * scale;
}

}  // namespace

nlohmann::json to_json(const SwitchMetrics& m) {
    auto ns = [](const std::optional<double>& s) -> nlohmann::json {
        return s ? nlohmann::json(*s * 1e9) : nlohmann::json(nullptr);
    };
    auto raw = [](const std::optional<double>& s) -> nlohmann::json {
        return s ? nlohmann::json(*s) : nlohmann::json(nullptr);
    };
    return nlohmann::json{{"rise_10_90_ns", ns(m.rise_10_90_s)},
                          {"settle_pm5pct_ns", ns(m.settle_pm5pct_s)},
                          {"transition_90_90_ns", ns(m.transition_90_90_s)},
                          {"freq_offset_at_deadline_ghz", raw(m.freq_offset_at_deadline_ghz)},
                          {"time_to_within_5ghz_ns", ns(m.time_to_within_5ghz_s)},
                          {"overshoot_fraction", raw(m.overshoot_fraction)},
                          {"extinction_db", raw(m.extinction_db)}};
}

std::string metrics_csv_header() {
    return "rise_10_90_ns,settle_pm5pct_ns,transition_90_90_ns,freq_offset_at_deadline_ghz,"
           "time_to_within_5ghz_ns,overshoot_fraction,extinction_db";
}

std::string metrics_csv_row(const SwitchMetrics& m) {
    auto cell = [](const std::optional<double>& v, double scale) {
        return v ? format_number(*v * scale) : std::string();
    };
    return cell(m.rise_10_90_s, 1e9) + ',' + cell(m.settle_pm5pct_s, 1e9) + ',' + cell(m.transition_90_90_s, 1e9) +
           ',' + cell(m.freq_offset_at_deadline_ghz, 1.0) + ',' + cell(m.time_to_within_5ghz_s, 1e9) + ',' +
           cell(m.overshoot_fraction, 1.0) + ',' + cell(m.extinction_db, 1.0);
}

Levels steady_levels(const SampledWaveform& w, const LevelOptions& opt) {
    const auto s = w.samples();
    const std::size_t nh = window_count(s.size(), opt.head_fraction);
    const std::size_t nt = window_count(s.size(), opt.tail_fraction);
    return Levels{median(s.first(nh)), median(s.last(nt))};
}

double rise_time_10_90(const SampledWaveform& w, double t_event_s, const LevelOptions& opt) {
    const auto lv = steady_levels(w, opt);
    if (!distinct(lv.before, lv.after, opt.min_change)) throw NoTransitionError("no level change to measure");
    const double d = lv.after - lv.before;
    const double sign = d > 0 ? 1.0 : -1.0;
    const double l10 = lv.before + 0.1 * d;
    const double l90 = lv.before + 0.9 * d;

    std::size_t i = w.index_at_or_after(t_event_s);
    while (i < w.size() && (w[i] - l10) * sign < 0.0) ++i;
    if (i == w.size()) throw NoTransitionError("signal never reaches 10% of the level change");
    const double t10 = crossing_time(w, i, l10);
    std::size_t j = i;
    while (j < w.size() && (w[j] - l90) * sign < 0.0) ++j;
    if (j == w.size()) throw NoTransitionError("signal never reaches 90% of the level change");
    return crossing_time(w, j, l90) - t10;
}

double settling_time(const SampledWaveform& w, double target_level, double band_fraction, double t_event_s) {
    if (target_level == 0.0) throw std::invalid_argument("fractional settling band needs a non-zero target");
    if (!(band_fraction > 0.0)) throw std::invalid_argument("settling band must be positive");
    const double a = target_level * (1.0 - band_fraction);
    const double b = target_level * (1.0 + band_fraction);
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);

    const std::size_t i0 = w.index_at_or_after(t_event_s);
    std::optional<std::size_t> last_out;
    for (std::size_t i = i0; i < w.size(); ++i)
        if (w[i] < lo || w[i] > hi) last_out = i;
    if (!last_out) return 0.0;
    const std::size_t k = *last_out;
    if (k + 1 == w.size()) return kInf;
    const double edge = w[k] < lo ? lo : hi;
    return crossing_time(w, k + 1, edge) - t_event_s;
}

double transition_time_90_90(const SampledWaveform& w, double t_switch_s, const LevelOptions& opt) {
    const auto lv = steady_levels(w, opt);
    const double old_th = 0.9 * lv.before;
    const double new_th = 0.9 * lv.after;
    const std::size_t n = w.size();
    const auto sustain = static_cast<std::size_t>(std::max(opt.sustain_samples, 1));
    const auto sustained_from = [&](std::size_t i) {
        if (i + sustain > n) return false;
        for (std::size_t k = i; k < i + sustain; ++k)
            if (w[k] < new_th) return false;
        return true;
    };

    if (!distinct(lv.before, lv.after, opt.min_change)) throw NoTransitionError("old and new levels coincide");

    const auto samples = w.samples();
    const auto i_min = static_cast<std::size_t>(std::min_element(samples.begin(), samples.end()) - samples.begin());

    if (w[i_min] >= old_th) {
        // Never dipped below 90 % of the old level. A small step down then
        // stays inside both bands throughout and takes no time at all.
        if (lv.after < lv.before) return 0.0;
        const std::size_t i_s = w.index_at_or_after(t_switch_s);
        for (std::size_t i = std::max<std::size_t>(i_s, 1); i < n; ++i) {
            if (w[i - 1] < new_th && sustained_from(i))
                return crossing_time(w, i, new_th) - w.time_at(i - 1);
        }
        throw NoTransitionError("new level never reached");
    }

    // Leaving the old level: last downward crossing of 90 % of it before the dip.
    std::size_t m = 0;
    for (std::size_t i = 1; i <= i_min; ++i)
        if (w[i - 1] >= old_th && w[i] < old_th) m = i;
    const double t_a = crossing_time(w, m, old_th);

    double t_b;
    if (w[i_min] >= new_th) {
        // Dropped straight onto the new level.
        t_b = w.time_at(m);
    } else {
        std::optional<std::size_t> arrive;
        for (std::size_t i = i_min + 1; i < n; ++i) {
            if (w[i - 1] < new_th && sustained_from(i)) {
                arrive = i;
                break;
            }
        }
        if (!arrive) throw NoTransitionError("new level never reached after the old level was left");
        t_b = crossing_time(w, *arrive, new_th);
    }
    return std::max(0.0, t_b - t_a);
}

FreqOffsetStats freq_offset_stats(const SampledWaveform& offset, double deadline_s, double tol_ghz) {
    if (!(tol_ghz > 0.0)) throw std::invalid_argument("frequency tolerance must be positive");
    const double covered = static_cast<double>(offset.size() - 1) * offset.dt();
    if (covered + 1e-3 * offset.dt() < deadline_s)
        throw std::invalid_argument("frequency trace is shorter than the deadline");
    FreqOffsetStats st;
    st.offset_at_deadline_ghz = offset.value_at(offset.start_time_s() + deadline_s);

    std::optional<std::size_t> last_out;
    for (std::size_t i = 0; i < offset.size(); ++i)
        if (std::abs(offset[i]) > tol_ghz) last_out = i;
    if (!last_out) {
        st.time_to_within_s = 0.0;
    } else if (*last_out + 1 == offset.size()) {
        st.time_to_within_s = kInf;
    } else {
        const double edge = offset[*last_out] > 0 ? tol_ghz : -tol_ghz;
        st.time_to_within_s = crossing_time(offset, *last_out + 1, edge) - offset.start_time_s();
    }
    return st;
}

double mse_fitness(const SampledWaveform& w, const SampledWaveform& set_point) {
    const double tol = std::max(w.dt(), set_point.dt()) * (1.0 + 1e-9);
    if (std::abs(w.duration_s() - set_point.duration_s()) > tol)
        throw std::invalid_argument("waveform and set point durations differ by more than one sample");
    const SampledWaveform aligned =
        w.sample_rate_hz() == set_point.sample_rate_hz() ? w : resample(w, set_point.sample_rate_hz());
    const std::size_t n = std::min(aligned.size(), set_point.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = aligned[i] - set_point[i];
        acc += e * e;
    }
    return acc / static_cast<double>(n);
}

double extinction_ratio_db(const SampledWaveform& on, const SampledWaveform& off, double head_fraction) {
    auto steady_mean = [&](const SampledWaveform& w) {
        for (double x : w.samples())
            if (!(x > 0.0)) throw std::invalid_argument("extinction ratio needs strictly positive powers");
        const std::size_t skip = std::min(w.size() - 1, static_cast<std::size_t>(head_fraction * static_cast<double>(w.size())));
        return mean(w.samples().subspan(skip));
    };
    return 10.0 * std::log10(steady_mean(on) / steady_mean(off));
}

double overshoot_fraction(const SampledWaveform& w, double t_event_s, const LevelOptions& opt) {
    const auto lv = steady_levels(w, opt);
    if (!distinct(lv.before, lv.after, opt.min_change)) throw NoTransitionError("no level change to measure");
    const double d = lv.after - lv.before;
    const double sign = d > 0 ? 1.0 : -1.0;
    double peak = 0.0;
    for (std::size_t i = w.index_at_or_after(t_event_s); i < w.size(); ++i)
        peak = std::max(peak, (w[i] - lv.after) * sign);
    return peak / std::abs(d);
}

double Cdf::quantile(double q) const {
    for (std::size_t i = 0; i < values.size(); ++i)
        if (fractions[i] >= q - 1e-12) return values[i];
    return values.back();
}

Cdf build_cdf(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("CDF needs at least one sample");
    Cdf cdf;
    cdf.values.assign(samples.begin(), samples.end());
    std::stable_sort(cdf.values.begin(), cdf.values.end());
    const auto n = static_cast<double>(cdf.values.size());
    cdf.fractions.resize(cdf.values.size());
    std::size_t i = 0;
    while (i < cdf.values.size()) {
        std::size_t j = i;
        while (j + 1 < cdf.values.size() && cdf.values[j + 1] == cdf.values[i]) ++j;
        for (std::size_t k = i; k <= j; ++k) cdf.fractions[k] = static_cast<double>(j + 1) / n;
        i = j + 1;
    }
    return cdf;
}

void write_cdf_csv(std::ostream& os, const Cdf& cdf, double value_scale, const std::string& value_column) {
    os << value_column << ",fraction\n";
    for (std::size_t i = 0; i < cdf.values.size(); ++i)
        os << format_number(cdf.values[i] * value_scale) << ',' << format_number(cdf.fractions[i]) << '\n';
}

}  // namespace lsw
