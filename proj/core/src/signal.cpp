#include "lsw/signal.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "lsw/format.hpp"

namespace lsw {

namespace {

constexpr double kIndexEps = 1e-9;

std::size_t resampled_length(std::size_t n, double old_rate, double new_rate) {
    const double exact = static_cast<double>(n) * new_rate / old_rate;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(exact)));
}

}  // namespace

std::string_view to_string(Units u) {
    switch (u) {
        case Units::mA: return "mA";
        case Units::V: return "V";
        case Units::mW: return "mW";
        case Units::GHz: return "GHz";
        case Units::dimensionless: return "dimensionless";
    }
    return "dimensionless";
}

Units units_from_string(std::string_view s) {
    if (s == "mA") return Units::mA;
    if (s == "V") return Units::V;
    if (s == "mW") return Units::mW;
    if (s == "GHz") return Units::GHz;
    if (s == "dimensionless") return Units::dimensionless;
    throw std::invalid_argument("unknown units tag '" + std::string(s) + "'");
}

SampledWaveform::SampledWaveform(std::vector<double> samples, double sample_rate_hz, Units units,
                                 double start_time_s)
    : samples_(std::move(samples)), rate_(sample_rate_hz), units_(units), start_(start_time_s) {
    if (samples_.empty()) throw std::invalid_argument("waveform must have at least one sample");
    if (!(rate_ > 0.0) || !std::isfinite(rate_))
        throw std::invalid_argument("waveform sample rate must be positive and finite");
    if (!std::isfinite(start_)) throw std::invalid_argument("waveform start time must be finite");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!std::isfinite(samples_[i]))
            throw std::invalid_argument("waveform sample " + std::to_string(i) + " is not finite");
    }
}

double SampledWaveform::value_at(double t) const noexcept {
    const double pos = (t - start_) * rate_;
    if (pos <= 0.0) return samples_.front();
    const auto last = static_cast<double>(samples_.size() - 1);
    if (pos >= last) return samples_.back();
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return samples_[i] + frac * (samples_[i + 1] - samples_[i]);
}

std::size_t SampledWaveform::index_at_or_after(double t) const noexcept {
    const double pos = (t - start_) * rate_;
    if (pos <= 0.0) return 0;
    const double c = std::ceil(pos - kIndexEps);
    return std::min(samples_.size(), static_cast<std::size_t>(c));
}

SampledWaveform SampledWaveform::slice(double t0, double t1) const {
    const std::size_t i0 = index_at_or_after(t0);
    const std::size_t i1 = index_at_or_after(t1);
    if (i1 <= i0) throw std::invalid_argument("slice selects no samples");
    std::vector<double> out(samples_.begin() + static_cast<std::ptrdiff_t>(i0),
                            samples_.begin() + static_cast<std::ptrdiff_t>(i1));
    return SampledWaveform(std::move(out), rate_, units_, time_at(i0));
}

SampledWaveform SampledWaveform::with_values(std::vector<double> values) const {
    return SampledWaveform(std::move(values), rate_, units_, start_);
}

SampledWaveform SampledWaveform::with_start(double start_time_s) const {
    return SampledWaveform(samples_, rate_, units_, start_time_s);
}

SampledWaveform SampledWaveform::with_units(Units units) const {
    return SampledWaveform(samples_, rate_, units, start_);
}

void AwgModel::validate() const {
    if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("AWG sample rate must be positive");
    if (!(analog_bandwidth_hz > 0.0)) throw std::invalid_argument("AWG bandwidth must be positive");
    if (analog_bandwidth_hz > sample_rate_hz / 2.0 * (1.0 + 1e-12))
        throw std::invalid_argument("AWG bandwidth exceeds Nyquist");
    if (!(amplitude_min < amplitude_max))
        throw std::invalid_argument("AWG amplitude_min must be below amplitude_max");
    if (quantization_bits && (*quantization_bits < 1 || *quantization_bits > 32))
        throw std::invalid_argument("AWG quantization bits must be in [1, 32]");
}

AwgModel AwgModel::soa_gate_default() {
    // +-0.5 V DAC, amplified to +-4 V, swinging the SOA current between 0 and
    // twice the 45 mA bias.
    return AwgModel{12e9, 3e9, 0.0, 90.0, 8, Units::mA};
}

AwgModel AwgModel::laser_default() {
    return AwgModel{250e6, 125e6, 0.0, 80.0, 12, Units::mA};
}

SampledWaveform synthesize_square(const SquareWaveSpec& spec, double sample_rate_hz, Units units) {
    if (!(spec.period_s > 0.0)) throw std::invalid_argument("square wave period must be positive");
    if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("sample rate must be positive");
    if (!(spec.duty > 0.0 && spec.duty < 1.0))
        throw std::invalid_argument("square wave duty must be in (0, 1)");
    if (spec.n_periods < 1) throw std::invalid_argument("square wave needs at least one period");
    if (sample_rate_hz * spec.period_s < 4.0)
        throw std::invalid_argument("square wave period must span at least 4 samples");

    const double per_period = sample_rate_hz * spec.period_s;
    const auto n = static_cast<std::size_t>(std::llround(per_period * spec.n_periods));
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Phase measured in samples keeps exact ratios (e.g. 480 per period) exact.
        const double pos = (static_cast<double>(i) - spec.phase_s * sample_rate_hz) / per_period;
        double frac = pos - std::floor(pos);
        if (frac > 1.0 - kIndexEps) frac = 0.0;
        out[i] = frac < spec.duty - kIndexEps ? spec.high : spec.low;
    }
    return SampledWaveform(std::move(out), sample_rate_hz, units);
}

SampledWaveform resample(const SampledWaveform& w, double new_rate_hz) {
    if (!(new_rate_hz > 0.0) || !std::isfinite(new_rate_hz))
        throw std::invalid_argument("resample rate must be positive");
    const double old_rate = w.sample_rate_hz();
    if (new_rate_hz == old_rate) return w;

    const auto in = w.samples();
    const std::size_t n_in = in.size();
    const std::size_t n_out = resampled_length(n_in, old_rate, new_rate_hz);
    const double ratio = old_rate / new_rate_hz;  // input samples per output sample
    std::vector<double> out(n_out);

    if (new_rate_hz > old_rate) {
        for (std::size_t j = 0; j < n_out; ++j) {
            const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(j) * ratio + kIndexEps));
            out[j] = in[std::min(k, n_in - 1)];
        }
    } else {
        // Each output sample averages the piecewise-constant input over its cell.
        for (std::size_t j = 0; j < n_out; ++j) {
            const double a = static_cast<double>(j) * ratio;
            const double b = std::min(static_cast<double>(n_in), a + ratio);
            double acc = 0.0;
            double span = 0.0;
            auto k = static_cast<std::size_t>(std::floor(a + kIndexEps));
            for (; k < n_in && static_cast<double>(k) < b - kIndexEps; ++k) {
                const double lo = std::max(a, static_cast<double>(k));
                const double hi = std::min(b, static_cast<double>(k + 1));
                if (hi > lo) {
                    acc += in[k] * (hi - lo);
                    span += hi - lo;
                }
            }
            out[j] = span > 0.0 ? acc / span : in[n_in - 1];
        }
    }
    return SampledWaveform(std::move(out), new_rate_hz, w.units(), w.start_time_s());
}

SampledWaveform lowpass_first_order(const SampledWaveform& w, double corner_hz) {
    if (!(corner_hz > 0.0)) throw std::invalid_argument("low-pass corner must be positive");
    const double a = std::exp(-2.0 * std::numbers::pi * corner_hz / w.sample_rate_hz());
    const auto in = w.samples();
    std::vector<double> out(in.size());
    double y = in[0];
    double held = in[0];
    for (std::size_t i = 0; i < in.size(); ++i) {
        // Output at t_i integrates the held input over [t_{i-1}, t_i).
        y = a * y + (1.0 - a) * held;
        out[i] = y;
        held = in[i];
    }
    return w.with_values(std::move(out));
}

double quantize_mid_rise(double x, double lo, double hi, int bits) noexcept {
    const double levels = std::ldexp(1.0, bits);
    const double step = (hi - lo) / levels;
    double k = std::floor((x - lo) / step);
    k = std::clamp(k, 0.0, levels - 1.0);
    return lo + (k + 0.5) * step;
}

namespace {

SampledWaveform awg_dac(const SampledWaveform& w, const AwgModel& awg) {
    awg.validate();
    if (w.units() != awg.units)
        throw std::invalid_argument("waveform units " + std::string(to_string(w.units())) +
                                    " do not match AWG units " + std::string(to_string(awg.units)));
    std::vector<double> v(w.values());
    for (double& x : v) {
        x = std::clamp(x, awg.amplitude_min, awg.amplitude_max);
        if (awg.quantization_bits)
            x = quantize_mid_rise(x, awg.amplitude_min, awg.amplitude_max, *awg.quantization_bits);
    }
    return resample(w.with_values(std::move(v)), awg.sample_rate_hz);
}

}  // namespace

SampledWaveform apply_awg(const SampledWaveform& w, const AwgModel& awg) {
    return lowpass_first_order(awg_dac(w, awg), awg.analog_bandwidth_hz);
}

SampledWaveform apply_awg(const SampledWaveform& w, const AwgModel& awg, double output_rate_hz) {
    auto held = resample(awg_dac(w, awg), output_rate_hz);
    return lowpass_first_order(held, awg.analog_bandwidth_hz);
}

SampledWaveform concatenate(std::span<const SampledWaveform> parts) {
    if (parts.empty()) throw std::invalid_argument("nothing to concatenate");
    std::vector<double> out;
    for (const auto& p : parts) {
        if (p.sample_rate_hz() != parts[0].sample_rate_hz() || p.units() != parts[0].units())
            throw std::invalid_argument("concatenated waveforms must share rate and units");
        out.insert(out.end(), p.values().begin(), p.values().end());
    }
    return parts[0].with_values(std::move(out));
}

SampledWaveform tile(const SampledWaveform& w, int count) {
    if (count < 1) throw std::invalid_argument("tile count must be at least 1");
    std::vector<double> out;
    out.reserve(w.size() * static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) out.insert(out.end(), w.values().begin(), w.values().end());
    return w.with_values(std::move(out));
}

double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean of empty range");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double median(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("median of empty range");
    std::vector<double> v(xs.begin(), xs.end());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

void write_waveform_csv(std::ostream& os, const SampledWaveform& w) {
    os << "time_s,value\n";
    for (std::size_t i = 0; i < w.size(); ++i)
        os << format_number(w.time_at(i)) << ',' << format_number(w[i]) << '\n';
}

SampledWaveform read_waveform_csv(std::istream& is, Units units) {
    std::string line;
    std::vector<double> t;
    std::vector<double> v;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("malformed waveform CSV line: " + line);
        try {
            const double ti = std::stod(line.substr(0, comma));
            const double vi = std::stod(line.substr(comma + 1));
            t.push_back(ti);
            v.push_back(vi);
        } catch (const std::invalid_argument&) {
            if (t.empty()) continue;  // header row
            throw std::invalid_argument("malformed waveform CSV line: " + line);
        }
    }
    if (v.size() < 2) throw std::invalid_argument("waveform CSV needs at least two samples");
    const double rate = static_cast<double>(v.size() - 1) / (t.back() - t.front());
    return SampledWaveform(std::move(v), rate, units, t.front());
}

nlohmann::json waveform_to_json(const SampledWaveform& w) {
    return nlohmann::json{{"units", std::string(to_string(w.units()))},
                          {"sample_rate_hz", w.sample_rate_hz()},
                          {"start_time_s", w.start_time_s()},
                          {"samples", w.values()}};
}

SampledWaveform waveform_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("waveform JSON must be an object");
    for (const auto& [key, _] : j.items()) {
        if (key != "units" && key != "sample_rate_hz" && key != "start_time_s" && key != "samples")
            throw std::invalid_argument("unknown waveform field '" + key + "'");
    }
    try {
        return SampledWaveform(j.at("samples").get<std::vector<double>>(), j.at("sample_rate_hz").get<double>(),
                               units_from_string(j.at("units").get<std::string>()),
                               j.value("start_time_s", 0.0));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bad waveform JSON: ") + e.what());
    }
}

}  // namespace lsw
