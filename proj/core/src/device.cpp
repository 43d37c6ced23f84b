#include "lsw/device.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include "lsw/errors.hpp"

namespace lsw {

namespace {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

void require_mA(const SampledWaveform& w, const char* what) {
    if (w.units() != Units::mA)
        throw std::invalid_argument(std::string(what) + " must be in mA, got " +
                                    std::string(to_string(w.units())));
}

}  // namespace

// ---------------------------------------------------------------------------
// SOA
// ---------------------------------------------------------------------------

void SoaParams::validate() const {
    if (!(damping_ratio > 0.0)) throw std::invalid_argument("SOA damping_ratio must be positive");
    if (!(natural_freq_hz > 0.0)) throw std::invalid_argument("SOA natural_freq_hz must be positive");
    if (!(off_attenuation_db > 0.0)) throw std::invalid_argument("SOA off_attenuation_db must be positive");
    if (!(bias_current_ma > transparency_current_ma))
        throw std::invalid_argument("SOA bias current must exceed the transparency current");
    if (!(gain_knee > 0.0)) throw std::invalid_argument("SOA gain_knee must be positive");
    if (std::isnan(saturation_power_dbm)) throw std::invalid_argument("SOA saturation power is NaN");
}

SampledWaveform soa_carrier(const SampledWaveform& drive, const SoaParams& p) {
    require_mA(drive, "SOA drive");
    p.validate();
    const double wn = 2.0 * std::numbers::pi * p.natural_freq_hz;
    const double wn2 = wn * wn;
    const double two_zeta_wn = 2.0 * p.damping_ratio * wn;
    // Fast or heavily damped plants get sub-steps so that RK4 stays well
    // inside its stability region; the drive is held across the sample.
    const double stiffness = std::max(wn, two_zeta_wn) * drive.dt();
    const int substeps = std::max(1, static_cast<int>(std::ceil(stiffness / 0.5)));
    const double h = drive.dt() / substeps;
    const double norm = 1.0 / (p.bias_current_ma - p.transparency_current_ma);

    auto accel = [&](double x, double v, double u) { return wn2 * (u - x) - two_zeta_wn * v; };

    const auto in = drive.samples();
    std::vector<double> out(in.size());
    double x = (in[0] - p.transparency_current_ma) * norm;
    double v = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = x;
        const double u = (in[i] - p.transparency_current_ma) * norm;
        for (int k = 0; k < substeps; ++k) {
            const double k1x = v;
            const double k1v = accel(x, v, u);
            const double k2x = v + 0.5 * h * k1v;
            const double k2v = accel(x + 0.5 * h * k1x, k2x, u);
            const double k3x = v + 0.5 * h * k2v;
            const double k3v = accel(x + 0.5 * h * k2x, k3x, u);
            const double k4x = v + h * k3v;
            const double k4v = accel(x + h * k3x, k4x, u);
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
    }
    return SampledWaveform(std::move(out), drive.sample_rate_hz(), Units::dimensionless,
                           drive.start_time_s());
}

double soa_gain_linear(double carrier, const SoaParams& p) noexcept {
    const double g_max = db_to_linear(p.small_signal_gain_db);
    const double g_off = db_to_linear(-p.off_attenuation_db);
    const double inversion = 1.0 - std::exp(-p.gain_knee * std::max(carrier, 0.0));
    return g_off + (g_max - g_off) * inversion;
}

double soa_saturated_output_mw(double input_mw, double gain_linear, double saturation_mw) noexcept {
    const double unsaturated = input_mw * gain_linear;
    if (!std::isfinite(saturation_mw)) return unsaturated;
    // Positive root of P^2 / Psat + P - Pin G = 0, in the cancellation-free form.
    return 2.0 * unsaturated / (1.0 + std::sqrt(1.0 + 4.0 * unsaturated / saturation_mw));
}

SampledWaveform soa_response(const SampledWaveform& drive, const SoaParams& p,
                             const SampledWaveform& input_power) {
    if (input_power.units() != Units::mW) throw std::invalid_argument("SOA input power must be in mW");
    if (input_power.size() != drive.size())
        throw std::invalid_argument("SOA input power and drive must share the time grid");
    const auto carrier = soa_carrier(drive, p);
    const double psat = std::isfinite(p.saturation_power_dbm) ? db_to_linear(p.saturation_power_dbm)
                                                              : std::numeric_limits<double>::infinity();
    std::vector<double> out(drive.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double pin = input_power[i];
        if (!(pin > 0.0)) throw std::invalid_argument("SOA input power must be positive");
        out[i] = soa_saturated_output_mw(pin, soa_gain_linear(carrier[i], p), psat);
    }
    return SampledWaveform(std::move(out), drive.sample_rate_hz(), Units::mW, drive.start_time_s());
}

SampledWaveform soa_response(const SampledWaveform& drive, const SoaParams& p, double input_power_mw) {
    if (!(input_power_mw > 0.0)) throw std::invalid_argument("SOA input power must be positive");
    require_mA(drive, "SOA drive");
    const SampledWaveform pin(std::vector<double>(drive.size(), input_power_mw), drive.sample_rate_hz(),
                              Units::mW, drive.start_time_s());
    return soa_response(drive, p, pin);
}

double soa_steady_output_mw(double drive_ma, const SoaParams& p, double input_power_mw) {
    p.validate();
    const double x = (drive_ma - p.transparency_current_ma) / (p.bias_current_ma - p.transparency_current_ma);
    const double psat = std::isfinite(p.saturation_power_dbm) ? db_to_linear(p.saturation_power_dbm)
                                                              : std::numeric_limits<double>::infinity();
    return soa_saturated_output_mw(input_power_mw, soa_gain_linear(x, p), psat);
}

// ---------------------------------------------------------------------------
// Channel plan
// ---------------------------------------------------------------------------

void ChannelPlan::validate() const {
    if (count < 1) throw std::invalid_argument("channel plan needs at least one channel");
    if (!(spacing_ghz > 0.0)) throw std::invalid_argument("channel spacing must be positive");
    if (!(first_frequency_ghz > 0.0)) throw std::invalid_argument("first channel frequency must be positive");
}

std::vector<double> channel_frequencies(const ChannelPlan& plan) {
    plan.validate();
    std::vector<double> f(static_cast<std::size_t>(plan.count));
    for (int k = 0; k < plan.count; ++k) f[static_cast<std::size_t>(k)] = plan.first_frequency_ghz + k * plan.spacing_ghz;
    return f;
}

double frequency_ghz_to_wavelength_nm(double f_ghz) noexcept {
    constexpr double c_m_per_s = 299'792'458.0;
    return c_m_per_s / (f_ghz * 1e9) * 1e9;
}

// ---------------------------------------------------------------------------
// DS-DBR
// ---------------------------------------------------------------------------

void DsdbrParams::validate() const {
    if (sections.empty()) throw std::invalid_argument("laser needs at least one section");
    if (!(max_current_ma > 0.0)) throw std::invalid_argument("laser max_current_ma must be positive");
    if (!(output_power_mw > 0.0)) throw std::invalid_argument("laser output power must be positive");
    if (reconfig_dip_fraction < 0.0 || reconfig_dip_fraction >= 1.0)
        throw std::invalid_argument("reconfig_dip_fraction must be in [0, 1)");
    if (!(reconfig_dip_tau_s > 0.0)) throw std::invalid_argument("reconfig_dip_tau_s must be positive");
    plan.validate();
    std::set<std::string> names;
    for (const auto& s : sections) {
        if (!names.insert(s.name).second) throw std::invalid_argument("duplicate laser section '" + s.name + "'");
        if (s.lags.empty()) throw std::invalid_argument("section '" + s.name + "' has no lag terms");
        double wsum = 0.0;
        for (const auto& l : s.lags) {
            if (!(l.tau_s > 0.0)) throw std::invalid_argument("section '" + s.name + "' has a non-positive tau");
            wsum += l.weight;
        }
        if (std::abs(wsum - 1.0) > 1e-9)
            throw std::invalid_argument("lag weights of section '" + s.name + "' must sum to 1");
        if (s.preemphasis_duration_s < 0.0)
            throw std::invalid_argument("section '" + s.name + "' has a negative pre-emphasis duration");
        if (s.preemphasis_decay_tau_s && !(*s.preemphasis_decay_tau_s > 0.0))
            throw std::invalid_argument("section '" + s.name + "' has a non-positive decay tau");
    }
    for (int k = 0; k < plan.count; ++k) {
        auto it = channel_table.find(k);
        if (it == channel_table.end())
            throw std::invalid_argument("channel table misses channel " + std::to_string(k));
        for (const auto& s : sections) {
            auto c = it->second.currents_ma.find(s.name);
            if (c == it->second.currents_ma.end())
                throw std::invalid_argument("channel " + std::to_string(k) + " has no current for section '" +
                                            s.name + "'");
            if (c->second < 0.0 || c->second > max_current_ma)
                throw std::invalid_argument("channel " + std::to_string(k) + " current out of range");
        }
        for (const auto& [name, _] : it->second.currents_ma) {
            if (!names.count(name))
                throw std::invalid_argument("channel " + std::to_string(k) + " names unknown section '" + name + "'");
        }
    }
}

const LaserSection& DsdbrParams::section(const std::string& name) const {
    for (const auto& s : sections)
        if (s.name == name) return s;
    throw std::invalid_argument("unknown laser section '" + name + "'");
}

const ChannelSetting& DsdbrParams::channel(int index) const {
    auto it = channel_table.find(index);
    if (it == channel_table.end()) throw NotFoundError("channel " + std::to_string(index) + " not in channel table");
    return it->second;
}

std::map<int, ChannelSetting> linear_channel_table(
    const ChannelPlan& plan, const std::map<std::string, std::pair<double, double>>& ranges,
    double power_ripple_db) {
    plan.validate();
    std::map<int, ChannelSetting> table;
    const double denom = plan.count > 1 ? static_cast<double>(plan.count - 1) : 1.0;
    for (int k = 0; k < plan.count; ++k) {
        ChannelSetting c;
        for (const auto& [name, range] : ranges)
            c.currents_ma[name] = range.first + (range.second - range.first) * k / denom;
        c.power_offset_db = power_ripple_db * std::sin(0.9 * k);
        table.emplace(k, std::move(c));
    }
    return table;
}

DsdbrParams DsdbrParams::default_params() {
    DsdbrParams p;
    // Rear: fast electrical response plus a slow thermal creep of a few GHz.
    p.sections.push_back(LaserSection{"rear", 3.0, {{0.92, 1.5e-9}, {0.08, 30e-9}}, 40e-9, 30e-9});
    p.sections.push_back(LaserSection{"front", -1.0, {{1.0, 1.0e-9}}, 4e-9, std::nullopt});
    p.channel_table = linear_channel_table(p.plan, {{"rear", {5.0, 50.0}}, {"front", {50.0, 5.0}}}, 0.3);
    return p;
}

SampledWaveform lag_filter(const SampledWaveform& x, const std::vector<LagTerm>& lags) {
    const auto in = x.samples();
    std::vector<double> out(in.size(), 0.0);
    for (const auto& lag : lags) {
        const double a = std::exp(-x.dt() / lag.tau_s);
        double y = in[0];
        double held = in[0];
        for (std::size_t i = 0; i < in.size(); ++i) {
            y = a * y + (1.0 - a) * held;
            out[i] += lag.weight * y;
            held = in[i];
        }
    }
    return x.with_values(std::move(out));
}

namespace {

const SampledWaveform& first_drive(const std::map<std::string, SampledWaveform>& drives) {
    if (drives.empty()) throw std::invalid_argument("no section drives given");
    const auto& ref = drives.begin()->second;
    for (const auto& [name, w] : drives) {
        require_mA(w, "section drive");
        if (w.sample_rate_hz() != ref.sample_rate_hz() || w.size() != ref.size())
            throw std::invalid_argument("section drives must share sample rate and duration");
    }
    return ref;
}

}  // namespace

SampledWaveform dsdbr_frequency_offset(const std::map<std::string, SampledWaveform>& section_drives,
                                       const DsdbrParams& p,
                                       const std::map<std::string, SampledWaveform>& reference_currents) {
    const auto& ref = first_drive(section_drives);
    std::vector<double> total(ref.size(), 0.0);
    for (const auto& [name, drive] : section_drives) {
        const auto& sec = p.section(name);
        auto target = reference_currents.find(name);
        if (target == reference_currents.end())
            throw std::invalid_argument("no reference current for section '" + name + "'");
        if (target->second.size() != drive.size())
            throw std::invalid_argument("reference current for '" + name + "' has the wrong length");
        const auto lagged = lag_filter(drive, sec.lags);
        for (std::size_t i = 0; i < total.size(); ++i)
            total[i] += sec.sensitivity_ghz_per_ma * (lagged[i] - target->second[i]);
    }
    return SampledWaveform(std::move(total), ref.sample_rate_hz(), Units::GHz, ref.start_time_s());
}

SampledWaveform dsdbr_frequency_response(const std::map<std::string, SampledWaveform>& section_drives,
                                         const DsdbrParams& p, int target_channel) {
    const auto& ref = first_drive(section_drives);
    const auto& target = p.channel(target_channel);
    std::map<std::string, SampledWaveform> reference;
    for (const auto& [name, _] : section_drives) {
        p.section(name);
        auto it = target.currents_ma.find(name);
        if (it == target.currents_ma.end())
            throw NotFoundError("channel " + std::to_string(target_channel) + " has no current for '" + name + "'");
        reference.emplace(name, ref.with_values(std::vector<double>(ref.size(), it->second)));
    }
    return dsdbr_frequency_offset(section_drives, p, reference);
}

std::map<std::string, SectionSwing> switch_event_currents(int from_channel, int to_channel, const DsdbrParams& p) {
    const auto& a = p.channel(from_channel);
    const auto& b = p.channel(to_channel);
    std::map<std::string, SectionSwing> out;
    for (const auto& s : p.sections) {
        auto ia = a.currents_ma.find(s.name);
        auto ib = b.currents_ma.find(s.name);
        if (ia == a.currents_ma.end() || ib == b.currents_ma.end())
            throw NotFoundError("section '" + s.name + "' missing from channel table");
        out.emplace(s.name, SectionSwing{ia->second, ib->second});
    }
    return out;
}

}  // namespace lsw
