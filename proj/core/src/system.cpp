#include "lsw/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lsw/errors.hpp"
#include "lsw/format.hpp"

namespace lsw {

namespace {

std::size_t positive_mod(long long a, std::size_t n) {
    const auto m = static_cast<long long>(n);
    return static_cast<std::size_t>(((a % m) + m) % m);
}

/// Channel changes seen by one laser, in time order, with their currents.
struct LaserTimeline {
    std::vector<double> switch_times;
    std::vector<int> channels;
    std::vector<int> previous;
};

LaserTimeline laser_timeline(const SlotAssignment& a, const GateSchedule& s, int laser_id, double t0, double t1) {
    const auto n = a.slots.size();
    LaserTimeline tl;
    const auto g_first = static_cast<long long>(std::floor((t0 + s.blank_head_s) / s.slot_s)) - 2;
    const auto g_last = static_cast<long long>(std::ceil((t1 + s.blank_head_s) / s.slot_s));
    for (long long g = g_first; g <= g_last; ++g) {
        const auto& slot = a.slots[positive_mod(g, n)];
        if (slot.laser_id != laser_id) continue;
        tl.switch_times.push_back(static_cast<double>(g) * s.slot_s - s.blank_head_s);
        tl.channels.push_back(slot.channel);
        tl.previous.push_back(a.slots[positive_mod(g - 2, n)].channel);
    }
    return tl;
}

double window_mean(const SampledWaveform& w, double a, double b) {
    return mean(w.slice(a, b).samples());
}

}  // namespace

void GateSchedule::validate() const {
    if (!(slot_s > 0.0)) throw std::invalid_argument("slot duration must be positive");
    const double tol = 1e-6 * slot_s;
    if (std::abs(gate_open_s - slot_s) > tol) throw std::invalid_argument("gate must stay open for one slot");
    if (std::abs(gate_period_s - 2.0 * slot_s) > tol) throw std::invalid_argument("gate period must be two slots");
    if (std::abs(burst_s() - 2.0 * slot_s) > tol)
        throw std::invalid_argument("blanking plus open time must equal the two-slot laser burst");
    if (blank_head_s < 0.0 || blank_tail_s < 0.0) throw std::invalid_argument("blanking times must be non-negative");
}

GateSchedule build_schedule(double slot_s) {
    if (!(slot_s > 0.0)) throw std::invalid_argument("slot duration must be positive");
    GateSchedule s;
    s.slot_s = slot_s;
    s.laser_period_s = 4.0 * slot_s;
    s.laser_phase_offset_s = slot_s;
    s.gate_period_s = 2.0 * slot_s;
    s.gate_open_s = slot_s;
    s.blank_head_s = 0.75 * slot_s;
    s.blank_tail_s = 0.25 * slot_s;
    return s;
}

bool gate_open(const GateSchedule& s, int laser_id, double t_s) noexcept {
    const auto k = static_cast<long long>(std::floor(t_s / s.slot_s + 1e-9));
    const bool even = positive_mod(k, 2) == 0;
    return laser_id == 1 ? even : !even;
}

void SlotAssignment::validate() const {
    if (slots.size() < 2 || slots.size() % 2 != 0)
        throw std::invalid_argument("slot assignment needs an even number (>= 2) of slots");
    for (std::size_t k = 0; k < slots.size(); ++k) {
        if (slots[k].slot_index != static_cast<int>(k))
            throw std::invalid_argument("slot indices must run 0..n-1 in order");
        if (slots[k].laser_id != (k % 2 == 0 ? 1 : 2))
            throw std::invalid_argument("slots must alternate laser 1 and laser 2, starting with laser 1");
    }
}

SlotAssignment SlotAssignment::alternating(const std::vector<int>& channels) {
    SlotAssignment a;
    for (std::size_t k = 0; k < channels.size(); ++k)
        a.slots.push_back({static_cast<int>(k), k % 2 == 0 ? 1 : 2, channels[k]});
    a.validate();
    return a;
}

void SystemSimConfig::validate() const {
    if (!(sim_rate_hz > 0.0)) throw std::invalid_argument("system sim rate must be positive");
    if (n_periods < 2) throw std::invalid_argument("system simulation needs at least two periods");
    if (edge_guard_s < 0.0) throw std::invalid_argument("edge guard must be non-negative");
}

TransmitterDevices transmitter_devices(const DeviceSet& d) {
    TransmitterDevices t;
    t.laser[0] = t.laser[1] = d.laser;
    t.soa[0] = t.soa[1] = d.soa;
    return t;
}

std::vector<std::pair<int, int>> required_switch_events(const SlotAssignment& a) {
    a.validate();
    std::set<std::pair<int, int>> events;
    const auto n = a.slots.size();
    for (std::size_t k = 0; k < n; ++k) {
        const int prev = a.slots[(k + n - 2) % n].channel;
        if (prev != a.slots[k].channel) events.insert({prev, a.slots[k].channel});
    }
    return {events.begin(), events.end()};
}

PreemphasisTable optimize_assignment_preemphasis(const SlotAssignment& a, const DsdbrParams& laser,
                                                 const RegressionConfig& cfg, const AwgModel& awg) {
    PreemphasisTable table;
    for (const auto& [from, to] : required_switch_events(a))
        table[{from, to}] = optimize_preemphasis(make_switch_event(from, to, laser), laser, cfg, awg).params;
    return table;
}

SystemResult simulate_transmitter(const SlotAssignment& assignment, const TransmitterDevices& devices,
                                  const GateSchedule& schedule, const AwgModel& awg_laser, const AwgModel& awg_soa,
                                  const PreemphasisTable& preemphasis, const SampledWaveform& soa_drive,
                                  const SystemSimConfig& cfg) {
    assignment.validate();
    schedule.validate();
    cfg.validate();
    if (soa_drive.units() != Units::mA) throw std::invalid_argument("gate drive must be in mA");
    if (std::abs(soa_drive.duration_s() - schedule.gate_period_s) > 0.5 * soa_drive.dt())
        throw std::invalid_argument("gate drive must span exactly one gate period of the schedule");

    const std::size_t n_slots = assignment.slots.size();
    const double period = static_cast<double>(n_slots) * schedule.slot_s;
    const double t0 = -schedule.blank_head_s;
    const double duration = cfg.n_periods * period + schedule.slot_s;
    const double report_start = (cfg.n_periods - 1) * period;
    const double rate = cfg.sim_rate_hz;

    // Lasers: section drives, target currents, frequency offset and power.
    SampledWaveform laser_freq[2] = {SampledWaveform({0.0}, 1.0, Units::GHz), SampledWaveform({0.0}, 1.0, Units::GHz)};
    SampledWaveform laser_power[2] = {SampledWaveform({0.0}, 1.0, Units::mW), SampledWaveform({0.0}, 1.0, Units::mW)};
    for (int L = 0; L < 2; ++L) {
        const DsdbrParams& laser = devices.laser[L];
        const auto tl = laser_timeline(assignment, schedule, L + 1, t0, t0 + duration);
        std::map<std::string, SampledWaveform> drives;
        std::map<std::string, SampledWaveform> refs;
        for (const auto& sec : laser.sections) {
            std::vector<DriveSegment> segs;
            std::vector<DriveSegment> targets;
            for (std::size_t i = 0; i < tl.switch_times.size(); ++i) {
                const double level = laser.channel(tl.channels[i]).currents_ma.at(sec.name);
                SectionPreemphasis pe{};
                if (tl.previous[i] != tl.channels[i]) {
                    const auto& params = lookup_preemphasis(preemphasis, tl.previous[i], tl.channels[i]);
                    if (auto it = params.find(sec.name); it != params.end()) pe = it->second;
                }
                segs.push_back({tl.switch_times[i], level, pe});
                targets.push_back({tl.switch_times[i], level, {}});
            }
            const auto raw = piecewise_section_drive(segs, t0, duration, rate, laser.max_current_ma, sec.name);
            drives.emplace(sec.name, apply_awg(raw, awg_laser, rate));
            refs.emplace(sec.name,
                         piecewise_section_drive(targets, t0, duration, rate, laser.max_current_ma, sec.name));
        }
        const std::size_t n = std::min(drives.begin()->second.size(), refs.begin()->second.size());
        for (auto* m : {&drives, &refs})
            for (auto& [name, w] : *m)
                w = w.with_values(std::vector<double>(w.values().begin(), w.values().begin() + static_cast<std::ptrdiff_t>(n)));
        laser_freq[L] = dsdbr_frequency_offset(drives, laser, refs);

        std::vector<double> p(n);
        std::size_t k = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = t0 + static_cast<double>(i) / rate;
            while (k + 1 < tl.switch_times.size() && tl.switch_times[k + 1] <= t + 1e-15) ++k;
            const double base = laser.output_power_mw * std::pow(10.0, laser.channel(tl.channels[k]).power_offset_db / 10.0);
            const bool retuned = tl.previous[k] != tl.channels[k];
            const double since = t - tl.switch_times[k];
            const double dip = retuned && since >= 0.0
                                   ? laser.reconfig_dip_fraction * std::exp(-since / laser.reconfig_dip_tau_s)
                                   : 0.0;
            p[i] = base * (1.0 - dip);
        }
        laser_power[L] = SampledWaveform(std::move(p), rate, Units::mW, t0);
    }

    // Gates: the same drive period for both, the second one slot later.
    const double drive_rate = soa_drive.sample_rate_hz();
    const auto n_drive = static_cast<std::size_t>(std::llround(duration * drive_rate));
    const auto per = static_cast<long long>(soa_drive.size());
    SampledWaveform gate_current[2] = {SampledWaveform({0.0}, 1.0, Units::mA), SampledWaveform({0.0}, 1.0, Units::mA)};
    for (int L = 0; L < 2; ++L) {
        std::vector<double> raw(n_drive);
        for (std::size_t j = 0; j < n_drive; ++j) {
            const double t = t0 + static_cast<double>(j) / drive_rate - L * schedule.slot_s;
            const auto idx = static_cast<long long>(std::floor(t * drive_rate + 1e-6));
            raw[j] = cfg.gates_enabled ? soa_drive[positive_mod(idx, static_cast<std::size_t>(per))]
                                       : cfg.gates_off_current_ma;
        }
        if (cfg.gates_enabled && cfg.equalize_slot_power) {
            // Scale each open half so every slot's steady gated power matches
            // the gate's output for the nominal laser power.
            const double on_drive = median(soa_drive.samples().subspan(static_cast<std::size_t>(per / 4),
                                                                      static_cast<std::size_t>(per / 4)));
            const double nominal = soa_steady_output_mw(on_drive, devices.soa[L], devices.laser[L].output_power_mw);
            for (std::size_t j = 0; j < n_drive; ++j) {
                const double t = t0 + static_cast<double>(j) / drive_rate;
                if (!gate_open(schedule, L + 1, t)) continue;
                const auto g = static_cast<long long>(std::floor(t / schedule.slot_s + 1e-9));
                const int ch = assignment.slots[positive_mod(g, n_slots)].channel;
                const double pin = devices.laser[L].output_power_mw *
                                   std::pow(10.0, devices.laser[L].channel(ch).power_offset_db / 10.0);
                double lo = 0.5, hi = 2.0;
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (soa_steady_output_mw(mid * on_drive, devices.soa[L], pin) < nominal ? lo : hi) = mid;
                }
                raw[j] = std::clamp(raw[j] * 0.5 * (lo + hi), awg_soa.amplitude_min, awg_soa.amplitude_max);
            }
        }
        gate_current[L] = apply_awg(SampledWaveform(std::move(raw), drive_rate, Units::mA, t0), awg_soa, rate);
    }

    const std::size_t n = std::min({laser_power[0].size(), laser_power[1].size(), gate_current[0].size(),
                                    gate_current[1].size()});
    auto trim = [n](const SampledWaveform& w) {
        return w.with_values(std::vector<double>(w.values().begin(), w.values().begin() + static_cast<std::ptrdiff_t>(n)));
    };
    SampledWaveform gate_out[2] = {
        soa_response(trim(gate_current[0]), devices.soa[0], trim(laser_power[0])),
        soa_response(trim(gate_current[1]), devices.soa[1], trim(laser_power[1]))};
    std::vector<double> sum(n);
    std::vector<double> freq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = gate_out[0][i];
        const double b = gate_out[1][i];
        sum[i] = a + b;
        freq[i] = (a * laser_freq[0][i] + b * laser_freq[1][i]) / (a + b);
    }
    const SampledWaveform power_full(std::move(sum), rate, Units::mW, t0);
    const SampledWaveform freq_full(std::move(freq), rate, Units::GHz, t0);

    auto report = [&](const SampledWaveform& w) {
        return w.slice(report_start, report_start + period).with_start(0.0);
    };
    SystemResult res{report(power_full), report(freq_full), {}, {}, {}, 0.0, true};
    for (int L = 0; L < 2; ++L) {
        res.laser_freq.push_back(report(trim(laser_freq[L])));
        res.gate_out.push_back(report(gate_out[L]));
    }

    for (std::size_t i = 0; i < res.power_out.size(); ++i) {
        const double t = res.power_out.time_at(i);
        if (gate_open(schedule, 1, t) == gate_open(schedule, 2, t)) res.gates_complementary = false;
    }

    const double guard = cfg.edge_guard_s;
    for (std::size_t k = 0; k < n_slots; ++k) {
        SlotReport r;
        r.slot_index = static_cast<int>(k);
        r.laser_id = assignment.slots[k].laser_id;
        r.channel = assignment.slots[k].channel;
        r.open_start_s = static_cast<double>(k) * schedule.slot_s;
        r.open_end_s = r.open_start_s + schedule.slot_s;
        for (double v : res.freq_out.slice(r.open_start_s, r.open_end_s).samples())
            r.max_abs_offset_ghz = std::max(r.max_abs_offset_ghz, std::abs(v));
        const auto flat = res.power_out.slice(r.open_start_s + guard, r.open_end_s - guard);
        const double med = median(flat.samples());
        for (double v : flat.samples()) r.flatness_db = std::max(r.flatness_db, std::abs(10.0 * std::log10(v / med)));
        r.mean_power_mw = mean(flat.samples());

        const double boundary = report_start + r.open_start_s;
        const int previous_channel = assignment.slots[(k + n_slots - 1) % n_slots].channel;
        if (previous_channel != r.channel) {
            try {
                r.transition_90_90_s = transition_time_90_90(
                    power_full.slice(boundary - 0.5 * schedule.slot_s, boundary + 0.5 * schedule.slot_s), boundary);
            } catch (const NoTransitionError&) {
            }
        }
        r.metrics.transition_90_90_s = r.transition_90_90_s;
        res.slots.push_back(r);
    }

    // Gate extinction from steady levels: the second half of each open slot
    // against the second half of each closed slot.
    double worst = std::numeric_limits<double>::infinity();
    for (int L = 0; L < 2; ++L) {
        double on = 0.0, off = 0.0;
        int n_on = 0, n_off = 0;
        for (std::size_t k = 0; k < n_slots; ++k) {
            const double a = (static_cast<double>(k) + 0.5) * schedule.slot_s;
            const double b = static_cast<double>(k + 1) * schedule.slot_s;
            const double m = window_mean(res.gate_out[static_cast<std::size_t>(L)], a, b);
            if (assignment.slots[k].laser_id == L + 1) on += m, ++n_on;
            else off += m, ++n_off;
        }
        worst = std::min(worst, 10.0 * std::log10((on / n_on) / (off / n_off)));
    }
    res.extinction_db = worst;
    for (auto& s : res.slots) s.metrics.extinction_db = worst;
    return res;
}

ValidationReport validate_slots(const std::vector<SlotReport>& slots, double tol_ghz, double flatness_db) {
    ValidationReport r;
    r.tol_ghz = tol_ghz;
    r.flatness_db = flatness_db;
    for (const auto& s : slots) {
        SlotVerdict v{s.slot_index, s.max_abs_offset_ghz <= tol_ghz, s.flatness_db <= flatness_db};
        r.all_pass = r.all_pass && v.pass();
        r.slots.push_back(v);
    }
    return r;
}

nlohmann::json to_json(const ValidationReport& r) {
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& s : r.slots)
        slots.push_back({{"slot", s.slot_index},
                         {"frequency_ok", s.frequency_ok},
                         {"flatness_ok", s.flatness_ok},
                         {"pass", s.pass()}});
    return nlohmann::json{{"pass", r.all_pass}, {"tol_ghz", r.tol_ghz}, {"flatness_db", r.flatness_db}, {"slots", slots}};
}

void write_slot_csv(std::ostream& os, const std::vector<SlotReport>& slots) {
    os << "slot,laser,channel,open_start_ns,open_end_ns,max_abs_offset_ghz,flatness_db,mean_power_mw,"
          "transition_90_90_ns,extinction_db\n";
    for (const auto& s : slots) {
        os << s.slot_index << ',' << s.laser_id << ',' << s.channel << ',' << format_number(s.open_start_s * 1e9) << ','
           << format_number(s.open_end_s * 1e9) << ',' << format_number(s.max_abs_offset_ghz) << ','
           << format_number(s.flatness_db) << ',' << format_number(s.mean_power_mw) << ','
           << (s.transition_90_90_s ? format_number(*s.transition_90_90_s * 1e9) : std::string()) << ','
           << (s.metrics.extinction_db ? format_number(*s.metrics.extinction_db) : std::string()) << '\n';
    }
}

}  // namespace lsw
