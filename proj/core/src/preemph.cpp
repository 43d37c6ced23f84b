#include "lsw/preemph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "lsw/errors.hpp"
#include "lsw/format.hpp"
#include "lsw/json_fields.hpp"

namespace lsw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SectionPreemphasis unit_shape(const SectionPreemphasis& s) {
    SectionPreemphasis u = s;
    u.overshoot_amplitude_ma = 1.0;
    return u;
}

SectionPreemphasis shape_for(const PreemphasisParams& pe, const std::string& name, const DsdbrParams& laser) {
    if (auto it = pe.find(name); it != pe.end()) return it->second;
    const auto& sec = laser.section(name);
    return SectionPreemphasis{0.0, sec.preemphasis_duration_s, sec.preemphasis_decay_tau_s};
}

struct Score {
    double ttw;
    double abs_offset;
    bool operator<(const Score& o) const {
        return ttw < o.ttw || (ttw == o.ttw && abs_offset < o.abs_offset);
    }
};

SampledWaveform awg_linear_path(const SampledWaveform& raw, const AwgModel& awg, double out_rate) {
    return lowpass_first_order(resample(resample(raw, awg.sample_rate_hz), out_rate), awg.analog_bandwidth_hz);
}

SampledWaveform smooth_over(const SampledWaveform& w, std::size_t k) {
    if (k <= 1) return w;
    const auto in = w.samples();
    std::vector<double> out(in.size());
    const std::size_t half = k / 2;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(in.size(), lo + k);
        double acc = 0.0;
        for (std::size_t j = lo; j < hi; ++j) acc += in[j];
        out[i] = acc / static_cast<double>(hi - lo);
    }
    return w.with_values(std::move(out));
}

}  // namespace

double SectionPreemphasis::value_at(double dt) const noexcept {
    if (dt < 0.0 || dt >= overshoot_duration_s) return 0.0;
    return decay_tau_s ? overshoot_amplitude_ma * std::exp(-dt / *decay_tau_s) : overshoot_amplitude_ma;
}

PreemphasisParams initial_preemphasis(const DsdbrParams& laser) {
    PreemphasisParams pe;
    for (const auto& s : laser.sections)
        pe.emplace(s.name, SectionPreemphasis{0.0, s.preemphasis_duration_s, s.preemphasis_decay_tau_s});
    return pe;
}

bool SwitchEvent::zero_swing() const noexcept {
    return std::all_of(currents.begin(), currents.end(), [](const auto& kv) { return kv.second.swing() == 0.0; });
}

SwitchEvent make_switch_event(int from_channel, int to_channel, const DsdbrParams& laser) {
    return SwitchEvent{from_channel, to_channel, switch_event_currents(from_channel, to_channel, laser)};
}

void RegressionConfig::validate() const {
    if (max_iterations < 0) throw std::invalid_argument("regression max_iterations must be non-negative");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("regression learning_rate must be non-negative");
    if (!(error_window_start_s < error_window_end_s))
        throw std::invalid_argument("regression error window start must precede its end");
    if (error_window_start_s < 0.0 || error_window_end_s > burst_s)
        throw std::invalid_argument("regression error window must lie inside the simulated burst");
    if (!(tol_ghz > 0.0)) throw std::invalid_argument("regression tol_ghz must be positive");
    if (!(deadline_s > 0.0) || deadline_s > burst_s)
        throw std::invalid_argument("regression deadline must lie inside the simulated burst");
    if (!(sim_rate_hz > 0.0) || lead_s < 0.0 || !(burst_s > 0.0))
        throw std::invalid_argument("regression simulation grid is invalid");
}

SampledWaveform piecewise_section_drive(std::span<const DriveSegment> segments, double t0_s, double duration_s,
                                        double rate_hz, double max_current_ma, const std::string& section) {
    if (segments.empty()) throw std::invalid_argument("section '" + section + "' has no drive segments");
    const auto n = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
    if (n == 0) throw std::invalid_argument("drive duration holds no samples");
    const double eps = 1e-6 / rate_hz;
    std::vector<double> out(n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t0_s + static_cast<double>(i) / rate_hz;
        while (k + 1 < segments.size() && segments[k + 1].start_s <= t + eps) ++k;
        const auto& seg = segments[k];
        const double v = seg.level_ma + seg.overshoot.value_at(t - seg.start_s + eps);
        if (v < -1e-9 || v > max_current_ma + 1e-9)
            throw std::invalid_argument("section '" + section + "' current " + format_number(v) +
                                        " mA is outside [0, " + format_number(max_current_ma) + "] mA");
        out[i] = v;
    }
    return SampledWaveform(std::move(out), rate_hz, Units::mA, t0_s);
}

std::map<std::string, SampledWaveform> build_raw_drive_with_preemphasis(
    const SwitchEvent& event, const PreemphasisParams& pe, double period_s, const DsdbrParams& laser, double rate_hz,
    const std::optional<PreemphasisParams>& reverse, int n_periods) {
    if (!(period_s > 0.0) || n_periods < 1) throw std::invalid_argument("drive period and count must be positive");
    std::map<std::string, SampledWaveform> out;
    for (const auto& [name, swing] : event.currents) {
        const SectionPreemphasis fwd = shape_for(pe, name, laser);
        SectionPreemphasis back = fwd;
        back.overshoot_amplitude_ma = -fwd.overshoot_amplitude_ma;
        if (reverse) back = shape_for(*reverse, name, laser);
        std::vector<DriveSegment> segs;
        for (int k = 0; k < n_periods; ++k) {
            segs.push_back({k * period_s, swing.to_ma, fwd});
            segs.push_back({(k + 0.5) * period_s, swing.from_ma, back});
        }
        out.emplace(name, piecewise_section_drive(segs, 0.0, n_periods * period_s, rate_hz, laser.max_current_ma, name));
    }
    return out;
}

std::map<std::string, SampledWaveform> build_drive_with_preemphasis(
    const SwitchEvent& event, const PreemphasisParams& pe, double period_s, const AwgModel& awg,
    const DsdbrParams& laser, double output_rate_hz, const std::optional<PreemphasisParams>& reverse, int n_periods) {
    auto raw = build_raw_drive_with_preemphasis(event, pe, period_s, laser, output_rate_hz, reverse, n_periods);
    std::map<std::string, SampledWaveform> out;
    for (auto& [name, w] : raw) out.emplace(name, apply_awg(w, awg, output_rate_hz));
    return out;
}

SampledWaveform simulate_switch_event(const SwitchEvent& event, const PreemphasisParams& pe,
                                      const DsdbrParams& laser, const AwgModel& awg, const RegressionConfig& cfg) {
    if (event.currents.empty()) throw std::invalid_argument("switch event has no sections");
    std::map<std::string, SampledWaveform> drives;
    std::map<std::string, SampledWaveform> refs;
    for (const auto& [name, swing] : event.currents) {
        const std::vector<DriveSegment> segs{{-cfg.lead_s, swing.from_ma, {}},
                                             {0.0, swing.to_ma, shape_for(pe, name, laser)}};
        const auto raw = piecewise_section_drive(segs, -cfg.lead_s, cfg.lead_s + cfg.burst_s, cfg.sim_rate_hz,
                                                 laser.max_current_ma, name);
        auto drive = apply_awg(raw, awg, cfg.sim_rate_hz);
        refs.emplace(name, drive.with_values(std::vector<double>(drive.size(), swing.to_ma)));
        drives.emplace(name, std::move(drive));
    }
    return dsdbr_frequency_offset(drives, laser, refs);
}

SampledWaveform preemphasis_basis_response(const std::string& section, const SectionPreemphasis& shape,
                                           const DsdbrParams& laser, const AwgModel& awg,
                                           const RegressionConfig& cfg) {
    const auto& sec = laser.section(section);
    const std::vector<DriveSegment> segs{{-cfg.lead_s, 0.0, {}}, {0.0, 0.0, unit_shape(shape)}};
    const auto raw = piecewise_section_drive(segs, -cfg.lead_s, cfg.lead_s + cfg.burst_s, cfg.sim_rate_hz, kInf,
                                             section);
    const auto lagged = lag_filter(awg_linear_path(raw, awg, cfg.sim_rate_hz), sec.lags);
    std::vector<double> v(lagged.values());
    for (double& x : v) x *= sec.sensitivity_ghz_per_ma;
    return SampledWaveform(std::move(v), lagged.sample_rate_hz(), Units::GHz, lagged.start_time_s());
}

PreemphasisParams regression_update(const SampledWaveform& error_trace, const PreemphasisParams& pe,
                                    const SwitchEvent& event, const DsdbrParams& laser, const AwgModel& awg,
                                    const RegressionConfig& cfg) {
    cfg.validate();
    const double tol_t = 0.5 / error_trace.sample_rate_hz();
    if (error_trace.start_time_s() > cfg.error_window_start_s + tol_t ||
        error_trace.end_time_s() < cfg.error_window_end_s - tol_t)
        throw std::invalid_argument("error trace does not cover the regression window");

    const SampledWaveform err =
        cfg.include_awg_ripple
            ? error_trace
            : smooth_over(error_trace, static_cast<std::size_t>(
                                           std::llround(error_trace.sample_rate_hz() / awg.sample_rate_hz)));

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < err.size(); ++i) {
        const double t = err.time_at(i);
        if (t >= cfg.error_window_start_s - 1e-15 && t < cfg.error_window_end_s - 1e-15) rows.push_back(i);
    }
    if (rows.empty()) throw std::invalid_argument("regression window selects no samples");

    // Parameter list: amplitude per section, plus duration (in ns) when enabled.
    struct Param {
        std::string section;
        bool duration;
        double value;
        double lo;
        double hi;
    };
    PreemphasisParams out;
    std::vector<Param> params;
    std::vector<SampledWaveform> columns;
    const double h_ns = 0.5;
    for (const auto& [name, swing] : event.currents) {
        const SectionPreemphasis s = shape_for(pe, name, laser);
        out.emplace(name, s);
        const auto base = preemphasis_basis_response(name, s, laser, awg, cfg);
        params.push_back({name, false, s.overshoot_amplitude_ma, -swing.to_ma, laser.max_current_ma - swing.to_ma});
        columns.push_back(base);
        if (cfg.basis == RegressionBasis::amplitude_and_duration && std::abs(s.overshoot_amplitude_ma) > 1e-9) {
            SectionPreemphasis longer = s;
            longer.overshoot_duration_s += h_ns * 1e-9;
            const auto stretched = preemphasis_basis_response(name, longer, laser, awg, cfg);
            std::vector<double> d(base.size());
            for (std::size_t i = 0; i < d.size(); ++i)
                d[i] = s.overshoot_amplitude_ma * (stretched[i] - base[i]) / h_ns;
            params.push_back({name, true, s.overshoot_duration_s * 1e9, 1e9 / awg.sample_rate_hz, cfg.burst_s * 1e9});
            columns.push_back(base.with_values(std::move(d)));
        }
    }

    const auto m = static_cast<Eigen::Index>(rows.size());
    const auto n = static_cast<Eigen::Index>(params.size());
    Eigen::MatrixXd B(m, n);
    Eigen::VectorXd e(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const std::size_t i = rows[static_cast<std::size_t>(r)];
        e(r) = err[i];
        for (Eigen::Index c = 0; c < n; ++c) B(r, c) = columns[static_cast<std::size_t>(c)][i];
    }

    // Rank check on the column-normalised Gram matrix.
    const Eigen::VectorXd norms = B.colwise().norm();
    for (Eigen::Index c = 0; c < n; ++c)
        if (!(norms(c) > 0.0))
            throw DegenerateBasisError("basis response of section '" + params[static_cast<std::size_t>(c)].section +
                                       "' vanishes inside the error window");
    const Eigen::MatrixXd Bn = B * norms.cwiseInverse().asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Bn.transpose() * Bn, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < 1e-9)
        throw DegenerateBasisError("pre-emphasis basis responses are collinear over the error window");

    // Active set: parameters that would leave their bounds are pinned there.
    std::vector<bool> pinned(params.size(), false);
    Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
    for (;;) {
        std::vector<Eigen::Index> free_idx;
        Eigen::VectorXd rhs = -e;
        for (Eigen::Index c = 0; c < n; ++c) {
            if (pinned[static_cast<std::size_t>(c)]) rhs -= B.col(c) * step(c);
            else free_idx.push_back(c);
        }
        if (free_idx.empty()) break;
        Eigen::MatrixXd Bf(m, static_cast<Eigen::Index>(free_idx.size()));
        for (std::size_t k = 0; k < free_idx.size(); ++k) Bf.col(static_cast<Eigen::Index>(k)) = B.col(free_idx[k]);
        Eigen::MatrixXd normal = Bf.transpose() * Bf;
        normal.diagonal().array() += 1e-9;
        const Eigen::VectorXd sol = normal.ldlt().solve(Bf.transpose() * rhs);
        bool newly_pinned = false;
        for (std::size_t k = 0; k < free_idx.size(); ++k) {
            const Eigen::Index c = free_idx[k];
            const auto& p = params[static_cast<std::size_t>(c)];
            step(c) = sol(static_cast<Eigen::Index>(k));
            const double next = p.value + cfg.learning_rate * step(c);
            if (next < p.lo || next > p.hi) {
                pinned[static_cast<std::size_t>(c)] = true;
                step(c) = cfg.learning_rate > 0.0 ? (std::clamp(next, p.lo, p.hi) - p.value) / cfg.learning_rate : 0.0;
                newly_pinned = true;
            }
        }
        if (!newly_pinned) break;
    }

    for (Eigen::Index c = 0; c < n; ++c) {
        const auto& p = params[static_cast<std::size_t>(c)];
        const double next = std::clamp(p.value + cfg.learning_rate * step(c), p.lo, p.hi);
        auto& s = out.at(p.section);
        if (p.duration) s.overshoot_duration_s = next * 1e-9;
        else s.overshoot_amplitude_ma = next;
    }
    return out;
}

PreemphasisResult optimize_preemphasis(const SwitchEvent& event, const DsdbrParams& laser, const RegressionConfig& cfg,
                                       const AwgModel& awg, const std::optional<PreemphasisParams>& initial) {
    cfg.validate();
    PreemphasisParams pe;
    for (const auto& [name, _] : event.currents)
        pe.emplace(name, shape_for(initial ? *initial : PreemphasisParams{}, name, laser));

    auto measure = [&](const SampledWaveform& trace) {
        return freq_offset_stats(trace.slice(0.0, cfg.burst_s), cfg.deadline_s, cfg.tol_ghz);
    };

    SampledWaveform trace = simulate_switch_event(event, pe, laser, awg, cfg);
    PreemphasisResult res{pe, {}, 0, false, trace, trace};
    std::optional<Score> best;
    for (int it = 0;; ++it) {
        const auto st = measure(trace);
        const Score score{st.time_to_within_s, std::abs(st.offset_at_deadline_ghz)};
        const bool ok = st.time_to_within_s <= cfg.deadline_s && score.abs_offset <= cfg.tol_ghz;
        if (!best || score < *best) {
            best = score;
            res.params = pe;
            res.offset = trace;
            res.metrics.freq_offset_at_deadline_ghz = st.offset_at_deadline_ghz;
            res.metrics.time_to_within_5ghz_s = st.time_to_within_s;
        }
        res.iterations_used = it;
        if (ok) {
            res.converged = true;
            break;
        }
        if (it >= cfg.max_iterations) break;
        pe = regression_update(trace, pe, event, laser, awg, cfg);
        trace = simulate_switch_event(event, pe, laser, awg, cfg);
    }
    return res;
}

MatrixResult run_switch_matrix(const std::vector<int>& channels, const DsdbrParams& laser, const RegressionConfig& cfg,
                               const AwgModel& awg, int workers) {
    if (channels.size() < 2) throw std::invalid_argument("switch matrix needs at least two channels");
    MatrixResult out;
    for (int a : channels)
        for (int b : channels)
            if (a != b) out.events.push_back(MatrixEvent{a, b, std::nullopt, {}});

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < out.events.size(); i = next++) {
            auto& ev = out.events[i];
            try {
                ev.result = optimize_preemphasis(make_switch_event(ev.from_channel, ev.to_channel, laser), laser, cfg,
                                                 awg);
            } catch (const std::exception& ex) {
                ev.error = ex.what();
            }
        }
    };
    const int w = std::clamp(workers, 1, static_cast<int>(out.events.size()));
    if (w == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < w; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<double> times;
    for (const auto& ev : out.events) {
        if (!ev.result) continue;
        const auto& m = ev.result->metrics;
        times.push_back(*m.time_to_within_5ghz_s);
        if (std::abs(*m.freq_offset_at_deadline_ghz) > std::abs(out.worst_offset_ghz))
            out.worst_offset_ghz = *m.freq_offset_at_deadline_ghz;
        if (ev.result->converged) ++out.converged;
    }
    if (!times.empty()) {
        out.cdf = build_cdf(times);
        out.worst_time_s = out.cdf->max();
    }
    return out;
}

std::vector<int> spread_channels(const ChannelPlan& plan, int count) {
    if (count < 1 || count > plan.count) throw std::invalid_argument("channel count outside the plan");
    if (count == 1) return {0};
    std::vector<int> out;
    for (int i = 0; i < count; ++i)
        out.push_back(static_cast<int>(std::llround(static_cast<double>(i) * (plan.count - 1) / (count - 1))));
    return out;
}

void write_matrix_csv(std::ostream& os, const MatrixResult& m) {
    os << "from_ch,to_ch,time_to_within_ns,offset_at_deadline_ghz,iterations,converged\n";
    for (const auto& ev : m.events) {
        os << ev.from_channel << ',' << ev.to_channel << ',';
        if (ev.result) {
            os << format_number(*ev.result->metrics.time_to_within_5ghz_s * 1e9) << ','
               << format_number(*ev.result->metrics.freq_offset_at_deadline_ghz) << ','
               << ev.result->iterations_used << ',' << (ev.result->converged ? 1 : 0) << '\n';
        } else {
            os << ",,,0\n";
        }
    }
}

nlohmann::json matrix_summary_json(const MatrixResult& m) {
    nlohmann::json failed = nlohmann::json::array();
    for (const auto& ev : m.events)
        if (!ev.result) failed.push_back({{"from", ev.from_channel}, {"to", ev.to_channel}, {"error", ev.error}});
    return nlohmann::json{{"events", m.events.size()},
                          {"converged", m.converged},
                          {"worst_case_time_ns", m.worst_time_s * 1e9},
                          {"worst_offset_at_deadline_ghz", m.worst_offset_ghz},
                          {"failed", failed}};
}

nlohmann::json preemphasis_table_to_json(const PreemphasisTable& t) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& [key, params] : t) {
        nlohmann::json sections = nlohmann::json::object();
        for (const auto& [name, s] : params) {
            sections[name] = {{"amplitude_ma", s.overshoot_amplitude_ma},
                              {"duration_ns", s.overshoot_duration_s * 1e9},
                              {"decay_tau_ns", s.decay_tau_s ? nlohmann::json(*s.decay_tau_s * 1e9) : nlohmann::json()}};
        }
        events.push_back({{"from", key.first}, {"to", key.second}, {"sections", sections}});
    }
    return nlohmann::json{{"events", events}};
}

PreemphasisTable preemphasis_table_from_json(const nlohmann::json& j) {
    check_fields(j, {"events", "config_hash", "seed"}, "pre-emphasis table");
    PreemphasisTable t;
    for (const auto& ev : j.at("events")) {
        check_fields(ev, {"from", "to", "sections"}, "pre-emphasis event");
        PreemphasisParams params;
        for (const auto& [name, s] : ev.at("sections").items()) {
            check_fields(s, {"amplitude_ma", "duration_ns", "decay_tau_ns"}, "pre-emphasis section");
            SectionPreemphasis p;
            p.overshoot_amplitude_ma = s.at("amplitude_ma").get<double>();
            p.overshoot_duration_s = s.at("duration_ns").get<double>() * 1e-9;
            if (s.contains("decay_tau_ns") && !s.at("decay_tau_ns").is_null())
                p.decay_tau_s = s.at("decay_tau_ns").get<double>() * 1e-9;
            if (p.overshoot_duration_s < 0.0) throw std::invalid_argument("pre-emphasis duration must be >= 0");
            params.emplace(name, p);
        }
        t[{ev.at("from").get<int>(), ev.at("to").get<int>()}] = std::move(params);
    }
    return t;
}

const PreemphasisParams& lookup_preemphasis(const PreemphasisTable& t, int from_channel, int to_channel) {
    auto it = t.find({from_channel, to_channel});
    if (it == t.end())
        throw NotFoundError("no pre-emphasis entry for switch event " + std::to_string(from_channel) + "->" +
                            std::to_string(to_channel));
    return it->second;
}

nlohmann::json to_json(const RegressionConfig& c) {
    return nlohmann::json{
        {"max_iterations", c.max_iterations},
        {"learning_rate", c.learning_rate},
        {"error_window_ns", {c.error_window_start_s * 1e9, c.error_window_end_s * 1e9}},
        {"tol_ghz", c.tol_ghz},
        {"deadline_ns", c.deadline_s * 1e9},
        {"basis", c.basis == RegressionBasis::amplitude_only ? "amplitude_only" : "amplitude_and_duration"},
        {"include_awg_ripple", c.include_awg_ripple},
        {"sim_rate_hz", c.sim_rate_hz},
        {"lead_ns", c.lead_s * 1e9},
        {"burst_ns", c.burst_s * 1e9}};
}

RegressionConfig regression_config_from_json(const nlohmann::json& j) {
    check_fields(j,
                 {"max_iterations", "learning_rate", "error_window_ns", "tol_ghz", "deadline_ns", "basis",
                  "include_awg_ripple", "sim_rate_hz", "lead_ns", "burst_ns"},
                 "regression config");
    RegressionConfig c;
    read_opt(j, "max_iterations", c.max_iterations);
    read_opt(j, "learning_rate", c.learning_rate);
    read_opt(j, "tol_ghz", c.tol_ghz);
    read_opt(j, "include_awg_ripple", c.include_awg_ripple);
    read_opt(j, "sim_rate_hz", c.sim_rate_hz);
    if (auto it = j.find("error_window_ns"); it != j.end()) {
        const auto w = it->get<std::vector<double>>();
        if (w.size() != 2) throw std::invalid_argument("error_window_ns must be [start, end]");
        c.error_window_start_s = w[0] * 1e-9;
        c.error_window_end_s = w[1] * 1e-9;
    }
    if (auto it = j.find("deadline_ns"); it != j.end()) c.deadline_s = it->get<double>() * 1e-9;
    if (auto it = j.find("lead_ns"); it != j.end()) c.lead_s = it->get<double>() * 1e-9;
    if (auto it = j.find("burst_ns"); it != j.end()) c.burst_s = it->get<double>() * 1e-9;
    if (auto it = j.find("basis"); it != j.end()) {
        const auto b = it->get<std::string>();
        if (b == "amplitude_only") c.basis = RegressionBasis::amplitude_only;
        else if (b == "amplitude_and_duration") c.basis = RegressionBasis::amplitude_and_duration;
        else throw std::invalid_argument("unknown regression basis '" + b + "'");
    }
    c.validate();
    return c;
}

}  // namespace lsw
