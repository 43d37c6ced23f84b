#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include "lsw/errors.hpp"
#include "lsw/format.hpp"
#include "lswitch/cli.hpp"

namespace lswitch {

using nlohmann::json;
using lsw::format_number;

namespace {

std::string csv_banner(const RunContext& ctx) {
    return "# config_hash=" + ctx.config.hash() + " seed=" + std::to_string(ctx.config.seed) + "\n";
}

void write_file(const RunContext& ctx, const std::string& name, const std::string& body) {
    const auto path = ctx.out_dir / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write output file '" + path.string() + "'");
    f << body;
    if (ctx.verbose) *ctx.err << "wrote " << path.string() << '\n';
}

void write_csv(const RunContext& ctx, const std::string& name, const std::string& rows) {
    write_file(ctx, name, csv_banner(ctx) + rows);
}

void write_json(const RunContext& ctx, const std::string& name, json j) {
    j["config_hash"] = ctx.config.hash();
    j["seed"] = ctx.config.seed;
    write_file(ctx, name, j.dump(2) + "\n");
}

std::string ns(double s) { return format_number(s * 1e9); }

std::string opt_ns(const std::optional<double>& s) { return s ? format_number(*s * 1e9) + " ns" : "n/a"; }

std::filesystem::path resolve(const RunContext& ctx, const std::string& p) {
    std::filesystem::path path = p;
    return path.is_relative() ? ctx.out_dir / path : path;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open artefact '" + path.string() + "'");
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw ConfigError("artefact '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

lsw::SoaOptimization run_soa_optimizer(const RunContext& ctx) {
    lsw::PsoConfig pso = ctx.config.soa.pso;
    pso.seed = ctx.config.seed;
    return lsw::optimize_soa_drive(ctx.config.devices.soa, ctx.config.soa.awg, pso, ctx.config.soa.drive, ctx.workers);
}

json soa_drive_artifact(const lsw::SampledWaveform& drive) { return json{{"drive", lsw::waveform_to_json(drive)}}; }

}  // namespace

int cmd_optimize_soa(const RunContext& ctx) {
    const auto& cfg = ctx.config;
    if (ctx.verbose) *ctx.err << "optimising gate drive: " << cfg.soa.pso.n_particles << " particles x "
                              << cfg.soa.pso.n_dims << " points, up to " << cfg.soa.pso.max_iterations << " iterations\n";
    const auto r = run_soa_optimizer(ctx);
    const lsw::SoaGateProblem problem(cfg.devices.soa, cfg.soa.awg, cfg.soa.drive);

    std::ostringstream drive;
    drive << "time_ns,drive_ma,baseline_ma\n";
    for (std::size_t i = 0; i < r.drive.size(); ++i)
        drive << ns(r.drive.time_at(i)) << ',' << format_number(r.drive[i]) << ',' << format_number(r.baseline_drive[i])
              << '\n';
    write_csv(ctx, "soa_drive.csv", drive.str());
    write_json(ctx, "soa_drive.json", soa_drive_artifact(r.drive));

    std::ostringstream conv;
    lsw::write_convergence_csv(conv, r.pso);
    write_csv(ctx, "soa_convergence.csv", conv.str());

    std::ostringstream wave;
    wave << "time_ns,optimized_mw,baseline_mw,set_point_mw\n";
    const auto& sp = problem.set_point();
    for (std::size_t i = 0; i < sp.size(); ++i)
        wave << ns(sp.time_at(i)) << ',' << format_number(r.optimized.output[i]) << ','
             << format_number(r.baseline.output[i]) << ',' << format_number(sp[i]) << '\n';
    write_csv(ctx, "soa_output.csv", wave.str());

    write_json(ctx, "soa_metrics.json",
               json{{"baseline", lsw::to_json(r.baseline.metrics)},
                    {"optimized", lsw::to_json(r.optimized.metrics)},
                    {"set_point", {{"on_level_mw", problem.on_level_mw()}, {"off_level_mw", problem.off_level_mw()}}},
                    {"square_fallback", r.square_fallback},
                    {"pso", lsw::pso_result_to_json(r.pso, ctx.verbose)}});

    *ctx.out << "gate drive      settle(+-5%)   rise(10-90%)\n"
             << "square baseline " << opt_ns(r.baseline.metrics.settle_pm5pct_s) << "   "
             << opt_ns(r.baseline.metrics.rise_10_90_s) << '\n'
             << "optimised       " << opt_ns(r.optimized.metrics.settle_pm5pct_s) << "   "
             << opt_ns(r.optimized.metrics.rise_10_90_s) << '\n';
    if (r.square_fallback) *ctx.out << "swarm result settled later than the square drive; kept the square drive\n";
    return kSuccess;
}

int cmd_optimize_laser(const RunContext& ctx) {
    const auto& cfg = ctx.config;
    if (ctx.verbose) *ctx.err << "optimising pre-emphasis for " << cfg.laser.channels.size() << " channels\n";
    const auto m = lsw::run_switch_matrix(cfg.laser.channels, cfg.devices.laser, cfg.laser.regression, cfg.laser.awg,
                                          ctx.workers);

    std::ostringstream events;
    lsw::write_matrix_csv(events, m);
    write_csv(ctx, "laser_events.csv", events.str());

    if (m.cdf) {
        std::ostringstream cdf;
        lsw::write_cdf_csv(cdf, *m.cdf, 1e9, "time_ns");
        write_csv(ctx, "laser_cdf.csv", cdf.str());
    }

    lsw::PreemphasisTable table;
    const lsw::MatrixEvent* worst = nullptr;
    for (const auto& ev : m.events) {
        if (!ev.result) continue;
        table[{ev.from_channel, ev.to_channel}] = ev.result->params;
        if (!worst || *ev.result->metrics.time_to_within_5ghz_s > *worst->result->metrics.time_to_within_5ghz_s)
            worst = &ev;
    }
    write_json(ctx, "preemphasis_table.json", lsw::preemphasis_table_to_json(table));

    json summary = lsw::matrix_summary_json(m);
    summary["channels"] = cfg.laser.channels;
    if (worst) summary["worst_case_event"] = {{"from", worst->from_channel}, {"to", worst->to_channel}};
    write_json(ctx, "laser_summary.json", summary);

    if (worst) {
        const auto& res = *worst->result;
        std::ostringstream trace;
        trace << "time_ns,unoptimized_ghz,optimized_ghz\n";
        for (std::size_t i = 0; i < res.offset.size(); ++i)
            trace << ns(res.offset.time_at(i)) << ',' << format_number(res.unoptimized[i]) << ','
                  << format_number(res.offset[i]) << '\n';
        write_csv(ctx, "laser_worst_trace.csv", trace.str());
    }

    *ctx.out << m.events.size() << " switch events, " << m.converged << " converged; worst time to +-"
             << format_number(cfg.laser.regression.tol_ghz) << " GHz " << format_number(m.worst_time_s * 1e9)
             << " ns, worst offset at deadline " << format_number(m.worst_offset_ghz) << " GHz\n";
    return kSuccess;
}

int cmd_simulate_system(const RunContext& ctx, const SystemFlags& flags) {
    const auto& cfg = ctx.config;
    const auto schedule = lsw::build_schedule(cfg.system.slot_s);
    const auto assignment = lsw::SlotAssignment::alternating(cfg.system.channels);
    const auto laser_awg = cfg.laser.awg;

    lsw::PreemphasisTable table;
    std::optional<lsw::SampledWaveform> drive;
    if (flags.auto_optimize) {
        if (ctx.verbose) *ctx.err << "auto-optimising gate drive and pre-emphasis\n";
        drive = run_soa_optimizer(ctx).drive;
        table = lsw::optimize_assignment_preemphasis(assignment, cfg.devices.laser, cfg.system.regression, laser_awg);
        write_json(ctx, "system_soa_drive.json", soa_drive_artifact(*drive));
        write_json(ctx, "system_preemphasis_table.json", lsw::preemphasis_table_to_json(table));
    } else {
        const auto pe_path = resolve(ctx, cfg.system.preemphasis_path);
        const auto drive_path = resolve(ctx, cfg.system.soa_drive_path);
        for (const auto& p : {pe_path, drive_path})
            if (!std::filesystem::exists(p))
                throw MissingArtifactError("'" + p.string() +
                                           "' not found (run the optimiser first or pass --auto-optimize)");
        try {
            table = lsw::preemphasis_table_from_json(read_json_file(pe_path));
            const json dj = read_json_file(drive_path);
            drive = lsw::waveform_from_json(dj.at("drive"));
        } catch (const json::exception& e) {
            throw ConfigError(std::string("malformed artefact: ") + e.what());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("malformed artefact: ") + e.what());
        }
    }

    lsw::SystemSimConfig sim = cfg.system.sim;
    sim.gates_enabled = !flags.gates_off;
    const lsw::SystemResult r = [&] {
        try {
            return lsw::simulate_transmitter(assignment, lsw::transmitter_devices(cfg.devices), schedule, laser_awg,
                                             cfg.soa.awg, table, *drive, sim);
        } catch (const lsw::NotFoundError& e) {
            throw MissingArtifactError(e.what());
        }
    }();
    const auto report = lsw::validate_slots(r.slots, cfg.system.tol_ghz, cfg.system.flatness_db);

    std::ostringstream power;
    power << "time_ns,power_mw,gate1_mw,gate2_mw\n";
    for (std::size_t i = 0; i < r.power_out.size(); ++i)
        power << ns(r.power_out.time_at(i)) << ',' << format_number(r.power_out[i]) << ','
              << format_number(r.gate_out[0][i]) << ',' << format_number(r.gate_out[1][i]) << '\n';
    write_csv(ctx, "system_power.csv", power.str());

    std::ostringstream freq;
    freq << "time_ns,offset_ghz,laser1_ghz,laser2_ghz\n";
    for (std::size_t i = 0; i < r.freq_out.size(); ++i)
        freq << ns(r.freq_out.time_at(i)) << ',' << format_number(r.freq_out[i]) << ','
             << format_number(r.laser_freq[0][i]) << ',' << format_number(r.laser_freq[1][i]) << '\n';
    write_csv(ctx, "system_freq.csv", freq.str());

    std::ostringstream slots;
    lsw::write_slot_csv(slots, r.slots);
    write_csv(ctx, "system_slots.csv", slots.str());

    json transitions = json::array();
    for (const auto& s : r.slots)
        transitions.push_back(s.transition_90_90_s ? json(*s.transition_90_90_s * 1e9) : json());
    json v = lsw::to_json(report);
    v["gates_enabled"] = sim.gates_enabled;
    v["extinction_db"] = r.extinction_db;
    v["gates_complementary"] = r.gates_complementary;
    v["transitions_90_90_ns"] = transitions;
    write_json(ctx, "system_validation.json", v);

    for (const auto& s : r.slots) {
        *ctx.out << "slot " << s.slot_index << " laser " << s.laser_id << " ch " << s.channel
                 << ": max |offset| " << format_number(s.max_abs_offset_ghz) << " GHz, flatness "
                 << format_number(s.flatness_db) << " dB, 90-90 transition " << opt_ns(s.transition_90_90_s) << '\n';
    }
    *ctx.out << "extinction " << format_number(r.extinction_db) << " dB; validation "
             << (report.all_pass ? "PASS" : "FAIL") << '\n';
    return report.all_pass ? kSuccess : kValidationFailed;
}

int cmd_power_scaling(const RunContext& ctx) {
    const auto& p = ctx.config.power;
    std::ostringstream rows;
    rows << "n,time_multiplexed_w,per_channel_w\n";
    const int n_top = p.n_max;
    if (n_top > p.params.bands * p.params.channels_per_band)
        throw ConfigError("power_scaling.n_max exceeds the channels of " + std::to_string(p.params.bands) + " bands");
    for (int n = p.n_min; n <= n_top; ++n)
        rows << n << ',' << format_number(lsw::power_time_multiplexed(n, p.params)) << ','
             << format_number(lsw::power_per_channel_design(n, p.params)) << '\n';
    write_csv(ctx, "power_scaling.csv", rows.str());

    const auto cross = lsw::crossover_channels(p.params);
    write_json(ctx, "power_summary.json",
               json{{"crossover_channels", cross ? json(*cross) : json()},
                    {"params", lsw::to_json(p.params)},
                    {"n_min", p.n_min},
                    {"n_max", n_top}});
    *ctx.out << "crossover: " << (cross ? std::to_string(*cross) + " channels" : std::string("none")) << '\n';
    return kSuccess;
}

}  // namespace lswitch
