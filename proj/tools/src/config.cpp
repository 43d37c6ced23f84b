#include "lswitch/config.hpp"

#include <cstdio>
#include <fstream>

#include "lsw/json_fields.hpp"

namespace lswitch {

using nlohmann::json;

namespace {

lsw::PsoConfig pso_from_json(const json& j, lsw::PsoConfig c, const lsw::AwgModel& awg) {
    lsw::check_fields(j,
                      {"n_particles", "n_dims", "inertia_w", "cognitive_c1", "social_c2", "max_iterations", "bounds",
                       "v_max", "init_spread", "patience"},
                      "pso");
    lsw::read_opt(j, "n_particles", c.n_particles);
    lsw::read_opt(j, "n_dims", c.n_dims);
    lsw::read_opt(j, "inertia_w", c.inertia_w);
    lsw::read_opt(j, "cognitive_c1", c.cognitive_c1);
    lsw::read_opt(j, "social_c2", c.social_c2);
    lsw::read_opt(j, "max_iterations", c.max_iterations);
    lsw::read_opt(j, "v_max", c.v_max);
    lsw::read_opt(j, "init_spread", c.init_spread);
    lsw::read_opt(j, "patience", c.patience);
    double lo = awg.amplitude_min;
    double hi = awg.amplitude_max;
    if (auto it = j.find("bounds"); it != j.end()) {
        const auto b = it->get<std::vector<double>>();
        if (b.size() != 2) throw ConfigError("pso.bounds must be [lo, hi]");
        lo = b[0];
        hi = b[1];
    }
    c.set_uniform_bounds(lo, hi);
    return c;
}

lsw::SoaDriveConfig drive_from_json(const json& j, lsw::SoaDriveConfig c) {
    lsw::check_fields(j, {"slot_ns", "drive_rate_hz", "input_power_mw", "sim_rate_hz", "on_current_ma", "off_current_ma"},
                      "soa drive");
    if (auto it = j.find("slot_ns"); it != j.end()) c.slot_s = it->get<double>() * 1e-9;
    lsw::read_opt(j, "drive_rate_hz", c.drive_rate_hz);
    lsw::read_opt(j, "input_power_mw", c.input_power_mw);
    lsw::read_opt(j, "sim_rate_hz", c.sim_rate_hz);
    lsw::read_opt(j, "on_current_ma", c.on_current_ma);
    lsw::read_opt(j, "off_current_ma", c.off_current_ma);
    c.validate();
    return c;
}

json drive_to_json(const lsw::SoaDriveConfig& c) {
    return json{{"slot_ns", c.slot_s * 1e9},         {"drive_rate_hz", c.drive_rate_hz},
                {"input_power_mw", c.input_power_mw}, {"sim_rate_hz", c.sim_rate_hz},
                {"on_current_ma", c.on_current_ma},   {"off_current_ma", c.off_current_ma}};
}

lsw::SystemSimConfig sim_from_json(const json& j, lsw::SystemSimConfig c) {
    lsw::check_fields(j, {"sim_rate_hz", "n_periods", "equalize_slot_power", "edge_guard_ns", "gates_off_current_ma"},
                      "system sim");
    lsw::read_opt(j, "sim_rate_hz", c.sim_rate_hz);
    lsw::read_opt(j, "n_periods", c.n_periods);
    lsw::read_opt(j, "equalize_slot_power", c.equalize_slot_power);
    if (auto it = j.find("edge_guard_ns"); it != j.end()) c.edge_guard_s = it->get<double>() * 1e-9;
    lsw::read_opt(j, "gates_off_current_ma", c.gates_off_current_ma);
    c.validate();
    return c;
}

json sim_to_json(const lsw::SystemSimConfig& c) {
    return json{{"sim_rate_hz", c.sim_rate_hz},
                {"n_periods", c.n_periods},
                {"equalize_slot_power", c.equalize_slot_power},
                {"edge_guard_ns", c.edge_guard_s * 1e9},
                {"gates_off_current_ma", c.gates_off_current_ma}};
}

std::vector<int> channels_from_json(const json& j, const lsw::ChannelPlan& plan) {
    if (j.is_number_integer()) return lsw::spread_channels(plan, j.get<int>());
    auto v = j.get<std::vector<int>>();
    for (int c : v)
        if (c < 0 || c >= plan.count) throw ConfigError("channel " + std::to_string(c) + " is outside the plan");
    return v;
}

}  // namespace

json awg_to_json(const lsw::AwgModel& a) {
    return json{{"sample_rate_hz", a.sample_rate_hz},
                {"analog_bandwidth_hz", a.analog_bandwidth_hz},
                {"amplitude_min", a.amplitude_min},
                {"amplitude_max", a.amplitude_max},
                {"quantization_bits", a.quantization_bits ? json(*a.quantization_bits) : json()},
                {"units", std::string(lsw::to_string(a.units))}};
}

lsw::AwgModel awg_from_json(const json& j, lsw::AwgModel a) {
    lsw::check_fields(j,
                      {"sample_rate_hz", "analog_bandwidth_hz", "amplitude_min", "amplitude_max", "quantization_bits",
                       "units"},
                      "awg");
    lsw::read_opt(j, "sample_rate_hz", a.sample_rate_hz);
    lsw::read_opt(j, "analog_bandwidth_hz", a.analog_bandwidth_hz);
    lsw::read_opt(j, "amplitude_min", a.amplitude_min);
    lsw::read_opt(j, "amplitude_max", a.amplitude_max);
    if (auto it = j.find("quantization_bits"); it != j.end())
        a.quantization_bits = it->is_null() ? std::nullopt : std::optional<int>(it->get<int>());
    if (auto it = j.find("units"); it != j.end()) a.units = lsw::units_from_string(it->get<std::string>());
    a.validate();
    return a;
}

json pso_config_to_json(const lsw::PsoConfig& c) {
    return json{{"n_particles", c.n_particles},
                {"n_dims", c.n_dims},
                {"inertia_w", c.inertia_w},
                {"cognitive_c1", c.cognitive_c1},
                {"social_c2", c.social_c2},
                {"max_iterations", c.max_iterations},
                {"bounds", {c.lower.empty() ? 0.0 : c.lower.front(), c.upper.empty() ? 0.0 : c.upper.front()}},
                {"v_max", c.v_max},
                {"init_spread", c.init_spread},
                {"patience", c.patience}};
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig default_run_config() {
    RunConfig c;
    c.soa.pso.v_max = 9.0;
    c.soa.pso.init_spread = 0.2;
    c.soa.pso.set_uniform_bounds(c.soa.awg.amplitude_min, c.soa.awg.amplitude_max);
    c.laser.channels = lsw::spread_channels(c.devices.laser.plan, 21);
    c.system.regression.deadline_s = lsw::build_schedule(c.system.slot_s).blank_head_s;
    return c;
}

json RunConfig::effective() const {
    json sys_reg = lsw::to_json(system.regression);
    return json{
        {"devices", lsw::device_set_to_json(devices)},
        {"seed", seed},
        {"optimize_soa", {{"pso", pso_config_to_json(soa.pso)}, {"drive", drive_to_json(soa.drive)}, {"awg", awg_to_json(soa.awg)}}},
        {"optimize_laser",
         {{"channels", laser.channels}, {"regression", lsw::to_json(laser.regression)}, {"awg", awg_to_json(laser.awg)}}},
        {"simulate_system",
         {{"slot_ns", system.slot_s * 1e9},
          {"channels", system.channels},
          {"preemphasis", system.preemphasis_path},
          {"soa_drive", system.soa_drive_path},
          {"tol_ghz", system.tol_ghz},
          {"flatness_db", system.flatness_db},
          {"sim", sim_to_json(system.sim)},
          {"regression", sys_reg}}},
        {"power_scaling", {{"params", lsw::to_json(power.params)}, {"n_min", power.n_min}, {"n_max", power.n_max}}}};
}

std::string RunConfig::hash() const { return fnv1a_hex(effective().dump()); }

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
    RunConfig c = default_run_config();
    try {
        lsw::check_fields(j, {"devices", "seed", "optimize_soa", "optimize_laser", "simulate_system", "power_scaling"},
                          "run config");
        if (auto it = j.find("devices"); it != j.end()) {
            if (it->is_string()) {
                std::filesystem::path p = it->get<std::string>();
                if (p.is_relative()) p = base_dir / p;
                c.devices_path = p.string();
                try {
                    c.devices = lsw::load_device_set(p.string());
                } catch (const std::runtime_error& e) {
                    throw ConfigError(e.what());
                }
            } else {
                c.devices = lsw::device_set_from_json(*it);
            }
        }
        lsw::read_opt(j, "seed", c.seed);

        if (auto it = j.find("optimize_soa"); it != j.end()) {
            lsw::check_fields(*it, {"pso", "drive", "awg"}, "optimize_soa");
            if (auto a = it->find("awg"); a != it->end()) c.soa.awg = awg_from_json(*a, c.soa.awg);
            c.soa.pso.set_uniform_bounds(c.soa.awg.amplitude_min, c.soa.awg.amplitude_max);
            if (auto d = it->find("drive"); d != it->end()) c.soa.drive = drive_from_json(*d, c.soa.drive);
            if (auto p = it->find("pso"); p != it->end()) c.soa.pso = pso_from_json(*p, c.soa.pso, c.soa.awg);
            c.soa.pso.validate();
            if (c.soa.pso.n_dims != c.soa.drive.samples_per_period())
                throw ConfigError("optimize_soa.pso.n_dims must equal the drive samples per gate period (" +
                                  std::to_string(c.soa.drive.samples_per_period()) + ")");
        }
        c.laser.channels = lsw::spread_channels(c.devices.laser.plan, std::min(21, c.devices.laser.plan.count));
        if (auto it = j.find("optimize_laser"); it != j.end()) {
            lsw::check_fields(*it, {"channels", "regression", "awg"}, "optimize_laser");
            if (auto a = it->find("awg"); a != it->end()) c.laser.awg = awg_from_json(*a, c.laser.awg);
            if (auto r = it->find("regression"); r != it->end())
                c.laser.regression = lsw::regression_config_from_json(*r);
            if (auto ch = it->find("channels"); ch != it->end())
                c.laser.channels = channels_from_json(*ch, c.devices.laser.plan);
        }
        if (auto it = j.find("simulate_system"); it != j.end()) {
            lsw::check_fields(*it,
                              {"slot_ns", "channels", "preemphasis", "soa_drive", "tol_ghz", "flatness_db", "sim",
                               "regression"},
                              "simulate_system");
            if (auto s = it->find("slot_ns"); s != it->end()) c.system.slot_s = s->get<double>() * 1e-9;
            c.system.regression.deadline_s = lsw::build_schedule(c.system.slot_s).blank_head_s;
            if (auto ch = it->find("channels"); ch != it->end())
                c.system.channels = channels_from_json(*ch, c.devices.laser.plan);
            lsw::read_opt(*it, "preemphasis", c.system.preemphasis_path);
            lsw::read_opt(*it, "soa_drive", c.system.soa_drive_path);
            lsw::read_opt(*it, "tol_ghz", c.system.tol_ghz);
            lsw::read_opt(*it, "flatness_db", c.system.flatness_db);
            if (auto s = it->find("sim"); s != it->end()) c.system.sim = sim_from_json(*s, c.system.sim);
            if (auto r = it->find("regression"); r != it->end()) {
                const double deadline = c.system.regression.deadline_s;
                c.system.regression = lsw::regression_config_from_json(*r);
                if (!r->contains("deadline_ns")) c.system.regression.deadline_s = deadline;
            }
            if (!(c.system.tol_ghz > 0.0) || !(c.system.flatness_db > 0.0))
                throw ConfigError("simulate_system tolerances must be positive");
            lsw::SlotAssignment::alternating(c.system.channels);
        }
        if (auto it = j.find("power_scaling"); it != j.end()) {
            lsw::check_fields(*it, {"params", "n_min", "n_max"}, "power_scaling");
            if (auto p = it->find("params"); p != it->end()) c.power.params = lsw::power_params_from_json(*p);
            lsw::read_opt(*it, "n_min", c.power.n_min);
            lsw::read_opt(*it, "n_max", c.power.n_max);
            if (c.power.n_min < 1 || c.power.n_max < c.power.n_min)
                throw ConfigError("power_scaling needs 1 <= n_min <= n_max");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    } catch (const std::out_of_range& e) {
        throw ConfigError(e.what());
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return run_config_from_json(j, path.parent_path());
}

}  // namespace lswitch
