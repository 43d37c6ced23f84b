#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lsw/device.hpp"
#include "lsw/json_fields.hpp"

namespace lsw {

namespace {

using nlohmann::json;

SoaParams soa_from_json(const json& j) {
    check_fields(j,
                 {"small_signal_gain_db", "saturation_power_dbm", "noise_figure_db", "bias_current_ma",
                  "transparency_current_ma", "natural_freq_hz", "damping_ratio", "off_attenuation_db", "gain_knee"},
                 "soa");
    SoaParams p;
    read_opt(j, "small_signal_gain_db", p.small_signal_gain_db);
    if (auto it = j.find("saturation_power_dbm"); it != j.end())
        p.saturation_power_dbm = it->is_null() ? std::numeric_limits<double>::infinity() : it->get<double>();
    read_opt(j, "noise_figure_db", p.noise_figure_db);
    read_opt(j, "bias_current_ma", p.bias_current_ma);
    read_opt(j, "transparency_current_ma", p.transparency_current_ma);
    read_opt(j, "natural_freq_hz", p.natural_freq_hz);
    read_opt(j, "damping_ratio", p.damping_ratio);
    read_opt(j, "off_attenuation_db", p.off_attenuation_db);
    read_opt(j, "gain_knee", p.gain_knee);
    p.validate();
    return p;
}

json soa_to_json(const SoaParams& p) {
    json j{{"small_signal_gain_db", p.small_signal_gain_db},
           {"noise_figure_db", p.noise_figure_db},
           {"bias_current_ma", p.bias_current_ma},
           {"transparency_current_ma", p.transparency_current_ma},
           {"natural_freq_hz", p.natural_freq_hz},
           {"damping_ratio", p.damping_ratio},
           {"off_attenuation_db", p.off_attenuation_db},
           {"gain_knee", p.gain_knee}};
    if (std::isfinite(p.saturation_power_dbm))
        j["saturation_power_dbm"] = p.saturation_power_dbm;
    else
        j["saturation_power_dbm"] = nullptr;
    return j;
}

LaserSection section_from_json(const json& j) {
    check_fields(j, {"name", "sensitivity_ghz_per_ma", "lags", "preemphasis_duration_s", "preemphasis_decay_tau_s"},
                 "laser section");
    LaserSection s;
    s.name = j.at("name").get<std::string>();
    read_opt(j, "sensitivity_ghz_per_ma", s.sensitivity_ghz_per_ma);
    for (const auto& lj : j.at("lags")) {
        check_fields(lj, {"weight", "tau_s"}, "lag term");
        s.lags.push_back(LagTerm{lj.at("weight").get<double>(), lj.at("tau_s").get<double>()});
    }
    read_opt(j, "preemphasis_duration_s", s.preemphasis_duration_s);
    if (auto it = j.find("preemphasis_decay_tau_s"); it != j.end() && !it->is_null())
        s.preemphasis_decay_tau_s = it->get<double>();
    return s;
}

json section_to_json(const LaserSection& s) {
    json lags = json::array();
    for (const auto& l : s.lags) lags.push_back({{"weight", l.weight}, {"tau_s", l.tau_s}});
    json j{{"name", s.name},
           {"sensitivity_ghz_per_ma", s.sensitivity_ghz_per_ma},
           {"lags", lags},
           {"preemphasis_duration_s", s.preemphasis_duration_s}};
    j["preemphasis_decay_tau_s"] = s.preemphasis_decay_tau_s ? json(*s.preemphasis_decay_tau_s) : json(nullptr);
    return j;
}

ChannelPlan plan_from_json(const json& j) {
    check_fields(j, {"first_frequency_ghz", "spacing_ghz", "count"}, "channel_plan");
    ChannelPlan p;
    read_opt(j, "first_frequency_ghz", p.first_frequency_ghz);
    read_opt(j, "spacing_ghz", p.spacing_ghz);
    read_opt(j, "count", p.count);
    p.validate();
    return p;
}

DsdbrParams laser_from_json(const json& j) {
    check_fields(j,
                 {"sections", "channel_plan", "channel_table", "channel_table_linear", "max_current_ma",
                  "output_power_mw", "reconfig_dip_fraction", "reconfig_dip_tau_s"},
                 "laser");
    DsdbrParams p = DsdbrParams::default_params();
    bool shape_changed = false;
    if (auto it = j.find("sections"); it != j.end()) {
        p.sections.clear();
        for (const auto& sj : *it) p.sections.push_back(section_from_json(sj));
        shape_changed = true;
    }
    if (auto it = j.find("channel_plan"); it != j.end()) {
        p.plan = plan_from_json(*it);
        shape_changed = true;
    }
    read_opt(j, "max_current_ma", p.max_current_ma);
    read_opt(j, "output_power_mw", p.output_power_mw);
    read_opt(j, "reconfig_dip_fraction", p.reconfig_dip_fraction);
    read_opt(j, "reconfig_dip_tau_s", p.reconfig_dip_tau_s);

    if (j.contains("channel_table") && j.contains("channel_table_linear"))
        throw std::invalid_argument("give either channel_table or channel_table_linear, not both");
    if (auto it = j.find("channel_table"); it != j.end()) {
        p.channel_table.clear();
        for (const auto& cj : *it) {
            check_fields(cj, {"channel", "currents_ma", "power_offset_db"}, "channel_table entry");
            ChannelSetting c;
            c.currents_ma = cj.at("currents_ma").get<std::map<std::string, double>>();
            read_opt(cj, "power_offset_db", c.power_offset_db);
            p.channel_table[cj.at("channel").get<int>()] = std::move(c);
        }
    } else if (auto lin = j.find("channel_table_linear"); lin != j.end()) {
        check_fields(*lin, {"ranges_ma", "power_ripple_db"}, "channel_table_linear");
        std::map<std::string, std::pair<double, double>> ranges;
        for (const auto& [name, r] : lin->at("ranges_ma").items()) {
            const auto v = r.get<std::vector<double>>();
            if (v.size() != 2) throw std::invalid_argument("channel_table_linear range must be [first, last]");
            ranges[name] = {v[0], v[1]};
        }
        p.channel_table = linear_channel_table(p.plan, ranges, lin->value("power_ripple_db", 0.0));
    } else if (shape_changed) {
        p.channel_table = linear_channel_table(p.plan, {{"rear", {5.0, 50.0}}, {"front", {50.0, 5.0}}}, 0.3);
        // Drop columns for sections the caller removed; missing ones fail validation.
        for (auto& [_, c] : p.channel_table) {
            std::erase_if(c.currents_ma, [&](const auto& kv) {
                for (const auto& s : p.sections)
                    if (s.name == kv.first) return false;
                return true;
            });
        }
    }
    p.validate();
    return p;
}

json laser_to_json(const DsdbrParams& p) {
    json sections = json::array();
    for (const auto& s : p.sections) sections.push_back(section_to_json(s));
    json table = json::array();
    for (const auto& [k, c] : p.channel_table)
        table.push_back({{"channel", k}, {"currents_ma", c.currents_ma}, {"power_offset_db", c.power_offset_db}});
    return json{{"sections", sections},
                {"channel_plan",
                 {{"first_frequency_ghz", p.plan.first_frequency_ghz},
                  {"spacing_ghz", p.plan.spacing_ghz},
                  {"count", p.plan.count}}},
                {"channel_table", table},
                {"max_current_ma", p.max_current_ma},
                {"output_power_mw", p.output_power_mw},
                {"reconfig_dip_fraction", p.reconfig_dip_fraction},
                {"reconfig_dip_tau_s", p.reconfig_dip_tau_s}};
}

}  // namespace

DeviceSet device_set_from_json(const json& j) {
    check_fields(j, {"soa", "laser"}, "device document");
    DeviceSet d;
    try {
        if (auto it = j.find("soa"); it != j.end()) d.soa = soa_from_json(*it);
        if (auto it = j.find("laser"); it != j.end()) d.laser = laser_from_json(*it);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("bad device document: ") + e.what());
    }
    return d;
}

json device_set_to_json(const DeviceSet& d) { return json{{"soa", soa_to_json(d.soa)}, {"laser", laser_to_json(d.laser)}}; }

DeviceSet load_device_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open device file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("device file '" + path + "' is not valid JSON: " + e.what());
    }
    return device_set_from_json(j);
}

}  // namespace lsw
