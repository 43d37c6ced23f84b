#include "lsw/power.hpp"

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "lsw/json_fields.hpp"

namespace lsw {

void PowerModelParams::validate() const {
    if (laser_power_w < 0.0 || soa_power_w < 0.0 || per_channel_source_power_w < 0.0 || per_channel_gate_power_w < 0.0)
        throw std::invalid_argument("power model powers must be non-negative");
    if (channels_per_band < 1) throw std::invalid_argument("channels_per_band must be at least 1");
    if (bands < 1 || bands > 3) throw std::invalid_argument("bands must be between 1 and 3");
}

double power_time_multiplexed(int n_channels, const PowerModelParams& p) {
    p.validate();
    if (n_channels < 1) throw std::invalid_argument("channel count must be at least 1");
    if (n_channels > p.bands * p.channels_per_band)
        throw std::out_of_range(std::to_string(n_channels) + " channels exceed " + std::to_string(p.bands) +
                                " bands of " + std::to_string(p.channels_per_band));
    const int bands_used = (n_channels + p.channels_per_band - 1) / p.channels_per_band;
    return bands_used * (2.0 * p.laser_power_w + 2.0 * p.soa_power_w);
}

double power_per_channel_design(int n_channels, const PowerModelParams& p) {
    p.validate();
    if (n_channels < 1) throw std::invalid_argument("channel count must be at least 1");
    return n_channels * (p.per_channel_source_power_w + p.per_channel_gate_power_w);
}

std::optional<int> crossover_channels(const PowerModelParams& p) {
    for (int n = 1; n <= p.bands * p.channels_per_band; ++n)
        if (power_time_multiplexed(n, p) < power_per_channel_design(n, p)) return n;
    return std::nullopt;
}

EndpointCount pulse_endpoints(long long nodes_per_pod, long long pods_dim) {
    if (nodes_per_pod < 1 || pods_dim < 1) throw std::invalid_argument("nodes per pod and pod dimension must be >= 1");
    return EndpointCount{nodes_per_pod * pods_dim, pods_dim * pods_dim};
}

nlohmann::json to_json(const PowerModelParams& p) {
    return nlohmann::json{{"laser_power_w", p.laser_power_w},
                          {"soa_power_w", p.soa_power_w},
                          {"per_channel_source_power_w", p.per_channel_source_power_w},
                          {"per_channel_gate_power_w", p.per_channel_gate_power_w},
                          {"channels_per_band", p.channels_per_band},
                          {"bands", p.bands}};
}

PowerModelParams power_params_from_json(const nlohmann::json& j) {
    check_fields(j,
                 {"laser_power_w", "soa_power_w", "per_channel_source_power_w", "per_channel_gate_power_w",
                  "channels_per_band", "bands"},
                 "power model");
    PowerModelParams p;
    read_opt(j, "laser_power_w", p.laser_power_w);
    read_opt(j, "soa_power_w", p.soa_power_w);
    read_opt(j, "per_channel_source_power_w", p.per_channel_source_power_w);
    read_opt(j, "per_channel_gate_power_w", p.per_channel_gate_power_w);
    read_opt(j, "channels_per_band", p.channels_per_band);
    read_opt(j, "bands", p.bands);
    p.validate();
    return p;
}

}  // namespace lsw
