#pragma once

#include <optional>

#include <nlohmann/json_fwd.hpp>

namespace lsw {

/// Electrical power of the two transmitter designs. The time-multiplexed
/// design needs two lasers and two gates per band; the per-channel design one
/// source and one gate per channel.
struct PowerModelParams {
    double laser_power_w = 2.5;
    double soa_power_w = 0.5;
    double per_channel_source_power_w = 0.5;
    double per_channel_gate_power_w = 0.3;
    int channels_per_band = 122;
    int bands = 3;

    void validate() const;
};

/// ceil(n / channels_per_band) bands of two lasers and two gates. Throws
/// std::out_of_range beyond bands * channels_per_band and
/// std::invalid_argument for n < 1.
double power_time_multiplexed(int n_channels, const PowerModelParams& p);

/// n (source + gate). Throws std::invalid_argument for n < 1.
double power_per_channel_design(int n_channels, const PowerModelParams& p);

/// Smallest n for which the time-multiplexed design draws less power, or
/// nothing when that never happens within the supported bands.
std::optional<int> crossover_channels(const PowerModelParams& p);

struct EndpointCount {
    long long endpoints = 0;
    long long star_couplers = 0;
};

/// N x endpoints over x^2 star couplers. Throws for N or x below 1.
EndpointCount pulse_endpoints(long long nodes_per_pod, long long pods_dim);

nlohmann::json to_json(const PowerModelParams& p);
PowerModelParams power_params_from_json(const nlohmann::json& j);

}  // namespace lsw
