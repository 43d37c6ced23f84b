#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lsw/device.hpp"
#include "lsw/power.hpp"
#include "lsw/preemph.hpp"
#include "lsw/pso.hpp"
#include "lsw/signal.hpp"
#include "lsw/soa_optimizer.hpp"
#include "lsw/system.hpp"

namespace lswitch {

/// Invalid or unreadable configuration (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An optimiser artefact the command depends on is absent (exit code 3).
class MissingArtifactError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SoaCommandConfig {
    lsw::PsoConfig pso;
    lsw::SoaDriveConfig drive;
    lsw::AwgModel awg = lsw::AwgModel::soa_gate_default();
};

struct LaserCommandConfig {
    std::vector<int> channels;
    lsw::RegressionConfig regression;
    lsw::AwgModel awg = lsw::AwgModel::laser_default();
};

struct SystemCommandConfig {
    double slot_s = 20e-9;
    std::vector<int> channels{0, 115, 121, 6};
    /// Artefact paths; relative paths resolve against the output directory.
    std::string preemphasis_path = "preemphasis_table.json";
    std::string soa_drive_path = "soa_drive.json";
    double tol_ghz = 5.0;
    double flatness_db = 1.0;
    lsw::SystemSimConfig sim;
    /// Used by --auto-optimize; the deadline defaults to the head blanking.
    lsw::RegressionConfig regression;
};

struct PowerCommandConfig {
    lsw::PowerModelParams params;
    int n_min = 1;
    int n_max = 366;
};

struct RunConfig {
    std::optional<std::string> devices_path;
    lsw::DeviceSet devices;
    std::uint64_t seed = 1;
    SoaCommandConfig soa;
    LaserCommandConfig laser;
    SystemCommandConfig system;
    PowerCommandConfig power;

    /// Fully expanded configuration (defaults filled in). Run-control flags
    /// such as the worker count and output directory are not part of it.
    nlohmann::json effective() const;
    /// 64-bit FNV-1a of effective().dump(), as 16 hex digits.
    std::string hash() const;
};

RunConfig default_run_config();
/// Parses a run configuration. Relative device paths resolve against
/// `base_dir`. Throws ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json awg_to_json(const lsw::AwgModel& a);
lsw::AwgModel awg_from_json(const nlohmann::json& j, lsw::AwgModel defaults);
nlohmann::json pso_config_to_json(const lsw::PsoConfig& c);

std::string fnv1a_hex(const std::string& text);

}  // namespace lswitch
