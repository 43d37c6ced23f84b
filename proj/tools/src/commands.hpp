#pragma once

#include <filesystem>
#include <iosfwd>

#include "lswitch/config.hpp"

namespace lswitch {

struct RunContext {
    RunConfig config;
    std::filesystem::path out_dir;
    int workers = 1;
    bool verbose = false;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;
};

struct SystemFlags {
    bool auto_optimize = false;
    bool gates_off = false;
};

int cmd_optimize_soa(const RunContext& ctx);
int cmd_optimize_laser(const RunContext& ctx);
int cmd_simulate_system(const RunContext& ctx, const SystemFlags& flags);
int cmd_power_scaling(const RunContext& ctx);

}  // namespace lswitch
