#include "lswitch/cli.hpp"

#include <CLI11.hpp>
#include <optional>
#include <ostream>

#include "commands.hpp"
#include "lsw/errors.hpp"

namespace lswitch {

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Laser switch transmitter optimisation and simulation"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    int workers = 1;
    bool verbose = false;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--seed", seed, "random seed (overrides the configuration)");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_flag("--verbose", verbose, "progress messages on stderr");

    auto* soa = app.add_subcommand("optimize-soa", "PSO-optimise the SOA gate drive");
    auto* laser = app.add_subcommand("optimize-laser", "pre-emphasis regression over a switch matrix");
    auto* system = app.add_subcommand("simulate-system", "simulate and validate the time-multiplexed transmitter");
    auto* power = app.add_subcommand("power-scaling", "power consumption versus channel count");
    SystemFlags flags;
    system->add_flag("--auto-optimize", flags.auto_optimize, "run the optimisers instead of reading artefacts");
    system->add_flag("--gates-off", flags.gates_off, "hold both gates open");
    for (auto* sub : {soa, laser, system, power}) sub->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kConfigError;
    }

    try {
        RunContext ctx;
        ctx.config = config_path.empty() ? default_run_config() : load_run_config(config_path);
        if (seed) ctx.config.seed = *seed;
        ctx.out_dir = out_dir;
        ctx.workers = workers;
        ctx.verbose = verbose;
        ctx.out = &out;
        ctx.err = &err;
        std::error_code ec;
        std::filesystem::create_directories(ctx.out_dir, ec);
        if (ec) throw ConfigError("cannot create output directory '" + out_dir + "': " + ec.message());

        if (*soa) return cmd_optimize_soa(ctx);
        if (*laser) return cmd_optimize_laser(ctx);
        if (*system) return cmd_simulate_system(ctx, flags);
        return cmd_power_scaling(ctx);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const MissingArtifactError& e) {
        err << "missing artefact: " << e.what() << '\n';
        return kMissingArtifact;
    } catch (const std::invalid_argument& e) {
        err << "invalid parameter: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
}

}  // namespace lswitch
