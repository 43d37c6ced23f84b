// Acceptance run. Prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails. `--full` adds the 21-channel switch matrix and
// reruns the determinism check with the default configuration.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "lsw/device.hpp"
#include "lsw/metrics.hpp"
#include "lsw/power.hpp"
#include "lsw/preemph.hpp"
#include "lsw/pso.hpp"
#include "lsw/soa_optimizer.hpp"
#include "lsw/system.hpp"
#include "lswitch/cli.hpp"
#include "lswitch/config.hpp"

namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kSpanGhz = 6050.0;
constexpr double kSpanTolGhz = 1e-6;
constexpr double kWavelengthTolNm = 0.02;
constexpr double kOracleRate = 100e9;
constexpr double kOracleSamples = 2.0;
constexpr double kOvershootRelTol = 0.01;
constexpr double kBowlFitness = 1e-6;
constexpr int kBowlIterations = 200;
constexpr double kSquareSettleLo = 3.5e-9, kSquareSettleHi = 4.0e-9;
constexpr double kSquareRiseLo = 0.6e-9, kSquareRiseHi = 0.8e-9;
constexpr double kSettleRatio = 0.5;
constexpr double kTolGhz = 5.0;
constexpr double kDeadline = 20e-9;
constexpr int kRegressionIterations = 20;
constexpr double kTransitionMax = 1.5e-9;
constexpr double kExtinctionMin = 22.0;
constexpr int kCrossover = 8;

struct Check {
    std::vector<std::string> failures;
    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string ns(double s) { return fmt(s * 1e9) + " ns"; }

template <typename F>
lsw::SampledWaveform sample(F f, double t0, double t1, double rate) {
    const auto n = static_cast<std::size_t>(std::llround((t1 - t0) * rate));
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = f(t0 + static_cast<double>(i) / rate);
    return lsw::SampledWaveform(v, rate, lsw::Units::mW, t0);
}

// Shared between the SOA and system criteria.
struct Shared {
    std::optional<lsw::SampledWaveform> gate_drive;
};

void channel_plan(Check& c, std::string& detail) {
    const auto f = lsw::channel_frequencies(lsw::ChannelPlan{});
    c.expect(f.size() == 122, "122 frequencies, got " + std::to_string(f.size()));
    if (f.empty()) return;
    const double span = f.back() - f.front();
    c.expect(std::abs(span - kSpanGhz) <= kSpanTolGhz, "span " + fmt(span) + " GHz");
    constexpr double kC = 299792458.0;
    const double long_nm = kC / f.front();  // GHz -> nm: c / (f * 1e9) * 1e9
    const double short_nm = kC / f.back();
    c.expect(std::abs(short_nm - 1524.11) <= kWavelengthTolNm, "short end " + fmt(short_nm) + " nm");
    c.expect(std::abs(long_nm - 1572.48) <= kWavelengthTolNm, "long end " + fmt(long_nm) + " nm");
    detail = "span " + fmt(span) + " GHz, " + fmt(short_nm) + "-" + fmt(long_nm) + " nm";
}

void metric_oracles(Check& c, std::string& detail) {
    const double tol = kOracleSamples / kOracleRate;
    double worst = 0;
    for (double tau : {0.3e-9, 1e-9, 2.5e-9}) {
        const auto w = sample([&](double t) { return t <= 0 ? 0.0 : 1 - std::exp(-t / tau); }, -2e-9, 20 * tau,
                              kOracleRate);
        const double settle = lsw::settling_time(w, 1.0, 0.05, 0.0);
        const double rise = lsw::rise_time_10_90(w, 0.0);
        c.expect(std::abs(settle - tau * std::log(20.0)) <= tol, "settle tau=" + ns(tau) + ": " + ns(settle));
        c.expect(std::abs(rise - tau * std::log(9.0)) <= tol, "rise tau=" + ns(tau) + ": " + ns(rise));
        worst = std::max({worst, std::abs(settle - tau * std::log(20.0)), std::abs(rise - tau * std::log(9.0))});
    }
    double worst_os = 0;
    const double wn = 2 * std::numbers::pi * 500e6;
    for (double zeta : {0.2, 0.35, 0.5}) {
        const double r = std::sqrt(1 - zeta * zeta);
        const auto w = sample(
            [&](double t) {
                return t <= 0 ? 0.0
                              : 1 - std::exp(-zeta * wn * t) * (std::cos(wn * r * t) + zeta / r * std::sin(wn * r * t));
            },
            -5e-9, 60e-9, kOracleRate);
        const double oracle = std::exp(-std::numbers::pi * zeta / r);
        const double got = lsw::overshoot_fraction(w, 0.0);
        const double rel = std::abs(got - oracle) / oracle;
        c.expect(rel <= kOvershootRelTol, "overshoot zeta=" + fmt(zeta) + ": " + fmt(got) + " vs " + fmt(oracle));
        worst_os = std::max(worst_os, rel);
    }
    detail = "worst timing error " + fmt(worst * kOracleRate) + " samples, worst overshoot error " +
             fmt(100 * worst_os) + "%";
}

void pso_engine(Check& c, std::string& detail) {
    const auto bowl = [](std::span<const double> x) {
        const double dx = x[0] - 1.25, dy = x[1] + 0.5;
        return dx * dx + dy * dy;
    };
    lsw::PsoConfig cfg;
    cfg.n_particles = 40;
    cfg.n_dims = 2;
    cfg.max_iterations = kBowlIterations;
    cfg.patience = kBowlIterations;
    cfg.set_uniform_bounds(-5.0, 5.0);
    cfg.v_max = 2.0;
    const auto r = lsw::pso_optimize(bowl, cfg);
    c.expect(r.best_fitness < kBowlFitness, "bowl best " + fmt(r.best_fitness));
    c.expect(r.iterations <= kBowlIterations, "bowl iterations " + std::to_string(r.iterations));

    const auto rastrigin = [](std::span<const double> x) {
        double s = 10.0 * static_cast<double>(x.size());
        for (double v : x) s += v * v - 10.0 * std::cos(2 * std::numbers::pi * v);
        return s;
    };
    lsw::PsoConfig sweep = cfg;
    sweep.n_dims = 6;
    sweep.max_iterations = sweep.patience = 60;
    sweep.set_uniform_bounds(-5.12, 5.12);
    int monotone = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        sweep.seed = seed;
        const auto s = lsw::pso_optimize(rastrigin, sweep);
        monotone += std::is_sorted(s.fitness_history.rbegin(), s.fitness_history.rend()) ? 1 : 0;
    }
    c.expect(monotone == 20, std::to_string(20 - monotone) + " seeds with increasing history");

    sweep.seed = 99;
    const auto a = lsw::pso_optimize(rastrigin, sweep), b = lsw::pso_optimize(rastrigin, sweep);
    c.expect(a.best_position == b.best_position && a.fitness_history == b.fitness_history, "same seed differs");
    const auto p = lsw::pso_optimize(rastrigin, sweep, {}, 4);
    c.expect(p.best_position == a.best_position && p.fitness_history == a.fitness_history, "serial != parallel");
    detail = "bowl " + fmt(r.best_fitness) + " after " + std::to_string(r.iterations) + " iterations, " +
             std::to_string(monotone) + "/20 monotone";
}

void soa_optimization(Check& c, std::string& detail, Shared& shared) {
    const auto cfg = lswitch::default_run_config();
    lsw::PsoConfig pso = cfg.soa.pso;
    pso.seed = cfg.seed;
    c.expect(pso.n_particles == 160 && pso.n_dims == 240 && pso.max_iterations <= 500, "default budget changed");
    const auto r = lsw::optimize_soa_drive(cfg.devices.soa, cfg.soa.awg, pso, cfg.soa.drive);
    shared.gate_drive = r.drive;
    const auto& b = r.baseline.metrics;
    const auto& o = r.optimized.metrics;
    if (!b.settle_pm5pct_s || !b.rise_10_90_s || !o.settle_pm5pct_s || !o.rise_10_90_s) {
        c.expect(false, "a settling or rise time is missing");
        return;
    }
    c.expect(*b.settle_pm5pct_s >= kSquareSettleLo && *b.settle_pm5pct_s <= kSquareSettleHi,
             "square settle " + ns(*b.settle_pm5pct_s));
    c.expect(*b.rise_10_90_s >= kSquareRiseLo && *b.rise_10_90_s <= kSquareRiseHi, "square rise " + ns(*b.rise_10_90_s));
    c.expect(*o.settle_pm5pct_s <= kSettleRatio * *b.settle_pm5pct_s, "optimised settle " + ns(*o.settle_pm5pct_s));
    c.expect(*o.rise_10_90_s <= *b.rise_10_90_s, "optimised rise " + ns(*o.rise_10_90_s));
    c.expect(!r.square_fallback, "swarm result rejected");
    detail = "square " + ns(*b.settle_pm5pct_s) + " / " + ns(*b.rise_10_90_s) + ", optimised " +
             ns(*o.settle_pm5pct_s) + " / " + ns(*o.rise_10_90_s) + " after " + std::to_string(r.pso.iterations) +
             " iterations";
}

void check_matrix(Check& c, const lsw::MatrixResult& m, std::size_t expected, const std::string& label) {
    c.expect(m.events.size() == expected, label + " has " + std::to_string(m.events.size()) + " events");
    double worst = 0;
    int passed = 0;
    for (const auto& e : m.events) {
        if (!e.result) {
            c.expect(false, label + " event " + std::to_string(e.from_channel) + "->" + std::to_string(e.to_channel) +
                                " failed: " + e.error);
            continue;
        }
        const double t = *e.result->metrics.time_to_within_5ghz_s;
        worst = std::max(worst, t);
        passed += (e.result->converged && t <= kDeadline) ? 1 : 0;
    }
    c.expect(passed == static_cast<int>(expected), label + ": " + std::to_string(passed) + " events pass");
    if (!m.cdf) {
        c.expect(false, label + " has no CDF");
        return;
    }
    c.expect(std::is_sorted(m.cdf->values.begin(), m.cdf->values.end()) &&
                 std::is_sorted(m.cdf->fractions.begin(), m.cdf->fractions.end()),
             label + " CDF not monotone");
    c.expect(m.cdf->max() == worst && m.worst_time_s == worst, label + " CDF max differs from worst case");
}

void preemphasis(Check& c, std::string& detail, bool full) {
    const auto laser = lsw::DsdbrParams::default_params();
    const auto awg = lsw::AwgModel::laser_default();
    lsw::RegressionConfig cfg;
    cfg.tol_ghz = kTolGhz;
    cfg.deadline_s = kDeadline;
    cfg.max_iterations = kRegressionIterations;

    const auto ev = lsw::make_switch_event(0, 121, laser);
    c.expect(std::abs(ev.currents.at("rear").swing() - 45.0) < 1e-9, "0->121 is not the 45 mA swing");
    const auto r = lsw::optimize_preemphasis(ev, laser, cfg, awg);
    const auto before = lsw::freq_offset_stats(r.unoptimized.slice(0.0, cfg.burst_s), kDeadline, kTolGhz);
    c.expect(before.time_to_within_s > kDeadline, "unoptimised worst case already passes");
    c.expect(r.converged && r.iterations_used <= kRegressionIterations &&
                 *r.metrics.time_to_within_5ghz_s <= kDeadline,
             "optimised worst case " + ns(*r.metrics.time_to_within_5ghz_s));

    const auto five = lsw::run_switch_matrix(lsw::spread_channels(laser.plan, 5), laser, cfg, awg);
    check_matrix(c, five, 20, "5-channel matrix");
    detail = "45 mA event " + ns(before.time_to_within_s) + " -> " + ns(*r.metrics.time_to_within_5ghz_s) + " in " +
             std::to_string(r.iterations_used) + " iterations; 5-channel worst " + ns(five.worst_time_s);
    if (full) {
        const auto all = lsw::run_switch_matrix(lsw::spread_channels(laser.plan, 21), laser, cfg, awg);
        check_matrix(c, all, 420, "21-channel matrix");
        detail += "; 21-channel worst " + ns(all.worst_time_s) + ", " + std::to_string(all.converged) + "/420 converged";
    }
}

void system_simulation(Check& c, std::string& detail, const Shared& shared) {
    if (!shared.gate_drive) {
        c.expect(false, "no gate drive from the SOA criterion");
        return;
    }
    const auto cfg = lswitch::default_run_config();
    const auto assignment = lsw::SlotAssignment::alternating(cfg.system.channels);
    const auto schedule = lsw::build_schedule(cfg.system.slot_s);
    const auto table = lsw::optimize_assignment_preemphasis(assignment, cfg.devices.laser, cfg.system.regression,
                                                            cfg.laser.awg);
    const auto r = lsw::simulate_transmitter(assignment, lsw::transmitter_devices(cfg.devices), schedule, cfg.laser.awg,
                                             cfg.soa.awg, table, *shared.gate_drive, cfg.system.sim);
    const auto v = lsw::validate_slots(r.slots, kTolGhz, 1.0);
    c.expect(v.all_pass, "slot validation fails");

    // Exactly one nominal gate open at every reported sample.
    bool complementary = r.gates_complementary;
    for (std::size_t i = 0; i < r.power_out.size(); ++i) {
        const double t = r.power_out.time_at(i);
        complementary = complementary && (lsw::gate_open(schedule, 1, t) != lsw::gate_open(schedule, 2, t));
    }
    c.expect(complementary, "gates not complementary");

    double worst_t = 0, worst_f = 0;
    int transitions = 0;
    for (const auto& s : r.slots) {
        worst_f = std::max(worst_f, s.max_abs_offset_ghz);
        if (!s.transition_90_90_s) continue;
        ++transitions;
        worst_t = std::max(worst_t, *s.transition_90_90_s);
    }
    c.expect(transitions == static_cast<int>(r.slots.size()), std::to_string(transitions) + " transitions measured");
    c.expect(worst_t < kTransitionMax, "slowest transition " + ns(worst_t));
    c.expect(r.extinction_db >= kExtinctionMin, "extinction " + fmt(r.extinction_db) + " dB");
    detail = std::to_string(transitions) + " transitions, slowest " + ns(worst_t) + ", max |offset| " + fmt(worst_f) +
             " GHz, extinction " + fmt(r.extinction_db) + " dB";
}

void power_scaling(Check& c, std::string& detail) {
    const lsw::PowerModelParams p;
    const auto x = lsw::crossover_channels(p);
    c.expect(x && *x == kCrossover, "crossover " + (x ? std::to_string(*x) : std::string("none")));
    const double flat = lsw::power_time_multiplexed(1, p);
    bool constant = true;
    for (int n = 1; n <= 122; ++n) constant = constant && lsw::power_time_multiplexed(n, p) == flat;
    c.expect(constant, "time-multiplexed power varies within the first band");
    c.expect(lsw::power_time_multiplexed(123, p) > flat, "no step at 123 channels");
    const double slope = lsw::power_per_channel_design(2, p) - lsw::power_per_channel_design(1, p);
    bool linear = slope > 0;
    for (int n = 1; n <= 366; ++n)
        linear = linear && std::abs(lsw::power_per_channel_design(n, p) - n * slope) <= 1e-9 * n;
    c.expect(linear, "per-channel design not linear");
    detail = "crossover " + (x ? std::to_string(*x) : std::string("none")) + ", " + fmt(flat) + " W per band";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism(Check& c, std::string& detail, bool full) {
    const fs::path root = fs::temp_directory_path() / "lsw_acceptance_determinism";
    fs::remove_all(root);
    std::vector<std::string> base;
    if (!full) base = {"--config", (fs::path(LSW_CONFIG_DIR) / "smoke.json").string()};
    const std::vector<std::vector<std::string>> commands{
        {"optimize-soa"}, {"optimize-laser"}, {"power-scaling"}, {"simulate-system", "--auto-optimize"}};
    std::size_t compared = 0;
    for (const auto& cmd : commands) {
        std::vector<int> codes;
        for (const char* run : {"a", "b"}) {
            auto args = base;
            args.insert(args.end(), {"--out", (root / cmd[0] / run).string()});
            args.insert(args.end(), cmd.begin(), cmd.end());
            std::ostringstream out, err;
            codes.push_back(lswitch::run(args, out, err));
        }
        c.expect(codes[0] == codes[1], cmd[0] + " exit codes differ");
        c.expect(codes[0] == lswitch::kSuccess || codes[0] == lswitch::kValidationFailed,
                 cmd[0] + " exited " + std::to_string(codes[0]));
        const fs::path a = root / cmd[0] / "a", b = root / cmd[0] / "b";
        if (!fs::exists(a)) continue;
        for (const auto& e : fs::directory_iterator(a)) {
            ++compared;
            c.expect(slurp(e.path()) == slurp(b / e.path().filename()), cmd[0] + ": " +
                                                                           e.path().filename().string() + " differs");
        }
    }
    c.expect(compared > 0, "no files compared");
    fs::remove_all(root);
    detail = std::to_string(compared) + " files byte-identical across reruns (" +
             (full ? "default" : "smoke") + " configuration)";
}

}  // namespace

int main(int argc, char** argv) {
    bool full = false;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--full") {
            full = true;
        } else {
            std::cerr << "usage: " << argv[0] << " [--full]\n";
            return 2;
        }
    }

    Shared shared;
    const std::vector<std::pair<std::string, std::function<void(Check&, std::string&)>>> criteria{
        {"1 channel plan", channel_plan},
        {"2 metric oracles", metric_oracles},
        {"3 PSO engine", pso_engine},
        {"4 SOA drive optimisation", [&](Check& c, std::string& d) { soa_optimization(c, d, shared); }},
        {"5 pre-emphasis", [&](Check& c, std::string& d) { preemphasis(c, d, full); }},
        {"6 system simulation", [&](Check& c, std::string& d) { system_simulation(c, d, shared); }},
        {"7 power scaling", power_scaling},
        {"8 determinism", [&](Check& c, std::string& d) { determinism(c, d, full); }},
    };

    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Check c;
        std::string detail;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            fn(c, detail);
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool ok = c.failures.empty();
        failed += ok ? 0 : 1;
        std::cout << (ok ? "PASS " : "FAIL ") << name << " (" << fmt(secs) << " s)";
        if (!detail.empty()) std::cout << ": " << detail;
        std::cout << '\n';
        for (const auto& f : c.failures) std::cout << "     - " << f << '\n';
        std::cout.flush();
    }
    std::cout << (failed == 0 ? "all criteria pass" : std::to_string(failed) + " criteria fail") << '\n';
    return failed == 0 ? 0 : 1;
}
