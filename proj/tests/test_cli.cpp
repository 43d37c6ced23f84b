#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lswitch/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = LSW_CONFIG_DIR;

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("lswitch_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override {
        if (!HasFailure()) fs::remove_all(dir_);
    }

    int run(std::vector<std::string> args, const fs::path& out_dir) {
        args.insert(args.begin(), {"--out", out_dir.string()});
        out_.str("");
        err_.str("");
        return lswitch::run(args, out_, err_);
    }
    int run(std::vector<std::string> args) { return run(std::move(args), dir_ / "out"); }

    fs::path write_config(const std::string& name, const json& j) const {
        const auto p = dir_ / name;
        std::ofstream(p) << j.dump(2);
        return p;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    // Data rows of a CSV, without the banner and the column header.
    static std::vector<std::string> csv_rows(const fs::path& p) {
        std::ifstream in(p);
        std::string line;
        std::vector<std::string> rows;
        bool header_seen = false;
        while (std::getline(in, line)) {
            if (line.starts_with("#")) continue;
            if (!header_seen) {
                header_seen = true;
                continue;
            }
            rows.push_back(line);
        }
        return rows;
    }

    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (!s.empty() && s.back() == ',') cells.emplace_back();
        return cells;
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

const std::string kSmoke = (kConfigs / "smoke.json").string();

}  // namespace

TEST_F(Cli, UnknownSubcommandIsConfigError) {
    EXPECT_EQ(run({"frobnicate"}), lswitch::kConfigError);
    EXPECT_EQ(run({}), lswitch::kConfigError);
}

TEST_F(Cli, MissingConfigFileIsConfigError) {
    EXPECT_EQ(run({"--config", (dir_ / "nope.json").string(), "power-scaling"}), lswitch::kConfigError);
}

TEST_F(Cli, MissingDeviceFileNamesThePath) {
    const auto cfg = write_config("cfg.json", json{{"devices", "absent_devices.json"}});
    EXPECT_EQ(run({"--config", cfg.string(), "optimize-soa"}), lswitch::kConfigError);
    EXPECT_NE(err_.str().find("absent_devices.json"), std::string::npos) << err_.str();
}

TEST_F(Cli, UnknownConfigFieldRejected) {
    const auto cfg = write_config("cfg.json", json{{"seed", 3}, {"sead", 4}});
    EXPECT_EQ(run({"--config", cfg.string(), "power-scaling"}), lswitch::kConfigError);
    EXPECT_NE(err_.str().find("sead"), std::string::npos) << err_.str();
}

TEST_F(Cli, SimulateSystemWithoutArtefactsExits3) {
    EXPECT_EQ(run({"simulate-system"}), lswitch::kMissingArtifact);
    EXPECT_NE(err_.str().find("not found"), std::string::npos) << err_.str();
}

TEST_F(Cli, OptimizeSoaWritesArtefactsWithBothSettlingTimes) {
    ASSERT_EQ(run({"--config", kSmoke, "optimize-soa"}), lswitch::kSuccess) << err_.str();
    const auto out = dir_ / "out";
    for (const char* f : {"soa_drive.csv", "soa_drive.json", "soa_convergence.csv", "soa_output.csv", "soa_metrics.json"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    const json m = json::parse(slurp(out / "soa_metrics.json"));
    EXPECT_TRUE(m.at("baseline").contains("settle_pm5pct_ns"));
    EXPECT_TRUE(m.at("optimized").contains("settle_pm5pct_ns"));
    EXPECT_LE(m.at("optimized").at("settle_pm5pct_ns").get<double>(),
              m.at("baseline").at("settle_pm5pct_ns").get<double>());
    EXPECT_EQ(m.at("seed").get<std::uint64_t>(), 7u);
    EXPECT_NE(out_.str().find("square baseline"), std::string::npos);
}

TEST_F(Cli, EveryOutputCarriesHashAndSeed) {
    ASSERT_EQ(run({"--config", kSmoke, "--seed", "11", "optimize-soa"}), lswitch::kSuccess) << err_.str();
    const auto out = dir_ / "out";
    const json m = json::parse(slurp(out / "soa_metrics.json"));
    const std::string hash = m.at("config_hash").get<std::string>();
    EXPECT_EQ(m.at("seed").get<std::uint64_t>(), 11u);
    for (const auto& e : fs::directory_iterator(out)) {
        const std::string body = slurp(e.path());
        if (e.path().extension() == ".csv") {
            EXPECT_TRUE(body.starts_with("# config_hash=" + hash + " seed=11\n")) << e.path();
        } else {
            const json j = json::parse(body);
            EXPECT_EQ(j.at("config_hash").get<std::string>(), hash) << e.path();
            EXPECT_EQ(j.at("seed").get<std::uint64_t>(), 11u) << e.path();
        }
    }
}

TEST_F(Cli, ReRunsAreByteIdentical) {
    const auto a = dir_ / "a", b = dir_ / "b";
    for (const auto& cmd : {"optimize-soa", "optimize-laser", "power-scaling"}) {
        ASSERT_EQ(run({"--config", kSmoke, cmd}, a), lswitch::kSuccess) << cmd << err_.str();
        ASSERT_EQ(run({"--config", kSmoke, "--workers", "3", cmd}, b), lswitch::kSuccess) << cmd << err_.str();
    }
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        ++files;
        EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
    }
    EXPECT_GE(files, 12u);
}

TEST_F(Cli, TwoChannelLaserConfigGivesTwoRows) {
    const auto cfg = write_config("cfg.json", json{{"optimize_laser", {{"channels", json::array({0, 121})}}}});
    ASSERT_EQ(run({"--config", cfg.string(), "optimize-laser"}), lswitch::kSuccess) << err_.str();
    const auto rows = csv_rows(dir_ / "out" / "laser_events.csv");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_TRUE(rows[0].starts_with("0,121,"));
    EXPECT_TRUE(rows[1].starts_with("121,0,"));
}

TEST_F(Cli, LaserSummaryWorstCaseMatchesCsvMaximum) {
    ASSERT_EQ(run({"--config", kSmoke, "optimize-laser"}), lswitch::kSuccess) << err_.str();
    const auto out = dir_ / "out";
    const auto rows = csv_rows(out / "laser_events.csv");
    ASSERT_EQ(rows.size(), 20u);
    double worst = 0;
    for (const auto& r : rows) worst = std::max(worst, std::stod(split(r).at(2)));
    const json s = json::parse(slurp(out / "laser_summary.json"));
    EXPECT_NEAR(s.at("worst_case_time_ns").get<double>(), worst, 1e-6 * std::max(1.0, worst));
    EXPECT_EQ(s.at("events").get<int>(), 20);

    const auto cdf = csv_rows(out / "laser_cdf.csv");
    ASSERT_EQ(cdf.size(), 20u);
    double prev_t = -1, prev_f = 0;
    for (const auto& r : cdf) {
        const auto c = split(r);
        const double t = std::stod(c.at(0)), f = std::stod(c.at(1));
        EXPECT_GE(t, prev_t);
        EXPECT_GE(f, prev_f);
        prev_t = t;
        prev_f = f;
    }
    EXPECT_NEAR(prev_t, worst, 1e-6 * std::max(1.0, worst));
    EXPECT_DOUBLE_EQ(prev_f, 1.0);
}

TEST_F(Cli, PowerScalingDefaults) {
    ASSERT_EQ(run({"power-scaling"}), lswitch::kSuccess) << err_.str();
    const auto out = dir_ / "out";
    const auto rows = csv_rows(out / "power_scaling.csv");
    ASSERT_EQ(rows.size(), 366u);
    double prev_tm = 0, prev_pc = 0;
    for (const auto& r : rows) {
        const auto c = split(r);
        const double tm = std::stod(c.at(1)), pc = std::stod(c.at(2));
        EXPECT_GE(tm, prev_tm);
        EXPECT_GT(pc, prev_pc);
        prev_tm = tm;
        prev_pc = pc;
    }
    const json s = json::parse(slurp(out / "power_summary.json"));
    EXPECT_EQ(s.at("crossover_channels").get<int>(), 8);
    EXPECT_NE(out_.str().find("crossover: 8 channels"), std::string::npos);
}

TEST_F(Cli, PowerRangeBeyondBandsIsConfigError) {
    const auto cfg = write_config("cfg.json", json{{"power_scaling", {{"n_max", 367}}}});
    EXPECT_EQ(run({"--config", cfg.string(), "power-scaling"}), lswitch::kConfigError);
}

TEST_F(Cli, SystemPipelineFromArtefacts) {
    // Pre-emphasis for the four channels of the default scenario, then the gate
    // drive, then the system reading both back.
    const auto cfg = write_config(
        "cfg.json", json{{"seed", 7},
                         {"optimize_soa", {{"pso", {{"n_particles", 16}, {"max_iterations", 20}, {"patience", 20}}}}},
                         {"optimize_laser", {{"channels", json::array({0, 6, 115, 121})}}}});
    ASSERT_EQ(run({"--config", cfg.string(), "optimize-laser"}), lswitch::kSuccess) << err_.str();
    ASSERT_EQ(run({"--config", cfg.string(), "optimize-soa"}), lswitch::kSuccess) << err_.str();
    ASSERT_EQ(run({"--config", cfg.string(), "simulate-system"}), lswitch::kSuccess) << out_.str() << err_.str();

    const auto out = dir_ / "out";
    const json v = json::parse(slurp(out / "system_validation.json"));
    EXPECT_TRUE(v.at("pass").get<bool>());
    EXPECT_TRUE(v.at("gates_complementary").get<bool>());
    ASSERT_EQ(v.at("transitions_90_90_ns").size(), 4u);
    for (const auto& t : v.at("transitions_90_90_ns")) {
        ASSERT_TRUE(t.is_number());
        EXPECT_LT(t.get<double>(), 1.5);
    }
    EXPECT_EQ(csv_rows(out / "system_slots.csv").size(), 4u);

    const auto strict = write_config(
        "strict.json", json{{"simulate_system", {{"tol_ghz", 0.001}}}});
    EXPECT_EQ(run({"--config", strict.string(), "simulate-system"}), lswitch::kValidationFailed);

    ASSERT_EQ(run({"--config", cfg.string(), "simulate-system", "--gates-off"}), lswitch::kValidationFailed);
    double worst = 0;
    for (const auto& r : csv_rows(out / "system_freq.csv")) worst = std::max(worst, std::abs(std::stod(split(r).at(1))));
    EXPECT_GT(worst, 20.0);
}

TEST_F(Cli, TableMissingAnEventIsMissingArtefact) {
    const auto cfg = write_config("cfg.json", json{{"optimize_laser", {{"channels", json::array({0, 121})}}},
                                                   {"optimize_soa", {{"pso", {{"n_particles", 4}, {"max_iterations", 1}}}}}});
    ASSERT_EQ(run({"--config", cfg.string(), "optimize-laser"}), lswitch::kSuccess) << err_.str();
    ASSERT_EQ(run({"--config", cfg.string(), "optimize-soa"}), lswitch::kSuccess) << err_.str();
    EXPECT_EQ(run({"--config", cfg.string(), "simulate-system"}), lswitch::kMissingArtifact);
}
