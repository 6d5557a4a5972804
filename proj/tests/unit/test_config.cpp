#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "irrig/pipeline/pipeline.hpp"

using namespace irrig;

TEST_CASE("defaults mirror the full-scale protocol") {
    const config::RunConfig c;
    CHECK(c.train.episodes == 9800);
    CHECK(c.runs == 10);
    CHECK(c.train.ppo.lr == 1e-5);
    CHECK(c.season.days() == 113);
    CHECK(c.season.np == 14);
    CHECK(c.alignment.n == 2000);
}

TEST_CASE("a minimal config keeps defaults") {
    const auto c = config::parse(R"({"schema_version": 1})");
    CHECK(c.train.episodes == 9800);
    CHECK(c.season.weights.r_u == 9000.0);
}

TEST_CASE("strict parsing") {
    CHECK_THROWS_AS(config::parse("{}"), ConfigError);
    CHECK_THROWS_AS(config::parse(R"({"schema_version": 2})"), ConfigError);
    CHECK_THROWS_AS(config::parse(R"({"schema_version": 1, "extra": 3})"), ConfigError);
    CHECK_THROWS_AS(config::parse(R"({"schema_version": 1, "ppo": {"learning_rate": 1}})"), ConfigError);
    CHECK_THROWS_AS(config::parse(R"({"schema_version": 1, "ppo": {"lr": "fast"}})"), ConfigError);
    CHECK_THROWS_AS(config::parse(R"({"schema_version": 1, "ppo": {"lr": -1}})"), ConfigError);
    CHECK_THROWS_AS(config::parse(R"({"schema_version": 1, "season": {"end_date": "2022-05-01"}})"), ConfigError);
    CHECK_THROWS_AS(config::parse(R"({"schema_version": 1, "training": {"exec": "gpu"}})"), ConfigError);
    CHECK_THROWS_AS(config::parse("{ not json"), ConfigError);
    CHECK_THROWS_AS(config::load("/nonexistent/config.json"), MissingArtifact);
}

TEST_CASE("shared settings reach the season") {
    const auto c = config::parse(
        R"({"schema_version": 1, "rewards": {"r_u": 5000}, "bundle": {"action_max": 0.02},
            "noise": {"kc_std": 0.05}, "weather": {"et0_max": 0.008}})");
    CHECK(c.season.weights.r_u == 5000.0);
    CHECK(c.season.u_max == 0.02);
    CHECK(c.surrogate.u_max == 0.02);
    CHECK(c.season.forcing_noise.kc_std == 0.05);
    CHECK(c.season.weather.et0_max == 0.008);
}

TEST_CASE("dump round trips") {
    auto c = config::parse(
        R"({"schema_version": 1, "training": {"episodes": 17, "seed": 99, "exec": "serial"},
            "ppo": {"critic_lr": 0.001}, "ekf": {"units": "fraction"}, "season": {"np": 7},
            "surrogate": {"hidden": [16, 8]}})");
    const std::string once = config::dump(c);
    const auto back = config::parse(once);
    CHECK(config::dump(back) == once);
    CHECK(back.train.episodes == 17);
    CHECK(back.train.seed == 99);
    CHECK(back.train.exec == kernels::Exec::Serial);
    CHECK(back.train.ppo.critic_lr == 0.001);
    CHECK(back.season.ekf.units == estimator::Units::Fraction);
    CHECK(back.season.np == 7);
    CHECK(back.surrogate.hidden == std::vector<int>{16, 8});
}

TEST_CASE("the shipped desk config parses") {
    const auto c = config::load(std::string(IRRIG_SOURCE_DIR) + "/config/desk.json");
    CHECK(c.train.episodes == 2000);
    CHECK(c.runs == 3);
    CHECK(c.alignment.n == 500);
}

TEST_CASE("curve files hold one row per agent and episode") {
    config::RunConfig c;
    c.train.episodes = 4;
    c.train.horizon = 3;
    c.train.ppo.horizon = 3;
    c.train.season_length = 20;
    const auto a = pipeline::train_run(c, scmarl::Mode::Scmarl, 1);
    const auto b = pipeline::train_run(c, scmarl::Mode::Scmarl, 2);
    const auto dir = std::filesystem::temp_directory_path() / "irrig_test_config";
    std::filesystem::create_directories(dir);
    pipeline::write_curve_csv(dir / "curve.csv", {a.result, b.result}, 3);
    std::ifstream in(dir / "curve.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "episode,agent,mean_score,runs");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        if (rows == 1) {
            std::ostringstream want;
            want << "0,coordinator,";
            CHECK(line.rfind(want.str(), 0) == 0);
            const double mean = 0.5 * (a.result.episodes[0].coordinator_score + b.result.episodes[0].coordinator_score);
            CHECK(std::stod(line.substr(14, line.rfind(',') - 14)) == doctest::Approx(mean).epsilon(1e-9));
        }
    }
    CHECK(rows == 4 * 4);
    std::filesystem::remove_all(dir);
}

TEST_CASE("dmarl bundles take 24 local inputs") {
    config::RunConfig c;
    c.train.episodes = 1;
    c.train.horizon = 2;
    c.train.ppo.horizon = 2;
    c.train.season_length = 20;
    const auto run = pipeline::train_run(c, scmarl::Mode::Dmarl, 3);
    CHECK(run.bundle.locals[0].policy.net.input_size() == 24);
    const auto single = pipeline::train_run(c, scmarl::Mode::Scmarl, 3, 1);
    CHECK(single.bundle.zone_count() == 1);
    CHECK(single.bundle.coordinator.policy.net.input_size() == 24);
}

TEST_CASE("manifest records what produced an output") {
    pipeline::RunManifest m;
    m.command = "season";
    m.config = config::dump(config::RunConfig{});
    m.seeds = {4};
    m.stamp("start");
    m.outputs = {"season.csv"};
    const auto dir = std::filesystem::temp_directory_path() / "irrig_test_manifest";
    std::filesystem::create_directories(dir);
    m.write(dir);
    std::ifstream in(dir / "manifest.json");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    CHECK(text.find("\"command\": \"season\"") != std::string::npos);
    CHECK(text.find("\"schema_version\": 1") != std::string::npos);
    CHECK(text.find(pipeline::toolkit_version()) != std::string::npos);
    std::filesystem::remove_all(dir);
}
