#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "irrig/config/config.hpp"

namespace irrig::pipeline {

/// The three default zones, or only zone `only` (0-based).
field::Field make_field(std::optional<int> only = std::nullopt);

struct TrainRun {
    scmarl::AgentBundle bundle;
    scmarl::TrainResult result;
};

/// One training run of `episodes` from a fresh bundle seeded with `seed`.
TrainRun train_run(const config::RunConfig& cfg, scmarl::Mode mode, std::uint64_t seed,
                   std::optional<int> only_zone = std::nullopt, const scmarl::EpisodeCallback& on_episode = {});

/// Agent names in curve files: "coordinator", "local_1", ...
std::vector<std::string> agent_names(int zones);

/// Score of `agent` (0 = coordinator) in one episode.
double agent_score(const scmarl::EpisodeLog& e, int agent);

/// Mean score of `agent` over episodes [begin, end), skipping aborted ones.
double mean_score(const scmarl::TrainResult& r, int agent, int begin, int end);

/// Tidy learning curve: episode, agent, mean over runs, runs contributing.
void write_curve_csv(const std::filesystem::path& path, const std::vector<scmarl::TrainResult>& runs, int zones);

/// Per-episode details of one run (start day, aborts, irrigation days, scores).
void write_episodes_csv(const std::filesystem::path& path, const scmarl::TrainResult& run, int zones);

scmarl::TrainResult read_episodes_csv(const std::filesystem::path& path);

/// One surrogate per zone as saved by the surrogate command: dir/zone_<k>.
std::vector<mpc::Surrogate> load_surrogates(const std::filesystem::path& dir, int zones);
std::filesystem::path surrogate_path(const std::filesystem::path& dir, int zone);

/// Single-zone bundles: dir/zone_<k>.
std::vector<scmarl::AgentBundle> load_zone_bundles(const std::filesystem::path& dir, int zones);
std::filesystem::path zone_bundle_dir(const std::filesystem::path& dir, int zone);

struct RunManifest {
    std::string command;
    std::string config;  ///< snapshot as produced by config::dump
    std::vector<std::uint64_t> seeds;
    std::vector<std::pair<std::string, std::string>> timestamps;  ///< event, UTC ISO-8601
    std::vector<std::string> outputs;                              ///< relative to the output directory
    std::vector<std::pair<std::string, std::string>> arguments;

    void stamp(const std::string& event);
    void write(const std::filesystem::path& dir) const;
};

std::string toolkit_version();

}  // namespace irrig::pipeline
