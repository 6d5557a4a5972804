#pragma once

#include <filesystem>
#include <string>

#include "irrig/harness/season.hpp"
#include "irrig/mpc/surrogate.hpp"
#include "irrig/scmarl/bundle.hpp"
#include "irrig/scmarl/train.hpp"

namespace irrig::config {

inline constexpr int kSchemaVersion = 1;

struct AlignmentConfig {
    int n = 2000;
    double threshold = scmarl::kAlignThreshold;
    std::uint64_t seed = 7;
    scmarl::AlignmentSampler sampler = scmarl::AlignmentSampler::Independent;
};

/// Everything a command needs. Defaults are the full-scale protocol; desk configs shrink it.
struct RunConfig {
    scmarl::BundleConfig bundle;
    scmarl::TrainConfig train;
    int runs = 10;
    harness::SeasonConfig season;
    mpc::SurrogateConfig surrogate;
    AlignmentConfig alignment;

    RunConfig();
    /// Copies the shared settings (weights, weather, forcing noise, action bound) into the season.
    void sync();
    void validate() const;
};

/// Strict JSON: `schema_version` must match and unknown keys are errors. Missing keys keep defaults.
RunConfig parse(const std::string& text, const std::string& origin = "<string>");
RunConfig load(const std::filesystem::path& path);

/// Complete snapshot; parse(dump(c)) reproduces c.
std::string dump(const RunConfig& c);

}  // namespace irrig::config
