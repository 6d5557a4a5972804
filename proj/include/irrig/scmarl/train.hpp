#pragma once

#include <functional>
#include <string>
#include <vector>

#include "irrig/field/field.hpp"
#include "irrig/field/season.hpp"
#include "irrig/kernels/parallel.hpp"
#include "irrig/scmarl/bundle.hpp"
#include "irrig/scmarl/rewards.hpp"

namespace irrig::scmarl {

struct TrainConfig {
    int episodes = 2000;
    int horizon = 30;         ///< days per episode
    int season_length = 113;  ///< episodes start at a random offset inside a season
    field::WeatherConfig weather;
    field::NoiseSpec noise;
    double zr = 0.5;
    double ev_fraction = 0.1;
    RewardWeights weights;
    double reward_scale = 1e-4;  ///< applied to rewards before they reach the critics
    ppo::PpoConfig ppo;
    std::uint64_t seed = 1;
    kernels::Exec exec = kernels::Exec::Parallel;

    void validate() const;
};

struct EpisodeLog {
    int episode = 0;
    int start_day = 0;
    bool aborted = false;
    std::string abort_reason;
    int steps = 0;
    int irrigation_days = 0;
    double coordinator_score = 0.0;
    std::vector<double> local_scores;
};

struct TrainResult {
    std::vector<EpisodeLog> episodes;
    int aborted = 0;
    int updates = 0;
};

using EpisodeCallback = std::function<void(const EpisodeLog&)>;

/// Hierarchical PPO training loop. Stochastic actions; the decision for the
/// next day is drawn from the coordinator after its own update and is part of
/// every local agent's successor state.
TrainResult train(AgentBundle& bundle, const field::Field& field, const TrainConfig& config,
                  const EpisodeCallback& on_episode = {});

struct AlignmentResult {
    int successes = 0;
    int failures = 0;
    double rate() const { return successes + failures == 0 ? 0.0 : double(successes) / (successes + failures); }
};

/// Where evaluation states come from. Independent: each zone drawn from the initial-condition
/// sampler on its own. Visited: the field after a random number (0 .. horizon-1) of greedy days
/// from such a draw, i.e. states the running scheduler actually meets.
enum class AlignmentSampler { Independent, Visited };

std::string to_string(AlignmentSampler s);
AlignmentSampler parse_sampler(const std::string& text);

/// Greedy joint actions on random states and forcings. Success iff every zone
/// prescribes more than `threshold` exactly when the coordinator irrigates.
AlignmentResult evaluate_alignment(const AgentBundle& bundle, const field::Field& field, int n_evals, Rng& rng,
                                   const TrainConfig& config, double threshold = kAlignThreshold,
                                   AlignmentSampler sampler = AlignmentSampler::Independent);

struct EvaluationEpisode {
    std::vector<double> in_band_fraction;  ///< per zone, over the days of the window
    std::vector<double> water;             ///< per zone applied irrigation, m
    int irrigation_days = 0;
    double mean_in_band() const;
};

/// Greedy run over one training-style window (random start, noisy observations).
EvaluationEpisode evaluate_episode(const AgentBundle& bundle, const field::Field& field, const TrainConfig& config,
                                   Rng& rng);

/// Day-ahead forecast of the forcing.
struct ForecastDay {
    field::WeatherDay weather;
    double kc = 0.0;
};

struct HorizonPlan {
    std::vector<int> c;               ///< Np decisions
    std::vector<std::vector<double>> a;  ///< a[zone][day], prescriptions
    std::vector<std::vector<double>> u;  ///< applied c * a
};

/// Open-loop greedy plan over np days on the noise-free zone models, starting from
/// the estimated states and driven by the forecasts.
HorizonPlan rollout_horizon(const AgentBundle& bundle, const field::Field& field,
                            const std::vector<soilsim::ColumnState>& estimates,
                            const std::vector<ForecastDay>& forecasts, int np, double zr = 0.5,
                            double ev_fraction = 0.1);

}  // namespace irrig::scmarl
