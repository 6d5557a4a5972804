#pragma once

#include <utility>
#include <vector>

#include "irrig/common/rng.hpp"

namespace irrig::field {

struct WeatherDay {
    double et0 = 0.0;     ///< m/day
    double precip = 0.0;  ///< m/day
    double t_avg = 0.0;   ///< degC

    bool operator==(const WeatherDay&) const = default;
};

/// Two-state occurrence chain. `wet_probability` is the long-run wet-day
/// frequency, `persistence` is P(wet | yesterday wet).
struct RainConfig {
    double wet_probability = 0.25;
    double persistence = 0.5;
    double mean_depth = 0.005;  ///< m

    void validate() const;
};

struct TemperatureConfig {
    double mean = 16.0;
    double amplitude = 5.0;
    double noise_std = 2.0;
};

struct WeatherConfig {
    double et0_min = 1.04e-3;  ///< m/day
    double et0_max = 9.0e-3;
    RainConfig rain;
    TemperatureConfig temperature;

    void validate() const;
};

std::vector<WeatherDay> generate_weather(int season_length, Rng& rng, const WeatherConfig& config = {});

struct ForcingNoise {
    double et0_std = 0.3e-3;     ///< m/day
    double precip_std = 1.0e-3;  ///< m/day
    double kc_std = 0.02;
};

/// std multiplier min(1 + per_day * lead, cap).
struct ForecastGrowth {
    double per_day = 0.15;
    double cap = 3.0;

    double multiplier(int lead) const;
};

struct NoiseSpec {
    double process_std = 0.0002;
    double output_std = 0.0005;
    ForcingNoise forcing;
    ForecastGrowth growth;

    void validate() const;
};

/// Noisy copy of a day's forcing as seen `lead` days ahead. Always consumes three normals.
std::pair<WeatherDay, double> perturb_forcing(const WeatherDay& w, double kc, int lead, const NoiseSpec& spec,
                                              Rng& rng);

}  // namespace irrig::field
