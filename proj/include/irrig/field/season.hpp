#pragma once

#include <vector>

#include "irrig/field/weather.hpp"

namespace irrig::field {

/// True daily forcings of a season; kc[d] uses the GDD accumulated before day d.
struct Season {
    std::vector<WeatherDay> weather;
    std::vector<double> kc;
    std::vector<double> gdd_start;

    int length() const { return static_cast<int>(weather.size()); }
};

Season make_season(std::vector<WeatherDay> weather);
Season generate_season(int length, Rng& rng, const WeatherConfig& config = {});

}  // namespace irrig::field
