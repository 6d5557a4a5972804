#include "irrig/field/season.hpp"

#include "irrig/field/crop.hpp"

namespace irrig::field {

Season make_season(std::vector<WeatherDay> weather) {
    Season s;
    s.weather = std::move(weather);
    double g = 0.0;
    for (const WeatherDay& w : s.weather) {
        s.gdd_start.push_back(g);
        s.kc.push_back(kc_of_gdd(g));
        g += gdd_step(w.t_avg);
    }
    return s;
}

Season generate_season(int length, Rng& rng, const WeatherConfig& config) {
    return make_season(generate_weather(length, rng, config));
}

}  // namespace irrig::field
