#include "irrig/field/weather.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "irrig/common/error.hpp"

namespace irrig::field {

void RainConfig::validate() const {
    if (!(wet_probability >= 0.0 && wet_probability <= 1.0) || !(persistence >= 0.0 && persistence <= 1.0) ||
        !(mean_depth >= 0.0)) {
        throw InvalidArgument("rain config: probabilities must lie in [0,1] and mean_depth >= 0");
    }
}

void WeatherConfig::validate() const {
    if (!(et0_min >= 0.0 && et0_min <= et0_max)) throw InvalidArgument("weather config: need 0 <= et0_min <= et0_max");
    if (!(temperature.noise_std >= 0.0)) throw InvalidArgument("weather config: temperature noise_std < 0");
    rain.validate();
}

std::vector<WeatherDay> generate_weather(int season_length, Rng& rng, const WeatherConfig& config) {
    if (season_length < 1) throw InvalidArgument("season_length must be >= 1");
    config.validate();

    const RainConfig& rain = config.rain;
    const double pi = rain.wet_probability;
    // Dry-to-wet transition that keeps pi stationary given P(wet|wet).
    double p_dry_wet = pi >= 1.0 ? 1.0 : pi * (1.0 - rain.persistence) / (1.0 - pi);
    p_dry_wet = std::clamp(p_dry_wet, 0.0, 1.0);

    Rng et0_rng = rng.fork(1);
    Rng rain_rng = rng.fork(2);
    Rng temp_rng = rng.fork(3);

    std::vector<WeatherDay> days(static_cast<std::size_t>(season_length));
    bool wet = rain_rng.bernoulli(pi);
    for (int d = 0; d < season_length; ++d) {
        if (d > 0) wet = rain_rng.bernoulli(wet ? rain.persistence : p_dry_wet);
        WeatherDay& w = days[static_cast<std::size_t>(d)];
        w.et0 = et0_rng.uniform(config.et0_min, config.et0_max);
        w.precip = (wet && rain.mean_depth > 0.0) ? rain_rng.exponential(rain.mean_depth) : 0.0;
        const TemperatureConfig& t = config.temperature;
        w.t_avg = t.mean - t.amplitude * std::cos(2.0 * std::numbers::pi * d / season_length) +
                  t.noise_std * temp_rng.normal();
    }
    return days;
}

double ForecastGrowth::multiplier(int lead) const {
    if (lead < 0) throw InvalidArgument("forecast lead must be >= 0");
    return std::min(1.0 + per_day * lead, cap);
}

void NoiseSpec::validate() const {
    const bool ok = process_std >= 0.0 && output_std >= 0.0 && forcing.et0_std >= 0.0 && forcing.precip_std >= 0.0 &&
                    forcing.kc_std >= 0.0 && growth.per_day >= 0.0 && growth.cap >= 1.0;
    if (!ok) throw InvalidArgument("noise spec: stds must be >= 0 and growth cap >= 1");
}

std::pair<WeatherDay, double> perturb_forcing(const WeatherDay& w, double kc, int lead, const NoiseSpec& spec,
                                              Rng& rng) {
    const double g = spec.growth.multiplier(lead);
    const double e_et0 = rng.normal();
    const double e_precip = rng.normal();
    const double e_kc = rng.normal();
    WeatherDay out = w;
    out.et0 = std::max(0.0, w.et0 + spec.forcing.et0_std * g * e_et0);
    out.precip = std::max(0.0, w.precip + spec.forcing.precip_std * g * e_precip);
    return {out, std::max(0.0, kc + spec.forcing.kc_std * g * e_kc)};
}

}  // namespace irrig::field
