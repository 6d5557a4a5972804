#include "irrig/field/field.hpp"

#include <string>

#include "irrig/field/crop.hpp"

namespace irrig::field {

ZoneNonConvergence::ZoneNonConvergence(int id, const soilsim::NonConvergence& cause)
    : soilsim::NonConvergence(cause), zone_id(id) {}

Field::Field(std::vector<ZoneConfig> zones, soilsim::ColumnGrid grid, soilsim::SolverOptions options)
    : zones_(std::move(zones)), grid_(grid) {
    if (zones_.empty()) throw InvalidArgument("field needs at least one zone");
    grid_.validate();
    columns_.reserve(zones_.size());
    for (const ZoneConfig& z : zones_) columns_.emplace_back(z.phi, grid_, z.stress(), options);
}

void Field::check(const FieldState& fs) const {
    if (fs.zones.size() != zones_.size()) throw LengthMismatch("field state zone count != field zone count");
    for (const auto& z : fs.zones) {
        if (z.size() != static_cast<std::size_t>(grid_.nodes)) throw LengthMismatch("zone state length != grid nodes");
    }
    if (fs.day_index < 0 || !(fs.gdd_cum >= 0.0)) throw InvalidArgument("field state: negative day or gdd");
}

soilsim::ColumnState Field::step_zone(std::size_t i, const soilsim::ColumnState& state, double u_irr,
                                      const FieldForcing& forcing, const NoiseSpec& noise, Rng& rng,
                                      std::vector<double>* y, soilsim::DayBalance* balance) const {
    const soilsim::RichardsColumn& col = columns_.at(i);
    try {
        soilsim::ColumnState next = col.step_day(state, forcing.for_zone(u_irr), noise.process_std, rng, balance);
        if (y) *y = soilsim::observe(next, col.params(), noise.output_std, rng);
        return next;
    } catch (const soilsim::NonConvergence& e) {
        throw ZoneNonConvergence(zones_[i].zone_id, e);
    }
}

FieldStep Field::step(const FieldState& fs, std::span<const double> u_irr, const FieldForcing& forcing,
                      const NoiseSpec& noise, std::span<Rng> zone_rngs, kernels::Exec exec) const {
    check(fs);
    if (u_irr.size() != zones_.size() || zone_rngs.size() != zones_.size()) {
        throw LengthMismatch("per-zone inputs must have one entry per zone");
    }
    FieldStep out;
    out.next.zones.resize(zones_.size());
    out.y.resize(zones_.size());
    kernels::for_each_index(exec, static_cast<int>(zones_.size()), [&](int k) {
        const auto i = static_cast<std::size_t>(k);
        out.next.zones[i] = step_zone(i, fs.zones[i], u_irr[i], forcing, noise, zone_rngs[i], &out.y[i]);
    });
    out.next.day_index = fs.day_index + 1;
    out.next.gdd_cum = fs.gdd_cum + gdd_step(forcing.weather.t_avg);
    return out;
}

FieldState Field::sample_initial(std::span<Rng> zone_rngs) const {
    if (zone_rngs.size() != zones_.size()) throw LengthMismatch("one rng per zone required");
    FieldState fs;
    for (std::size_t i = 0; i < zones_.size(); ++i) fs.zones.push_back(sample_initial_state(zones_[i], grid_, zone_rngs[i]));
    return fs;
}

std::vector<double> Field::profile(std::size_t i, const FieldState& fs) const {
    return soilsim::water_profile(fs.zones.at(i), zones_.at(i).phi);
}

double Field::root_zone(std::size_t i, const FieldState& fs, double zr) const {
    return root_zone_moisture(profile(i, fs), zr, grid_);
}

}  // namespace irrig::field
