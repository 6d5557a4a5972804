#pragma once

#include <span>
#include <vector>

#include "irrig/field/weather.hpp"
#include "irrig/field/zone.hpp"
#include "irrig/kernels/parallel.hpp"
#include "irrig/soilsim/column.hpp"

namespace irrig::field {

struct FieldState {
    std::vector<soilsim::ColumnState> zones;
    int day_index = 0;
    double gdd_cum = 0.0;

    bool operator==(const FieldState&) const = default;
};

/// Solver failure inside one zone.
class ZoneNonConvergence : public soilsim::NonConvergence {
public:
    ZoneNonConvergence(int zone_id, const soilsim::NonConvergence& cause);
    int zone_id;
};

struct FieldStep {
    FieldState next;
    std::vector<std::vector<double>> y;  ///< per-zone noisy moisture profiles
};

/// Shared per-day inputs of every zone.
struct FieldForcing {
    WeatherDay weather;
    double kc = 0.0;
    double zr = 0.5;
    double ev_fraction = 0.1;

    soilsim::DailyForcing for_zone(double u_irr) const {
        return {u_irr, weather.precip, weather.et0, kc, zr, ev_fraction};
    }
};

/// M independent zone columns driven by common weather.
class Field {
public:
    explicit Field(std::vector<ZoneConfig> zones, soilsim::ColumnGrid grid = {}, soilsim::SolverOptions options = {});

    std::size_t zone_count() const { return zones_.size(); }
    const ZoneConfig& zone(std::size_t i) const { return zones_.at(i); }
    const std::vector<ZoneConfig>& zones() const { return zones_; }
    const soilsim::RichardsColumn& column(std::size_t i) const { return columns_.at(i); }
    const soilsim::ColumnGrid& grid() const { return grid_; }

    /// Advances a single zone and observes it; the building block of step().
    soilsim::ColumnState step_zone(std::size_t i, const soilsim::ColumnState& state, double u_irr,
                                   const FieldForcing& forcing, const NoiseSpec& noise, Rng& rng,
                                   std::vector<double>* y, soilsim::DayBalance* balance = nullptr) const;

    /// One day for every zone; `zone_rngs[i]` drives zone i only, so Serial and Parallel agree bit for bit.
    FieldStep step(const FieldState& fs, std::span<const double> u_irr, const FieldForcing& forcing,
                   const NoiseSpec& noise, std::span<Rng> zone_rngs,
                   kernels::Exec exec = kernels::Exec::Serial) const;

    /// Fresh state: each zone drawn by sample_initial_state.
    FieldState sample_initial(std::span<Rng> zone_rngs) const;

    /// Noise-free water-content profile of zone i.
    std::vector<double> profile(std::size_t i, const FieldState& fs) const;
    double root_zone(std::size_t i, const FieldState& fs, double zr) const;

    void check(const FieldState& fs) const;

private:
    std::vector<ZoneConfig> zones_;
    soilsim::ColumnGrid grid_;
    std::vector<soilsim::RichardsColumn> columns_;
};

}  // namespace irrig::field
