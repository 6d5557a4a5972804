#pragma once

#include <span>
#include <string>
#include <vector>

#include "irrig/common/error.hpp"
#include "irrig/common/rng.hpp"
#include "irrig/soilsim/column.hpp"

namespace irrig::field {

class InvalidBounds : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

struct TargetBounds {
    double upper;
    double lower;
};

/// Upper bound at field capacity, lower bound at the management allowable depletion threshold.
TargetBounds target_bounds(double theta_fc, double theta_wp, double mad);

/// Head used for the anaerobic (wet-side) stress point, m.
inline constexpr double kAnaerobicHead = -0.1;

struct ZoneConfig {
    int zone_id = 0;
    std::string name;
    soilsim::HydraulicParams phi;
    double theta_fc = 0.0;
    double theta_wp = 0.0;
    double mad = 0.5;
    double nu_upper = 0.0;
    double nu_lower = 0.0;

    /// Builds a zone with bounds derived from (theta_fc, theta_wp, mad).
    static ZoneConfig make(int zone_id, std::string name, soilsim::HydraulicParams phi, double theta_fc,
                           double theta_wp, double mad);

    /// Root-water stress trapezoid: anaerobic at kAnaerobicHead, optimal on
    /// [nu_lower, nu_upper], zero at the wilting point.
    soilsim::StressThresholds stress() const;
};

/// Loam, sandy loam and clay loam zones whose bounds are 0.280/0.200, 0.280/0.200 and 0.300/0.230.
std::vector<ZoneConfig> default_zones();

/// Weighted root-zone moisture: 40/30/20/10 % on the depth quarters of [0, zr].
double root_zone_moisture(std::span<const double> y, double zr, const soilsim::ColumnGrid& grid);

/// Uniform-over-depth initial profile with theta ~ U[nu_lower - 0.03, nu_upper].
soilsim::ColumnState sample_initial_state(const ZoneConfig& zone, const soilsim::ColumnGrid& grid, Rng& rng);

}  // namespace irrig::field
