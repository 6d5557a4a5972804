#include "irrig/field/zone.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace irrig::field {

TargetBounds target_bounds(double theta_fc, double theta_wp, double mad) {
    if (!(theta_wp < theta_fc) || !(mad > 0.0 && mad <= 1.0)) {
        throw InvalidBounds("target bounds require theta_wp < theta_fc and 0 < mad <= 1");
    }
    return {theta_fc, theta_fc - mad * (theta_fc - theta_wp)};
}

ZoneConfig ZoneConfig::make(int zone_id, std::string name, soilsim::HydraulicParams phi, double theta_fc,
                            double theta_wp, double mad) {
    phi.validate();
    const TargetBounds b = target_bounds(theta_fc, theta_wp, mad);
    if (!(b.lower < b.upper)) throw InvalidBounds("degenerate target band");
    ZoneConfig z;
    z.zone_id = zone_id;
    z.name = std::move(name);
    z.phi = phi;
    z.theta_fc = theta_fc;
    z.theta_wp = theta_wp;
    z.mad = mad;
    z.nu_upper = b.upper;
    z.nu_lower = b.lower;
    return z;
}

soilsim::StressThresholds ZoneConfig::stress() const {
    return {soilsim::water_content(kAnaerobicHead, phi), nu_upper, nu_lower, theta_wp};
}

std::vector<ZoneConfig> default_zones() {
    // Class-average Ks, theta_s, theta_r; alpha and n refit so that theta(-3.37 m)
    // and theta(-153 m) hit the zone's field capacity and wilting point.
    const soilsim::HydraulicParams loam{2.89e-6, 0.43, 0.078, 0.975, 1.425};
    const soilsim::HydraulicParams sandy_loam{1.228e-5, 0.41, 0.065, 0.924, 1.371};
    const soilsim::HydraulicParams clay_loam{7.22e-7, 0.41, 0.095, 1.025, 1.312};
    return {
        ZoneConfig::make(1, "loam", loam, 0.280, 0.120, 0.5),
        ZoneConfig::make(2, "sandy_loam", sandy_loam, 0.280, 0.120, 0.5),
        ZoneConfig::make(3, "clay_loam", clay_loam, 0.300, 0.160, 0.5),
    };
}

double root_zone_moisture(std::span<const double> y, double zr, const soilsim::ColumnGrid& grid) {
    if (y.size() != static_cast<std::size_t>(grid.nodes)) throw LengthMismatch("moisture profile length != grid nodes");
    if (!(zr > 0.0 && zr <= grid.depth + 1e-12)) throw InvalidArgument("rooting depth outside the column");
    constexpr std::array<double, 4> weights{0.4, 0.3, 0.2, 0.1};
    std::array<double, 4> sum{};
    std::array<int, 4> count{};
    const double quarter = zr / 4.0;
    const double tol = 1e-9 * grid.dz();
    for (int i = 0; i < grid.nodes; ++i) {
        const double z = grid.node_depth(i);
        if (z > zr + tol) break;
        // Node on a quarter boundary belongs to the shallower quarter.
        int q = static_cast<int>(std::ceil((z - tol) / quarter)) - 1;
        q = std::clamp(q, 0, 3);
        sum[q] += y[i];
        count[q] += 1;
    }
    double value = 0.0;
    double weight = 0.0;
    for (int q = 0; q < 4; ++q) {
        if (count[q] == 0) continue;
        value += weights[q] * sum[q] / count[q];
        weight += weights[q];
    }
    return value / weight;
}

soilsim::ColumnState sample_initial_state(const ZoneConfig& zone, const soilsim::ColumnGrid& grid, Rng& rng) {
    const double theta = rng.uniform(zone.nu_lower - 0.03, zone.nu_upper);
    return soilsim::uniform_state(theta, zone.phi, grid);
}

}  // namespace irrig::field
