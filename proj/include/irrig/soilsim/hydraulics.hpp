#pragma once

#include <string>

namespace irrig::soilsim {

/// van Genuchten soil hydraulic parameters of one management zone.
struct HydraulicParams {
    double Ks = 0.0;       ///< saturated conductivity, m/s
    double theta_s = 0.0;  ///< saturated volumetric content, m3/m3
    double theta_r = 0.0;  ///< residual volumetric content, m3/m3
    double alpha = 0.0;    ///< retention shape, 1/m
    double n = 0.0;        ///< retention shape, dimensionless (> 1)

    double m() const { return 1.0 - 1.0 / n; }

    /// Throws InvalidArgument when the parameter set is not physically admissible.
    void validate() const;

    bool operator==(const HydraulicParams&) const = default;
};

/// Capacity used for psi >= 0 so the Newton Jacobian stays nonsingular, 1/m.
inline constexpr double kSaturatedCapacity = 1e-5;

/// Volumetric water content theta_v(psi); theta_s for psi >= 0.
double water_content(double psi, const HydraulicParams& phi);

/// d theta / d psi, analytic; kSaturatedCapacity for psi >= 0.
double capillary_capacity(double psi, const HydraulicParams& phi);

/// van Genuchten-Mualem unsaturated conductivity, m/s; Ks for psi >= 0.
double conductivity(double psi, const HydraulicParams& phi);

/// Inverse of water_content on (theta_r, theta_s); returns 0 at or above theta_s.
double head_from_content(double theta, const HydraulicParams& phi);

/// Effective saturation (theta - theta_r)/(theta_s - theta_r).
double effective_saturation(double psi, const HydraulicParams& phi);

/// All constitutive quantities at one head, sharing the transcendental work.
struct Constitutive {
    double theta;     ///< water content
    double storage;   ///< water content plus kSaturatedCapacity * max(psi, 0)
    double capacity;  ///< d storage / d psi
    double K;         ///< conductivity
    double dK;        ///< d K / d psi
};

Constitutive evaluate(double psi, const HydraulicParams& phi);

/// Named literature parameter sets (loam, sandy_loam, clay_loam).
HydraulicParams preset(const std::string& name);

}  // namespace irrig::soilsim
