#pragma once

#include <span>

#include "irrig/field/zone.hpp"

namespace irrig::scmarl {

struct RewardWeights {
    double alpha_la = 1.0;
    double beta_la = 1.0;
    double alpha_ca = 0.1;
    double beta_ca = 1.0;
    double q_upper = 1.2e6;
    double q_lower = 1.0e6;
    double r_c = 1000.0;  ///< fixed cost of an irrigation event
    double r_u = 9000.0;  ///< cost per m of prescribed water

    void validate() const;
};

/// Zero on the closed band [nu_lower, nu_upper], linear penalty outside it.
double zone_tracking_reward(double theta_rz, double nu_lower, double nu_upper, double q_lower, double q_upper);

/// Tracking term on the successor root-zone moisture plus the water cost of the prescription a_la.
double local_reward(double theta_rz_next, double a_la, const RewardWeights& w, const field::TargetBounds& bounds);

/// Scaled sum of the zones' tracking terms plus the fixed cost of deciding to irrigate.
double coordinator_reward(std::span<const double> theta_rz_all, int c, const RewardWeights& w,
                          std::span<const field::TargetBounds> bounds);

}  // namespace irrig::scmarl
