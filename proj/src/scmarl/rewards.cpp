#include "irrig/scmarl/rewards.hpp"

#include <cmath>

namespace irrig::scmarl {

void RewardWeights::validate() const {
    for (double v : {alpha_la, beta_la, alpha_ca, beta_ca, q_upper, q_lower, r_c, r_u}) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("reward weights must be positive and finite");
    }
}

double zone_tracking_reward(double theta_rz, double nu_lower, double nu_upper, double q_lower, double q_upper) {
    if (!(nu_lower < nu_upper)) throw field::InvalidBounds("tracking band requires nu_lower < nu_upper");
    if (theta_rz < nu_lower) return -q_lower * (nu_lower - theta_rz);
    if (theta_rz > nu_upper) return -q_upper * (theta_rz - nu_upper);
    return 0.0;
}

double local_reward(double theta_rz_next, double a_la, const RewardWeights& w, const field::TargetBounds& bounds) {
    if (!(a_la >= 0.0)) throw InvalidArgument("prescribed amount must be non-negative");
    const double rz = zone_tracking_reward(theta_rz_next, bounds.lower, bounds.upper, w.q_lower, w.q_upper);
    return w.alpha_la * rz - w.beta_la * w.r_u * a_la;
}

double coordinator_reward(std::span<const double> theta_rz_all, int c, const RewardWeights& w,
                          std::span<const field::TargetBounds> bounds) {
    if (theta_rz_all.size() != bounds.size()) throw LengthMismatch("one root-zone value per zone bound");
    if (c != 0 && c != 1) throw InvalidArgument("coordinator decision must be 0 or 1");
    double sum = 0.0;
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        sum += zone_tracking_reward(theta_rz_all[i], bounds[i].lower, bounds[i].upper, w.q_lower, w.q_upper);
    }
    return w.alpha_ca * sum - w.beta_ca * w.r_c * c;
}

}  // namespace irrig::scmarl
