#include "irrig/soilsim/hydraulics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "irrig/common/error.hpp"

namespace irrig::soilsim {

void HydraulicParams::validate() const {
    const bool ok = std::isfinite(Ks) && std::isfinite(theta_s) && std::isfinite(theta_r) &&
                    std::isfinite(alpha) && std::isfinite(n) && Ks > 0.0 && alpha > 0.0 && n > 1.0 &&
                    theta_r >= 0.0 && theta_r < theta_s && theta_s <= 1.0;
    if (!ok) {
        throw InvalidArgument("invalid hydraulic parameters: require Ks>0, alpha>0, n>1, 0<=theta_r<theta_s<=1");
    }
}

namespace {

// x = (-alpha psi)^n for psi < 0
inline double retention_x(double psi, const HydraulicParams& phi) {
    return std::exp(phi.n * std::log(-phi.alpha * psi));
}

}  // namespace

double water_content(double psi, const HydraulicParams& phi) {
    if (psi >= 0.0) return phi.theta_s;
    const double x = retention_x(psi, phi);
    return phi.theta_r + (phi.theta_s - phi.theta_r) * std::exp(-phi.m() * std::log1p(x));
}

double effective_saturation(double psi, const HydraulicParams& phi) {
    if (psi >= 0.0) return 1.0;
    return std::exp(-phi.m() * std::log1p(retention_x(psi, phi)));
}

double capillary_capacity(double psi, const HydraulicParams& phi) {
    return evaluate(psi, phi).capacity;
}

double conductivity(double psi, const HydraulicParams& phi) {
    return evaluate(psi, phi).K;
}

Constitutive evaluate(double psi, const HydraulicParams& phi) {
    if (psi >= 0.0) {
        return {phi.theta_s, phi.theta_s + kSaturatedCapacity * psi, kSaturatedCapacity, phi.Ks, 0.0};
    }
    const double m = phi.m();
    const double n = phi.n;
    const double log_x = n * std::log(-phi.alpha * psi);
    if (log_x > 600.0) {
        // Beyond any physical head; the curve is flat at theta_r.
        return {phi.theta_r, phi.theta_r, 0.0, 0.0, 0.0};
    }
    const double x = std::exp(log_x);
    const double b = 1.0 + x;
    const double log_b = std::log1p(x);
    const double se = std::exp(-m * log_b);
    const double dx = n * x / psi;
    const double dse = -m * se / b * dx;

    // g = (x/b)^m = (1 - 1/b)^m; f = 1 - g evaluated without cancellation for large x.
    const double log_g = -m * std::log1p(1.0 / x);
    const double g = std::exp(log_g);
    const double f = -std::expm1(log_g);
    const double sqrt_se = std::sqrt(se);
    const double K = phi.Ks * sqrt_se * f * f;

    const double dg = g * m * n / (b * psi);
    double dK = phi.Ks * (0.5 / sqrt_se * dse * f * f - 2.0 * sqrt_se * f * dg);
    if (!std::isfinite(dK)) dK = 0.0;

    const double dtheta = (phi.theta_s - phi.theta_r);
    const double theta = phi.theta_r + dtheta * se;
    return {theta, theta, dtheta * dse, K, dK};
}

double head_from_content(double theta, const HydraulicParams& phi) {
    if (theta >= phi.theta_s) return 0.0;
    const double floor = phi.theta_r + 1e-12 * (phi.theta_s - phi.theta_r);
    const double se = (std::max(theta, floor) - phi.theta_r) / (phi.theta_s - phi.theta_r);
    const double m = phi.m();
    const double base = std::expm1(-std::log(se) / m);
    return -std::pow(base, 1.0 / phi.n) / phi.alpha;
}

HydraulicParams preset(const std::string& name) {
    // Carsel & Parrish class-average van Genuchten parameters.
    if (name == "loam") return {2.89e-6, 0.43, 0.078, 3.6, 1.56};
    if (name == "sandy_loam") return {1.228e-5, 0.41, 0.065, 7.5, 1.89};
    if (name == "clay_loam") return {7.22e-7, 0.41, 0.095, 1.9, 1.31};
    throw InvalidArgument("unknown hydraulic preset: " + name);
}

}  // namespace irrig::soilsim
