#include "irrig/harness/yield.hpp"

#include <algorithm>

namespace irrig::harness {

double yield_stress_factor(double theta, double v1, double v2, double v3, double vw) {
    if (!(vw < v2 && v2 <= v3 && v3 < v1)) throw OrderingViolation("stress points need vw < v2 <= v3 < v1");
    if (theta >= v1) return 0.0;
    if (theta > v3) return (v1 - theta) / (v1 - v3);
    if (theta >= v2) return 1.0;
    if (theta > vw) return (theta - vw) / (v2 - vw);
    return 0.0;
}

double yield_from_et(double etc, double etm, double ym, double ky) {
    if (!(etm > 0.0)) throw InvalidArgument("maximum evapotranspiration must be positive");
    const double ya = ym * (1.0 - ky + ky * etc / etm);
    return std::clamp(ya, 0.0, ym);
}

double season_yield(std::span<const double> theta_rz, std::span<const double> kc, std::span<const double> et0,
                    const StressPoints& p, double ym, double ky) {
    if (theta_rz.empty() || theta_rz.size() != kc.size() || kc.size() != et0.size()) {
        throw IncompleteLog("yield needs equal-length, non-empty daily series");
    }
    double etm = 0.0, etc = 0.0;
    for (std::size_t d = 0; d < theta_rz.size(); ++d) {
        const double m = kc[d] * et0[d];
        etm += m;
        etc += yield_stress_factor(theta_rz[d], p.v1, p.v2, p.v3, p.vw) * m;
    }
    return yield_from_et(etc, etm, ym, ky);
}

double iwue(double yield, double total_irrigation) {
    if (!(total_irrigation > 0.0)) throw ZeroIrrigation("water-use efficiency needs positive irrigation");
    return yield / total_irrigation;
}

}  // namespace irrig::harness
