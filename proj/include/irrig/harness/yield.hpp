#pragma once

#include <span>

#include "irrig/common/error.hpp"

namespace irrig::harness {

class OrderingViolation : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class ZeroIrrigation : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class IncompleteLog : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

inline constexpr double kMaxYield = 0.88;  ///< kg/m2
inline constexpr double kYieldResponse = 1.15;

/// Stress factor K(theta): 0 at or above the anaerobic point v1, linear up to 1 at v3,
/// 1 on [v2, v3], linear down to 0 at the wilting point vw, 0 below it.
/// Requires vw < v2 <= v3 < v1.
double yield_stress_factor(double theta, double v1, double v2, double v3, double vw);

/// Ya = Ym (1 - ky + ky ETc/ETm), clamped to [0, Ym].
double yield_from_et(double etc, double etm, double ym = kMaxYield, double ky = kYieldResponse);

/// Yield over daily series: ETm = kc et0 and ETc = K(theta) ETm each day.
struct StressPoints {
    double v1, v2, v3, vw;
};
double season_yield(std::span<const double> theta_rz, std::span<const double> kc, std::span<const double> et0,
                    const StressPoints& points, double ym = kMaxYield, double ky = kYieldResponse);

/// Irrigation water-use efficiency, kg/m3. Total irrigation is a depth in m.
double iwue(double yield, double total_irrigation);

}  // namespace irrig::harness
