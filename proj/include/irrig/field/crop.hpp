#pragma once

namespace irrig::field {

inline constexpr double kBaseTemperature = 5.0;

/// Daily growing-degree increment, clamped at zero.
double gdd_step(double t_avg, double t_base = kBaseTemperature);

/// Raw quartic crop-coefficient curve in cumulative GDD.
double kc_polynomial(double g);

/// Crop coefficient, clamped below at zero.
double kc_of_gdd(double g);

}  // namespace irrig::field
