#include "irrig/field/crop.hpp"

#include <algorithm>

namespace irrig::field {

double gdd_step(double t_avg, double t_base) { return std::max(0.0, t_avg - t_base); }

double kc_polynomial(double g) {
    return -0.0207 + g * (0.00266 + g * (4.7e-8 + g * (-2.0e-9 + g * 2.70e-13)));
}

double kc_of_gdd(double g) { return std::max(0.0, kc_polynomial(g)); }

}  // namespace irrig::field
