#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "irrig/kernels/parallel.hpp"
#include "irrig/soilsim/column.hpp"

namespace irrig::estimator {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class SingularInnovationCovariance : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Observation-space units: moisture as a fraction or in percent.
enum class Units { Fraction, Percent };

Units parse_units(const std::string& text);
std::string to_string(Units u);

struct EkfConfig {
    double p0 = 15.9;
    double q = 0.05;
    double r = 19.25;
    Units units = Units::Percent;
    double fd_step = 1e-4;  ///< m
    double obs_depth = 0.25;  ///< m
    double head_min = -1000.0;  ///< estimates are clamped to [head_min, head_max] after an update
    double head_max = 0.0;

    void validate() const;
    double unit_scale() const { return units == Units::Percent ? 100.0 : 1.0; }
};

/// Uniform weights over the nodes no deeper than `depth`.
Vec selection_map(const soilsim::ColumnGrid& grid, double depth = 0.25);

using Dynamics = std::function<Vec(const Vec&)>;

/// Forward-difference Jacobian of f at x; columns are independent, so Parallel matches Serial bit for bit.
Mat jacobian_fd(const Dynamics& f, const Vec& x, double step, kernels::Exec exec = kernels::Exec::Serial);
/// Same, reusing an already computed f(x).
Mat jacobian_fd(const Dynamics& f, const Vec& x, const Vec& fx, double step, kernels::Exec exec);

/// Scalar observation h(x) with gradient.
struct Observation {
    std::function<double(const Vec&)> h;
    std::function<Vec(const Vec&)> gradient;
};

/// Selection-weighted average moisture of a head profile, in the configured units.
Observation moisture_observation(const soilsim::HydraulicParams& phi, const Vec& selection, Units units);

struct UpdateReport {
    double innovation = 0.0;
    double innovation_variance = 0.0;
    Vec gain;
};

/// Generic extended Kalman filter with a scalar observation.
class Ekf {
public:
    Ekf() = default;
    Ekf(Vec x0, Mat p0, Mat q, double r);

    const Vec& x() const { return x_; }
    const Mat& P() const { return p_; }
    const Mat& Q() const { return q_; }
    double R() const { return r_; }

    /// x <- F(x), P <- A P A' + Q with A supplied by the caller.
    void predict(const Vec& fx, const Mat& a);
    UpdateReport update(double o, const Observation& obs);
    void clamp(double lo, double hi);

private:
    void symmetrize();

    Vec x_;
    Mat p_;
    Mat q_;
    double r_ = 0.0;
};

/// One zone: the filter wired to a Richards column and its top-layer observation.
class ZoneFilter {
public:
    ZoneFilter(const soilsim::RichardsColumn& column, const soilsim::ColumnState& guess, const EkfConfig& config = {});

    void predict(const soilsim::DailyForcing& forcing, kernels::Exec exec = kernels::Exec::Serial);
    /// `o` is the observed top-layer mean moisture as a fraction.
    UpdateReport update(double o);

    soilsim::ColumnState state() const;
    std::vector<double> moisture() const;
    double root_zone(double zr) const;
    const Ekf& ekf() const { return ekf_; }
    const EkfConfig& config() const { return config_; }
    const Vec& selection() const { return selection_; }

    /// Top-layer mean moisture (fraction) of a head profile.
    double observe_mean(const soilsim::ColumnState& s) const;

private:
    const soilsim::RichardsColumn* column_;
    EkfConfig config_;
    Vec selection_;
    Observation obs_;
    Ekf ekf_;
};

}  // namespace irrig::estimator
