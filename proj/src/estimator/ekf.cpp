#include "irrig/estimator/ekf.hpp"

#include <cmath>

#include "irrig/field/zone.hpp"
#include "irrig/soilsim/hydraulics.hpp"

namespace irrig::estimator {

Units parse_units(const std::string& text) {
    if (text == "fraction") return Units::Fraction;
    if (text == "percent") return Units::Percent;
    throw ConfigError("unknown ekf units '" + text + "' (expected fraction or percent)");
}

std::string to_string(Units u) { return u == Units::Percent ? "percent" : "fraction"; }

void EkfConfig::validate() const {
    if (!(p0 > 0.0) || !(q >= 0.0) || !(r > 0.0)) throw ConfigError("ekf needs p0 > 0, q >= 0, r > 0");
    if (!(fd_step > 0.0)) throw ConfigError("ekf fd_step must be positive");
    if (!(obs_depth >= 0.0)) throw ConfigError("ekf observation depth must be >= 0");
    if (!(head_min < head_max)) throw ConfigError("ekf head clamp is empty");
}

Vec selection_map(const soilsim::ColumnGrid& grid, double depth) {
    grid.validate();
    Vec m = Vec::Zero(grid.nodes);
    int count = 0;
    for (int i = 0; i < grid.nodes; ++i) {
        if (grid.node_depth(i) <= depth + 1e-9 * grid.dz()) {
            m[i] = 1.0;
            ++count;
        }
    }
    return m / count;
}

Mat jacobian_fd(const Dynamics& f, const Vec& x, double step, kernels::Exec exec) {
    return jacobian_fd(f, x, f(x), step, exec);
}

Mat jacobian_fd(const Dynamics& f, const Vec& x, const Vec& fx, double step, kernels::Exec exec) {
    Mat a(fx.size(), x.size());
    kernels::for_each_index(exec, static_cast<int>(x.size()), [&](int j) {
        Vec xp = x;
        xp[j] += step;
        a.col(j) = (f(xp) - fx) / step;
    });
    return a;
}

Observation moisture_observation(const soilsim::HydraulicParams& phi, const Vec& selection, Units units) {
    const double s = units == Units::Percent ? 100.0 : 1.0;
    Observation o;
    o.h = [phi, selection, s](const Vec& x) {
        double v = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (selection[i] != 0.0) v += selection[i] * soilsim::water_content(x[i], phi);
        }
        return s * v;
    };
    o.gradient = [phi, selection, s](const Vec& x) {
        Vec g = Vec::Zero(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (selection[i] != 0.0) g[i] = s * selection[i] * soilsim::capillary_capacity(x[i], phi);
        }
        return g;
    };
    return o;
}

Ekf::Ekf(Vec x0, Mat p0, Mat q, double r) : x_(std::move(x0)), p_(std::move(p0)), q_(std::move(q)), r_(r) {
    const auto n = x_.size();
    if (p_.rows() != n || p_.cols() != n || q_.rows() != n || q_.cols() != n) {
        throw LengthMismatch("ekf covariance shapes disagree with the state");
    }
    if (!(r_ > 0.0)) throw InvalidArgument("measurement variance must be positive");
    symmetrize();
}

void Ekf::predict(const Vec& fx, const Mat& a) {
    if (fx.size() != x_.size() || a.rows() != x_.size() || a.cols() != x_.size()) {
        throw LengthMismatch("ekf predict shapes disagree with the state");
    }
    x_ = fx;
    p_ = a * p_ * a.transpose() + q_;
    symmetrize();
}

UpdateReport Ekf::update(double o, const Observation& obs) {
    const Vec c = obs.gradient(x_);
    const Vec pc = p_ * c;
    const double s = c.dot(pc) + r_;
    if (!(s > 0.0) || !std::isfinite(s)) throw SingularInnovationCovariance("innovation variance is not positive");
    UpdateReport rep;
    rep.innovation = o - obs.h(x_);
    rep.innovation_variance = s;
    rep.gain = pc / s;
    x_ += rep.gain * rep.innovation;
    // Joseph form keeps P positive semidefinite under round-off.
    const Mat ikc = Mat::Identity(x_.size(), x_.size()) - rep.gain * c.transpose();
    p_ = ikc * p_ * ikc.transpose() + r_ * rep.gain * rep.gain.transpose();
    symmetrize();
    return rep;
}

void Ekf::clamp(double lo, double hi) { x_ = x_.cwiseMax(lo).cwiseMin(hi); }

void Ekf::symmetrize() { p_ = 0.5 * (p_ + p_.transpose()).eval(); }

ZoneFilter::ZoneFilter(const soilsim::RichardsColumn& column, const soilsim::ColumnState& guess, const EkfConfig& config)
    : column_(&column), config_(config) {
    config_.validate();
    const int n = column.grid().nodes;
    if (static_cast<int>(guess.size()) != n) throw LengthMismatch("initial guess length != grid nodes");
    selection_ = selection_map(column.grid(), config_.obs_depth);
    obs_ = moisture_observation(column.params(), selection_, config_.units);
    ekf_ = Ekf(Eigen::Map<const Vec>(guess.psi.data(), n), config_.p0 * Mat::Identity(n, n),
               config_.q * Mat::Identity(n, n), config_.r);
}

void ZoneFilter::predict(const soilsim::DailyForcing& forcing, kernels::Exec exec) {
    const Dynamics f = [&](const Vec& x) {
        soilsim::ColumnState s{{x.data(), x.data() + x.size()}};
        const soilsim::ColumnState next = column_->advance_day(s, forcing);
        return Vec(Eigen::Map<const Vec>(next.psi.data(), static_cast<Eigen::Index>(next.psi.size())));
    };
    const Vec fx = f(ekf_.x());
    const Mat a = jacobian_fd(f, ekf_.x(), fx, config_.fd_step, exec);
    ekf_.predict(fx, a);
}

UpdateReport ZoneFilter::update(double o) {
    const UpdateReport rep = ekf_.update(config_.unit_scale() * o, obs_);
    ekf_.clamp(config_.head_min, config_.head_max);
    return rep;
}

soilsim::ColumnState ZoneFilter::state() const {
    const Vec& x = ekf_.x();
    return {{x.data(), x.data() + x.size()}};
}

std::vector<double> ZoneFilter::moisture() const { return soilsim::water_profile(state(), column_->params()); }

double ZoneFilter::root_zone(double zr) const {
    return field::root_zone_moisture(moisture(), zr, column_->grid());
}

double ZoneFilter::observe_mean(const soilsim::ColumnState& s) const {
    double v = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) v += selection_[i] * soilsim::water_content(s.psi[i], column_->params());
    return v;
}

}  // namespace irrig::estimator
