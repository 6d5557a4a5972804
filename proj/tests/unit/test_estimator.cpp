#include <doctest.h>

#include <cmath>

#include "irrig/estimator/ekf.hpp"
#include "irrig/field/field.hpp"

using namespace irrig;
using namespace irrig::estimator;

namespace {

soilsim::DailyForcing dry_day() { return {0.0, 0.0, 0.005, 0.9, 0.5, 0.1}; }

soilsim::ColumnState smooth_state(const soilsim::ColumnGrid& g) {
    soilsim::ColumnState s;
    for (int i = 0; i < g.nodes; ++i) s.psi.push_back(-2.0 - 3.0 * g.node_depth(i));
    return s;
}

double sq(double x) { return x * x; }

struct TwinResult {
    double filtered = 0.0;
    double open_loop = 0.0;
};

// Truth with process noise and a noisy top-layer sensor; both estimators start from the same wrong guess.
TwinResult twin_experiment(std::uint64_t seed, int days) {
    field::Field f(field::default_zones());
    const auto& zone = f.zone(0);
    const auto& col = f.column(0);
    Rng rng(seed);
    Rng weather_rng = rng.fork(1);
    Rng noise_rng = rng.fork(2);
    const auto weather = field::generate_weather(days, weather_rng);
    soilsim::ColumnState truth = field::sample_initial_state(zone, f.grid(), rng);
    const soilsim::ColumnState guess = soilsim::uniform_state(0.5 * (zone.nu_lower + zone.nu_upper), zone.phi, f.grid());
    ZoneFilter filter(col, guess);
    soilsim::ColumnState open = guess;
    TwinResult r;
    for (int d = 0; d < days; ++d) {
        const soilsim::DailyForcing forcing{0.0, weather[d].precip, weather[d].et0, 0.9, 0.5, 0.1};
        truth = col.step_day(truth, forcing, 0.0007, noise_rng);
        filter.predict(forcing);
        open = col.advance_day(open, forcing);
        const double o = filter.observe_mean(truth) + noise_rng.normal(0.0, 0.0008);
        filter.update(o);
        const double rz = field::root_zone_moisture(soilsim::water_profile(truth, zone.phi), 0.5, f.grid());
        r.filtered += sq(filter.root_zone(0.5) - rz);
        r.open_loop += sq(field::root_zone_moisture(soilsim::water_profile(open, zone.phi), 0.5, f.grid()) - rz);
    }
    r.filtered = std::sqrt(r.filtered / days);
    r.open_loop = std::sqrt(r.open_loop / days);
    return r;
}

}  // namespace

TEST_CASE("top-layer selection averages the upper 25 cm") {
    const Vec m = selection_map({});
    REQUIRE(m.size() == 21);
    for (int i = 0; i < 21; ++i) CHECK(m[i] == doctest::Approx(i <= 10 ? 1.0 / 11 : 0.0));
    CHECK(m.sum() == doctest::Approx(1.0));
    CHECK(m.minCoeff() >= 0.0);
}

TEST_CASE("default filter constants") {
    const EkfConfig c;
    CHECK(c.p0 == 15.9);
    CHECK(c.q == 0.05);
    CHECK(c.r == 19.25);
    CHECK(c.units == Units::Percent);
    field::Field f(field::default_zones());
    ZoneFilter zf(f.column(0), smooth_state(f.grid()));
    CHECK(zf.ekf().P() == 15.9 * Mat::Identity(21, 21));
    CHECK(zf.ekf().Q() == 0.05 * Mat::Identity(21, 21));
    CHECK(zf.ekf().R() == 19.25);
}

TEST_CASE("frozen dynamics without process noise leave P unchanged") {
    Mat p0 = Mat::Random(4, 4);
    p0 = p0 * p0.transpose() + Mat::Identity(4, 4);
    Ekf ekf(Vec::Ones(4), p0, Mat::Zero(4, 4), 1.0);
    const Mat before = ekf.P();
    ekf.predict(ekf.x(), Mat::Identity(4, 4));
    CHECK((ekf.P() - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("process noise adds its trace") {
    field::Field f(field::default_zones());
    ZoneFilter zf(f.column(0), smooth_state(f.grid()));
    const Mat p = zf.ekf().P();
    const soilsim::ColumnState x0 = zf.state();
    zf.predict(dry_day());
    const Dynamics fn = [&](const Vec& x) {
        soilsim::ColumnState s{{x.data(), x.data() + x.size()}};
        auto n = f.column(0).advance_day(s, dry_day());
        return Vec(Eigen::Map<Vec>(n.psi.data(), 21));
    };
    const Mat a = jacobian_fd(fn, Eigen::Map<const Vec>(x0.psi.data(), 21), 1e-4);
    const double apa = (a * p * a.transpose()).trace();
    CHECK(zf.ekf().P().trace() == doctest::Approx(apa + 0.05 * 21).epsilon(1e-10));
    CHECK(zf.ekf().P().trace() >= apa);
}

TEST_CASE("finite-difference Jacobian matches a central-difference oracle") {
    field::Field f(field::default_zones());
    const auto& col = f.column(1);
    const soilsim::ColumnState s0 = smooth_state(f.grid());
    const Vec x0 = Eigen::Map<const Vec>(s0.psi.data(), 21);
    const Dynamics fn = [&](const Vec& x) {
        soilsim::ColumnState s{{x.data(), x.data() + x.size()}};
        auto n = col.advance_day(s, dry_day());
        return Vec(Eigen::Map<Vec>(n.psi.data(), 21));
    };
    const Mat a = jacobian_fd(fn, x0, 1e-4);
    Mat oracle(21, 21);
    const double h = 1e-3;
    for (int j = 0; j < 21; ++j) {
        Vec p = x0, m = x0;
        p[j] += h;
        m[j] -= h;
        oracle.col(j) = (fn(p) - fn(m)) / (2 * h);
    }
    CHECK((a - oracle).norm() / oracle.norm() <= 1e-3);
    CHECK(jacobian_fd(fn, x0, 1e-4, kernels::Exec::Parallel) == a);
}

TEST_CASE("huge measurement variance ignores the measurement") {
    field::Field f(field::default_zones());
    EkfConfig cfg;
    cfg.r = 1e12;
    ZoneFilter zf(f.column(0), smooth_state(f.grid()), cfg);
    const Vec before = zf.ekf().x();
    zf.update(0.45);
    CHECK((zf.ekf().x() - before).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("scalar linear case matches the closed-form Kalman filter") {
    const double q = 0.3, r = 0.7;
    Ekf ekf(Vec::Constant(1, 2.0), Mat::Constant(1, 1, 5.0), Mat::Constant(1, 1, q), r);
    const Observation obs{[](const Vec& x) { return x[0]; }, [](const Vec&) { return Vec::Ones(1); }};
    double x = 2.0, p = 5.0;
    Rng rng(17);
    double truth = 0.0;
    for (int k = 0; k < 50; ++k) {
        truth += rng.normal(0.0, std::sqrt(q));
        const double o = truth + rng.normal(0.0, std::sqrt(r));
        ekf.predict(ekf.x(), Mat::Identity(1, 1));
        ekf.update(o, obs);
        const double pm = p + q;
        const double kgain = pm / (pm + r);
        x += kgain * (o - x);
        p = (1 - kgain) * pm;
        CHECK(std::abs(ekf.x()[0] - x) <= 1e-10);
        CHECK(std::abs(ekf.P()(0, 0) - p) <= 1e-10);
    }
}

TEST_CASE("covariance stays symmetric with a nonnegative diagonal") {
    field::Field f(field::default_zones());
    ZoneFilter zf(f.column(2), smooth_state(f.grid()));
    Rng rng(5);
    for (int d = 0; d < 10; ++d) {
        zf.predict(dry_day());
        zf.update(rng.uniform(0.15, 0.3));
        const Mat& p = zf.ekf().P();
        CHECK((p - p.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(p.diagonal().minCoeff() >= 0.0);
        CHECK(zf.ekf().x().maxCoeff() <= 0.0);
    }
}

TEST_CASE("exact model and exact start give zero innovations") {
    field::Field f(field::default_zones());
    const auto& col = f.column(0);
    soilsim::ColumnState truth = smooth_state(f.grid());
    ZoneFilter zf(col, truth);
    for (int d = 0; d < 5; ++d) {
        truth = col.advance_day(truth, dry_day());
        zf.predict(dry_day());
        const UpdateReport rep = zf.update(zf.observe_mean(truth));
        CHECK(std::abs(rep.innovation) <= 1e-6);
    }
}

TEST_CASE("units toggle scales the observation space") {
    field::Field f(field::default_zones());
    const Vec m = selection_map(f.grid());
    const soilsim::ColumnState s = smooth_state(f.grid());
    const Vec x = Eigen::Map<const Vec>(s.psi.data(), 21);
    const auto pct = moisture_observation(f.zone(0).phi, m, Units::Percent);
    const auto frac = moisture_observation(f.zone(0).phi, m, Units::Fraction);
    CHECK(pct.h(x) == doctest::Approx(100 * frac.h(x)));
    CHECK((pct.gradient(x) - 100 * frac.gradient(x)).norm() <= 1e-12);
    CHECK(parse_units("fraction") == Units::Fraction);
    CHECK_THROWS_AS(parse_units("permille"), ConfigError);
}

TEST_CASE("observation gradient matches finite differences") {
    field::Field f(field::default_zones());
    const auto obs = moisture_observation(f.zone(1).phi, selection_map(f.grid()), Units::Percent);
    const soilsim::ColumnState s = smooth_state(f.grid());
    const Vec x = Eigen::Map<const Vec>(s.psi.data(), 21);
    const Vec g = obs.gradient(x);
    for (int i = 0; i < 21; ++i) {
        Vec p = x, m = x;
        p[i] += 1e-6;
        m[i] -= 1e-6;
        CHECK(g[i] == doctest::Approx((obs.h(p) - obs.h(m)) / 2e-6).epsilon(1e-6));
    }
}

TEST_CASE("non-finite innovation variance is reported") {
    Ekf ekf(Vec::Zero(2), Mat::Identity(2, 2), Mat::Zero(2, 2), 1.0);
    const Observation bad{[](const Vec&) { return 0.0; },
                          [](const Vec&) { return Vec::Constant(2, std::numeric_limits<double>::quiet_NaN()); }};
    CHECK_THROWS_AS(ekf.update(0.0, bad), SingularInnovationCovariance);
    CHECK_THROWS_AS(Ekf(Vec::Zero(2), Mat::Identity(3, 3), Mat::Zero(2, 2), 1.0), LengthMismatch);
    EkfConfig c;
    c.r = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("filtered root-zone moisture beats the open-loop model") {
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const TwinResult r = twin_experiment(seed, 20);
        MESSAGE("seed " << seed << " filtered " << r.filtered << " open " << r.open_loop);
        wins += r.filtered < r.open_loop;
    }
    CHECK(wins >= 9);
}
