#include <doctest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "irrig/soilsim/column.hpp"

using namespace irrig;
using namespace irrig::soilsim;
using irrig::testing::hydraulic_fixture;

namespace {

// Closed forms written out independently of the library's log-space evaluation.
double vg_theta(double psi, const HydraulicParams& p) {
    if (psi >= 0) return p.theta_s;
    const double m = 1.0 - 1.0 / p.n;
    return p.theta_r + (p.theta_s - p.theta_r) / std::pow(1.0 + std::pow(p.alpha * std::fabs(psi), p.n), m);
}

double mualem_k(double psi, const HydraulicParams& p) {
    const double m = 1.0 - 1.0 / p.n;
    const double se = (vg_theta(psi, p) - p.theta_r) / (p.theta_s - p.theta_r);
    const double inner = 1.0 - std::pow(1.0 - std::pow(se, 1.0 / m), m);
    return p.Ks * std::sqrt(se) * inner * inner;
}

StressThresholds loam_stress(const HydraulicParams& p) {
    return {water_content(-0.1, p), 0.30, 0.20, 0.12};
}

DailyForcing quiet() {
    DailyForcing f;
    f.kc = 0.0;
    f.et0 = 0.0;
    return f;
}

}  // namespace

TEST_CASE("fixture file round-trips the named presets") {
    for (const char* name : {"sandy_loam", "clay_loam"}) {
        CHECK(hydraulic_fixture(name) == preset(name));
    }
}

TEST_CASE("water_content limits and closed form") {
    const auto p = hydraulic_fixture("loam");
    CHECK(water_content(0.0, p) == p.theta_s);
    CHECK(water_content(0.5, p) == p.theta_s);
    // Loam's tail is slow (exponent n*m = 0.56), so the 1e-6 dry limit needs a far larger head.
    const auto sandy = hydraulic_fixture("sandy_loam");
    CHECK(std::fabs(water_content(-1e6, sandy) - sandy.theta_r) <= 1e-6);
    CHECK(std::fabs(water_content(-1e10, p) - p.theta_r) <= 1e-6);
    // (3.6)^1.56 = 7.3898..., m = 0.358974..., theta = 0.078 + 0.352 / 8.3898^0.35897
    const double hand = 0.078 + 0.352 / std::pow(1.0 + std::pow(3.6, 1.56), 1.0 - 1.0 / 1.56);
    CHECK(water_content(-1.0, p) == doctest::Approx(hand).epsilon(1e-13));
    CHECK(water_content(-1.0, p) == doctest::Approx(vg_theta(-1.0, p)).epsilon(1e-13));
}

TEST_CASE("capillary capacity") {
    const auto p = hydraulic_fixture("loam");
    CHECK(capillary_capacity(0.1, p) == kSaturatedCapacity);
    CHECK(kSaturatedCapacity == 1e-5);
    CHECK(capillary_capacity(-1e12, p) <= 1e-9);

    const double h = 1e-6;
    const double fd = (vg_theta(-2.0 + h, p) - vg_theta(-2.0 - h, p)) / (2 * h);
    CHECK(std::fabs(capillary_capacity(-2.0, p) - fd) <= 1e-6 * std::fabs(fd));
}

TEST_CASE("property: capacity matches finite differences on [-50, -0.01]") {
    for (const char* name : {"loam", "sandy_loam", "clay_loam", "zone1_loam", "zone3_clay_loam"}) {
        const auto p = hydraulic_fixture(name);
        for (int k = 0; k <= 200; ++k) {
            const double psi = -0.01 * std::pow(5000.0, k / 200.0);
            const double h = 1e-6 * std::max(1.0, std::fabs(psi));
            const double fd = (vg_theta(psi + h, p) - vg_theta(psi - h, p)) / (2 * h);
            const double c = capillary_capacity(psi, p);
            CHECK(c >= 0.0);
            CHECK(std::fabs(c - fd) <= 1e-6 * std::fabs(fd));
        }
    }
}

TEST_CASE("conductivity") {
    const auto p = hydraulic_fixture("loam");
    CHECK(conductivity(0.0, p) == p.Ks);
    CHECK(conductivity(3.0, p) == p.Ks);
    CHECK(conductivity(-1e-14, p) == doctest::Approx(p.Ks).epsilon(1e-6));
    CHECK(conductivity(-1.0, p) == doctest::Approx(mualem_k(-1.0, p)).epsilon(1e-11));

    const double h = 1e-6;
    for (double psi : {-0.05, -0.5, -3.0, -30.0}) {
        const double fd = (mualem_k(psi + h, p) - mualem_k(psi - h, p)) / (2 * h);
        CHECK(evaluate(psi, p).dK == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("property: retention and conductivity are monotone in head") {
    Rng rng(7);
    for (const char* name : {"loam", "sandy_loam", "clay_loam", "zone2_sandy_loam"}) {
        const auto p = hydraulic_fixture(name);
        double prev_t = -1, prev_k = -1;
        for (int k = 0; k <= 400; ++k) {
            const double psi = -1e4 * std::pow(1e-7, k / 400.0) + (k == 400 ? 1e-3 : 0.0);
            const double t = water_content(psi, p);
            const double kk = conductivity(psi, p);
            CHECK(t >= prev_t);
            CHECK(kk >= prev_k);
            CHECK(t >= p.theta_r);
            CHECK(t <= p.theta_s);
            prev_t = t;
            prev_k = kk;
        }
        for (int k = 0; k < 200; ++k) {
            const double a = -std::exp(rng.uniform(-8, 8));
            const double b = -std::exp(rng.uniform(-8, 8));
            const double lo = std::min(a, b), hi = std::max(a, b);
            CHECK(water_content(lo, p) <= water_content(hi, p));
            CHECK(conductivity(lo, p) <= conductivity(hi, p));
        }
    }
}

TEST_CASE("head_from_content inverts the retention curve") {
    const auto p = hydraulic_fixture("zone1_loam");
    for (double theta : {0.09, 0.12, 0.2, 0.28, 0.4}) {
        CHECK(water_content(head_from_content(theta, p), p) == doctest::Approx(theta).epsilon(1e-10));
    }
    CHECK(head_from_content(p.theta_s, p) == 0.0);
}

TEST_CASE("invalid hydraulic parameters are rejected") {
    CHECK_THROWS_AS(HydraulicParams({-1.0, 0.4, 0.1, 1.0, 1.5}).validate(), InvalidArgument);
    CHECK_THROWS_AS(HydraulicParams({1e-6, 0.1, 0.2, 1.0, 1.5}).validate(), InvalidArgument);
    CHECK_THROWS_AS(HydraulicParams({1e-6, 0.4, 0.1, 1.0, 1.0}).validate(), InvalidArgument);
    CHECK_THROWS_AS(preset("peat"), InvalidArgument);
}

TEST_CASE("root uptake") {
    const auto p = hydraulic_fixture("loam");
    const ColumnGrid grid;
    const auto stress = loam_stress(p);
    DailyForcing f;
    f.et0 = 0.005;
    f.kc = 1.0;
    f.zr = 0.3;

    SUBCASE("kc = 0 gives zero uptake") {
        f.kc = 0.0;
        for (double s : root_uptake(uniform_state(0.25, p, grid), f, grid, p, stress)) CHECK(s == 0.0);
    }
    SUBCASE("stress-free column takes up exactly Tp") {
        const auto sink = root_uptake(uniform_state(0.25, p, grid), f, grid, p, stress);
        double total = 0.0;
        for (int i = 0; i < grid.nodes; ++i) total += sink[i] * grid.control_volume(i);
        const double tp = 0.9 * 1.0 * 0.005 / 86400.0;
        CHECK(std::fabs(total - tp) <= 1e-12 * tp);
        for (int i = 0; i < grid.nodes; ++i) {
            if (grid.node_depth(i) > 0.3 + 1e-12) CHECK(sink[i] == 0.0);
        }
    }
    SUBCASE("drier than wilting gives zero uptake") {
        for (double s : root_uptake(uniform_state(0.11, p, grid), f, grid, p, stress)) CHECK(s == 0.0);
    }
    SUBCASE("uptake never exceeds Tp") {
        Rng rng(3);
        for (int trial = 0; trial < 50; ++trial) {
            ColumnState st;
            for (int i = 0; i < grid.nodes; ++i) st.psi.push_back(head_from_content(rng.uniform(0.09, 0.42), p));
            const auto sink = root_uptake(st, f, grid, p, stress);
            double total = 0.0;
            for (int i = 0; i < grid.nodes; ++i) total += sink[i] * grid.control_volume(i);
            CHECK(total <= 0.9 * 0.005 / 86400.0 * (1 + 1e-12));
        }
    }
}

TEST_CASE("stress factor is the continuous trapezoid") {
    const StressThresholds t{0.40, 0.30, 0.20, 0.10};
    CHECK(stress_factor(0.41, t) == 0.0);
    CHECK(stress_factor(0.40, t) == 0.0);
    CHECK(stress_factor(0.35, t) == doctest::Approx(0.5));
    CHECK(stress_factor(0.25, t) == 1.0);
    CHECK(stress_factor(0.15, t) == doctest::Approx(0.5));
    CHECK(stress_factor(0.10, t) == 0.0);
    CHECK(stress_factor(0.05, t) == 0.0);
}

TEST_CASE("sealed column conserves water over 30 days") {
    const auto p = hydraulic_fixture("loam");
    SolverOptions opt;
    opt.top = TopBoundary::Sealed;
    opt.bottom = BottomBoundary::Sealed;
    opt.root_uptake = false;
    const ColumnGrid grid;
    RichardsColumn col(p, grid, loam_stress(p), opt);
    // Wet top over dry bottom so water actually redistributes.
    ColumnState s;
    for (int i = 0; i < grid.nodes; ++i) s.psi.push_back(i < 7 ? -0.2 : -20.0);
    const double w0 = col.total_water(s);
    for (int d = 0; d < 30; ++d) s = col.advance_day(s, quiet());
    CHECK(std::fabs(col.total_water(s) - w0) <= 1e-5);
    CHECK(water_content(s.psi[0], p) < water_content(-0.2, p));
}

TEST_CASE("free drainage from saturation strictly decreases storage") {
    const auto p = hydraulic_fixture("loam");
    RichardsColumn col(p, ColumnGrid{}, loam_stress(p));
    ColumnState s{std::vector<double>(21, 0.0)};
    double prev = col.total_water(s);
    for (int d = 0; d < 20; ++d) {
        DayBalance b;
        s = col.advance_day(s, quiet(), &b);
        const double w = col.total_water(s);
        CHECK(w < prev);
        CHECK(b.drainage > 0.0);
        prev = w;
    }
}

TEST_CASE("property: 30-day mass balance closes with the solver's own fluxes") {
    Rng rng(2024);
    const ColumnGrid grid;
    for (const char* name : {"zone1_loam", "zone2_sandy_loam", "zone3_clay_loam", "sandy_loam"}) {
        const auto p = hydraulic_fixture(name);
        RichardsColumn col(p, grid, {water_content(-0.1, p), 0.28, 0.2, 0.12});
        ColumnState s = uniform_state(rng.uniform(0.18, 0.3), p, grid);
        const double w0 = col.total_water(s);
        double net = 0.0, runoff = 0.0, applied = 0.0;
        for (int d = 0; d < 30; ++d) {
            DailyForcing f;
            f.u_irr = rng.bernoulli(0.3) ? rng.uniform(0.0, 0.04) : 0.0;
            f.precip = rng.bernoulli(0.25) ? rng.exponential(0.005) : 0.0;
            f.et0 = rng.uniform(1.04e-3, 9e-3);
            f.kc = rng.uniform(0.0, 1.2);
            f.zr = rng.uniform(0.1, 0.5);
            DayBalance b;
            s = col.advance_day(s, f, &b);
            net += b.net_inflow();
            runoff += b.runoff;
            applied += f.u_irr + f.precip;
            CHECK(b.infiltration + b.runoff == doctest::Approx(f.u_irr + f.precip).epsilon(1e-12));
        }
        CHECK(std::fabs(col.total_water(s) - w0 - net) <= 1e-5);
        CHECK(runoff <= applied);
    }
}

TEST_CASE("halving the inner step changes day-end root-zone moisture by at most 1e-4") {
    const auto p = hydraulic_fixture("zone1_loam");
    const ColumnGrid grid;
    SolverOptions fine;
    fine.inner_steps = 96;
    RichardsColumn coarse_col(p, grid, {water_content(-0.1, p), 0.28, 0.2, 0.12});
    RichardsColumn fine_col(p, grid, {water_content(-0.1, p), 0.28, 0.2, 0.12}, fine);
    DailyForcing f;
    f.u_irr = 0.02;
    f.et0 = 0.005;
    f.kc = 0.8;
    ColumnState a = uniform_state(0.2, p, grid), b = a;
    for (int d = 0; d < 3; ++d) {
        a = coarse_col.advance_day(a, f);
        b = fine_col.advance_day(b, f);
        const auto ta = water_profile(a, p), tb = water_profile(b, p);
        double ra = 0, rb = 0;
        int n = 0;
        for (int i = 0; i < grid.nodes && grid.node_depth(i) <= 0.5; ++i, ++n) {
            ra += ta[i];
            rb += tb[i];
        }
        CHECK(std::fabs(ra - rb) / n <= 1e-4);
    }
}

TEST_CASE("paper-scale column has 21 outputs") {
    const auto p = hydraulic_fixture("zone1_loam");
    RichardsColumn col(p, ColumnGrid{}, {water_content(-0.1, p), 0.28, 0.2, 0.12});
    Rng rng(1);
    DailyForcing f;
    f.et0 = 0.004;
    f.kc = 0.5;
    const auto s = col.step_day(uniform_state(0.24, p, ColumnGrid{}), f, 0.0002, rng);
    CHECK(s.size() == 21);
    CHECK(observe(s, p, 0.0005, rng).size() == 21);
    CHECK(ColumnGrid{}.depth == 0.5);
}

TEST_CASE("observe") {
    const auto p = hydraulic_fixture("loam");
    const ColumnGrid grid;
    ColumnState s = uniform_state(0.25, p, grid);
    Rng rng(11);
    SUBCASE("zero noise reproduces the retention curve") {
        const auto y = observe(s, p, 0.0, rng);
        for (int i = 0; i < grid.nodes; ++i) CHECK(y[i] == water_content(s.psi[i], p));
    }
    SUBCASE("sample std matches the configured std within 5%") {
        const double truth = water_content(s.psi[0], p);
        double ss = 0.0;
        long n = 0;
        while (n < 100000) {
            for (double v : observe(s, p, 0.0005, rng)) {
                ss += (v - truth) * (v - truth);
                ++n;
            }
        }
        CHECK(std::sqrt(ss / n) == doctest::Approx(0.0005).epsilon(0.05));
    }
    SUBCASE("saturated nodes are clipped to theta_s") {
        ColumnState wet{std::vector<double>(21, 0.3)};
        for (int k = 0; k < 20; ++k) {
            for (double v : observe(wet, p, 0.01, rng)) CHECK(v <= p.theta_s);
        }
    }
}

TEST_CASE("process noise perturbs moisture by the configured std") {
    const auto p = hydraulic_fixture("zone1_loam");
    const ColumnGrid grid;
    Rng rng(5);
    const ColumnState base = uniform_state(0.24, p, grid);
    double ss = 0.0;
    long n = 0;
    for (int k = 0; k < 5000; ++k) {
        ColumnState s = base;
        apply_process_noise(s, p, 0.0007, rng);
        for (double psi : s.psi) {
            const double d = water_content(psi, p) - 0.24;
            ss += d * d;
            ++n;
        }
    }
    CHECK(std::sqrt(ss / n) == doctest::Approx(0.0007).epsilon(0.02));
}

TEST_CASE("determinism: same seed, same trajectory") {
    const auto p = hydraulic_fixture("zone2_sandy_loam");
    RichardsColumn col(p, ColumnGrid{}, {water_content(-0.1, p), 0.28, 0.2, 0.12});
    auto run = [&](std::uint64_t seed) {
        Rng rng(seed);
        ColumnState s = uniform_state(0.22, p, ColumnGrid{});
        DailyForcing f;
        f.u_irr = 0.01;
        f.et0 = 0.006;
        f.kc = 0.9;
        for (int d = 0; d < 5; ++d) s = col.step_day(s, f, 0.0007, rng);
        return s;
    };
    CHECK(run(9) == run(9));
    CHECK_FALSE(run(9) == run(10));
}

TEST_CASE("input validation") {
    const auto p = hydraulic_fixture("loam");
    RichardsColumn col(p, ColumnGrid{}, loam_stress(p));
    DailyForcing f;
    ColumnState s = uniform_state(0.25, p, ColumnGrid{});
    CHECK_THROWS_AS(col.advance_day(ColumnState{std::vector<double>(5, -1.0)}, f), LengthMismatch);
    s.psi[3] = std::nan("");
    CHECK_THROWS_AS(col.advance_day(s, f), NonFiniteState);
    s.psi[3] = -1.0;
    f.zr = 0.6;
    CHECK_THROWS_AS(col.advance_day(s, f), InvalidArgument);
    f.zr = 0.5;
    f.u_irr = -0.01;
    CHECK_THROWS_AS(col.advance_day(s, f), InvalidArgument);
    CHECK_THROWS_AS(ColumnGrid({0.5, 2}).validate(), InvalidArgument);
}

TEST_CASE("excess water runs off above the infiltration capacity") {
    const auto p = hydraulic_fixture("zone3_clay_loam");
    RichardsColumn col(p, ColumnGrid{}, {water_content(-0.1, p), 0.30, 0.23, 0.16});
    DailyForcing f;
    f.u_irr = 0.2;
    DayBalance b;
    col.advance_day(uniform_state(0.25, p, ColumnGrid{}), f, &b);
    CHECK(b.runoff == doctest::Approx(0.2 - p.Ks * 86400.0).epsilon(1e-9));
}
