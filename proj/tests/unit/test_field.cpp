#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "irrig/field/crop.hpp"
#include "irrig/field/field.hpp"

using namespace irrig;
using namespace irrig::field;

TEST_CASE("target bounds") {
    auto b = target_bounds(0.280, 0.120, 0.5);
    CHECK(b.upper == doctest::Approx(0.280));
    CHECK(b.lower == doctest::Approx(0.200));
    b = target_bounds(0.30, 0.16, 1.0);
    CHECK(b.lower == doctest::Approx(0.16));
    b = target_bounds(0.30, 0.16, 1e-9);
    CHECK(b.lower == doctest::Approx(0.30).epsilon(1e-8));
    CHECK_THROWS_AS(target_bounds(0.2, 0.3, 0.5), InvalidBounds);
    CHECK_THROWS_AS(target_bounds(0.3, 0.2, 0.0), InvalidBounds);
    CHECK_THROWS_AS(target_bounds(0.3, 0.2, 1.5), InvalidBounds);
}

TEST_CASE("default zones carry the published bounds") {
    const auto zones = default_zones();
    REQUIRE(zones.size() == 3);
    CHECK(zones[0].nu_upper == doctest::Approx(0.280));
    CHECK(zones[0].nu_lower == doctest::Approx(0.200));
    CHECK(zones[1].nu_upper == doctest::Approx(0.280));
    CHECK(zones[1].nu_lower == doctest::Approx(0.200));
    CHECK(zones[2].nu_upper == doctest::Approx(0.300));
    CHECK(zones[2].nu_lower == doctest::Approx(0.230));
    for (const auto& z : zones) {
        // Bounds consistency holds exactly at construction.
        CHECK(z.nu_lower == z.theta_fc - z.mad * (z.theta_fc - z.theta_wp));
        CHECK(z.nu_upper == z.theta_fc);
        // Field capacity and wilting heads bracket the target band.
        CHECK(soilsim::water_content(-3.37, z.phi) == doctest::Approx(z.theta_fc).epsilon(2e-3));
        CHECK(soilsim::water_content(-153.0, z.phi) == doctest::Approx(z.theta_wp).epsilon(2e-3));
        const auto s = z.stress();
        CHECK_NOTHROW(s.validate());
        CHECK(s.anaerobic == soilsim::water_content(-0.1, z.phi));
    }
}

TEST_CASE("root-zone moisture weighting") {
    const soilsim::ColumnGrid grid;
    SUBCASE("uniform profile") {
        std::vector<double> y(21, 0.25);
        CHECK(root_zone_moisture(y, 0.5, grid) == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(root_zone_moisture(y, 0.2, grid) == doctest::Approx(0.25).epsilon(1e-14));
    }
    SUBCASE("top quarter wetter") {
        // zr = 0.5: quarter boundaries 0.125, 0.25, 0.375; node 5 sits exactly on 0.125 and belongs to quarter 1.
        std::vector<double> y(21, 0.20);
        for (int i = 0; i <= 5; ++i) y[i] = 0.30;
        CHECK(root_zone_moisture(y, 0.5, grid) == doctest::Approx(0.4 * 0.30 + 0.6 * 0.20).epsilon(1e-14));
    }
    SUBCASE("weights are 0.4, 0.3, 0.2, 0.1") {
        // Oracle: explicit quarter membership for the paper grid.
        const int first[4] = {0, 6, 11, 16};
        const int last[4] = {5, 10, 15, 20};
        const double w[4] = {0.4, 0.3, 0.2, 0.1};
        for (int q = 0; q < 4; ++q) {
            std::vector<double> y(21, 0.0);
            for (int i = first[q]; i <= last[q]; ++i) y[i] = 1.0;
            CHECK(root_zone_moisture(y, 0.5, grid) == doctest::Approx(w[q]).epsilon(1e-14));
        }
    }
    SUBCASE("nodes below the rooting depth are ignored") {
        std::vector<double> y(21, 0.2);
        for (int i = 11; i < 21; ++i) y[i] = 0.9;
        CHECK(root_zone_moisture(y, 0.25, grid) == doctest::Approx(0.2));
    }
    CHECK_THROWS_AS(root_zone_moisture(std::vector<double>(21, 0.2), 0.6, grid), InvalidArgument);
    CHECK_THROWS_AS(root_zone_moisture(std::vector<double>(20, 0.2), 0.5, grid), LengthMismatch);
}

TEST_CASE("growing degree days") {
    CHECK(gdd_step(15.0) == 10.0);
    CHECK(gdd_step(5.0) == 0.0);
    CHECK(gdd_step(3.0) == 0.0);
    CHECK(gdd_step(20.0, 10.0) == 10.0);
}

TEST_CASE("crop coefficient quartic") {
    CHECK(kc_polynomial(0.0) == doctest::Approx(-0.0207));
    CHECK(kc_of_gdd(0.0) == 0.0);
    const double g = 1000.0;
    const double oracle = -0.0207 + 0.00266 * g + 4.7e-8 * g * g - 2.0e-9 * g * g * g + 2.70e-13 * g * g * g * g;
    CHECK(oracle == doctest::Approx(0.9563).epsilon(1e-12));
    CHECK(kc_polynomial(1000.0) == doctest::Approx(oracle).epsilon(1e-12));
    for (double x = 0.0; x < 2000.0; x += 7.3) {
        CHECK(kc_of_gdd(x) >= 0.0);
        if (kc_polynomial(x) >= 0.0) CHECK(kc_of_gdd(x) == kc_polynomial(x));
        // Continuity: no jump larger than the slope bound allows over a small step.
        CHECK(std::fabs(kc_of_gdd(x + 1e-6) - kc_of_gdd(x)) <= 1e-7);
    }
}

TEST_CASE("weather generator") {
    Rng a(1), b(1);
    const auto w = generate_weather(113, a);
    CHECK(w.size() == 113);
    CHECK(w == generate_weather(113, b));
    for (const auto& d : w) {
        CHECK(d.et0 >= 1.04e-3);
        CHECK(d.et0 <= 9.0e-3);
        CHECK(d.precip >= 0.0);
    }
    WeatherConfig dry;
    dry.rain.wet_probability = 0.0;
    Rng c(3);
    for (const auto& d : generate_weather(500, c, dry)) CHECK(d.precip == 0.0);
    CHECK_THROWS_AS(generate_weather(0, c), InvalidArgument);
}

TEST_CASE("rain chain statistics match the configured chain") {
    Rng rng(99);
    long wet = 0, wet_wet = 0, wet_prev = 0, days = 0;
    double depth = 0.0;
    for (int s = 0; s < 200; ++s) {
        const auto w = generate_weather(113, rng);
        for (std::size_t d = 0; d < w.size(); ++d) {
            const bool is_wet = w[d].precip > 0.0;
            wet += is_wet;
            depth += w[d].precip;
            if (d > 0 && w[d - 1].precip > 0.0) {
                ++wet_prev;
                wet_wet += is_wet;
            }
            ++days;
        }
    }
    CHECK(static_cast<double>(wet) / days == doctest::Approx(0.25).epsilon(0.05));
    CHECK(static_cast<double>(wet_wet) / wet_prev == doctest::Approx(0.5).epsilon(0.05));
    CHECK(depth / wet == doctest::Approx(0.005).epsilon(0.05));
}

TEST_CASE("forcing perturbation") {
    const WeatherDay w{0.005, 0.002, 18.0};
    NoiseSpec zero;
    zero.forcing = {0.0, 0.0, 0.0};
    Rng rng(4);
    const auto [w0, kc0] = perturb_forcing(w, 0.8, 3, zero, rng);
    CHECK(w0 == w);
    CHECK(kc0 == 0.8);

    NoiseSpec huge;
    huge.forcing = {1.0, 1.0, 1.0};
    for (int k = 0; k < 1000; ++k) {
        const auto [p, kc] = perturb_forcing(w, 0.8, 0, huge, rng);
        CHECK(p.et0 >= 0.0);
        CHECK(p.precip >= 0.0);
        CHECK(kc >= 0.0);
    }

    // Empirical std grows with lead; compare against the growth schedule.
    NoiseSpec spec;
    double prev = 0.0;
    const WeatherDay mid{0.05, 0.05, 15.0};
    for (int lead : {0, 2, 5, 10, 20}) {
        double ss = 0.0;
        const int n = 100000;
        for (int k = 0; k < n; ++k) {
            const auto [p, kc] = perturb_forcing(mid, 0.8, lead, spec, rng);
            ss += (p.et0 - mid.et0) * (p.et0 - mid.et0);
        }
        const double sd = std::sqrt(ss / n);
        CHECK(sd == doctest::Approx(spec.forcing.et0_std * std::min(1.0 + 0.15 * lead, 3.0)).epsilon(0.02));
        CHECK(sd >= prev * 0.99);
        prev = sd;
    }
    CHECK_THROWS_AS(perturb_forcing(w, 0.8, -1, spec, rng), InvalidArgument);
}

namespace {

FieldForcing sample_forcing() {
    FieldForcing f;
    f.weather = {0.006, 0.001, 20.0};
    f.kc = 0.9;
    return f;
}

std::vector<Rng> rngs(std::uint64_t seed, std::size_t m) {
    std::vector<Rng> r;
    for (std::size_t i = 0; i < m; ++i) r.emplace_back(derive_seed(seed, i));
    return r;
}

}  // namespace

TEST_CASE("single-zone field step is step_day followed by observe") {
    const auto z = default_zones()[0];
    Field field({z});
    NoiseSpec noise;
    auto r1 = rngs(5, 1);
    FieldState fs = field.sample_initial(r1);
    auto r_field = rngs(6, 1);
    Rng r_direct = r_field[0];
    const double u = 0.01;
    const auto out = field.step(fs, std::vector<double>{u}, sample_forcing(), noise, r_field);

    soilsim::RichardsColumn col(z.phi, soilsim::ColumnGrid{}, z.stress());
    const auto direct = col.step_day(fs.zones[0], sample_forcing().for_zone(u), noise.process_std, r_direct);
    const auto y = soilsim::observe(direct, z.phi, noise.output_std, r_direct);
    CHECK(out.next.zones[0] == direct);
    CHECK(out.y[0] == y);
    CHECK(out.next.day_index == 1);
    CHECK(out.next.gdd_cum == 15.0);
}

TEST_CASE("zones are independent: permuting zones permutes outputs") {
    auto zones = default_zones();
    Field field(zones);
    auto init = rngs(1, 3);
    const FieldState fs = field.sample_initial(init);
    const std::vector<double> u{0.0, 0.02, 0.01};
    auto r = rngs(2, 3);
    const auto out = field.step(fs, u, sample_forcing(), NoiseSpec{}, r);
    CHECK(out.y.size() == 3);
    for (const auto& y : out.y) CHECK(y.size() == 21);

    const std::vector<std::size_t> perm{2, 0, 1};
    std::vector<ZoneConfig> pz;
    FieldState pfs;
    std::vector<double> pu;
    auto base = rngs(2, 3);
    std::vector<Rng> pr;
    for (auto k : perm) {
        pz.push_back(zones[k]);
        pfs.zones.push_back(fs.zones[k]);
        pu.push_back(u[k]);
        pr.push_back(base[k]);
    }
    Field pfield(pz);
    const auto pout = pfield.step(pfs, pu, sample_forcing(), NoiseSpec{}, pr);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(pout.next.zones[j] == out.next.zones[perm[j]]);
        CHECK(pout.y[j] == out.y[perm[j]]);
    }
}

TEST_CASE("property: a zone's trajectory ignores other zones' parameters and actions") {
    auto zones = default_zones();
    auto other = zones;
    other[1] = ZoneConfig::make(2, "swapped", soilsim::preset("sandy_loam"), 0.25, 0.10, 0.7);
    other[2] = zones[0];
    other[2].zone_id = 3;
    Field a(zones), b(other);
    auto ia = rngs(8, 3);
    FieldState sa = a.sample_initial(ia);
    FieldState sb = sa;
    auto ra = rngs(9, 3), rb = rngs(9, 3);
    Rng wx(10);
    for (int d = 0; d < 10; ++d) {
        FieldForcing f = sample_forcing();
        f.weather.et0 = wx.uniform(1e-3, 9e-3);
        const auto oa = a.step(sa, std::vector<double>{0.005, 0.0, 0.0}, f, NoiseSpec{}, ra);
        const auto ob = b.step(sb, std::vector<double>{0.005, 0.03, 0.01}, f, NoiseSpec{}, rb);
        sa = oa.next;
        sb = ob.next;
        CHECK(oa.y[0] == ob.y[0]);
    }
    CHECK(sa.zones[0] == sb.zones[0]);
}

TEST_CASE("gdd_cum is nondecreasing over a generated season") {
    Field field(default_zones());
    auto init = rngs(3, 3);
    FieldState fs = field.sample_initial(init);
    Rng wr(4);
    const auto weather = generate_weather(40, wr);
    auto r = rngs(5, 3);
    for (const auto& w : weather) {
        FieldForcing f;
        f.weather = w;
        f.kc = kc_of_gdd(fs.gdd_cum);
        const double before = fs.gdd_cum;
        fs = field.step(fs, std::vector<double>(3, 0.0), f, NoiseSpec{}, r).next;
        CHECK(fs.gdd_cum >= before);
    }
    CHECK(fs.day_index == 40);
}

TEST_CASE("field step validates per-zone inputs") {
    Field field(default_zones());
    auto r = rngs(1, 3);
    const FieldState fs = field.sample_initial(r);
    CHECK_THROWS_AS(field.step(fs, std::vector<double>{0.0, 0.0}, sample_forcing(), NoiseSpec{}, r), LengthMismatch);
    CHECK_THROWS_AS(Field(std::vector<ZoneConfig>{}), InvalidArgument);
}

TEST_CASE("initial-condition sampler stays in the documented band") {
    const auto z = default_zones()[2];
    Rng rng(12);
    for (int k = 0; k < 200; ++k) {
        const auto s = sample_initial_state(z, soilsim::ColumnGrid{}, rng);
        const auto theta = soilsim::water_profile(s, z.phi);
        CHECK(theta.front() == doctest::Approx(theta.back()));
        CHECK(theta[0] >= z.nu_lower - 0.03 - 1e-9);
        CHECK(theta[0] <= z.nu_upper + 1e-9);
    }
}

TEST_CASE("solver failure is tagged with the zone id") {
    soilsim::SolverOptions opt;
    opt.max_iterations = 1;
    opt.max_halvings = 0;
    Field field(default_zones(), soilsim::ColumnGrid{}, opt);
    auto r = rngs(1, 3);
    const FieldState fs = field.sample_initial(r);
    try {
        field.step(fs, std::vector<double>{0.05, 0.05, 0.05}, sample_forcing(), NoiseSpec{}, r);
        FAIL("expected a convergence failure");
    } catch (const ZoneNonConvergence& e) {
        CHECK(e.zone_id == 1);
    }
}
