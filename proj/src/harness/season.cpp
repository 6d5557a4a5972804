#include "irrig/harness/season.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "irrig/harness/yield.hpp"

namespace irrig::harness {

namespace {

std::chrono::sys_days parse_date(const std::string& s) {
    int y = 0;
    unsigned m = 0, d = 0;
    char extra = 0;
    if (std::sscanf(s.c_str(), "%d-%u-%u%c", &y, &m, &d, &extra) != 3) throw ConfigError("bad date '" + s + "'");
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw ConfigError("bad date '" + s + "'");
    return std::chrono::sys_days{ymd};
}

scmarl::AgentForcing seen(const field::WeatherDay& w, double kc) { return {w.et0, kc, w.precip}; }

mpc::DayInput day_input(const field::WeatherDay& w, double kc, double u, double zr) {
    return {kc, w.et0, u, zr, w.precip};
}

struct Forecast {
    std::vector<field::WeatherDay> weather;
    std::vector<double> kc;
};

// Noisy copies of the next `n` days; days past the season repeat its last day.
Forecast forecast(const field::Season& s, int day, int n, const SeasonConfig& cfg, Rng& rng) {
    field::NoiseSpec spec;
    spec.forcing = cfg.forcing_noise;
    spec.growth = cfg.growth;
    Forecast f;
    for (int k = 0; k < n; ++k) {
        const int d = std::min(day + k, s.length() - 1);
        auto [w, kc] = field::perturb_forcing(s.weather[d], s.kc[d], k + 1, spec, rng);
        f.weather.push_back(w);
        f.kc.push_back(kc);
    }
    return f;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw MissingArtifact(what);
}

}  // namespace

SeasonFailure::SeasonFailure(int d, int z, const std::string& cause)
    : NumericalError("day " + std::to_string(d) + " zone " + std::to_string(z + 1) + ": " + cause), day(d), zone(z) {}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::Scmarl: return "scmarl";
        case Variant::Dmarl: return "dmarl";
        case Variant::ScmarlMpc: return "scmarl+mpc";
        case Variant::LbMaMpc: return "lb-ma-mpc";
    }
    return "?";
}

Variant parse_variant(const std::string& text) {
    for (Variant v : {Variant::Scmarl, Variant::Dmarl, Variant::ScmarlMpc, Variant::LbMaMpc}) {
        if (text == to_string(v)) return v;
    }
    throw ConfigError("unknown variant '" + text + "' (scmarl, dmarl, scmarl+mpc, lb-ma-mpc)");
}

bool uses_mpc(Variant v) { return v == Variant::ScmarlMpc || v == Variant::LbMaMpc; }

int season_days(const std::string& start, const std::string& end) {
    const auto a = parse_date(start), b = parse_date(end);
    if (!(b > a)) throw ConfigError("season end must be after its start");
    return static_cast<int>((b - a).count()) + 1;
}

void SeasonConfig::validate() const {
    (void)days();
    if (!(truth_noise >= 0.0) || !(sensor_noise >= 0.0)) throw ConfigError("noise stds must be >= 0");
    if (np < 1) throw ConfigError("prediction horizon must be >= 1");
    if (!(u_max > 0.0)) throw ConfigError("u_max must be positive");
    weather.validate();
    ekf.validate();
    weights.validate();
}

std::vector<int> lbmampc_binding_decision(const std::vector<std::vector<int>>& proposals) {
    if (proposals.empty()) return {};
    const std::size_t n = proposals.front().size();
    std::vector<int> c(n, 0);
    for (const auto& p : proposals) {
        if (p.size() != n) throw LengthMismatch("zone decision sequences differ in length");
        for (std::size_t k = 0; k < n; ++k) c[k] = c[k] || p[k] != 0;
    }
    return c;
}

SeasonLog run_season(const field::Field& fld, const SeasonConfig& config, const Schedulers& sch) {
    config.validate();
    const int m = static_cast<int>(fld.zone_count());
    const int days = config.days();
    const Variant v = config.variant;

    if (v == Variant::LbMaMpc) {
        require(static_cast<int>(sch.zone_bundles.size()) == m, "lb-ma-mpc needs one single-zone bundle per zone");
        for (const auto* b : sch.zone_bundles) {
            require(b != nullptr, "missing single-zone bundle");
            if (b->zone_count() != 1) throw LengthMismatch("lb-ma-mpc bundles must control one zone each");
        }
    } else {
        require(sch.bundle != nullptr, "variant " + to_string(v) + " needs a trained bundle");
        if (sch.bundle->zone_count() != m) throw LengthMismatch("bundle zone count != field zone count");
        const scmarl::Mode want = v == Variant::Dmarl ? scmarl::Mode::Dmarl : scmarl::Mode::Scmarl;
        if (sch.bundle->mode() != want) throw ConfigError("bundle mode does not match variant " + to_string(v));
    }
    if (uses_mpc(v)) {
        require(static_cast<int>(sch.surrogates.size()) == m, "variant " + to_string(v) + " needs one surrogate per zone");
        for (const auto* s : sch.surrogates) require(s != nullptr, "missing surrogate");
    }

    Rng root(config.seed);
    Rng weather_rng = root.fork(1);
    Rng init_rng = root.fork(2);
    Rng forecast_rng = root.fork(3);
    std::vector<Rng> truth_rngs, sensor_rngs;
    for (int i = 0; i < m; ++i) {
        truth_rngs.push_back(root.fork(100 + i));
        sensor_rngs.push_back(root.fork(200 + i));
    }
    const field::Season season = field::generate_season(days, weather_rng, config.weather);

    std::vector<soilsim::ColumnState> truth(m);
    std::vector<estimator::ZoneFilter> filters;
    for (int i = 0; i < m; ++i) {
        truth[i] = field::sample_initial_state(fld.zone(i), fld.grid(), init_rng);
        const auto& z = fld.zone(i);
        const soilsim::ColumnState guess =
            config.perfect_start ? truth[i]
                                 : soilsim::uniform_state(0.5 * (z.nu_lower + z.nu_upper), z.phi, fld.grid());
        filters.emplace_back(fld.column(i), guess, config.ekf);
    }

    SeasonLog log;
    log.variant = v;
    log.days = days;
    log.zones = m;
    std::vector<std::vector<mpc::DayInput>> history(m);

    for (int d = 0; d < days; ++d) {
        if (d > 0) {
            for (int i = 0; i < m; ++i) {
                const double o = filters[i].observe_mean(truth[i]) + sensor_rngs[i].normal(0.0, config.sensor_noise);
                try {
                    filters[i].update(o);
                } catch (const NumericalError& e) {
                    throw SeasonFailure(d, i, e.what());
                }
            }
        }
        std::vector<soilsim::ColumnState> est(m);
        std::vector<std::vector<double>> ys(m);
        std::vector<double> rz_est(m);
        for (int i = 0; i < m; ++i) {
            est[i] = filters[i].state();
            ys[i] = filters[i].moisture();
            rz_est[i] = filters[i].root_zone(config.zr);
        }
        const int horizon = uses_mpc(v) ? config.np : 1;
        const Forecast fc = forecast(season, d, horizon, config, forecast_rng);
        const scmarl::AgentForcing today = seen(fc.weather[0], fc.kc[0]);

        int c = 0;
        std::vector<double> a(m, 0.0);
        if (v == Variant::Scmarl || v == Variant::Dmarl) {
            const scmarl::JointAction ja = scmarl::act_joint(*sch.bundle, ys, today);
            c = ja.c;
            a = ja.a_la;
        } else {
            std::vector<scmarl::ForecastDay> fdays;
            for (int k = 0; k < horizon; ++k) fdays.push_back({fc.weather[k], fc.kc[k]});
            std::vector<int> cseq;
            std::vector<std::vector<double>> warm(m);
            if (v == Variant::ScmarlMpc) {
                const scmarl::HorizonPlan plan =
                    scmarl::rollout_horizon(*sch.bundle, fld, est, fdays, horizon, config.zr, config.ev_fraction);
                cseq = plan.c;
                warm = plan.a;
            } else {
                std::vector<std::vector<int>> proposals(m);
                for (int i = 0; i < m; ++i) {
                    const field::Field single({fld.zone(i)}, fld.grid(), fld.column(i).options());
                    const scmarl::HorizonPlan plan = scmarl::rollout_horizon(
                        *sch.zone_bundles[i], single, {est[i]}, fdays, horizon, config.zr, config.ev_fraction);
                    proposals[i] = plan.c;
                    warm[i] = plan.a[0];
                }
                cseq = lbmampc_binding_decision(proposals);
            }
            if (config.force_off) std::fill(cseq.begin(), cseq.end(), 0);
            kernels::for_each_index(config.exec, m, [&](int i) {
                mpc::MpcProblem p;
                p.np = horizon;
                p.c = cseq;
                p.theta0 = rz_est[i];
                p.nu_lower = fld.zone(i).nu_lower;
                p.nu_upper = fld.zone(i).nu_upper;
                p.q_upper = config.weights.q_upper;
                p.q_lower = config.weights.q_lower;
                p.r_u = config.weights.r_u;
                p.u_max = config.u_max;
                const int h = static_cast<int>(history[i].size());
                p.history.assign(history[i].begin() + std::max(0, h - 4), history[i].end());
                for (int k = 0; k < horizon; ++k) p.forecast.push_back(day_input(fc.weather[k], fc.kc[k], 0.0, config.zr));
                mpc::MpcOptions opt = config.mpc;
                opt.seed = derive_seed(config.seed, static_cast<std::uint64_t>(d * 64 + i));
                opt.exec = kernels::Exec::Serial;
                try {
                    a[i] = mpc::receding_apply(mpc::solve(p, *sch.surrogates[i], opt, &warm[i]).u);
                } catch (const NumericalError& e) {
                    throw SeasonFailure(d, i, e.what());
                }
            });
            c = cseq[0];
        }
        if (config.force_off) c = 0;

        std::vector<double> u(m);
        for (int i = 0; i < m; ++i) u[i] = c * a[i];

        const field::WeatherDay& w = season.weather[d];
        const double kc = season.kc[d];
        const field::FieldForcing forcing{w, kc, config.zr, config.ev_fraction};
        kernels::for_each_index(config.exec, m, [&](int i) {
            try {
                truth[i] = fld.column(i).step_day(truth[i], forcing.for_zone(u[i]), config.truth_noise, truth_rngs[i]);
                filters[i].predict(forcing.for_zone(u[i]));
            } catch (const NumericalError& e) {
                throw SeasonFailure(d, i, e.what());
            }
        });

        for (int i = 0; i < m; ++i) {
            DayRecord r;
            r.day = d;
            r.zone = i;
            r.c = c;
            r.a_la = a[i];
            r.u = u[i];
            r.theta_rz_true = field::root_zone_moisture(soilsim::water_profile(truth[i], fld.zone(i).phi), config.zr,
                                                        fld.grid());
            r.theta_rz_est = rz_est[i];
            r.et0 = w.et0;
            r.precip = w.precip;
            r.kc = kc;
            r.violation_low = r.theta_rz_true < fld.zone(i).nu_lower;
            r.violation_high = r.theta_rz_true > fld.zone(i).nu_upper;
            log.rows.push_back(r);
            history[i].push_back(day_input(w, kc, u[i], config.zr));
        }
    }
    return log;
}

std::vector<double> SeasonLog::zone_totals() const {
    std::vector<double> t(zones, 0.0);
    for (const auto& r : rows) t.at(r.zone) += r.u;
    return t;
}

double SeasonLog::total_irrigation() const {
    const auto t = zone_totals();
    return t.empty() ? 0.0 : std::accumulate(t.begin(), t.end(), 0.0) / t.size();
}

int SeasonLog::violation_days(int zone) const {
    int n = 0;
    for (const auto& r : rows) n += r.zone == zone && (r.violation_low || r.violation_high);
    return n;
}

int SeasonLog::irrigation_events() const {
    int n = 0;
    for (const auto& r : rows) n += r.zone == 0 && r.c == 1;
    return n;
}

void SeasonLog::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "day,zone,c,a_la,u_applied,theta_rz_true,theta_rz_est,et0,precip,kc,violation_low,violation_high\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n", r.day, r.zone + 1,
                      r.c, r.a_la, r.u, r.theta_rz_true, r.theta_rz_est, r.et0, r.precip, r.kc, r.violation_low ? 1 : 0,
                      r.violation_high ? 1 : 0);
        out << buf;
    }
}

SeasonLog SeasonLog::read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("season log not found: " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("day,zone,c,", 0) != 0) throw ConfigError("not a season log: " + path.string());
    SeasonLog log;
    int max_day = -1, max_zone = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        DayRecord r;
        int low = 0, high = 0, zone = 0;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%d,%d", &r.day, &zone, &r.c, &r.a_la, &r.u,
                        &r.theta_rz_true, &r.theta_rz_est, &r.et0, &r.precip, &r.kc, &low, &high) != 12) {
            throw ConfigError("malformed season log row in " + path.string() + ": " + line);
        }
        r.zone = zone - 1;
        r.violation_low = low != 0;
        r.violation_high = high != 0;
        max_day = std::max(max_day, r.day);
        max_zone = std::max(max_zone, r.zone);
        log.rows.push_back(r);
    }
    log.days = max_day + 1;
    log.zones = max_zone + 1;
    if (static_cast<int>(log.rows.size()) != log.days * log.zones) {
        throw IncompleteLog("season log " + path.string() + " is missing rows");
    }
    return log;
}

SeasonMetrics season_metrics(const SeasonLog& log, const std::vector<field::ZoneConfig>& zones) {
    if (static_cast<int>(zones.size()) != log.zones) throw LengthMismatch("zone configs != log zones");
    if (static_cast<int>(log.rows.size()) != log.days * log.zones || log.days == 0) {
        throw IncompleteLog("season log is incomplete");
    }
    SeasonMetrics s;
    s.zone_totals = log.zone_totals();
    s.total_irrigation = log.total_irrigation();
    for (int i = 0; i < log.zones; ++i) {
        std::vector<double> th, kc, et0;
        for (int d = 0; d < log.days; ++d) {
            const auto& r = log.at(d, i);
            th.push_back(r.theta_rz_true);
            kc.push_back(r.kc);
            et0.push_back(r.et0);
        }
        const auto st = zones[i].stress();
        s.zone_yields.push_back(season_yield(th, kc, et0, {st.anaerobic, zones[i].nu_lower, zones[i].nu_upper,
                                                           zones[i].theta_wp}));
        s.violation_days += log.violation_days(i);
    }
    s.yield = std::accumulate(s.zone_yields.begin(), s.zone_yields.end(), 0.0) / s.zone_yields.size();
    s.iwue = s.total_irrigation > 0.0 ? iwue(s.yield, s.total_irrigation) : 0.0;
    s.irrigation_events = log.irrigation_events();
    return s;
}

}  // namespace irrig::harness
