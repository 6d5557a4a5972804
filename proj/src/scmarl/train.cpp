#include "irrig/scmarl/train.hpp"

#include <algorithm>
#include <numeric>


namespace irrig::scmarl {

namespace {

constexpr std::uint64_t kCoordinatorStream = 0x10000;
constexpr std::uint64_t kLocalStream = 0x20000;

AgentForcing seen(const field::WeatherDay& w, double kc) { return {w.et0, kc, w.precip}; }

AgentForcing noisy_forcing(const field::Season& s, int day, int lead, const field::NoiseSpec& noise, Rng& rng) {
    auto [w, kc] = field::perturb_forcing(s.weather[day], s.kc[day], lead, noise, rng);
    return seen(w, kc);
}

std::vector<field::TargetBounds> bounds_of(const field::Field& f) {
    std::vector<field::TargetBounds> b;
    for (const auto& z : f.zones()) b.push_back({z.nu_upper, z.nu_lower});
    return b;
}

void check_shapes(const AgentBundle& bundle, const field::Field& field) {
    if (bundle.zone_count() != static_cast<int>(field.zone_count())) {
        throw LengthMismatch("bundle and field disagree on the zone count");
    }
    if (bundle.config().nodes != field.grid().nodes) throw LengthMismatch("bundle and field disagree on node count");
}

std::vector<std::vector<double>> observe_all(const field::Field& field, const field::FieldState& fs, double std,
                                             std::span<Rng> rngs) {
    std::vector<std::vector<double>> ys(field.zone_count());
    for (std::size_t i = 0; i < ys.size(); ++i) ys[i] = soilsim::observe(fs.zones[i], field.zone(i).phi, std, rngs[i]);
    return ys;
}

std::vector<Rng> zone_streams(Rng& parent, std::size_t m, std::uint64_t base) {
    std::vector<Rng> out;
    for (std::size_t i = 0; i < m; ++i) out.push_back(parent.fork(base + i));
    return out;
}

}  // namespace

void TrainConfig::validate() const {
    if (episodes < 0) throw ConfigError("episodes must be >= 0");
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (season_length < horizon + 1) throw ConfigError("season must be longer than the episode horizon");
    if (!(zr > 0.0) || !(ev_fraction >= 0.0 && ev_fraction <= 1.0)) throw ConfigError("bad zr or ev_fraction");
    if (!(reward_scale > 0.0)) throw ConfigError("reward_scale must be positive");
    weather.validate();
    noise.validate();
    weights.validate();
    ppo.validate();
}

TrainResult train(AgentBundle& bundle, const field::Field& field, const TrainConfig& config,
                  const EpisodeCallback& on_episode) {
    config.validate();
    check_shapes(bundle, field);
    const int m = bundle.zone_count();
    const auto bounds = bounds_of(field);
    const double scale = config.reward_scale;

    Rng coord_rng(derive_seed(config.seed, kCoordinatorStream));
    std::vector<Rng> local_rngs;
    for (int i = 0; i < m; ++i) local_rngs.emplace_back(derive_seed(config.seed, kLocalStream + i));

    auto update_coordinator = [&](TrainResult& r) {
        if (!bundle.coordinator.pool.full()) return;
        bundle.coordinator.update(config.ppo, coord_rng);
        ++r.updates;
    };
    auto update_locals = [&](TrainResult& r) {
        std::vector<int> due;
        for (int i = 0; i < m; ++i) {
            if (bundle.locals[i].pool.full()) due.push_back(i);
        }
        kernels::for_each_index(config.exec, static_cast<int>(due.size()), [&](int k) {
            bundle.locals[due[k]].update(config.ppo, local_rngs[due[k]]);
        });
        r.updates += static_cast<int>(due.size());
    };

    TrainResult result;
    for (int ep = 0; ep < config.episodes; ++ep) {
        Rng ep_rng(derive_seed(config.seed, static_cast<std::uint64_t>(ep)));
        Rng season_rng = ep_rng.fork(1);
        Rng ic_rng = ep_rng.fork(2);
        Rng forecast_rng = ep_rng.fork(3);
        const field::Season season = field::generate_season(config.season_length, season_rng, config.weather);
        const int start = static_cast<int>(ic_rng.index(static_cast<std::size_t>(config.season_length - config.horizon)));

        std::vector<Rng> ic_rngs = zone_streams(ic_rng, m, 10);
        std::vector<Rng> env_rngs = zone_streams(ep_rng, m, 100);

        EpisodeLog log;
        log.episode = ep;
        log.start_day = start;
        log.local_scores.assign(m, 0.0);

        // Transitions of an aborted episode never reach an update.
        const auto coord_mark = bundle.coordinator.pool.size();
        std::vector<int> local_mark(m);
        for (int i = 0; i < m; ++i) local_mark[i] = bundle.locals[i].pool.size();

        try {
            field::FieldState fs = field.sample_initial(ic_rngs);
            fs.day_index = start;
            fs.gdd_cum = season.gdd_start[start];
            auto ys = observe_all(field, fs, config.noise.output_std, env_rngs);
            AgentForcing f = noisy_forcing(season, start, 0, config.noise, forecast_rng);

            Vec s_ca = bundle.coordinator_input(ys, f);
            ppo::ActResult ca = bundle.coordinator.act(s_ca, coord_rng);

            for (int t = 0; t < config.horizon; ++t) {
                const int day = start + t;
                const bool last = t + 1 == config.horizon;
                const int c = static_cast<int>(ca.action[0]);

                std::vector<Vec> s_la(m);
                std::vector<ppo::ActResult> la(m);
                std::vector<double> a_la(m), u(m);
                kernels::for_each_index(config.exec, m, [&](int i) {
                    s_la[i] = bundle.local_input(ys[i], f, c);
                    la[i] = bundle.locals[i].act(s_la[i], local_rngs[i]);
                    a_la[i] = bundle.prescription(la[i].action[0]);
                    u[i] = c * a_la[i];
                });

                const field::FieldForcing truth{season.weather[day], season.kc[day], config.zr, config.ev_fraction};
                field::FieldStep next = field.step(fs, u, truth, config.noise, env_rngs, config.exec);

                std::vector<double> rz(m);
                std::vector<double> r_la(m);
                for (int i = 0; i < m; ++i) {
                    rz[i] = field.root_zone(i, next.next, config.zr);
                    r_la[i] = local_reward(rz[i], a_la[i], config.weights, bounds[i]);
                }
                const double r_ca = coordinator_reward(rz, c, config.weights, bounds);

                const AgentForcing f_next = noisy_forcing(season, day + 1, 1, config.noise, forecast_rng);
                const Vec s_ca_next = bundle.coordinator_input(next.y, f_next);
                bundle.coordinator.pool.push({s_ca, ca.action, scale * r_ca, s_ca_next, ca.log_prob, ca.value, false,
                                              last});
                update_coordinator(result);
                const ppo::ActResult ca_next = bundle.coordinator.act(s_ca_next, coord_rng);
                const int c_next = static_cast<int>(ca_next.action[0]);

                for (int i = 0; i < m; ++i) {
                    Vec s_next = bundle.local_input(next.y[i], f_next, c_next);
                    bundle.locals[i].pool.push({s_la[i], la[i].action, scale * r_la[i], std::move(s_next),
                                                la[i].log_prob, la[i].value, false, last});
                }
                update_locals(result);

                log.coordinator_score += r_ca;
                for (int i = 0; i < m; ++i) log.local_scores[i] += r_la[i];
                log.irrigation_days += c;
                log.steps = t + 1;

                fs = std::move(next.next);
                ys = std::move(next.y);
                f = f_next;
                s_ca = s_ca_next;
                ca = ca_next;
            }
        } catch (const soilsim::NonConvergence& e) {
            log.aborted = true;
            log.abort_reason = e.what();
            ++result.aborted;
            auto& cp = bundle.coordinator.pool.items();
            cp.resize(std::min<std::size_t>(cp.size(), coord_mark));
            for (int i = 0; i < m; ++i) {
                auto& lp = bundle.locals[i].pool.items();
                lp.resize(std::min<std::size_t>(lp.size(), local_mark[i]));
            }
        }
        result.episodes.push_back(log);
        if (on_episode) on_episode(log);
    }
    return result;
}

double EvaluationEpisode::mean_in_band() const {
    if (in_band_fraction.empty()) return 0.0;
    return std::accumulate(in_band_fraction.begin(), in_band_fraction.end(), 0.0) / in_band_fraction.size();
}

EvaluationEpisode evaluate_episode(const AgentBundle& bundle, const field::Field& field, const TrainConfig& config,
                                   Rng& rng) {
    config.validate();
    check_shapes(bundle, field);
    const int m = bundle.zone_count();
    Rng season_rng = rng.fork(1);
    Rng ic_rng = rng.fork(2);
    Rng forecast_rng = rng.fork(3);
    const field::Season season = field::generate_season(config.season_length, season_rng, config.weather);
    const int start = static_cast<int>(ic_rng.index(static_cast<std::size_t>(config.season_length - config.horizon)));
    std::vector<Rng> ic_rngs = zone_streams(ic_rng, m, 10);
    std::vector<Rng> env_rngs = zone_streams(rng, m, 100);

    field::FieldState fs = field.sample_initial(ic_rngs);
    fs.day_index = start;
    fs.gdd_cum = season.gdd_start[start];
    auto ys = observe_all(field, fs, config.noise.output_std, env_rngs);
    AgentForcing f = noisy_forcing(season, start, 0, config.noise, forecast_rng);

    EvaluationEpisode out;
    out.in_band_fraction.assign(m, 0.0);
    out.water.assign(m, 0.0);
    for (int t = 0; t < config.horizon; ++t) {
        const int day = start + t;
        const JointAction ja = bundle.act_greedy(ys, f);
        const field::FieldForcing truth{season.weather[day], season.kc[day], config.zr, config.ev_fraction};
        field::FieldStep next = field.step(fs, ja.u, truth, config.noise, env_rngs, config.exec);
        for (int i = 0; i < m; ++i) {
            const double rz = field.root_zone(i, next.next, config.zr);
            const auto& z = field.zone(i);
            if (rz >= z.nu_lower && rz <= z.nu_upper) out.in_band_fraction[i] += 1.0;
            out.water[i] += ja.u[i];
        }
        out.irrigation_days += ja.c;
        fs = std::move(next.next);
        ys = std::move(next.y);
        f = noisy_forcing(season, day + 1, 1, config.noise, forecast_rng);
    }
    for (double& v : out.in_band_fraction) v /= config.horizon;
    return out;
}

std::string to_string(AlignmentSampler s) { return s == AlignmentSampler::Independent ? "independent" : "visited"; }

AlignmentSampler parse_sampler(const std::string& text) {
    if (text == "independent") return AlignmentSampler::Independent;
    if (text == "visited") return AlignmentSampler::Visited;
    throw ConfigError("alignment sampler must be 'independent' or 'visited', got '" + text + "'");
}

AlignmentResult evaluate_alignment(const AgentBundle& bundle, const field::Field& field, int n_evals, Rng& rng,
                                   const TrainConfig& config, double threshold, AlignmentSampler sampler) {
    if (n_evals < 0) throw InvalidArgument("n_evals must be >= 0");
    check_shapes(bundle, field);
    const int m = bundle.zone_count();
    // Each evaluation owns a stream, so the loop can be split across threads.
    std::vector<std::uint64_t> seeds(n_evals);
    for (auto& s : seeds) s = rng.engine()();
    std::vector<char> ok(n_evals, 0);
    kernels::for_each_index(config.exec, n_evals, [&](int k) {
        Rng r(seeds[k]);
        Rng season_rng = r.fork(1);
        const field::Season season = field::generate_season(config.season_length, season_rng, config.weather);
        std::vector<Rng> zr = zone_streams(r, m, 10);
        field::FieldState fs = field.sample_initial(zr);
        std::vector<std::vector<double>> ys;
        AgentForcing f;
        if (sampler == AlignmentSampler::Independent) {
            const int day = static_cast<int>(r.index(static_cast<std::size_t>(config.season_length)));
            ys = observe_all(field, fs, config.noise.output_std, zr);
            f = noisy_forcing(season, day, 0, config.noise, r);
        } else {
            const int start =
                static_cast<int>(r.index(static_cast<std::size_t>(config.season_length - config.horizon)));
            const int warm = static_cast<int>(r.index(static_cast<std::size_t>(config.horizon)));
            fs.day_index = start;
            fs.gdd_cum = season.gdd_start[start];
            ys = observe_all(field, fs, config.noise.output_std, zr);
            f = noisy_forcing(season, start, 0, config.noise, r);
            for (int t = 0; t < warm; ++t) {
                const int day = start + t;
                const JointAction ja = bundle.act_greedy(ys, f);
                const field::FieldForcing truth{season.weather[day], season.kc[day], config.zr, config.ev_fraction};
                field::FieldStep next;
                try {
                    next = field.step(fs, ja.u, truth, config.noise, zr);
                } catch (const soilsim::NonConvergence&) {
                    break;  // evaluate at the last state the solver reached
                }
                fs = std::move(next.next);
                ys = std::move(next.y);
                f = noisy_forcing(season, day + 1, 1, config.noise, r);
            }
        }
        const JointAction ja = bundle.act_greedy(ys, f);
        bool good = true;
        for (double a : ja.a_la) good = good && (ja.c == 1 ? a > threshold : a <= threshold);
        ok[k] = good;
    });
    AlignmentResult res;
    res.successes = static_cast<int>(std::count(ok.begin(), ok.end(), 1));
    res.failures = n_evals - res.successes;
    return res;
}

HorizonPlan rollout_horizon(const AgentBundle& bundle, const field::Field& field,
                            const std::vector<soilsim::ColumnState>& estimates,
                            const std::vector<ForecastDay>& forecasts, int np, double zr, double ev_fraction) {
    if (np < 1) throw InvalidArgument("prediction horizon must be >= 1 day");
    check_shapes(bundle, field);
    const int m = bundle.zone_count();
    if (static_cast<int>(estimates.size()) != m) throw LengthMismatch("one estimated state per zone expected");
    if (static_cast<int>(forecasts.size()) < np) throw LengthMismatch("fewer forecast days than the horizon");

    HorizonPlan plan;
    plan.a.assign(m, {});
    plan.u.assign(m, {});
    std::vector<soilsim::ColumnState> x = estimates;
    for (int k = 0; k < np; ++k) {
        std::vector<std::vector<double>> ys(m);
        for (int i = 0; i < m; ++i) ys[i] = soilsim::water_profile(x[i], field.zone(i).phi);
        const ForecastDay& fd = forecasts[k];
        const JointAction ja = bundle.act_greedy(ys, seen(fd.weather, fd.kc));
        plan.c.push_back(ja.c);
        const field::FieldForcing forcing{fd.weather, fd.kc, zr, ev_fraction};
        for (int i = 0; i < m; ++i) {
            plan.a[i].push_back(ja.a_la[i]);
            plan.u[i].push_back(ja.u[i]);
            x[i] = field.column(i).advance_day(x[i], forcing.for_zone(ja.u[i]));
        }
    }
    return plan;
}

}  // namespace irrig::scmarl
