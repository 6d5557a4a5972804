#include "irrig/config/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace irrig::config {

namespace {

using nlohmann::json;

std::string exec_name(kernels::Exec e) { return e == kernels::Exec::Serial ? "serial" : "parallel"; }

kernels::Exec parse_exec(const std::string& s) {
    if (s == "serial") return kernels::Exec::Serial;
    if (s == "parallel") return kernels::Exec::Parallel;
    throw ConfigError("exec must be 'serial' or 'parallel', got '" + s + "'");
}

// Reads one object; every key must be consumed.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
    }

    template <class T>
    void operator()(const char* key, T& out) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + " has the wrong type");
        }
    }

    void exec(const char* key, kernels::Exec& e) {
        std::string s = exec_name(e);
        (*this)(key, s);
        e = parse_exec(s);
    }
    void units(const char* key, estimator::Units& u) {
        std::string s = estimator::to_string(u);
        (*this)(key, s);
        u = estimator::parse_units(s);
    }
    void sampler(const char* key, scmarl::AlignmentSampler& a) {
        std::string s = scmarl::to_string(a);
        (*this)(key, s);
        a = scmarl::parse_sampler(s);
    }

    const json* section(const char* key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) throw ConfigError("unknown key " + path_ + "." + k);
        }
    }

    const std::string& path() const { return path_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

class Writer {
public:
    template <class T>
    void operator()(const char* key, const T& v) { j_[key] = v; }
    void exec(const char* key, kernels::Exec e) { j_[key] = exec_name(e); }
    void units(const char* key, estimator::Units u) { j_[key] = estimator::to_string(u); }
    void sampler(const char* key, scmarl::AlignmentSampler a) { j_[key] = scmarl::to_string(a); }
    json& out() { return j_; }

private:
    json j_ = json::object();
};

// Field lists, one per section, shared by reading and writing.
template <class V, class C>
void bundle_fields(V& v, C& b) {
    v("hidden", b.hidden);
    v("init_std", b.init_std);
    v("action_max", b.action_max);
    v("moisture_min", b.scales.moisture_lo);
    v("moisture_max", b.scales.moisture_hi);
    v("et0_max", b.scales.et0_hi);
    v("kc_max", b.scales.kc_hi);
    v("rain_max", b.scales.rn_hi);
}

template <class V, class C>
void training_fields(V& v, C& t, int& runs) {
    v("episodes", t.episodes);
    v("runs", runs);
    v("horizon", t.horizon);
    v("season_length", t.season_length);
    v("zr", t.zr);
    v("ev_fraction", t.ev_fraction);
    v("reward_scale", t.reward_scale);
    v("seed", t.seed);
    v.exec("exec", t.exec);
}

template <class V, class C>
void ppo_fields(V& v, C& p) {
    v("lr", p.lr);
    v("critic_lr", p.critic_lr);
    v("minibatch", p.minibatch);
    v("epochs", p.epochs);
    v("gamma", p.gamma);
    v("gae_lambda", p.gae_lambda);
    v("clip", p.clip);
    v("entropy_coef", p.entropy_coef);
    v("value_coef", p.value_coef);
    v("normalize_advantages", p.normalize_advantages);
}

template <class V, class C>
void reward_fields(V& v, C& w) {
    v("alpha_la", w.alpha_la);
    v("beta_la", w.beta_la);
    v("alpha_ca", w.alpha_ca);
    v("beta_ca", w.beta_ca);
    v("q_upper", w.q_upper);
    v("q_lower", w.q_lower);
    v("r_c", w.r_c);
    v("r_u", w.r_u);
}

template <class V, class C>
void noise_fields(V& v, C& n) {
    v("process_std", n.process_std);
    v("output_std", n.output_std);
    v("et0_std", n.forcing.et0_std);
    v("precip_std", n.forcing.precip_std);
    v("kc_std", n.forcing.kc_std);
    v("growth_per_day", n.growth.per_day);
    v("growth_cap", n.growth.cap);
}

template <class V, class C>
void weather_fields(V& v, C& w) {
    v("et0_min", w.et0_min);
    v("et0_max", w.et0_max);
    v("wet_probability", w.rain.wet_probability);
    v("persistence", w.rain.persistence);
    v("mean_depth", w.rain.mean_depth);
    v("temperature_mean", w.temperature.mean);
    v("temperature_amplitude", w.temperature.amplitude);
    v("temperature_noise", w.temperature.noise_std);
}

template <class V, class C>
void season_fields(V& v, C& s) {
    v("start_date", s.start_date);
    v("end_date", s.end_date);
    v("truth_noise", s.truth_noise);
    v("sensor_noise", s.sensor_noise);
    v("zr", s.zr);
    v("ev_fraction", s.ev_fraction);
    v("np", s.np);
    v("perfect_start", s.perfect_start);
    v("seed", s.seed);
    v.exec("exec", s.exec);
}

template <class V, class C>
void ekf_fields(V& v, C& e) {
    v("p0", e.p0);
    v("q", e.q);
    v("r", e.r);
    v.units("units", e.units);
    v("fd_step", e.fd_step);
    v("obs_depth", e.obs_depth);
}

template <class V, class C>
void mpc_fields(V& v, C& m) {
    v("restarts", m.restarts);
    v("iterations", m.iterations);
    v("initial_step", m.initial_step);
    v("min_step", m.min_step);
}

template <class V, class C>
void surrogate_fields(V& v, C& s) {
    v("window", s.window);
    v("hidden", s.hidden);
    v("trajectories", s.trajectories);
    v("days", s.days);
    v("validation_fraction", s.validation_fraction);
    v("irrigation_probability", s.irrigation_probability);
    v("epochs", s.epochs);
    v("batch", s.batch);
    v("lr", s.lr);
    v("rmse_gate", s.rmse_gate);
    v("seed", s.seed);
}

template <class V, class C>
void alignment_fields(V& v, C& a) {
    v("n", a.n);
    v("threshold", a.threshold);
    v("seed", a.seed);
    v.sampler("sampler", a.sampler);
}

template <class F>
void read_section(Reader& top, const char* key, F&& fields) {
    if (const json* j = top.section(key)) {
        Reader r(*j, key);
        fields(r);
        r.finish();
    }
}

}  // namespace

RunConfig::RunConfig() {
    train.episodes = 9800;
    sync();
}

void RunConfig::sync() {
    season.weights = train.weights;
    season.weather = train.weather;
    season.forcing_noise = train.noise.forcing;
    season.growth = train.noise.growth;
    season.u_max = bundle.action_max;
    surrogate.u_max = bundle.action_max;
    surrogate.zr = train.zr;
    surrogate.ev_fraction = train.ev_fraction;
}

void RunConfig::validate() const {
    try {
        bundle.validate();
        train.validate();
        season.validate();
        surrogate.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (runs < 1) throw ConfigError("training.runs must be >= 1");
    if (alignment.n < 1) throw ConfigError("alignment.n must be >= 1");
    if (!(alignment.threshold >= 0.0)) throw ConfigError("alignment.threshold must be >= 0");
}

RunConfig parse(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(origin + ": top level must be an object");
    const auto ver = j.find("schema_version");
    if (ver == j.end() || !ver->is_number_integer()) throw ConfigError(origin + ": schema_version is required");
    if (ver->get<int>() != kSchemaVersion) {
        throw ConfigError(origin + ": schema_version " + std::to_string(ver->get<int>()) + " is not supported (expected " +
                          std::to_string(kSchemaVersion) + ")");
    }

    RunConfig c;
    Reader top(j, origin);
    int schema = 0;
    top("schema_version", schema);
    read_section(top, "bundle", [&](Reader& r) { bundle_fields(r, c.bundle); });
    read_section(top, "training", [&](Reader& r) { training_fields(r, c.train, c.runs); });
    read_section(top, "ppo", [&](Reader& r) { ppo_fields(r, c.train.ppo); });
    read_section(top, "rewards", [&](Reader& r) { reward_fields(r, c.train.weights); });
    read_section(top, "noise", [&](Reader& r) { noise_fields(r, c.train.noise); });
    read_section(top, "weather", [&](Reader& r) { weather_fields(r, c.train.weather); });
    read_section(top, "season", [&](Reader& r) { season_fields(r, c.season); });
    read_section(top, "ekf", [&](Reader& r) { ekf_fields(r, c.season.ekf); });
    read_section(top, "mpc", [&](Reader& r) { mpc_fields(r, c.season.mpc); });
    read_section(top, "surrogate", [&](Reader& r) { surrogate_fields(r, c.surrogate); });
    read_section(top, "alignment", [&](Reader& r) { alignment_fields(r, c.alignment); });
    top.finish();
    c.train.ppo.horizon = c.train.horizon;
    c.sync();
    c.validate();
    return c;
}

RunConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("config not found: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::string dump(const RunConfig& c) {
    json j = json::object();
    j["schema_version"] = kSchemaVersion;
    auto put = [&](const char* key, auto&& fields) {
        Writer w;
        fields(w);
        j[key] = w.out();
    };
    put("bundle", [&](Writer& w) { bundle_fields(w, c.bundle); });
    int runs = c.runs;
    put("training", [&](Writer& w) { training_fields(w, c.train, runs); });
    put("ppo", [&](Writer& w) { ppo_fields(w, c.train.ppo); });
    put("rewards", [&](Writer& w) { reward_fields(w, c.train.weights); });
    put("noise", [&](Writer& w) { noise_fields(w, c.train.noise); });
    put("weather", [&](Writer& w) { weather_fields(w, c.train.weather); });
    put("season", [&](Writer& w) { season_fields(w, c.season); });
    put("ekf", [&](Writer& w) { ekf_fields(w, c.season.ekf); });
    put("mpc", [&](Writer& w) { mpc_fields(w, c.season.mpc); });
    put("surrogate", [&](Writer& w) { surrogate_fields(w, c.surrogate); });
    put("alignment", [&](Writer& w) { alignment_fields(w, c.alignment); });
    return j.dump(2) + "\n";
}

}  // namespace irrig::config
