#include "irrig/scmarl/bundle.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "irrig/neural/checkpoint.hpp"

namespace irrig::scmarl {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Mode mode) { return mode == Mode::Scmarl ? "scmarl" : "dmarl"; }

Mode parse_mode(const std::string& text) {
    if (text == "scmarl") return Mode::Scmarl;
    if (text == "dmarl") return Mode::Dmarl;
    throw ConfigError("unknown mode '" + text + "' (expected scmarl or dmarl)");
}

int local_state_size(int nodes, Mode mode) { return nodes + (mode == Mode::Scmarl ? 4 : 3); }
int coordinator_state_size(int zones, int nodes) { return zones * nodes + 3; }

Vec local_state(std::span<const double> y, const AgentForcing& f, int c, Mode mode) {
    const int n = static_cast<int>(y.size());
    Vec s(local_state_size(n, mode));
    for (int k = 0; k < n; ++k) s[k] = y[k];
    s[n] = f.et0;
    s[n + 1] = f.kc;
    s[n + 2] = f.rn;
    if (mode == Mode::Scmarl) s[n + 3] = c;
    return s;
}

Vec coordinator_state(const std::vector<std::vector<double>>& ys, const AgentForcing& f) {
    if (ys.empty()) throw InvalidArgument("coordinator state needs at least one zone");
    const int n = static_cast<int>(ys.front().size());
    const int m = static_cast<int>(ys.size());
    Vec s(coordinator_state_size(m, n));
    for (int i = 0; i < m; ++i) {
        if (static_cast<int>(ys[i].size()) != n) throw LengthMismatch("zone profiles differ in length");
        for (int k = 0; k < n; ++k) s[i * n + k] = ys[i][k];
    }
    s[m * n] = f.et0;
    s[m * n + 1] = f.kc;
    s[m * n + 2] = f.rn;
    return s;
}

void BundleConfig::validate() const {
    if (zones < 1 || nodes < 2) throw ConfigError("bundle needs >= 1 zone and >= 2 nodes");
    if (hidden.empty() || std::any_of(hidden.begin(), hidden.end(), [](int h) { return h < 1; })) {
        throw ConfigError("hidden layer sizes must be positive");
    }
    if (!(init_std > 0.0) || !(action_max > 0.0)) throw ConfigError("init_std and action_max must be positive");
    if (!(scales.moisture_lo < scales.moisture_hi) || !(scales.et0_hi > 0) || !(scales.kc_hi > 0) ||
        !(scales.rn_hi > 0)) {
        throw ConfigError("degenerate state scales");
    }
}

AgentBundle::AgentBundle(const BundleConfig& config, const ppo::PpoConfig& ppo, std::uint64_t seed) : config_(config) {
    config_.validate();
    ppo.validate();
    Rng root(seed);
    Rng crng = root.fork(0);
    const int cin = coordinator_state_size(config_.zones, config_.nodes);
    coordinator = ppo::CategoricalAgent(neural::CategoricalPolicy(cin, 2, config_.hidden, crng),
                                        neural::Critic(cin, config_.hidden, crng), ppo);
    const int lin = local_state_size(config_.nodes, config_.mode);
    for (int i = 0; i < config_.zones; ++i) {
        Rng lrng = root.fork(static_cast<std::uint64_t>(i) + 1);
        locals.emplace_back(neural::GaussianPolicy(lin, 1, config_.hidden, config_.init_std, lrng),
                            neural::Critic(lin, config_.hidden, lrng), ppo);
    }
    build_normalizers();
}

void AgentBundle::build_normalizers() {
    const StateScales& s = config_.scales;
    const int n = config_.nodes;
    const int cin = coordinator_state_size(config_.zones, n);
    Vec lo = Vec::Constant(cin, s.moisture_lo), hi = Vec::Constant(cin, s.moisture_hi);
    lo.tail(3).setZero();
    hi.tail(3) << s.et0_hi, s.kc_hi, s.rn_hi;
    coord_norm_ = neural::MinMaxNormalizer(lo, hi);

    const int lin = local_state_size(n, config_.mode);
    Vec llo = Vec::Constant(lin, s.moisture_lo), lhi = Vec::Constant(lin, s.moisture_hi);
    llo.segment(n, lin - n).setZero();
    lhi.segment(n, 3) << s.et0_hi, s.kc_hi, s.rn_hi;
    if (config_.mode == Mode::Scmarl) lhi[n + 3] = 1.0;
    local_norm_ = neural::MinMaxNormalizer(llo, lhi);
}

Vec AgentBundle::coordinator_input(const std::vector<std::vector<double>>& ys, const AgentForcing& f) const {
    if (static_cast<int>(ys.size()) != config_.zones) throw LengthMismatch("one profile per zone expected");
    return coord_norm_(coordinator_state(ys, f));
}

Vec AgentBundle::local_input(std::span<const double> y, const AgentForcing& f, int c) const {
    if (static_cast<int>(y.size()) != config_.nodes) throw LengthMismatch("profile length != node count");
    return local_norm_(local_state(y, f, c, config_.mode));
}

double AgentBundle::prescription(double raw) const { return std::clamp(raw, 0.0, config_.action_max); }

JointAction AgentBundle::act_greedy(const std::vector<std::vector<double>>& ys, const AgentForcing& f) const {
    JointAction ja;
    ja.c = coordinator.policy.greedy(coordinator_input(ys, f));
    for (int i = 0; i < config_.zones; ++i) {
        const double a = prescription(locals[i].policy.mean(local_input(ys[i], f, ja.c))[0]);
        ja.a_la.push_back(a);
        ja.u.push_back(ja.c * a);
    }
    return ja;
}

JointAction act_joint(const AgentBundle& bundle, const std::vector<std::vector<double>>& ys, const AgentForcing& f) {
    return bundle.act_greedy(ys, f);
}

namespace {

void put_agent(neural::Checkpoint& ck, const neural::Mlp& actor, const neural::Mlp& critic) {
    ck.put_mlp("actor", actor);
    ck.put_mlp("critic", critic);
}

}  // namespace

void AgentBundle::save(const fs::path& dir) const {
    fs::create_directories(dir);
    neural::Checkpoint c;
    put_agent(c, coordinator.policy.net, coordinator.critic.net);
    c.save(dir / "coordinator.ckpt");
    for (int i = 0; i < config_.zones; ++i) {
        neural::Checkpoint l;
        put_agent(l, locals[i].policy.net, locals[i].critic.net);
        l.put("actor.log_std", locals[i].policy.log_std);
        l.save(dir / ("local_" + std::to_string(i + 1) + ".ckpt"));
    }
    const StateScales& s = config_.scales;
    json m = {
        {"format", "irrig-bundle"},
        {"version", 1},
        {"mode", to_string(config_.mode)},
        {"zones", config_.zones},
        {"nodes", config_.nodes},
        {"hidden", config_.hidden},
        {"init_std", config_.init_std},
        {"action_max", config_.action_max},
        {"scales",
         {{"moisture_lo", s.moisture_lo},
          {"moisture_hi", s.moisture_hi},
          {"et0_hi", s.et0_hi},
          {"kc_hi", s.kc_hi},
          {"rn_hi", s.rn_hi}}},
    };
    std::ofstream out(dir / "bundle.json");
    out << m.dump(2) << '\n';
    if (!out) throw Error("cannot write bundle manifest in " + dir.string());
}

AgentBundle AgentBundle::load(const fs::path& dir, const ppo::PpoConfig& ppo) {
    const fs::path mpath = dir / "bundle.json";
    std::ifstream in(mpath);
    if (!in) throw MissingArtifact("bundle manifest not found: " + mpath.string());
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("bad bundle manifest " + mpath.string() + ": " + e.what());
    }
    if (m.value("format", "") != "irrig-bundle") throw ConfigError("not a bundle manifest: " + mpath.string());

    AgentBundle b;
    try {
        BundleConfig& c = b.config_;
        c.mode = parse_mode(m.at("mode").get<std::string>());
        c.zones = m.at("zones").get<int>();
        c.nodes = m.at("nodes").get<int>();
        c.hidden = m.at("hidden").get<std::vector<int>>();
        c.init_std = m.at("init_std").get<double>();
        c.action_max = m.at("action_max").get<double>();
        const json& s = m.at("scales");
        c.scales = {s.at("moisture_lo").get<double>(), s.at("moisture_hi").get<double>(), s.at("et0_hi").get<double>(),
                    s.at("kc_hi").get<double>(), s.at("rn_hi").get<double>()};
    } catch (const json::exception& e) {
        throw ConfigError("bad bundle manifest " + mpath.string() + ": " + e.what());
    }
    b.config_.validate();

    const auto ck = neural::Checkpoint::load(dir / "coordinator.ckpt");
    neural::CategoricalPolicy cp;
    cp.net = ck.get_mlp("actor");
    neural::Critic cc;
    cc.net = ck.get_mlp("critic");
    if (cp.net.input_size() != coordinator_state_size(b.config_.zones, b.config_.nodes)) {
        throw neural::ShapeMismatch("coordinator checkpoint input size disagrees with manifest");
    }
    b.coordinator = ppo::CategoricalAgent(std::move(cp), std::move(cc), ppo);
    for (int i = 0; i < b.config_.zones; ++i) {
        const auto lk = neural::Checkpoint::load(dir / ("local_" + std::to_string(i + 1) + ".ckpt"));
        neural::GaussianPolicy gp;
        gp.net = lk.get_mlp("actor");
        gp.log_std = lk.get("actor.log_std");
        neural::Critic lc;
        lc.net = lk.get_mlp("critic");
        if (gp.net.input_size() != local_state_size(b.config_.nodes, b.config_.mode)) {
            throw neural::ShapeMismatch("local checkpoint input size disagrees with manifest mode");
        }
        b.locals.emplace_back(std::move(gp), std::move(lc), ppo);
    }
    b.build_normalizers();
    return b;
}

}  // namespace irrig::scmarl
