#include "irrig/pipeline/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <json.hpp>

namespace irrig::pipeline {

namespace fs = std::filesystem;

field::Field make_field(std::optional<int> only) {
    auto zones = field::default_zones();
    if (only) {
        if (*only < 0 || *only >= static_cast<int>(zones.size())) {
            throw ConfigError("zone " + std::to_string(*only + 1) + " does not exist");
        }
        return field::Field({zones[*only]});
    }
    return field::Field(zones);
}

TrainRun train_run(const config::RunConfig& cfg, scmarl::Mode mode, std::uint64_t seed, std::optional<int> only_zone,
                   const scmarl::EpisodeCallback& on_episode) {
    const field::Field f = make_field(only_zone);
    scmarl::BundleConfig bc = cfg.bundle;
    bc.mode = mode;
    bc.zones = static_cast<int>(f.zone_count());
    scmarl::TrainConfig tc = cfg.train;
    tc.seed = seed;
    TrainRun run{scmarl::AgentBundle(bc, tc.ppo, seed), {}};
    run.result = scmarl::train(run.bundle, f, tc, on_episode);
    return run;
}

std::vector<std::string> agent_names(int zones) {
    std::vector<std::string> n{"coordinator"};
    for (int i = 0; i < zones; ++i) n.push_back("local_" + std::to_string(i + 1));
    return n;
}

double agent_score(const scmarl::EpisodeLog& e, int agent) {
    return agent == 0 ? e.coordinator_score : e.local_scores.at(agent - 1);
}

double mean_score(const scmarl::TrainResult& r, int agent, int begin, int end) {
    double s = 0.0;
    int n = 0;
    for (int k = std::max(0, begin); k < std::min<int>(end, r.episodes.size()); ++k) {
        if (r.episodes[k].aborted) continue;
        s += agent_score(r.episodes[k], agent);
        ++n;
    }
    if (n == 0) throw NumericalError("no completed episodes in the requested window");
    return s / n;
}

void write_curve_csv(const fs::path& path, const std::vector<scmarl::TrainResult>& runs, int zones) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "episode,agent,mean_score,runs\n";
    std::size_t episodes = 0;
    for (const auto& r : runs) episodes = std::max(episodes, r.episodes.size());
    const auto names = agent_names(zones);
    char buf[64];
    for (int a = 0; a <= zones; ++a) {
        for (std::size_t k = 0; k < episodes; ++k) {
            double s = 0.0;
            int n = 0;
            for (const auto& r : runs) {
                if (k < r.episodes.size() && !r.episodes[k].aborted) {
                    s += agent_score(r.episodes[k], a);
                    ++n;
                }
            }
            std::snprintf(buf, sizeof buf, "%.10g", n > 0 ? s / n : 0.0);
            out << k << ',' << names[a] << ',' << (n > 0 ? buf : "") << ',' << n << '\n';
        }
    }
}

void write_episodes_csv(const fs::path& path, const scmarl::TrainResult& run, int zones) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "episode,start_day,steps,aborted,irrigation_days";
    for (const auto& n : agent_names(zones)) out << ',' << n;
    out << '\n';
    char buf[64];
    for (const auto& e : run.episodes) {
        out << e.episode << ',' << e.start_day << ',' << e.steps << ',' << (e.aborted ? 1 : 0) << ','
            << e.irrigation_days;
        for (int a = 0; a <= zones; ++a) {
            std::snprintf(buf, sizeof buf, "%.10g", agent_score(e, a));
            out << ',' << buf;
        }
        out << '\n';
    }
}

scmarl::TrainResult read_episodes_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("episode log not found: " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("episode,start_day,steps,aborted,irrigation_days,coordinator", 0) != 0) {
        throw ConfigError("not an episode log: " + path.string());
    }
    scmarl::TrainResult r;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (true) {
            const auto next = line.find(',', pos);
            cells.push_back(line.substr(pos, next - pos));
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        if (cells.size() < 6) throw ConfigError("malformed episode row in " + path.string());
        scmarl::EpisodeLog e;
        e.episode = std::stoi(cells[0]);
        e.start_day = std::stoi(cells[1]);
        e.steps = std::stoi(cells[2]);
        e.aborted = cells[3] == "1";
        e.irrigation_days = std::stoi(cells[4]);
        e.coordinator_score = std::stod(cells[5]);
        for (std::size_t k = 6; k < cells.size(); ++k) e.local_scores.push_back(std::stod(cells[k]));
        r.aborted += e.aborted;
        r.episodes.push_back(std::move(e));
    }
    return r;
}

fs::path surrogate_path(const fs::path& dir, int zone) { return dir / ("zone_" + std::to_string(zone + 1)); }

std::vector<mpc::Surrogate> load_surrogates(const fs::path& dir, int zones) {
    std::vector<mpc::Surrogate> s;
    for (int i = 0; i < zones; ++i) s.push_back(mpc::Surrogate::load(surrogate_path(dir, i)));
    return s;
}

fs::path zone_bundle_dir(const fs::path& dir, int zone) { return dir / ("zone_" + std::to_string(zone + 1)); }

std::vector<scmarl::AgentBundle> load_zone_bundles(const fs::path& dir, int zones) {
    std::vector<scmarl::AgentBundle> b;
    for (int i = 0; i < zones; ++i) b.push_back(scmarl::AgentBundle::load(zone_bundle_dir(dir, i)));
    return b;
}

void RunManifest::stamp(const std::string& event) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    timestamps.emplace_back(event, buf);
}

void RunManifest::write(const fs::path& dir) const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["version"] = toolkit_version();
    j["arguments"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : arguments) j["arguments"][k] = v;
    j["seeds"] = seeds;
    j["timestamps"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : timestamps) j["timestamps"][k] = v;
    j["outputs"] = outputs;
    j["config"] = nlohmann::ordered_json::parse(config);
    std::ofstream out(dir / "manifest.json");
    if (!out) throw Error("cannot write manifest in " + dir.string());
    out << j.dump(2) << '\n';
}

std::string toolkit_version() { return IRRIG_VERSION; }

}  // namespace irrig::pipeline
