#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "irrig/harness/compare.hpp"
#include "irrig/pipeline/pipeline.hpp"

namespace fs = std::filesystem;
using namespace irrig;
using nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kNumerical = 3, kMissing = 4 };

struct Common {
    std::string config;
    std::string out;
};

fs::path output_dir(const Common& c, const std::string& command) {
    fs::path dir;
    if (!c.out.empty()) {
        dir = c.out;
    } else if (const char* root = std::getenv("IRRIG_OUTPUT_ROOT"); root && *root) {
        dir = fs::path(root) / command;
    } else {
        dir = fs::path("runs") / command;
    }
    fs::create_directories(dir);
    return dir;
}

config::RunConfig load_config(const Common& c) { return c.config.empty() ? config::RunConfig{} : config::load(c.config); }

pipeline::RunManifest start_manifest(const std::string& command, const config::RunConfig& cfg) {
    pipeline::RunManifest m;
    m.command = command;
    m.config = config::dump(cfg);
    m.stamp("start");
    return m;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--out", c.out, "output directory (default $IRRIG_OUTPUT_ROOT/<command> or runs/<command>)");
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    Common common;
    std::string mode = "scmarl";
    std::optional<int> episodes;
    std::optional<int> runs;
    std::optional<std::uint64_t> seed;
    bool single_zone = false;
};

int cmd_train(const TrainArgs& a) {
    config::RunConfig cfg = load_config(a.common);
    if (a.episodes) cfg.train.episodes = *a.episodes;
    if (a.runs) cfg.runs = *a.runs;
    if (a.seed) cfg.train.seed = *a.seed;
    cfg.validate();
    const scmarl::Mode mode = scmarl::parse_mode(a.mode);
    const fs::path out = output_dir(a.common, "train");
    auto manifest = start_manifest("train", cfg);
    manifest.arguments = {{"mode", a.mode}, {"single_zone", a.single_zone ? "true" : "false"}};

    auto progress = [](const std::string& tag) {
        return [tag](const scmarl::EpisodeLog& e) {
            if ((e.episode + 1) % 100 == 0) {
                std::cerr << tag << " episode " << e.episode + 1 << " coordinator " << e.coordinator_score << '\n';
            }
        };
    };

    if (a.single_zone) {
        const int zones = static_cast<int>(pipeline::make_field().zone_count());
        for (int z = 0; z < zones; ++z) {
            const std::uint64_t seed = cfg.train.seed + z;
            auto run = pipeline::train_run(cfg, mode, seed, z, progress("zone " + std::to_string(z + 1)));
            const fs::path dir = pipeline::zone_bundle_dir(out, z);
            fs::create_directories(dir);
            run.bundle.save(dir);
            pipeline::write_episodes_csv(dir / "episodes.csv", run.result, 1);
            pipeline::write_curve_csv(out / ("curve_zone_" + std::to_string(z + 1) + ".csv"), {run.result}, 1);
            manifest.seeds.push_back(seed);
            manifest.outputs.push_back(dir.filename().string());
            manifest.outputs.push_back("curve_zone_" + std::to_string(z + 1) + ".csv");
        }
    } else {
        std::vector<scmarl::TrainResult> results;
        for (int r = 0; r < cfg.runs; ++r) {
            const std::uint64_t seed = cfg.train.seed + r;
            auto run = pipeline::train_run(cfg, mode, seed, std::nullopt, progress("run " + std::to_string(r + 1)));
            const fs::path dir = out / ("run_" + std::to_string(r + 1));
            fs::create_directories(dir);
            run.bundle.save(dir);
            pipeline::write_episodes_csv(dir / "episodes.csv", run.result, run.bundle.zone_count());
            results.push_back(std::move(run.result));
            manifest.seeds.push_back(seed);
            manifest.outputs.push_back(dir.filename().string());
        }
        pipeline::write_curve_csv(out / "curve.csv", results, cfg.bundle.zones);
        manifest.outputs.push_back("curve.csv");
    }
    manifest.stamp("end");
    manifest.write(out);
    std::cout << "wrote " << out.string() << '\n';
    return kOk;
}

// ---------------------------------------------------------------- season

struct SeasonArgs {
    Common common;
    std::string variant = "scmarl";
    std::string checkpoints;
    std::string surrogates;
    std::optional<std::uint64_t> seed;
    bool force_off = false;
};

int cmd_season(const SeasonArgs& a) {
    config::RunConfig cfg = load_config(a.common);
    if (a.seed) cfg.season.seed = *a.seed;
    cfg.season.variant = harness::parse_variant(a.variant);
    cfg.season.force_off = a.force_off;
    cfg.validate();
    const field::Field f = pipeline::make_field();
    const int m = static_cast<int>(f.zone_count());
    const harness::Variant v = cfg.season.variant;

    if (a.checkpoints.empty()) throw MissingArtifact("--checkpoints is required for variant " + a.variant);
    std::optional<scmarl::AgentBundle> bundle;
    std::vector<scmarl::AgentBundle> zone_bundles;
    std::vector<mpc::Surrogate> surrogates;
    harness::Schedulers sch;
    if (v == harness::Variant::LbMaMpc) {
        zone_bundles = pipeline::load_zone_bundles(a.checkpoints, m);
        for (const auto& b : zone_bundles) sch.zone_bundles.push_back(&b);
    } else {
        bundle.emplace(scmarl::AgentBundle::load(a.checkpoints));
        sch.bundle = &*bundle;
    }
    if (harness::uses_mpc(v)) {
        if (a.surrogates.empty()) throw MissingArtifact("variant " + a.variant + " needs --surrogates");
        surrogates = pipeline::load_surrogates(a.surrogates, m);
        for (const auto& s : surrogates) sch.surrogates.push_back(&s);
    }

    const fs::path out = output_dir(a.common, "season");
    auto manifest = start_manifest("season", cfg);
    manifest.arguments = {{"variant", a.variant},
                          {"checkpoints", a.checkpoints},
                          {"surrogates", a.surrogates},
                          {"force_off", a.force_off ? "true" : "false"}};
    manifest.seeds.push_back(cfg.season.seed);

    const harness::SeasonLog log = harness::run_season(f, cfg.season, sch);
    log.write_csv(out / "season.csv");
    const harness::SeasonMetrics s = harness::season_metrics(log, f.zones());
    ordered_json j;
    j["variant"] = a.variant;
    j["days"] = log.days;
    j["total_irrigation_m"] = s.total_irrigation;
    j["zone_irrigation_m"] = s.zone_totals;
    j["yield_kg_m2"] = s.yield;
    j["zone_yield_kg_m2"] = s.zone_yields;
    j["iwue_kg_m3"] = s.iwue;
    j["violation_days"] = s.violation_days;
    j["irrigation_events"] = s.irrigation_events;
    write_text(out / "metrics.json", j.dump(2) + "\n");
    manifest.outputs = {"season.csv", "metrics.json"};
    manifest.stamp("end");
    manifest.write(out);
    std::cout << a.variant << ": " << log.days << " days, irrigation " << s.total_irrigation << " m, yield " << s.yield
              << " kg/m2, IWUE " << s.iwue << " kg/m3, violation days " << s.violation_days << '\n';
    return kOk;
}

// ---------------------------------------------------------------- align

struct AlignArgs {
    Common common;
    std::string checkpoints;
    std::optional<int> n;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> sampler;
};

int cmd_align(const AlignArgs& a) {
    config::RunConfig cfg = load_config(a.common);
    if (a.n) cfg.alignment.n = *a.n;
    if (a.seed) cfg.alignment.seed = *a.seed;
    if (a.sampler) cfg.alignment.sampler = scmarl::parse_sampler(*a.sampler);
    cfg.validate();
    const scmarl::AgentBundle bundle = scmarl::AgentBundle::load(a.checkpoints);
    const field::Field f = pipeline::make_field();
    Rng rng(cfg.alignment.seed);
    const auto r = scmarl::evaluate_alignment(bundle, f, cfg.alignment.n, rng, cfg.train, cfg.alignment.threshold,
                                              cfg.alignment.sampler);

    const fs::path out = output_dir(a.common, "align");
    auto manifest = start_manifest("align", cfg);
    manifest.arguments = {{"checkpoints", a.checkpoints}};
    manifest.seeds.push_back(cfg.alignment.seed);
    ordered_json j;
    j["evaluations"] = cfg.alignment.n;
    j["sampler"] = scmarl::to_string(cfg.alignment.sampler);
    j["successes"] = r.successes;
    j["failures"] = r.failures;
    j["rate"] = r.rate();
    write_text(out / "alignment.json", j.dump(2) + "\n");
    manifest.outputs = {"alignment.json"};
    manifest.stamp("end");
    manifest.write(out);
    std::cout << "evaluations " << cfg.alignment.n << " successes " << r.successes << " failures " << r.failures
              << " rate " << r.rate() << '\n';
    return kOk;
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
    Common common;
    std::vector<std::string> logs;
    std::string baseline;
    bool reference = false;
};

int cmd_compare(const CompareArgs& a) {
    const config::RunConfig cfg = load_config(a.common);
    const field::Field f = pipeline::make_field();
    std::vector<harness::CompareRow> rows;
    for (const auto& spec : a.logs) {
        std::string name, path = spec;
        if (const auto eq = spec.find('='); eq != std::string::npos) {
            name = spec.substr(0, eq);
            path = spec.substr(eq + 1);
        } else {
            name = fs::path(path).parent_path().filename().string();
            if (name.empty()) name = fs::path(path).stem().string();
        }
        const auto log = harness::SeasonLog::read_csv(path);
        rows.push_back(harness::compare_row(name, harness::season_metrics(log, f.zones())));
    }
    if (a.reference) {
        for (const auto& r : harness::reference_rows()) rows.push_back(r);
    }
    const auto table = harness::compare(rows, a.baseline.empty() ? rows.front().name : a.baseline);

    const fs::path out = output_dir(a.common, "compare");
    auto manifest = start_manifest("compare", cfg);
    for (std::size_t k = 0; k < a.logs.size(); ++k) manifest.arguments.emplace_back("log_" + std::to_string(k + 1), a.logs[k]);
    manifest.arguments.emplace_back("baseline", table.baseline);
    write_text(out / "compare.csv", table.csv());
    write_text(out / "compare.txt", table.text());
    manifest.outputs = {"compare.csv", "compare.txt"};
    manifest.stamp("end");
    manifest.write(out);
    std::cout << table.text();
    return kOk;
}

// ---------------------------------------------------------------- surrogate

struct SurrogateArgs {
    Common common;
    std::string zone = "all";
    std::optional<int> budget;
    std::optional<std::uint64_t> seed;
};

int cmd_surrogate(const SurrogateArgs& a) {
    config::RunConfig cfg = load_config(a.common);
    if (a.budget) cfg.surrogate.trajectories = *a.budget;
    if (a.seed) cfg.surrogate.seed = *a.seed;
    cfg.validate();
    const field::Field f = pipeline::make_field();
    const int m = static_cast<int>(f.zone_count());
    std::vector<int> zones;
    if (a.zone == "all") {
        for (int i = 0; i < m; ++i) zones.push_back(i);
    } else {
        int z = 0;
        try {
            z = std::stoi(a.zone);
        } catch (const std::exception&) {
            throw ConfigError("--zone must be 'all' or a zone number");
        }
        if (z < 1 || z > m) throw ConfigError("--zone must be in 1.." + std::to_string(m));
        zones.push_back(z - 1);
    }

    const fs::path out = output_dir(a.common, "surrogate");
    auto manifest = start_manifest("surrogate", cfg);
    manifest.arguments = {{"zone", a.zone}};
    ordered_json j = ordered_json::array();
    for (int z : zones) {
        mpc::SurrogateConfig sc = cfg.surrogate;
        sc.seed = derive_seed(cfg.surrogate.seed, static_cast<std::uint64_t>(z));
        const mpc::Surrogate s = mpc::train_surrogate(f.column(z), f.zone(z), sc);
        const fs::path p = pipeline::surrogate_path(out, z);
        s.save(p);
        manifest.seeds.push_back(sc.seed);
        manifest.outputs.push_back(p.filename().string());
        j.push_back({{"zone", z + 1}, {"validation_rmse", s.validation_rmse}, {"samples", s.training_samples}});
        std::cout << "zone " << z + 1 << " validation RMSE " << s.validation_rmse << " (gate " << sc.rmse_gate
                  << ")\n";
    }
    write_text(out / "surrogate.json", j.dump(2) + "\n");
    manifest.outputs.push_back("surrogate.json");
    manifest.stamp("end");
    manifest.write(out);
    return kOk;
}

// ---------------------------------------------------------------- plotdata

struct PlotArgs {
    Common common;
    std::string log;
    std::string what;
    int smooth = 100;
};

std::string curves_csv(const fs::path& path, int smooth) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("curve file not found: " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("episode,agent,mean_score", 0) != 0) throw ConfigError("not a curve file: " + path.string());
    std::map<std::string, std::vector<std::pair<int, std::string>>> by_agent;
    std::vector<std::string> order;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string ep, agent, score;
        std::getline(ss, ep, ',');
        std::getline(ss, agent, ',');
        std::getline(ss, score, ',');
        if (!by_agent.count(agent)) order.push_back(agent);
        by_agent[agent].emplace_back(std::stoi(ep), score);
    }
    std::string out = "episode,agent,score,smoothed\n";
    char buf[64];
    for (const auto& agent : order) {
        const auto& v = by_agent[agent];
        double sum = 0.0;
        int n = 0;
        std::vector<double> win;
        for (const auto& [ep, score] : v) {
            if (!score.empty()) {
                win.push_back(std::stod(score));
                sum += win.back();
                ++n;
                if (n > smooth) {
                    sum -= win[win.size() - 1 - smooth];
                    --n;
                }
            }
            std::snprintf(buf, sizeof buf, "%.10g", n > 0 ? sum / n : 0.0);
            out += std::to_string(ep) + "," + agent + "," + score + "," + buf + "\n";
        }
    }
    return out;
}

int cmd_plotdata(const PlotArgs& a) {
    const config::RunConfig cfg = load_config(a.common);
    std::string text;
    if (a.what == "curves") {
        text = curves_csv(a.log, a.smooth);
    } else {
        const auto log = harness::SeasonLog::read_csv(a.log);
        const field::Field f = pipeline::make_field();
        char buf[256];
        if (a.what == "schedule") {
            text = "day,zone,c,a_la,u_applied,precip\n";
            for (const auto& r : log.rows) {
                std::snprintf(buf, sizeof buf, "%d,%d,%d,%.10g,%.10g,%.10g\n", r.day, r.zone + 1, r.c, r.a_la, r.u,
                              r.precip);
                text += buf;
            }
        } else if (a.what == "moisture") {
            if (log.zones != static_cast<int>(f.zone_count())) throw ConfigError("log zone count does not match the field");
            text = "day,zone,theta_rz,nu_lower,nu_upper\n";
            for (const auto& r : log.rows) {
                const auto& z = f.zone(r.zone);
                std::snprintf(buf, sizeof buf, "%d,%d,%.10g,%.10g,%.10g\n", r.day, r.zone + 1, r.theta_rz_true,
                              z.nu_lower, z.nu_upper);
                text += buf;
            }
        } else {
            throw ConfigError("--what must be curves, schedule or moisture");
        }
    }
    const fs::path out = output_dir(a.common, "plotdata");
    auto manifest = start_manifest("plotdata", cfg);
    manifest.arguments = {{"log", a.log}, {"what", a.what}};
    write_text(out / (a.what + ".csv"), text);
    manifest.outputs = {a.what + ".csv"};
    manifest.stamp("end");
    manifest.write(out);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-centralized multi-agent irrigation scheduling toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", pipeline::toolkit_version());

    TrainArgs train;
    auto* t = app.add_subcommand("train", "train an agent bundle");
    add_common(t, train.common);
    t->add_option("--mode", train.mode, "scmarl or dmarl")->capture_default_str();
    t->add_option("--episodes", train.episodes, "episodes per run (config default 9800)");
    t->add_option("--runs", train.runs, "independent runs (config default 10)");
    t->add_option("--seed", train.seed, "seed of run 1; run k uses seed + k - 1");
    t->add_flag("--single-zone", train.single_zone, "train one single-zone bundle per zone (lb-ma-mpc)");

    SeasonArgs season;
    auto* s = app.add_subcommand("season", "closed-loop season with one scheduler");
    add_common(s, season.common);
    s->add_option("--variant", season.variant, "scmarl, dmarl, scmarl+mpc or lb-ma-mpc")->capture_default_str();
    s->add_option("--checkpoints", season.checkpoints, "bundle directory (lb-ma-mpc: directory of zone_<k> bundles)");
    s->add_option("--surrogates", season.surrogates, "directory written by the surrogate command");
    s->add_option("--seed", season.seed, "season seed");
    s->add_flag("--force-off", season.force_off, "pin the coordinator decision to 0");

    AlignArgs align;
    auto* al = app.add_subcommand("align", "coordinator/local alignment evaluation");
    add_common(al, align.common);
    al->add_option("--checkpoints", align.checkpoints, "bundle directory")->required();
    al->add_option("--n", align.n, "number of evaluations");
    al->add_option("--seed", align.seed, "evaluation seed");
    al->add_option("--sampler", align.sampler, "independent | visited");

    CompareArgs compare;
    auto* c = app.add_subcommand("compare", "comparison table of season logs");
    add_common(c, compare.common);
    c->add_option("--log,--logs", compare.logs, "season.csv paths, optionally name=path")->required();
    c->add_option("--baseline", compare.baseline, "row the deltas are taken against (default: first)");
    c->add_flag("--reference", compare.reference, "append the published reference rows");

    SurrogateArgs sur;
    auto* su = app.add_subcommand("surrogate", "train per-zone MPC surrogates");
    add_common(su, sur.common);
    su->add_option("--zone", sur.zone, "zone number or 'all'")->capture_default_str();
    su->add_option("--budget", sur.budget, "simulated trajectories");
    su->add_option("--seed", sur.seed, "data and initialization seed");

    PlotArgs plot;
    auto* p = app.add_subcommand("plotdata", "tidy CSV series for plotting");
    add_common(p, plot.common);
    p->add_option("--log", plot.log, "curve.csv (curves) or season.csv")->required();
    p->add_option("--what", plot.what, "curves, schedule or moisture")->required();
    p->add_option("--smooth", plot.smooth, "moving-average window for curves")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*t) return cmd_train(train);
        if (*s) return cmd_season(season);
        if (*al) return cmd_align(align);
        if (*c) return cmd_compare(compare);
        if (*su) return cmd_surrogate(sur);
        if (*p) return cmd_plotdata(plot);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const MissingArtifact& e) {
        std::cerr << "missing artifact: " << e.what() << '\n';
        return kMissing;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}
