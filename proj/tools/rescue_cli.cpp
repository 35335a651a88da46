#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rescue/mission.hpp"

#ifndef RESCUE_WORLDS_DIR
#define RESCUE_WORLDS_DIR "worlds"
#endif

namespace fs = std::filesystem;
using namespace rescue;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitIncomplete = 2;

fs::path output_root() {
    const char* env = std::getenv("RESCUE_OUT_ROOT");
    return env && *env ? fs::path(env) : fs::path("out");
}

// Bare world names fall back to the bundled worlds directory.
std::string resolve_world(const std::string& path) {
    if (path.empty() || fs::exists(path)) return path;
    const fs::path bundled = fs::path(RESCUE_WORLDS_DIR) / path;
    if (fs::path(path).is_relative() && fs::exists(bundled)) return bundled.string();
    return path;
}

struct CommonOptions {
    std::string world;
    std::string explorer;
    std::string config_file;
    std::vector<std::string> sets;
    std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--world", o.world, "world file (bare names also searched in the bundled worlds)");
    cmd->add_option("--config", o.config_file, "key = value configuration file");
    cmd->add_option("--set", o.sets, "override one key, e.g. --set camera.bias_coeff=0.05")->take_all();
    cmd->add_option("--out", o.out, "output directory (default $RESCUE_OUT_ROOT or ./out)");
}

MissionConfig build_config(const CommonOptions& o) {
    MissionConfig cfg;
    if (!o.config_file.empty()) {
        std::ifstream in(o.config_file);
        if (!in) throw Error("cannot open config file '" + o.config_file + "'");
        try {
            apply_config(cfg, in);
        } catch (const ParseError& e) {
            throw Error(o.config_file + ": " + e.what());
        }
    }
    for (const std::string& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!o.world.empty()) cfg.world_path = o.world;
    if (!o.explorer.empty()) cfg.explorer = parse_explorer(o.explorer);
    cfg.world_path = resolve_world(cfg.world_path);
    if (cfg.world_path.empty()) throw Error("no world given (use --world or the 'world' key)");
    if (!fs::exists(cfg.world_path)) throw Error("world file '" + cfg.world_path + "' not found");
    validate_config(cfg);
    return cfg;
}

fs::path out_dir(const CommonOptions& o) { return o.out.empty() ? output_root() : fs::path(o.out); }

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write '" + p.string() + "'");
    f << text;
}

void write_report(const fs::path& dir, const MissionReport& r) {
    fs::create_directories(dir);
    write_text(dir / "mission_report.json", report_to_json(r).dump(2) + "\n");
    std::ofstream pgm(dir / "map.pgm", std::ios::binary);
    const auto markers = report_markers(r);
    write_pgm(pgm, r.final_map, markers);
}

// Runs one mission into `dir` and returns its report.
MissionReport run_into(MissionConfig cfg, const fs::path& dir) {
    fs::create_directories(dir);
    // A stale estimate file from an earlier run must not survive an INCOMPLETE rerun.
    fs::remove(dir / "ckf_estimates.json");
    fs::remove(dir / "last_measurement_estimates.json");
    const std::uint64_t seed = cfg.seed;
    MissionReport r = run_mission(std::move(cfg), seed, dir);
    write_report(dir, r);
    return r;
}

int cmd_run(const CommonOptions& o, std::optional<std::uint64_t> seed) {
    MissionConfig cfg = build_config(o);
    if (seed) cfg.seed = *seed;
    const fs::path dir = out_dir(o);
    const MissionReport r = run_into(cfg, dir);
    std::cout << "status " << r.status << "  tags " << r.detected_tags.size() << "/" << r.tags.size()
              << "  exploration " << format_double(r.exploration_time) << " s  total " << format_double(r.total_time)
              << " s\n"
              << "outputs in " << dir.string() << "\n";
    return r.status == "DONE" ? kExitOk : kExitIncomplete;
}

struct CompareOptions {
    int seeds = 10;
    std::uint64_t first_seed = 0;
    std::vector<std::string> explorers{"nbv", "greedy"};
};

int cmd_compare(const CommonOptions& o, const CompareOptions& c) {
    if (c.seeds < 1) throw Error("--seeds must be >= 1");
    std::vector<ExplorerKind> kinds;
    for (const std::string& e : c.explorers) kinds.push_back(parse_explorer(e));
    const MissionConfig base = build_config(o);
    const fs::path dir = out_dir(o);
    fs::create_directories(dir);

    std::vector<RunSummary> runs;
    int exit_code = kExitOk;
    auto flush = [&] {
        std::ofstream a(dir / "compare.csv", std::ios::binary);
        write_csv(a, aggregate_report(runs));
        std::ofstream t(dir / "tag_errors.csv", std::ios::binary);
        write_csv(t, tag_error_table(runs));
    };

    for (int i = 0; i < c.seeds; ++i) {
        const std::uint64_t seed = c.first_seed + std::uint64_t(i);
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            MissionConfig cfg = base;
            cfg.explorer = kinds[k];
            cfg.seed = seed;
            const std::string name = to_string(kinds[k]) + (std::count(kinds.begin(), kinds.begin() + long(k), kinds[k]) ? "_" + std::to_string(k) : "");
            try {
                const MissionReport r = run_into(cfg, dir / "runs" / (name + "_seed" + std::to_string(seed)));
                RunSummary s = summarize(r);
                s.explorer = name;
                runs.push_back(s);
                if (r.status != "DONE" && exit_code == kExitOk) exit_code = kExitIncomplete;
                std::cout << name << " seed " << seed << ": " << r.status << " exploration "
                          << format_double(r.exploration_time) << " s, tags " << s.tags_found << "/" << s.tags_total << "\n";
            } catch (const std::exception& e) {
                std::cerr << name << " seed " << seed << ": " << e.what() << "\n";
                exit_code = kExitError;
            }
            flush();
        }
    }

    // Per-seed comparison of the first two explorers.
    nlohmann::ordered_json summary;
    std::map<std::string, std::vector<double>> times;
    for (const RunSummary& s : runs) times[s.explorer].push_back(s.exploration_time);
    for (const auto& [name, ts] : times) summary["mean_exploration_time_s"][name] = sample_mean(ts);
    if (runs.size() >= 2 && kinds.size() >= 2) {
        const std::string a = runs[0].explorer;
        const std::string b = runs[1].explorer;
        int wins = 0;
        int pairs = 0;
        for (std::size_t i = 0; i + 1 < runs.size(); i += kinds.size()) {
            if (runs[i].seed != runs[i + 1].seed) continue;
            ++pairs;
            if (runs[i].exploration_time <= runs[i + 1].exploration_time) ++wins;
        }
        summary["pairs"] = pairs;
        summary["first_not_slower_fraction"] = pairs ? double(wins) / pairs : 0.0;
        summary["first"] = a;
        summary["second"] = b;
        std::cout << a << " exploration time <= " << b << " in " << wins << "/" << pairs << " seeds\n";
    }
    for (const auto& [name, ts] : times)
        std::cout << "mean exploration time " << name << ": " << format_double(sample_mean(ts)) << " s\n";
    write_text(dir / "compare_summary.json", summary.dump(2) + "\n");
    return exit_code;
}

struct StatsOptions {
    std::string paper_table;
    std::string csv;
    std::string col_a = "ckf_position_error_m";
    std::string col_b = "last_position_error_m";
};

int cmd_stats(const StatsOptions& s) {
    std::vector<double> a;
    std::vector<double> b;
    if (!s.paper_table.empty()) {
        ErrorTable t;
        if (s.paper_table == "world") t = table1_world();
        else if (s.paper_table == "house") t = table1_house();
        else throw Error("--paper-table1 expects 'world' or 'house'");
        a = t.ckf;
        b = t.last;
    } else {
        if (s.csv.empty()) throw Error("stats needs --csv or --paper-table1");
        std::ifstream in(s.csv);
        if (!in) throw Error("cannot open '" + s.csv + "'");
        const CsvTable t = read_csv(in);
        a = t.numeric_column(s.col_a);
        b = t.numeric_column(s.col_b);
    }
    const EstimatorComparison r = welch_t_test(a, b);
    std::cout << "n_a " << a.size() << "\nn_b " << b.size() << "\nmean_a " << format_double(r.mean_a) << "\nmean_b "
              << format_double(r.mean_b) << "\nt " << format_double(r.t_statistic) << "\ndf "
              << format_double(r.degrees_of_freedom) << "\np_one_sided " << format_double(r.p_value) << "\n";
    return kExitOk;
}

struct RenderOptions {
    std::string world;
    std::string report;
    std::string out;
};

// Ground-truth map with the overlays of an optional mission report.
int cmd_render(const RenderOptions& o) {
    const std::string world_path = resolve_world(o.world);
    if (world_path.empty() || !fs::exists(world_path)) throw Error("world file '" + o.world + "' not found");
    const WorldModel world = load_world_file(world_path);
    std::vector<PgmMarker> markers;
    for (const TagTruth& t : world.tags) markers.push_back({world_to_grid_unchecked(world.truth, {t.position.x(), t.position.y()}), 64});
    if (!o.report.empty()) {
        std::ifstream in(o.report);
        if (!in) throw Error("cannot open '" + o.report + "'");
        const nlohmann::json j = nlohmann::json::parse(in);
        for (const auto& g : j.at("coverage_plan").at("goals"))
            markers.push_back({world_to_grid_unchecked(world.truth, {g.at("x").get<double>(), g.at("y").get<double>()}), 128});
        for (const auto& t : j.at("tags")) {
            if (!t.at("detected").get<bool>()) continue;
            const auto& e = t.at("ckf");
            markers.push_back({world_to_grid_unchecked(world.truth, {e.at("x").get<double>(), e.at("y").get<double>()}), 96});
        }
    }
    const fs::path out = o.out.empty() ? output_root() / "render.pgm" : fs::path(o.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error("cannot write '" + out.string() + "'");
    write_pgm(f, world.truth, markers);
    std::cout << "wrote " << out.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exploration and tag search simulator"};
    app.require_subcommand(1);

    CommonOptions run_opts;
    std::optional<std::uint64_t> run_seed;
    auto* run = app.add_subcommand("run", "run one mission");
    add_common(run, run_opts);
    run->add_option("--explorer", run_opts.explorer, "nbv or greedy");
    run->add_option("--seed", run_seed, "random seed");

    CommonOptions cmp_opts;
    CompareOptions cmp;
    auto* compare = app.add_subcommand("compare", "run every explorer over a range of seeds");
    add_common(compare, cmp_opts);
    compare->add_option("--seeds", cmp.seeds, "number of seeds")->capture_default_str();
    compare->add_option("--first-seed", cmp.first_seed, "first seed")->capture_default_str();
    compare->add_option("--explorers", cmp.explorers, "explorers to run per seed")->delimiter(',');

    StatsOptions st;
    auto* stats = app.add_subcommand("stats", "one-sided Welch t-test between two error columns");
    auto* paper = stats->add_option("--paper-table1", st.paper_table, "embedded reference table: world or house");
    stats->add_option("--csv", st.csv, "CSV file")->excludes(paper);
    stats->add_option("--col-a", st.col_a, "first column")->capture_default_str();
    stats->add_option("--col-b", st.col_b, "second column")->capture_default_str();

    RenderOptions ro;
    auto* render = app.add_subcommand("render", "render a world map as PGM");
    render->add_option("--world", ro.world, "world file")->required();
    render->add_option("--report", ro.report, "mission_report.json to overlay");
    render->add_option("--out", ro.out, "output PGM path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitError;
    }

    try {
        if (*run) return cmd_run(run_opts, run_seed);
        if (*compare) return cmd_compare(cmp_opts, cmp);
        if (*stats) return cmd_stats(st);
        if (*render) return cmd_render(ro);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
