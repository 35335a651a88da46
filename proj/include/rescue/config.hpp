#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rescue/coverage_planner.hpp"
#include "rescue/exploration_planner.hpp"
#include "rescue/landmark_filter.hpp"
#include "rescue/metrics.hpp"
#include "rescue/navigation.hpp"
#include "rescue/sim_world.hpp"

namespace rescue {

enum class ExplorerKind { Nbv, Greedy };

inline std::string to_string(ExplorerKind k) { return k == ExplorerKind::Nbv ? "nbv" : "greedy"; }

inline ExplorerKind parse_explorer(const std::string& s) {
    if (s == "nbv") return ExplorerKind::Nbv;
    if (s == "greedy") return ExplorerKind::Greedy;
    throw ParseError("unknown explorer '" + s + "' (expected nbv or greedy)", 0);
}

/// Which tags end the search early once all are detected.
struct ExpectedTags {
    enum class Mode { None, All, List } mode = Mode::None;
    std::vector<int> ids;
};

struct MissionConfig {
    std::string world_path;
    ExplorerKind explorer = ExplorerKind::Nbv;
    std::uint64_t seed = 0;

    double dt = 0.05;
    double max_time = 3600.0;
    double max_exploration_time = 1800.0;
    double spin_duration = 4.0;
    ExpectedTags expected_tags;

    double inflation_radius = 0.155;
    std::size_t min_frontier_size = 8;
    ExplorationConfig explore;
    GreedyConfig greedy;
    MotionLimits limits;
    double camera_height = 0.15;

    int lidar_beams = 360;
    double lidar_range = 10.0;
    double lidar_period = 0.2;

    CameraModel camera;
    NoiseModel noise;
    double sigma0 = 0.5;
    CoverageConfig coverage;
    FollowerConfig follower;
};

namespace detail {

struct ConfigKey {
    std::string name;
    std::function<std::string(const MissionConfig&)> get;
    std::function<void(MissionConfig&, const std::string&)> set;
};

inline double to_double(const std::string& v) {
    const auto d = parse_double(v);
    if (!d) throw ParseError("expected a number, got '" + v + "'", 0);
    return *d;
}

inline long to_long(const std::string& v) {
    std::size_t pos = 0;
    long r = 0;
    try {
        r = std::stol(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size()) throw ParseError("expected an integer, got '" + v + "'", 0);
    return r;
}

template <class Member>
ConfigKey real_key(std::string name, Member member) {
    return {std::move(name), [member](const MissionConfig& c) { return format_double(member(const_cast<MissionConfig&>(c))); },
            [member](MissionConfig& c, const std::string& v) { member(c) = to_double(v); }};
}

template <class Member>
ConfigKey angle_key(std::string name, Member member) {
    return {std::move(name),
            [member](const MissionConfig& c) { return format_double(rad_to_deg(member(const_cast<MissionConfig&>(c)))); },
            [member](MissionConfig& c, const std::string& v) { member(c) = deg_to_rad(to_double(v)); }};
}

template <class T, class Member>
ConfigKey int_key(std::string name, Member member) {
    return {std::move(name), [member](const MissionConfig& c) { return std::to_string(member(const_cast<MissionConfig&>(c))); },
            [member](MissionConfig& c, const std::string& v) { member(c) = static_cast<T>(to_long(v)); }};
}

inline std::string expected_to_string(const ExpectedTags& e) {
    if (e.mode == ExpectedTags::Mode::None) return "none";
    if (e.mode == ExpectedTags::Mode::All) return "all";
    std::string s;
    for (std::size_t i = 0; i < e.ids.size(); ++i) s += (i ? "," : "") + std::to_string(e.ids[i]);
    return s;
}

inline ExpectedTags parse_expected(const std::string& v) {
    ExpectedTags e;
    if (v == "none" || v.empty()) return e;
    if (v == "all") {
        e.mode = ExpectedTags::Mode::All;
        return e;
    }
    e.mode = ExpectedTags::Mode::List;
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) e.ids.push_back(int(to_long(item)));
    return e;
}

#define RESCUE_FIELD(expr) [](MissionConfig& c) -> auto& { return c.expr; }

inline const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k;
        k.push_back({"world", [](const MissionConfig& c) { return c.world_path; },
                     [](MissionConfig& c, const std::string& v) { c.world_path = v; }});
        k.push_back({"explorer", [](const MissionConfig& c) { return to_string(c.explorer); },
                     [](MissionConfig& c, const std::string& v) { c.explorer = parse_explorer(v); }});
        k.push_back({"seed", [](const MissionConfig& c) { return std::to_string(c.seed); },
                     [](MissionConfig& c, const std::string& v) { c.seed = std::uint64_t(to_long(v)); }});
        k.push_back(real_key("mission.dt", RESCUE_FIELD(dt)));
        k.push_back(real_key("mission.max_time", RESCUE_FIELD(max_time)));
        k.push_back(real_key("mission.max_exploration_time", RESCUE_FIELD(max_exploration_time)));
        k.push_back(real_key("mission.spin_duration", RESCUE_FIELD(spin_duration)));
        k.push_back({"mission.expected_tags", [](const MissionConfig& c) { return expected_to_string(c.expected_tags); },
                     [](MissionConfig& c, const std::string& v) { c.expected_tags = parse_expected(v); }});
        k.push_back(real_key("grid.inflation_radius", RESCUE_FIELD(inflation_radius)));
        k.push_back(int_key<std::size_t>("frontier.min_size", RESCUE_FIELD(min_frontier_size)));
        k.push_back(int_key<int>("explore.num_samples", RESCUE_FIELD(explore.num_samples)));
        k.push_back(real_key("explore.sampling_radius", RESCUE_FIELD(explore.sampling_radius)));
        k.push_back(int_key<int>("explore.n_rays", RESCUE_FIELD(explore.n_rays)));
        k.push_back(real_key("explore.sensor_max_range", RESCUE_FIELD(explore.sensor_max_range)));
        k.push_back(angle_key("explore.fov_min_deg", RESCUE_FIELD(explore.fov_min)));
        k.push_back(angle_key("explore.fov_max_deg", RESCUE_FIELD(explore.fov_max)));
        k.push_back(real_key("explore.goal_period", RESCUE_FIELD(explore.goal_request_period)));
        k.push_back(real_key("greedy.potential_scale", RESCUE_FIELD(greedy.potential_scale)));
        k.push_back(real_key("greedy.gain_scale", RESCUE_FIELD(greedy.gain_scale)));
        k.push_back(real_key("greedy.blacklist_timeout", RESCUE_FIELD(greedy.blacklist_timeout)));
        k.push_back(real_key("greedy.progress_distance", RESCUE_FIELD(greedy.progress_distance)));
        k.push_back(real_key("greedy.blacklist_radius", RESCUE_FIELD(greedy.blacklist_radius)));
        k.push_back(real_key("robot.v_max", RESCUE_FIELD(limits.v_max)));
        k.push_back(real_key("robot.w_max", RESCUE_FIELD(limits.w_max)));
        k.push_back(real_key("robot.camera_height", RESCUE_FIELD(camera_height)));
        k.push_back(int_key<int>("lidar.beams", RESCUE_FIELD(lidar_beams)));
        k.push_back(real_key("lidar.max_range", RESCUE_FIELD(lidar_range)));
        k.push_back(real_key("lidar.period", RESCUE_FIELD(lidar_period)));
        k.push_back(angle_key("camera.fov_deg", RESCUE_FIELD(camera.fov)));
        k.push_back(angle_key("camera.vertical_fov_deg", RESCUE_FIELD(camera.vertical_fov)));
        k.push_back(real_key("camera.max_range", RESCUE_FIELD(camera.max_range)));
        k.push_back(real_key("camera.min_range", RESCUE_FIELD(camera.min_range)));
        k.push_back(real_key("camera.sigma_bearing", RESCUE_FIELD(camera.noise_std[0])));
        k.push_back(real_key("camera.sigma_elevation", RESCUE_FIELD(camera.noise_std[1])));
        k.push_back(real_key("camera.sigma_range", RESCUE_FIELD(camera.noise_std[2])));
        k.push_back(real_key("camera.bias_coeff", RESCUE_FIELD(camera.bias_coeff)));
        k.push_back(angle_key("camera.facing_limit_deg", RESCUE_FIELD(camera.facing_limit)));
        k.push_back(real_key("camera.period", RESCUE_FIELD(camera.detection_period)));
        k.push_back(real_key("filter.sigma0", RESCUE_FIELD(sigma0)));
        k.push_back(real_key("filter.r_bearing", RESCUE_FIELD(noise.base_diag[0])));
        k.push_back(real_key("filter.r_elevation", RESCUE_FIELD(noise.base_diag[1])));
        k.push_back(real_key("filter.r_range", RESCUE_FIELD(noise.base_diag[2])));
        k.push_back(real_key("filter.range_exponent", RESCUE_FIELD(noise.range_exponent)));
        k.push_back(real_key("coverage.exponent", RESCUE_FIELD(coverage.cell_count_exponent)));
        k.push_back(int_key<int>("coverage.resample_cap", RESCUE_FIELD(coverage.resample_cap)));
        k.push_back(real_key("follower.waypoint_tolerance", RESCUE_FIELD(follower.waypoint_tolerance)));
        k.push_back(real_key("follower.goal_tolerance", RESCUE_FIELD(follower.goal_tolerance)));
        k.push_back(real_key("follower.yaw_tolerance", RESCUE_FIELD(follower.yaw_tolerance)));
        k.push_back(real_key("follower.progress_timeout", RESCUE_FIELD(follower.progress_timeout)));
        return k;
    }();
    return keys;
}

#undef RESCUE_FIELD

}  // namespace detail

/// Sets one dotted key; throws ParseError for unknown keys or bad values.
inline void set_config_value(MissionConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& k : detail::config_keys()) {
        if (k.name == key) {
            k.set(cfg, value);
            return;
        }
    }
    throw ParseError("unknown configuration key '" + key + "'", 0);
}

/// Applies `key = value` lines; '#' and ';' start comments.
inline void apply_config(MissionConfig& cfg, std::istream& in) {
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw.substr(0, raw.find_first_of("#;"));
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
        try {
            set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
}

/// Every key with its current value, in a fixed order.
inline std::vector<std::pair<std::string, std::string>> config_entries(const MissionConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : detail::config_keys()) out.emplace_back(k.name, k.get(cfg));
    return out;
}

inline void validate_config(const MissionConfig& c) {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw PreconditionError("invalid configuration: " + what);
    };
    require(c.dt > 0.0, "mission.dt must be > 0");
    require(c.max_time > 0.0, "mission.max_time must be > 0");
    require(c.spin_duration > 0.0, "mission.spin_duration must be > 0");
    require(c.inflation_radius >= 0.0, "grid.inflation_radius must be >= 0");
    require(c.explore.num_samples >= 1, "explore.num_samples must be >= 1");
    require(c.explore.n_rays >= 8, "explore.n_rays must be >= 8");
    require(c.explore.sensor_max_range > 0.0, "explore.sensor_max_range must be > 0");
    require(c.explore.fov_min < c.explore.fov_max && c.explore.fov_min > -kPi - 1e-9 && c.explore.fov_max <= kPi + 1e-9,
            "explore field of view must lie in (-180, 180]");
    require(c.explore.goal_request_period > 0.0, "explore.goal_period must be > 0");
    require(c.limits.v_max > 0.0 && c.limits.w_max > 0.0, "robot limits must be > 0");
    require(c.lidar_beams >= 8, "lidar.beams must be >= 8");
    require(c.lidar_range > 0.0 && c.lidar_period > 0.0, "lidar range and period must be > 0");
    require(c.camera.min_range > 0.0 && c.camera.min_range < c.camera.max_range, "camera range must satisfy 0 < min < max");
    require(c.camera.fov > 0.0 && c.camera.fov <= kPi / 2.0 + 1e-9, "camera.fov_deg must lie in (0, 90]");
    require(c.camera.detection_period > 0.0, "camera.period must be > 0");
    require(c.sigma0 > 0.0, "filter.sigma0 must be > 0");
    for (double d : c.noise.base_diag) require(d > 0.0, "filter noise diagonal must be > 0");
    require(c.coverage.resample_cap >= 0, "coverage.resample_cap must be >= 0");
}

}  // namespace rescue
