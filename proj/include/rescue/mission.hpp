#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescue/config.hpp"
#include "rescue/coverage_planner.hpp"
#include "rescue/exploration_planner.hpp"
#include "rescue/frontier_detection.hpp"
#include "rescue/landmark_filter.hpp"
#include "rescue/metrics.hpp"
#include "rescue/navigation.hpp"
#include "rescue/sim_world.hpp"

namespace rescue {

enum class MissionPhase { Exploring, RescueNavigate, RescueSpin, Done };

inline std::string to_string(MissionPhase p) {
    switch (p) {
        case MissionPhase::Exploring: return "EXPLORING";
        case MissionPhase::RescueNavigate: return "RESCUE_NAVIGATE";
        case MissionPhase::RescueSpin: return "RESCUE_SPIN";
        case MissionPhase::Done: return "DONE";
    }
    return "?";
}

struct MissionEvent {
    double time = 0.0;
    MissionPhase phase = MissionPhase::Exploring;
    std::string message;
};

struct TagReport {
    int tag_id = 0;
    Vec3 truth = Vec3::Zero();
    bool detected = false;
    Vec3 ckf = Vec3::Zero();
    Vec3 last = Vec3::Zero();
    double ckf_error = 0.0;
    double last_error = 0.0;
    int n_updates = 0;
};

struct MissionCounters {
    int goal_requests = 0;
    int goals_selected = 0;
    int navigation_failures = 0;
    int blacklisted = 0;
    int coverage_goals = 0;
    int coverage_goals_skipped = 0;
    int detections = 0;
    int collisions = 0;
    int scans = 0;
};

struct MissionReport {
    std::string status;  // DONE or INCOMPLETE
    std::string world;
    ExplorerKind explorer = ExplorerKind::Nbv;
    std::uint64_t seed = 0;
    double exploration_time = 0.0;
    double total_time = 0.0;
    int stop_flag_count = 0;
    std::vector<int> detected_tags;
    std::vector<TagReport> tags;
    std::vector<MissionEvent> events;
    MissionCounters counters;
    CoveragePlan coverage;
    OccupancyGrid final_map;
    std::vector<std::pair<std::string, std::string>> config;
    bool estimate_files_written = false;
};

/// Full explore-then-search simulation over a ground-truth world.
/// Each tick: lidar mapping and frontier update when due, camera detections
/// when due, then the phase controller, then robot motion.
class Mission {
public:
    Mission(WorldModel world, MissionConfig config, std::string world_name = {},
            std::optional<std::filesystem::path> output_dir = std::nullopt)
        : world_(std::move(world)),
          cfg_(std::move(config)),
          world_name_(std::move(world_name)),
          output_dir_(std::move(output_dir)),
          map_(world_.truth.width(), world_.truth.height(), world_.truth.resolution(), world_.truth.origin(),
               CellState::Unknown),
          exploration_(map_),
          bank_(cfg_.noise, cfg_.sigma0),
          navigator_(cfg_.follower, cfg_.limits),
          camera_rng_(derive_seed(cfg_.seed, 1)) {
        validate_config(cfg_);
        robot_.limits = cfg_.limits;
        robot_.camera_height = cfg_.camera_height;
        robot_.pose = world_.start.value_or(default_start());
        robot_.pose.z = 0.0;
        blacklist_.radius = cfg_.greedy.blacklist_radius;
        if (cfg_.expected_tags.mode == ExpectedTags::Mode::All)
            for (const auto& t : world_.tags) expected_.insert(t.tag_id);
        else if (cfg_.expected_tags.mode == ExpectedTags::Mode::List)
            expected_.insert(cfg_.expected_tags.ids.begin(), cfg_.expected_tags.ids.end());
        log("mission start, explorer " + to_string(cfg_.explorer));
    }

    MissionPhase phase() const { return phase_; }
    double sim_time() const { return time_; }
    const Robot& robot() const { return robot_; }
    const OccupancyGrid& map() const { return map_; }
    const ExplorationState& exploration() const { return exploration_; }
    const TagFilterBank& filters() const { return bank_; }
    const std::set<int>& detected_tags() const { return detected_; }
    const std::deque<CoverageGoal>& goal_queue() const { return queue_; }
    int stop_flag_count() const { return stop_flags_; }
    bool timed_out() const { return timed_out_; }

    /// Advances one tick. Returns false once the mission is over.
    bool tick() {
        if (phase_ == MissionPhase::Done || timed_out_) return false;
        if (time_ >= cfg_.max_time - 1e-9) {
            timed_out_ = true;
            log("watchdog: mission time limit reached");
            if (!exploration_time_) exploration_time_ = time_;
            return false;
        }
        if (time_ + 1e-9 >= next_scan_) {
            scan();
            next_scan_ += cfg_.lidar_period;
        }
        if (time_ + 1e-9 >= next_detection_) {
            detect();
            next_detection_ += cfg_.camera.detection_period;
        }

        VelocityCommand cmd;
        switch (phase_) {
            case MissionPhase::Exploring: cmd = explore_step(); break;
            case MissionPhase::RescueNavigate: cmd = navigate_step(); break;
            case MissionPhase::RescueSpin: cmd = spin_step(); break;
            case MissionPhase::Done: break;
        }
        if (phase_ == MissionPhase::Done) return false;

        const StepResult step = step_robot(robot_, cmd.v, cmd.w, cfg_.dt, world_.truth);
        if (step.collided) ++counters_.collisions;
        robot_ = step.robot;
        ++ticks_;
        time_ = double(ticks_) * cfg_.dt;
        return true;
    }

    MissionReport run() {
        while (tick()) {
        }
        return report();
    }

    MissionReport report() const {
        MissionReport r;
        r.status = phase_ == MissionPhase::Done ? "DONE" : "INCOMPLETE";
        r.world = world_name_;
        r.explorer = cfg_.explorer;
        r.seed = cfg_.seed;
        r.total_time = time_;
        r.exploration_time = exploration_time_.value_or(time_);
        r.stop_flag_count = stop_flags_;
        r.detected_tags.assign(detected_.begin(), detected_.end());
        for (const TagTruth& t : world_.tags) {
            TagReport tr;
            tr.tag_id = t.tag_id;
            tr.truth = t.position;
            const auto it = bank_.filters().find(t.tag_id);
            if (it != bank_.filters().end()) {
                tr.detected = true;
                tr.ckf = it->second.mean;
                tr.last = last_measurement_estimate(it->second);
                tr.ckf_error = localization_error(tr.ckf, tr.truth);
                tr.last_error = localization_error(tr.last, tr.truth);
                tr.n_updates = it->second.n_updates;
            }
            r.tags.push_back(tr);
        }
        r.events = events_;
        r.counters = counters_;
        r.coverage = coverage_;
        r.final_map = map_;
        r.config = config_entries(cfg_);
        r.estimate_files_written = files_written_;
        return r;
    }

private:
    RobotPose default_start() const {
        const OccupancyGrid& g = world_.truth;
        const GridCell center{g.width() / 2, g.height() / 2};
        const auto c = nearest_free_cell(g, center, std::max(g.width(), g.height()));
        if (!c) throw PreconditionError("world has no free cell for the robot");
        const Point2 p = grid_to_world(g, *c);
        return {p.x, p.y, 0.0, 0.0};
    }

    void log(std::string msg) { events_.push_back({time_, phase_, std::move(msg)}); }

    GridCell robot_cell() const { return world_to_grid(map_, robot_.pose.position()); }

    const OccupancyGrid& costmap() {
        if (costmap_stale_) {
            costmap_ = inflate(map_, cfg_.inflation_radius);
            costmap_stale_ = false;
        }
        return costmap_;
    }

    void scan() {
        ++counters_.scans;
        const LidarScan s = simulate_lidar(world_, robot_.pose, cfg_.lidar_beams, cfg_.lidar_range);
        const CellRect changed = integrate_scan(map_, robot_.pose, s);
        if (!changed.empty()) costmap_stale_ = true;
        if (phase_ == MissionPhase::Exploring && map_.is_free(robot_cell()))
            ewfd_update(exploration_, map_, changed, robot_cell());
    }

    void detect() {
        const auto zs = simulate_tag_detections(world_, robot_, cfg_.camera, camera_rng_, time_);
        RobotPose cam = robot_.pose;
        cam.z = robot_.camera_height;
        for (const TagMeasurement& z : zs) {
            ++counters_.detections;
            bank_.process(z, cam);
            if (detected_.insert(z.tag_id).second) log("tag " + std::to_string(z.tag_id) + " detected");
        }
    }

    bool all_expected_found() const {
        if (expected_.empty()) return false;
        return std::includes(detected_.begin(), detected_.end(), expected_.begin(), expected_.end());
    }

    // ---- exploration ------------------------------------------------------

    VelocityCommand explore_step() {
        if (time_ >= cfg_.max_exploration_time) {
            log("exploration time limit reached");
            finish_exploration();
            return {};
        }
        if (time_ + 1e-9 >= next_goal_request_) {
            next_goal_request_ = time_ + cfg_.explore.goal_request_period;
            request_goal();
            if (phase_ != MissionPhase::Exploring) return {};
        }
        if (!navigator_.active()) return {};

        track_goal_progress();
        if (!navigator_.active()) return {};
        VelocityCommand cmd = navigator_.update(robot_.pose, time_, [this]() -> const OccupancyGrid& { return costmap(); });
        if (cmd.status == NavStatus::Reached) {
            next_goal_request_ = time_;
        } else if (cmd.status == NavStatus::Failed) {
            ++counters_.navigation_failures;
            blacklist_goal("navigation failed");
            next_goal_request_ = time_;
        }
        return cmd;
    }

    void request_goal() {
        ++counters_.goal_requests;
        revalidate_frontiers(exploration_, map_);
        const std::vector<Frontier> frontiers = cluster_frontiers(exploration_.store(), map_, cfg_.min_frontier_size);
        std::vector<Frontier> open;
        for (const Frontier& f : frontiers)
            if (!blacklist_.contains(f.centroid)) open.push_back(f);
        if (open.empty()) {
            log(frontiers.empty() ? "no frontiers remain" : "all frontiers blacklisted");
            finish_exploration();
            return;
        }
        const bool ok = cfg_.explorer == ExplorerKind::Nbv ? choose_nbv_goal(open) : choose_greedy_goal(open);
        if (ok) {
            no_candidate_streak_ = 0;
            return;
        }
        if (++no_candidate_streak_ >= 2) {
            log("no valid exploration goal twice in a row");
            finish_exploration();
        }
    }

    bool choose_nbv_goal(const std::vector<Frontier>& frontiers) {
        const OccupancyGrid& cm = costmap();
        std::vector<CandidateGoal> cands = sample_candidates(cm, frontiers, robot_.pose, cfg_.explore, cfg_.limits,
                                                             derive_seed(cfg_.seed, 1000 + std::uint64_t(counters_.goal_requests)));
        std::erase_if(cands, [](const CandidateGoal& c) { return !(c.info_gain > 0.0); });
        std::sort(cands.begin(), cands.end(), better_candidate);
        constexpr std::size_t kAttempts = 8;
        for (std::size_t i = 0; i < cands.size() && i < kAttempts; ++i) {
            const CandidateGoal& g = cands[i];
            if (navigator_.active() && distance(navigator_.goal(), g.position) < 1e-12) return true;
            if (navigator_.start(g.position, g.orientation, cm, robot_.pose, time_)) {
                goal_frontier_ = frontiers[g.frontier_index].centroid;
                ++counters_.goals_selected;
                return true;
            }
        }
        navigator_.cancel();
        return false;
    }

    bool choose_greedy_goal(const std::vector<Frontier>& frontiers) {
        const OccupancyGrid& cm = costmap();
        while (true) {
            const auto choice = greedy_baseline_goal(frontiers, map_, robot_.pose, cfg_.greedy.potential_scale,
                                                     cfg_.greedy.gain_scale, blacklist_);
            if (!choice) {
                navigator_.cancel();
                log("all frontiers blacklisted");
                finish_exploration();
                return true;
            }
            if (navigator_.active() && distance(greedy_goal_, choice->goal) < 1e-12) return true;
            // Centroids may sit off free space; aim at the nearest free costmap cell.
            const auto cell = nearest_free_cell(cm, world_to_grid_unchecked(cm, choice->goal), 5);
            if (cell && navigator_.start(grid_to_world(cm, *cell), 0.0, cm, robot_.pose, time_)) {
                greedy_goal_ = choice->goal;
                goal_frontier_ = choice->goal;
                best_goal_distance_ = distance(robot_.pose.position(), choice->goal);
                last_goal_progress_ = time_;
                ++counters_.goals_selected;
                return true;
            }
            blacklist_.add(choice->goal);
            ++counters_.blacklisted;
            log("frontier unreachable, blacklisted");
        }
    }

    // Greedy baseline: no progress toward the same goal for the timeout
    // blacklists it.
    void track_goal_progress() {
        if (cfg_.explorer != ExplorerKind::Greedy) return;
        const double d = distance(robot_.pose.position(), greedy_goal_);
        if (d < best_goal_distance_ - cfg_.greedy.progress_distance) {
            best_goal_distance_ = d;
            last_goal_progress_ = time_;
        } else if (time_ - last_goal_progress_ > cfg_.greedy.blacklist_timeout) {
            navigator_.cancel();
            blacklist_goal("no progress toward goal");
            next_goal_request_ = time_;
        }
    }

    void blacklist_goal(const std::string& why) {
        blacklist_.add(goal_frontier_);
        ++counters_.blacklisted;
        log(why + ", goal blacklisted");
    }

    void finish_exploration() {
        if (phase_ != MissionPhase::Exploring) return;
        navigator_.cancel();
        exploration_time_ = time_;
        ++stop_flags_;
        log("exploration stop flag");

        const OccupancyGrid& cm = costmap();
        try {
            const double area = free_space_area(cm);
            coverage_ = grid_divide_and_sample(map_, cm, area, derive_seed(cfg_.seed, 2), cfg_.coverage);
            for (const CoverageGoal& g : snake_order(coverage_.goals)) queue_.push_back(g);
            counters_.coverage_goals = int(queue_.size());
            log("coverage plan with " + std::to_string(queue_.size()) + " goals");
        } catch (const PreconditionError& e) {
            log(std::string("coverage plan failed: ") + e.what());
        }
        phase_ = MissionPhase::RescueNavigate;
        log("search phase started");
    }

    // ---- search and rescue -------------------------------------------------

    VelocityCommand navigate_step() {
        if (all_expected_found()) {
            finish("all expected tags detected");
            return {};
        }
        while (!navigator_.active()) {
            if (queue_.empty()) {
                finish("goal queue exhausted");
                return {};
            }
            if (navigator_.start(queue_.front().position, std::nullopt, costmap(), robot_.pose, time_)) break;
            ++counters_.coverage_goals_skipped;
            log("coverage goal unreachable, skipped");
            queue_.pop_front();
        }
        VelocityCommand cmd = navigator_.update(robot_.pose, time_, [this]() -> const OccupancyGrid& { return costmap(); });
        if (cmd.status == NavStatus::Reached) {
            phase_ = MissionPhase::RescueSpin;
            spin_ticks_ = 0;
            return {};
        }
        if (cmd.status == NavStatus::Failed) {
            ++counters_.navigation_failures;
            ++counters_.coverage_goals_skipped;
            log("coverage goal failed, skipped");
            queue_.pop_front();
            return {};
        }
        return cmd;
    }

    VelocityCommand spin_step() {
        if (all_expected_found()) {
            finish("all expected tags detected");
            return {};
        }
        const int total = std::max(1, int(std::lround(cfg_.spin_duration / cfg_.dt)));
        if (spin_ticks_ >= total) {
            queue_.pop_front();
            phase_ = MissionPhase::RescueNavigate;
            return navigate_step();
        }
        ++spin_ticks_;
        return {0.0, kTwoPi / (double(total) * cfg_.dt), NavStatus::Active};
    }

    void finish(const std::string& why) {
        navigator_.cancel();
        phase_ = MissionPhase::Done;
        log(why);
        if (output_dir_) write_estimates(*output_dir_);
    }

    void write_estimates(const std::filesystem::path& dir) {
        std::filesystem::create_directories(dir);
        std::ofstream(dir / "ckf_estimates.json") << estimates_to_json(bank_, true).dump(2) << '\n';
        std::ofstream(dir / "last_measurement_estimates.json") << estimates_to_json(bank_, false).dump(2) << '\n';
        files_written_ = true;
    }

    WorldModel world_;
    MissionConfig cfg_;
    std::string world_name_;
    std::optional<std::filesystem::path> output_dir_;

    Robot robot_;
    OccupancyGrid map_;
    OccupancyGrid costmap_;
    bool costmap_stale_ = true;
    ExplorationState exploration_;
    TagFilterBank bank_;
    Navigator navigator_;
    Rng camera_rng_;

    MissionPhase phase_ = MissionPhase::Exploring;
    std::int64_t ticks_ = 0;
    double time_ = 0.0;
    double next_scan_ = 0.0;
    double next_detection_ = 0.0;
    double next_goal_request_ = 0.0;
    std::optional<double> exploration_time_;
    int stop_flags_ = 0;
    bool timed_out_ = false;
    bool files_written_ = false;

    GoalBlacklist blacklist_;
    Point2 goal_frontier_{};
    Point2 greedy_goal_{};
    double best_goal_distance_ = 0.0;
    double last_goal_progress_ = 0.0;
    int no_candidate_streak_ = 0;

    CoveragePlan coverage_;
    std::deque<CoverageGoal> queue_;
    int spin_ticks_ = 0;

    std::set<int> expected_;
    std::set<int> detected_;
    std::vector<MissionEvent> events_;
    MissionCounters counters_;
};

inline WorldModel load_world_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open world file '" + path.string() + "'", 0);
    return load_world(in);
}

/// Loads the configured world and runs one mission with `seed`.
inline MissionReport run_mission(MissionConfig config, std::uint64_t seed,
                                 std::optional<std::filesystem::path> output_dir = std::nullopt) {
    config.seed = seed;
    WorldModel world = load_world_file(config.world_path);
    const std::string name = std::filesystem::path(config.world_path).stem().string();
    Mission mission(std::move(world), std::move(config), name, std::move(output_dir));
    return mission.run();
}

inline nlohmann::ordered_json vec_json(const Vec3& v) { return {{"x", v.x()}, {"y", v.y()}, {"z", v.z()}}; }

inline nlohmann::ordered_json report_to_json(const MissionReport& r) {
    using json = nlohmann::ordered_json;
    json config = json::object();
    for (const auto& [k, v] : r.config) config[k] = v;
    json tags = json::array();
    for (const TagReport& t : r.tags) {
        json j{{"tag_id", t.tag_id}, {"truth", vec_json(t.truth)}, {"detected", t.detected}};
        if (t.detected) {
            j["ckf"] = vec_json(t.ckf);
            j["last_measurement"] = vec_json(t.last);
            j["ckf_position_error_m"] = t.ckf_error;
            j["last_position_error_m"] = t.last_error;
            j["n_updates"] = t.n_updates;
        }
        tags.push_back(j);
    }
    json events = json::array();
    for (const MissionEvent& e : r.events) events.push_back({{"t", e.time}, {"phase", to_string(e.phase)}, {"event", e.message}});
    const MissionCounters& c = r.counters;
    return json{{"status", r.status},
                {"world", r.world},
                {"explorer", to_string(r.explorer)},
                {"seed", r.seed},
                {"config", config},
                {"exploration_time_s", r.exploration_time},
                {"total_time_s", r.total_time},
                {"stop_flag_count", r.stop_flag_count},
                {"detected_tags", r.detected_tags},
                {"tags", tags},
                {"coverage_plan", coverage_plan_to_json(r.coverage)},
                {"counters",
                 {{"goal_requests", c.goal_requests},
                  {"goals_selected", c.goals_selected},
                  {"navigation_failures", c.navigation_failures},
                  {"blacklisted", c.blacklisted},
                  {"coverage_goals", c.coverage_goals},
                  {"coverage_goals_skipped", c.coverage_goals_skipped},
                  {"detections", c.detections},
                  {"collisions", c.collisions},
                  {"scans", c.scans}}},
                {"estimate_files_written", r.estimate_files_written},
                {"events", events}};
}

inline RunSummary summarize(const MissionReport& r) {
    RunSummary s;
    s.explorer = to_string(r.explorer);
    s.world = r.world;
    s.seed = r.seed;
    s.status = r.status;
    s.exploration_time = r.exploration_time;
    s.total_time = r.total_time;
    s.tags_found = int(r.detected_tags.size());
    s.tags_total = int(r.tags.size());
    for (const TagReport& t : r.tags)
        if (t.detected) s.tag_errors.push_back({t.tag_id, t.ckf_error, t.last_error});
    return s;
}

/// Map render with coverage goals and tag positions overlaid.
inline std::vector<PgmMarker> report_markers(const MissionReport& r) {
    std::vector<PgmMarker> m;
    const OccupancyGrid& g = r.final_map;
    for (const CoverageGoal& goal : r.coverage.goals) m.push_back({world_to_grid_unchecked(g, goal.position), 128});
    for (const TagReport& t : r.tags) {
        m.push_back({world_to_grid_unchecked(g, {t.truth.x(), t.truth.y()}), 64});
        if (t.detected) {
            m.push_back({world_to_grid_unchecked(g, {t.last.x(), t.last.y()}), 160});
            m.push_back({world_to_grid_unchecked(g, {t.ckf.x(), t.ckf.y()}), 96});
        }
    }
    return m;
}

}  // namespace rescue
