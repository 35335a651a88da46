#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <tuple>
#include <vector>

#include "rescue/frontier_detection.hpp"
#include "rescue/occupancy_grid.hpp"

namespace rescue {

namespace detail {

/// Diagonal steps may not cut the corner of a blocked orthogonal neighbor.
inline bool diagonal_allowed(const OccupancyGrid& g, GridCell c, GridCell d) {
    if (d.x == 0 || d.y == 0) return true;
    return g.is_free({c.x + d.x, c.y}) && g.is_free({c.x, c.y + d.y});
}

}  // namespace detail

/// A* over 8-connected free cells (step cost 1 or sqrt 2 cells, Euclidean
/// heuristic). Returns the cell path from start to goal, or an empty vector
/// when the goal is blocked or unreachable.
inline std::vector<GridCell> plan_path(const OccupancyGrid& costmap, GridCell start, GridCell goal) {
    if (!costmap.is_free(start)) throw PreconditionError("path start is not free");
    if (!costmap.is_free(goal)) return {};
    if (start == goal) return {start};

    const std::size_t n = std::size_t(costmap.width()) * costmap.height();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> g(n, inf);
    std::vector<std::int64_t> parent(n, -1);
    std::vector<std::uint8_t> closed(n, 0);
    auto h = [&](GridCell c) { return std::hypot(double(c.x - goal.x), double(c.y - goal.y)); };

    using Entry = std::tuple<double, double, std::size_t>;  // f, h, index
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    const std::size_t s = costmap.index(start);
    g[s] = 0.0;
    open.emplace(h(start), h(start), s);
    const std::size_t target = costmap.index(goal);

    while (!open.empty()) {
        const auto [f, hc, idx] = open.top();
        open.pop();
        if (closed[idx]) continue;
        closed[idx] = 1;
        if (idx == target) break;
        const GridCell c{int(idx % std::size_t(costmap.width())), int(idx / std::size_t(costmap.width()))};
        for (const GridCell& d : kNeighbors8) {
            const GridCell nb{c.x + d.x, c.y + d.y};
            if (!costmap.is_free(nb) || !detail::diagonal_allowed(costmap, c, d)) continue;
            const std::size_t ni = costmap.index(nb);
            if (closed[ni]) continue;
            const double step = (d.x != 0 && d.y != 0) ? std::numbers::sqrt2 : 1.0;
            const double cand = g[idx] + step;
            if (cand < g[ni]) {
                g[ni] = cand;
                parent[ni] = std::int64_t(idx);
                open.emplace(cand + h(nb), h(nb), ni);
            }
        }
    }
    if (!closed[target]) return {};

    std::vector<GridCell> path;
    for (std::int64_t i = std::int64_t(target); i >= 0; i = parent[std::size_t(i)])
        path.push_back({int(std::size_t(i) % std::size_t(costmap.width())), int(std::size_t(i) / std::size_t(costmap.width()))});
    std::reverse(path.begin(), path.end());
    return path;
}

/// Length of a cell path in meters.
inline double path_length(const OccupancyGrid& grid, const std::vector<GridCell>& path) {
    double len = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i)
        len += std::hypot(double(path[i].x - path[i - 1].x), double(path[i].y - path[i - 1].y));
    return len * grid.resolution();
}

/// Cell centers where the path changes direction, plus the end point.
inline std::vector<Point2> path_waypoints(const OccupancyGrid& grid, const std::vector<GridCell>& path) {
    std::vector<Point2> out;
    for (std::size_t i = 1; i < path.size(); ++i) {
        const bool last = i + 1 == path.size();
        if (!last) {
            const GridCell d0{path[i].x - path[i - 1].x, path[i].y - path[i - 1].y};
            const GridCell d1{path[i + 1].x - path[i].x, path[i + 1].y - path[i].y};
            if (d0 == d1) continue;
        }
        out.push_back(grid_to_world(grid, path[i]));
    }
    return out;
}

/// Closest free cell by breadth-first search, within `max_steps` rings.
inline std::optional<GridCell> nearest_free_cell(const OccupancyGrid& grid, GridCell from, int max_steps = 20) {
    if (grid.is_free(from)) return from;
    std::vector<std::uint8_t> seen(std::size_t(grid.width()) * grid.height(), 0);
    std::deque<std::pair<GridCell, int>> q;
    if (!grid.in_bounds(from)) return std::nullopt;
    q.push_back({from, 0});
    seen[grid.index(from)] = 1;
    while (!q.empty()) {
        auto [c, d] = q.front();
        q.pop_front();
        if (grid.is_free(c)) return c;
        if (d >= max_steps) continue;
        for (const GridCell& o : kNeighbors8) {
            const GridCell n{c.x + o.x, c.y + o.y};
            if (!grid.in_bounds(n) || seen[grid.index(n)]) continue;
            seen[grid.index(n)] = 1;
            q.push_back({n, d + 1});
        }
    }
    return std::nullopt;
}

struct FollowerConfig {
    double waypoint_tolerance = 0.1;
    double goal_tolerance = 0.1;
    double yaw_tolerance = 0.15;
    double rotate_threshold = 0.35;  // heading error above which the robot turns in place
    double turn_gain = 2.0;
    double progress_timeout = 15.0;
    double progress_distance = 0.05;
};

enum class NavStatus { Active, Reached, Failed };

struct VelocityCommand {
    double v = 0.0;
    double w = 0.0;
    NavStatus status = NavStatus::Active;
};

/// Rotate-then-translate waypoint follower with a progress watchdog.
class PathFollower {
public:
    PathFollower() = default;
    PathFollower(FollowerConfig config, MotionLimits limits) : config_(config), limits_(limits) {}

    void set_path(std::vector<Point2> waypoints, std::optional<double> goal_yaw, double now) {
        waypoints_ = std::move(waypoints);
        next_ = 0;
        goal_yaw_ = goal_yaw;
        best_remaining_ = std::numeric_limits<double>::infinity();
        last_progress_time_ = now;
    }

    bool has_path() const { return !waypoints_.empty(); }
    const std::vector<Point2>& waypoints() const { return waypoints_; }

    VelocityCommand update(const RobotPose& pose, double now) {
        if (waypoints_.empty()) return {0.0, 0.0, NavStatus::Failed};
        const Point2 p = pose.position();
        while (next_ + 1 < waypoints_.size() && distance(p, waypoints_[next_]) <= config_.waypoint_tolerance) ++next_;

        const Point2 target = waypoints_[next_];
        const bool final_leg = next_ + 1 == waypoints_.size();
        const double to_target = distance(p, target);

        if (final_leg && to_target <= config_.goal_tolerance) {
            if (!goal_yaw_) return {0.0, 0.0, NavStatus::Reached};
            const double err = wrap_angle(*goal_yaw_ - pose.yaw);
            if (std::abs(err) <= config_.yaw_tolerance) return {0.0, 0.0, NavStatus::Reached};
            return {0.0, turn_rate(err), NavStatus::Active};
        }

        double remaining = to_target;
        for (std::size_t i = next_ + 1; i < waypoints_.size(); ++i) remaining += distance(waypoints_[i - 1], waypoints_[i]);
        if (remaining < best_remaining_ - config_.progress_distance) {
            best_remaining_ = remaining;
            last_progress_time_ = now;
        } else if (now - last_progress_time_ > config_.progress_timeout) {
            return {0.0, 0.0, NavStatus::Failed};
        }

        const double heading = std::atan2(target.y - p.y, target.x - p.x);
        const double err = wrap_angle(heading - pose.yaw);
        if (std::abs(err) > config_.rotate_threshold) return {0.0, turn_rate(err), NavStatus::Active};
        return {limits_.v_max, turn_rate(err), NavStatus::Active};
    }

private:
    double turn_rate(double err) const { return std::clamp(config_.turn_gain * err, -limits_.w_max, limits_.w_max); }

    FollowerConfig config_{};
    MotionLimits limits_{};
    std::vector<Point2> waypoints_;
    std::size_t next_ = 0;
    std::optional<double> goal_yaw_;
    double best_remaining_ = 0.0;
    double last_progress_time_ = 0.0;
};

/// Plans on demand and retries once from the current pose when the follower
/// reports no progress.
class Navigator {
public:
    using CostmapFn = std::function<const OccupancyGrid&()>;

    Navigator() = default;
    Navigator(FollowerConfig config, MotionLimits limits) : follower_(config, limits) {}

    /// Returns false if no path exists.
    bool start(Point2 goal, std::optional<double> goal_yaw, const OccupancyGrid& costmap, const RobotPose& pose,
               double now, int replans = 1) {
        goal_ = goal;
        goal_yaw_ = goal_yaw;
        replans_left_ = replans;
        active_ = plan(costmap, pose, now);
        return active_;
    }

    VelocityCommand update(const RobotPose& pose, double now, const CostmapFn& costmap) {
        if (!active_) return {0.0, 0.0, NavStatus::Failed};
        VelocityCommand cmd = follower_.update(pose, now);
        if (cmd.status == NavStatus::Failed) {
            if (replans_left_ > 0) {
                --replans_left_;
                ++replan_count_;
                if (plan(costmap(), pose, now)) return follower_.update(pose, now);
            }
            active_ = false;
        } else if (cmd.status == NavStatus::Reached) {
            active_ = false;
        }
        return cmd;
    }

    bool active() const { return active_; }
    void cancel() { active_ = false; }
    Point2 goal() const { return goal_; }
    int replan_count() const { return replan_count_; }
    const PathFollower& follower() const { return follower_; }

private:
    bool plan(const OccupancyGrid& costmap, const RobotPose& pose, double now) {
        const GridCell here = world_to_grid_unchecked(costmap, pose.position());
        const auto start = nearest_free_cell(costmap, here);
        if (!start) return false;
        const GridCell goal_cell = world_to_grid_unchecked(costmap, goal_);
        if (!costmap.in_bounds(goal_cell)) return false;
        const std::vector<GridCell> cells = plan_path(costmap, *start, goal_cell);
        if (cells.empty()) return false;
        std::vector<Point2> wps;
        if (*start != here) wps.push_back(grid_to_world(costmap, *start));
        for (Point2 p : path_waypoints(costmap, cells)) wps.push_back(p);
        if (wps.empty() || wps.back() != goal_) {
            if (!wps.empty()) wps.back() = goal_;
            else wps.push_back(goal_);
        }
        follower_.set_path(std::move(wps), goal_yaw_, now);
        return true;
    }

    PathFollower follower_{};
    Point2 goal_{};
    std::optional<double> goal_yaw_;
    int replans_left_ = 0;
    int replan_count_ = 0;
    bool active_ = false;
};

}  // namespace rescue
