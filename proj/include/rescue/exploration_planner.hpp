#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescue/frontier_detection.hpp"
#include "rescue/occupancy_grid.hpp"

namespace rescue {

struct ExplorationConfig {
    int num_samples = 50;
    double sampling_radius = 1.0;
    int n_rays = 72;
    double sensor_max_range = 7.0;
    double fov_min = deg_to_rad(-70.0);
    double fov_max = deg_to_rad(70.0);
    double goal_request_period = 3.0;
};

struct RayGainTable {
    double resolution = 0.05;
    std::vector<int> unknown_counts;  // N_i, ray i points at 2*pi*i/n

    std::size_t size() const { return unknown_counts.size(); }
    double gain(std::size_t i) const { return unknown_counts[i] * resolution; }
    double ray_angle(std::size_t i) const { return kTwoPi * double(i) / double(size()); }
};

struct CandidateGoal {
    Point2 position;
    double orientation = 0.0;
    double info_gain = 0.0;
    double time_cost = 0.0;
    double potential_gain = 0.0;
    std::size_t frontier_index = 0;
};

/// Counts unknown cells along `n_rays` evenly spaced rays, each stopped at the
/// first occupied cell, the grid edge, or `sensor_max_range`.
inline RayGainTable compute_ray_gains(const OccupancyGrid& grid, Point2 position, const ExplorationConfig& config) {
    const GridCell start = world_to_grid(grid, position);
    RayGainTable table;
    table.resolution = grid.resolution();
    table.unknown_counts.assign(std::size_t(config.n_rays), 0);
    for (int i = 0; i < config.n_rays; ++i) {
        const double a = kTwoPi * double(i) / double(config.n_rays);
        const Point2 end{position.x + config.sensor_max_range * std::cos(a),
                         position.y + config.sensor_max_range * std::sin(a)};
        int count = 0;
        walk_line(start, world_to_grid_unchecked(grid, end), [&](GridCell c) {
            if (!grid.in_bounds(c)) return false;
            const CellState s = grid.get_unchecked(c.x, c.y);
            if (s == CellState::Occupied) return false;
            if (s == CellState::Unknown) ++count;
            return true;
        });
        table.unknown_counts[std::size_t(i)] = count;
    }
    return table;
}

/// Ray offsets (in ray steps, 0..n-1) that fall inside the field of view.
inline std::vector<int> fov_ray_offsets(std::size_t n_rays, double fov_min, double fov_max) {
    std::vector<int> offsets;
    for (std::size_t d = 0; d < n_rays; ++d) {
        const double off = wrap_angle(kTwoPi * double(d) / double(n_rays));
        if (off >= fov_min - 1e-9 && off <= fov_max + 1e-9) offsets.push_back(int(d));
    }
    return offsets;
}

struct OrientationChoice {
    double orientation = 0.0;  // in [0, 2*pi)
    double info_gain = 0.0;
    std::size_t ray_index = 0;
};

/// Picks the ray heading whose field-of-view window collects the most unknown
/// cells. Equal windows prefer the heading that keeps the unknown mass closest
/// to the optical axis, then the smallest heading in [0, 2*pi). All comparisons
/// run on integer cell counts, so ties are exact.
inline OrientationChoice optimal_orientation(const RayGainTable& rays, double fov_min, double fov_max) {
    const std::size_t n = rays.size();
    if (n == 0) throw PreconditionError("empty ray gain table");
    const std::vector<int> offsets = fov_ray_offsets(n, fov_min, fov_max);

    long best_sum = -1;
    long best_spread = 0;
    std::size_t best = 0;
    for (std::size_t k = 0; k < n; ++k) {
        long sum = 0;
        long spread = 0;
        for (int d : offsets) {
            const long cnt = rays.unknown_counts[(k + std::size_t(d)) % n];
            const int signed_off = d <= int(n / 2) ? d : d - int(n);
            sum += cnt;
            spread += cnt * std::abs(signed_off);
        }
        if (sum > best_sum || (sum == best_sum && spread < best_spread)) {
            best_sum = sum;
            best_spread = spread;
            best = k;
        }
    }
    return {rays.ray_angle(best), double(best_sum) * rays.resolution, best};
}

/// Straight-line travel time at full speed; rotation and translation overlap.
inline double time_cost(Point2 goal_position, double goal_orientation, const RobotPose& robot,
                        const MotionLimits& limits) {
    if (!(limits.v_max > 0.0) || !(limits.w_max > 0.0)) throw PreconditionError("motion limits must be positive");
    const double turn = std::abs(wrap_angle(goal_orientation - robot.yaw)) / limits.w_max;
    const double drive = distance(goal_position, robot.position()) / limits.v_max;
    return std::max(turn, drive);
}

/// I/T, with 0 for no information and +inf for free information.
inline double potential_gain(double info_gain, double cost) {
    if (info_gain <= 0.0) return 0.0;
    if (cost <= 0.0) return std::numeric_limits<double>::infinity();
    return info_gain / cost;
}

/// Samples candidate poses in a square around each frontier centroid. Each
/// frontier draws from its own seeded stream, so results do not depend on
/// evaluation order. Returns an empty list when no sample is free.
inline std::vector<CandidateGoal> sample_candidates(const OccupancyGrid& grid, const std::vector<Frontier>& frontiers,
                                                    const RobotPose& robot, const ExplorationConfig& config,
                                                    const MotionLimits& limits, std::uint64_t rng_seed) {
    if (frontiers.empty()) throw PreconditionError("no frontiers to sample around");
    std::vector<CandidateGoal> out;
    const int max_draws = 10 * config.num_samples;
    for (std::size_t f = 0; f < frontiers.size(); ++f) {
        Rng rng(derive_seed(rng_seed, f));
        const Point2 c = frontiers[f].centroid;
        int accepted = 0;
        for (int draw = 0; draw < max_draws && accepted < config.num_samples; ++draw) {
            const Point2 p{c.x + rng.uniform(-config.sampling_radius, config.sampling_radius),
                           c.y + rng.uniform(-config.sampling_radius, config.sampling_radius)};
            if (!grid.is_free(world_to_grid_unchecked(grid, p))) continue;
            ++accepted;
            const RayGainTable rays = compute_ray_gains(grid, p, config);
            const OrientationChoice best = optimal_orientation(rays, config.fov_min, config.fov_max);
            CandidateGoal g;
            g.position = p;
            g.orientation = wrap_angle(best.orientation);
            g.info_gain = best.info_gain;
            g.time_cost = time_cost(p, g.orientation, robot, limits);
            g.potential_gain = potential_gain(g.info_gain, g.time_cost);
            g.frontier_index = f;
            out.push_back(g);
        }
    }
    return out;
}

/// True if `a` ranks ahead of `b`: higher potential gain, then cheaper, then
/// lexicographically smaller position.
inline bool better_candidate(const CandidateGoal& a, const CandidateGoal& b) {
    if (a.potential_gain != b.potential_gain) return a.potential_gain > b.potential_gain;
    if (a.time_cost != b.time_cost) return a.time_cost < b.time_cost;
    if (a.position.x != b.position.x) return a.position.x < b.position.x;
    return a.position.y < b.position.y;
}

inline CandidateGoal select_goal(const std::vector<CandidateGoal>& candidates) {
    if (candidates.empty()) throw PreconditionError("no candidate goals");
    return *std::min_element(candidates.begin(), candidates.end(), better_candidate);
}

struct GreedyConfig {
    double potential_scale = 4.0;
    double gain_scale = 1.0;
    double blacklist_timeout = 10.0;
    double progress_distance = 0.1;
    double blacklist_radius = 0.5;
};

/// Blacklisted goal points; a frontier is skipped when its centroid lies
/// within `radius` of any of them.
struct GoalBlacklist {
    std::vector<Point2> points;
    double radius = 0.5;

    bool contains(Point2 p) const {
        return std::any_of(points.begin(), points.end(), [&](Point2 q) { return distance(p, q) <= radius; });
    }
    void add(Point2 p) { points.push_back(p); }
};

struct GreedyChoice {
    Point2 goal;
    std::size_t frontier_index = 0;
    double cost = 0.0;
};

/// Frontier cost = potential_scale * distance to its nearest cell
///                 - gain_scale * cell count.
/// The cheapest non-blacklisted frontier's centroid wins. Empty when every
/// frontier is blacklisted.
inline std::optional<GreedyChoice> greedy_baseline_goal(const std::vector<Frontier>& frontiers,
                                                        const OccupancyGrid& grid, const RobotPose& robot,
                                                        double potential_scale, double gain_scale,
                                                        const GoalBlacklist& blacklist) {
    std::optional<GreedyChoice> best;
    for (std::size_t i = 0; i < frontiers.size(); ++i) {
        const Frontier& f = frontiers[i];
        if (blacklist.contains(f.centroid)) continue;
        double nearest = std::numeric_limits<double>::infinity();
        for (GridCell c : f.cells) nearest = std::min(nearest, distance(robot.position(), grid_to_world(grid, c)));
        const double cost = potential_scale * nearest - gain_scale * double(f.size);
        if (!best || cost < best->cost) best = GreedyChoice{f.centroid, i, cost};
    }
    return best;
}

inline nlohmann::ordered_json candidates_to_json(const std::vector<CandidateGoal>& candidates) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const CandidateGoal& c : candidates) {
        arr.push_back({{"frontier", c.frontier_index},
                       {"x", c.position.x},
                       {"y", c.position.y},
                       {"theta", c.orientation},
                       {"info_gain", c.info_gain},
                       {"time_cost", c.time_cost},
                       {"potential_gain", std::isfinite(c.potential_gain) ? nlohmann::ordered_json(c.potential_gain)
                                                                          : nlohmann::ordered_json("inf")}});
    }
    return arr;
}

}  // namespace rescue
