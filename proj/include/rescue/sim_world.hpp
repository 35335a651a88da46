#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rescue/landmark_filter.hpp"
#include "rescue/occupancy_grid.hpp"

namespace rescue {

struct TagTruth {
    int tag_id = 0;
    Vec3 position = Vec3::Zero();
    double facing = 0.0;  // yaw of the outward normal
};

struct WorldModel {
    OccupancyGrid truth;
    std::vector<TagTruth> tags;  // sorted by id
    std::optional<RobotPose> start;

    const TagTruth* find_tag(int id) const {
        for (const TagTruth& t : tags)
            if (t.tag_id == id) return &t;
        return nullptr;
    }
};

namespace detail {

inline std::string strip_comment(const std::string& line) {
    std::string s = line.substr(0, line.find(';'));
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
    return s.substr(b);
}

}  // namespace detail

// Line-oriented world file:
//   grid <rows> <cols> <resolution_m>
//   <rows> lines of '#' (occupied) / '.' (free), first line is the top edge
//   tag <id> <x> <y> <z> <facing_deg>
//   start <x> <y> <yaw_deg>
// ';' starts a comment. World origin is the bottom-left map corner.
inline WorldModel load_world(std::istream& in) {
    WorldModel world;
    std::string raw;
    int line_no = 0;
    int rows = -1;
    int cols = -1;
    int rows_read = 0;
    std::set<int> ids;

    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = detail::strip_comment(raw);
        if (line.empty()) continue;

        if (rows < 0) {
            std::istringstream ss(line);
            std::string kw;
            double res = 0.0;
            if (!(ss >> kw >> rows >> cols >> res) || kw != "grid") throw ParseError("expected 'grid <rows> <cols> <resolution>'", line_no);
            if (rows < 1 || cols < 1 || !(res > 0.0)) throw ParseError("bad grid dimensions", line_no);
            world.truth = OccupancyGrid(cols, rows, res, {0.0, 0.0}, CellState::Free);
            continue;
        }

        if (rows_read < rows) {
            if (int(line.size()) != cols)
                throw ParseError("map row has " + std::to_string(line.size()) + " cells, expected " + std::to_string(cols), line_no);
            const int y = rows - 1 - rows_read;
            for (int x = 0; x < cols; ++x) {
                const char ch = line[std::size_t(x)];
                if (ch == '#') world.truth.set({x, y}, CellState::Occupied);
                else if (ch == '.') world.truth.set({x, y}, CellState::Free);
                else throw ParseError(std::string("unexpected map character '") + ch + "'", line_no);
            }
            ++rows_read;
            continue;
        }

        std::istringstream ss(line);
        std::string kw;
        ss >> kw;
        if (kw == "tag") {
            TagTruth t;
            double x = 0, y = 0, z = 0, facing = 0;
            if (!(ss >> t.tag_id >> x >> y >> z >> facing)) throw ParseError("expected 'tag <id> <x> <y> <z> <facing_deg>'", line_no);
            if (!ids.insert(t.tag_id).second) throw ParseError("duplicate tag id " + std::to_string(t.tag_id), line_no);
            t.position = {x, y, z};
            t.facing = wrap_angle(deg_to_rad(facing));
            if (!world.truth.in_bounds(world_to_grid_unchecked(world.truth, {x, y})))
                throw ParseError("tag " + std::to_string(t.tag_id) + " outside the map", line_no);
            world.tags.push_back(t);
        } else if (kw == "start") {
            double x = 0, y = 0, yaw = 0;
            if (!(ss >> x >> y >> yaw)) throw ParseError("expected 'start <x> <y> <yaw_deg>'", line_no);
            const RobotPose p{x, y, 0.0, wrap_angle(deg_to_rad(yaw))};
            if (!world.truth.is_free(world_to_grid_unchecked(world.truth, p.position())))
                throw ParseError("start pose is not on a free cell", line_no);
            world.start = p;
        } else {
            throw ParseError("unknown directive '" + kw + "'", line_no);
        }
    }
    if (rows < 0) throw ParseError("missing grid header", 0);
    if (rows_read < rows) throw ParseError("expected " + std::to_string(rows) + " map rows, got " + std::to_string(rows_read), line_no);
    std::sort(world.tags.begin(), world.tags.end(), [](const TagTruth& a, const TagTruth& b) { return a.tag_id < b.tag_id; });
    return world;
}

inline WorldModel load_world_text(const std::string& text) {
    std::istringstream in(text);
    return load_world(in);
}

struct Robot {
    RobotPose pose;
    MotionLimits limits;
    double camera_height = 0.15;
};

struct StepResult {
    Robot robot;
    bool collided = false;
};

/// Unicycle integration; the move is cancelled if it would leave free space.
inline StepResult step_robot(const Robot& robot, double v, double w, double dt, const OccupancyGrid& truth) {
    if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
    v = std::clamp(v, -robot.limits.v_max, robot.limits.v_max);
    w = std::clamp(w, -robot.limits.w_max, robot.limits.w_max);
    StepResult out{robot, false};
    RobotPose next = robot.pose;
    next.x += v * std::cos(robot.pose.yaw) * dt;
    next.y += v * std::sin(robot.pose.yaw) * dt;
    next.yaw = wrap_angle(robot.pose.yaw + w * dt);
    if (!truth.is_free(world_to_grid_unchecked(truth, next.position()))) {
        out.collided = true;
        return out;
    }
    out.robot.pose = next;
    return out;
}

/// Distance along the ray to the middle of its chord through the first occupied
/// cell, or nullopt if the ray leaves the grid or exceeds max_range first.
inline std::optional<double> trace_to_obstacle(const OccupancyGrid& grid, Point2 p, double angle, double max_range) {
    const double res = grid.resolution();
    const double dx = std::cos(angle);
    const double dy = std::sin(angle);
    GridCell c = world_to_grid_unchecked(grid, p);
    const int step_x = dx > 0 ? 1 : -1;
    const int step_y = dy > 0 ? 1 : -1;
    const double inf = std::numeric_limits<double>::infinity();
    const double ox = p.x - grid.origin().x;
    const double oy = p.y - grid.origin().y;
    const double delta_x = dx != 0.0 ? std::abs(res / dx) : inf;
    const double delta_y = dy != 0.0 ? std::abs(res / dy) : inf;
    double next_x = dx != 0.0 ? ((c.x + (step_x > 0 ? 1 : 0)) * res - ox) / dx : inf;
    double next_y = dy != 0.0 ? ((c.y + (step_y > 0 ? 1 : 0)) * res - oy) / dy : inf;
    double t_entry = 0.0;
    while (t_entry <= max_range) {
        if (!grid.in_bounds(c)) return std::nullopt;
        const double t_exit = std::min(next_x, next_y);
        if (grid.get_unchecked(c.x, c.y) == CellState::Occupied) {
            const double mid = 0.5 * (t_entry + t_exit);
            return mid <= max_range ? std::optional<double>(mid) : std::nullopt;
        }
        t_entry = t_exit;
        if (next_x < next_y) {
            next_x += delta_x;
            c.x += step_x;
        } else {
            next_y += delta_y;
            c.y += step_y;
        }
    }
    return std::nullopt;
}

inline LidarScan simulate_lidar(const WorldModel& world, const RobotPose& pose, int n_beams, double max_range) {
    LidarScan scan;
    scan.max_range = max_range;
    scan.ranges.resize(std::size_t(std::max(n_beams, 0)), LidarScan::kNoReturn);
    for (int i = 0; i < n_beams; ++i) {
        const double a = pose.yaw + kTwoPi * double(i) / double(n_beams);
        if (auto r = trace_to_obstacle(world.truth, pose.position(), a, max_range)) scan.ranges[std::size_t(i)] = *r;
    }
    return scan;
}

struct CameraModel {
    double fov = deg_to_rad(31.0);           // horizontal half-angle
    double vertical_fov = deg_to_rad(24.4);  // vertical half-angle about the horizon
    double max_range = 4.0;
    double min_range = 0.1;
    std::array<double, 3> noise_std{0.01, 0.01, 0.01};  // (bearing, elevation, range) per meter of range
    double bias_coeff = 0.03;                            // range bias = bias_coeff * range
    double facing_limit = deg_to_rad(80.0);
    double detection_period = 1.0 / 15.0;
};

/// Geometric visibility of a tag, ignoring noise.
inline bool tag_visible(const WorldModel& world, const RobotPose& camera_pose, const TagTruth& tag,
                        const CameraModel& camera) {
    const Vec3 ideal = measurement_model(tag.position, camera_pose);
    const double bearing = ideal(0);
    const double elevation = ideal(1);
    const double rho = ideal(2);
    if (rho < camera.min_range || rho > camera.max_range) return false;
    if (std::abs(bearing) > camera.fov) return false;
    if (std::abs(kPi / 2.0 - elevation) > camera.vertical_fov) return false;

    const Vec3 to_camera = Vec3(camera_pose.x, camera_pose.y, camera_pose.z) - tag.position;
    const Vec3 normal(std::cos(tag.facing), std::sin(tag.facing), 0.0);
    const double cos_view = to_camera.dot(normal) / to_camera.norm();
    if (std::acos(std::clamp(cos_view, -1.0, 1.0)) > camera.facing_limit) return false;

    // Line of sight ends at the cell just in front of the tag surface.
    const OccupancyGrid& g = world.truth;
    const Point2 anchor{tag.position.x() + 0.5 * g.resolution() * normal.x(),
                        tag.position.y() + 0.5 * g.resolution() * normal.y()};
    const GridCell from = world_to_grid_unchecked(g, camera_pose.position());
    const GridCell to = world_to_grid_unchecked(g, anchor);
    bool clear = true;
    walk_line(from, to, [&](GridCell c) {
        if (!g.in_bounds(c) || g.get_unchecked(c.x, c.y) == CellState::Occupied) {
            clear = false;
            return false;
        }
        return true;
    });
    return clear;
}

/// Noisy, range-biased measurements of every visible tag, in id order.
inline std::vector<TagMeasurement> simulate_tag_detections(const WorldModel& world, const Robot& robot,
                                                           const CameraModel& camera, Rng& rng, double timestamp = 0.0) {
    RobotPose cam = robot.pose;
    cam.z = robot.camera_height;
    std::vector<TagMeasurement> out;
    for (const TagTruth& tag : world.tags) {
        if (!tag_visible(world, cam, tag, camera)) continue;
        const Vec3 ideal = measurement_model(tag.position, cam);
        const double rho = ideal(2);
        TagMeasurement z;
        z.tag_id = tag.tag_id;
        z.timestamp = timestamp;
        z.bearing = wrap_angle(ideal(0) + rng.normal(0.0, camera.noise_std[0] * rho));
        z.elevation = std::clamp(ideal(1) + rng.normal(0.0, camera.noise_std[1] * rho), 0.0, kPi);
        z.range = std::max(1e-6, rho + camera.bias_coeff * rho + rng.normal(0.0, camera.noise_std[2] * rho));
        out.push_back(z);
    }
    return out;
}

}  // namespace rescue
