#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rescue/common.hpp"

namespace rescue {

enum class CellState : std::uint8_t { Free, Occupied, Unknown };

struct GridCell {
    int x = 0;
    int y = 0;

    friend auto operator<=>(const GridCell&, const GridCell&) = default;
};

/// Inclusive cell rectangle; default-constructed rectangles are empty.
struct CellRect {
    int min_x = std::numeric_limits<int>::max();
    int min_y = std::numeric_limits<int>::max();
    int max_x = std::numeric_limits<int>::min();
    int max_y = std::numeric_limits<int>::min();

    bool empty() const { return min_x > max_x || min_y > max_y; }

    void expand(GridCell c) {
        min_x = std::min(min_x, c.x);
        min_y = std::min(min_y, c.y);
        max_x = std::max(max_x, c.x);
        max_y = std::max(max_y, c.y);
    }

    void merge(const CellRect& o) {
        if (o.empty()) return;
        expand({o.min_x, o.min_y});
        expand({o.max_x, o.max_y});
    }

    bool contains(GridCell c) const {
        return c.x >= min_x && c.x <= max_x && c.y >= min_y && c.y <= max_y;
    }

    long area() const { return empty() ? 0 : long(max_x - min_x + 1) * long(max_y - min_y + 1); }

    friend bool operator==(const CellRect&, const CellRect&) = default;
};

class OccupancyGrid {
public:
    OccupancyGrid() = default;

    OccupancyGrid(int width, int height, double resolution, Point2 origin = {},
                  CellState fill = CellState::Unknown)
        : width_(width), height_(height), resolution_(resolution), origin_(origin) {
        if (width < 1 || height < 1) throw PreconditionError("grid dimensions must be >= 1");
        if (!(resolution > 0.0)) throw PreconditionError("grid resolution must be > 0");
        cells_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    double resolution() const { return resolution_; }
    Point2 origin() const { return origin_; }

    bool in_bounds(GridCell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }

    CellState at(GridCell c) const {
        check(c);
        return cells_[index(c)];
    }
    void set(GridCell c, CellState s) {
        check(c);
        cells_[index(c)] = s;
    }

    /// Unchecked accessors for hot loops; callers guarantee bounds.
    CellState get_unchecked(int x, int y) const { return cells_[std::size_t(y) * width_ + x]; }
    void set_unchecked(int x, int y, CellState s) { cells_[std::size_t(y) * width_ + x] = s; }

    bool is_free(GridCell c) const { return in_bounds(c) && cells_[index(c)] == CellState::Free; }

    std::span<const CellState> cells() const { return cells_; }

    std::size_t count(CellState s) const { return std::size_t(std::count(cells_.begin(), cells_.end(), s)); }

    std::size_t index(GridCell c) const { return std::size_t(c.y) * width_ + c.x; }

    CellRect bounds() const { return {0, 0, width_ - 1, height_ - 1}; }

    friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

private:
    void check(GridCell c) const {
        if (!in_bounds(c))
            throw BoundsError("cell (" + std::to_string(c.x) + "," + std::to_string(c.y) +
                              ") outside " + std::to_string(width_) + "x" + std::to_string(height_) + " grid");
    }

    int width_ = 1;
    int height_ = 1;
    double resolution_ = 0.05;
    Point2 origin_{};
    std::vector<CellState> cells_ = std::vector<CellState>(1, CellState::Unknown);
};

/// Cell containing p, without a bounds check.
inline GridCell world_to_grid_unchecked(const OccupancyGrid& grid, Point2 p) {
    return {static_cast<int>(std::floor((p.x - grid.origin().x) / grid.resolution())),
            static_cast<int>(std::floor((p.y - grid.origin().y) / grid.resolution()))};
}

inline GridCell world_to_grid(const OccupancyGrid& grid, Point2 p) {
    const GridCell c = world_to_grid_unchecked(grid, p);
    if (!grid.in_bounds(c))
        throw BoundsError("point (" + std::to_string(p.x) + "," + std::to_string(p.y) + ") outside grid");
    return c;
}

/// World coordinates of the cell center.
inline Point2 grid_to_world(const OccupancyGrid& grid, GridCell c) {
    return {grid.origin().x + (c.x + 0.5) * grid.resolution(), grid.origin().y + (c.y + 0.5) * grid.resolution()};
}

/// Visits the Bresenham line from `from` to `to` (either end may lie outside the
/// grid). Stops early when `visit` returns false.
template <class Visit>
void walk_line(GridCell from, GridCell to, Visit&& visit) {
    const int dx = std::abs(to.x - from.x);
    const int dy = -std::abs(to.y - from.y);
    const int sx = from.x < to.x ? 1 : -1;
    const int sy = from.y < to.y ? 1 : -1;
    int err = dx + dy;
    GridCell c = from;
    while (true) {
        if (!visit(c)) return;
        if (c == to) return;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            c.x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            c.y += sy;
        }
    }
}

// Bresenham, endpoints inclusive. Lines are not reversal-symmetric when the
// minor coordinate lands exactly on a half cell; elsewhere both directions agree.
inline std::vector<GridCell> raycast(const OccupancyGrid& grid, GridCell from, GridCell to) {
    if (!grid.in_bounds(from) || !grid.in_bounds(to)) throw BoundsError("raycast endpoint outside grid");
    std::vector<GridCell> out;
    out.reserve(std::size_t(std::max(std::abs(to.x - from.x), std::abs(to.y - from.y))) + 1);
    walk_line(from, to, [&](GridCell c) {
        out.push_back(c);
        return true;
    });
    return out;
}

/// Marks every cell whose center lies within `radius` of an occupied cell center.
inline OccupancyGrid inflate(const OccupancyGrid& grid, double radius) {
    if (radius < 0.0) throw PreconditionError("inflation radius must be >= 0");
    OccupancyGrid out = grid;
    const double r = radius / grid.resolution();
    const int reach = static_cast<int>(std::floor(r + 1e-9));
    if (reach == 0) return out;

    std::vector<GridCell> offsets;
    const double r2 = r * r + 1e-9;
    for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx)
            if ((dx != 0 || dy != 0) && double(dx * dx + dy * dy) <= r2) offsets.push_back({dx, dy});

    const int w = grid.width();
    const int h = grid.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (grid.get_unchecked(x, y) != CellState::Occupied) continue;
            for (const GridCell& o : offsets) {
                const int nx = x + o.x;
                const int ny = y + o.y;
                if (nx >= 0 && ny >= 0 && nx < w && ny < h) out.set_unchecked(nx, ny, CellState::Occupied);
            }
        }
    }
    return out;
}

struct LidarScan {
    static constexpr double kNoReturn = std::numeric_limits<double>::infinity();

    std::vector<double> ranges;  // beam i points at yaw + 2*pi*i/N
    double max_range = 10.0;

    static bool is_no_return(double r) { return !std::isfinite(r); }
};

/// Ray-traces each beam into the grid. Returns the bounding box of changed cells.
/// Occupied cells are never cleared; the grid only moves Unknown->Free/Occupied
/// and Free->Occupied.
inline CellRect integrate_scan(OccupancyGrid& grid, const RobotPose& robot, const LidarScan& scan) {
    CellRect changed;
    if (scan.ranges.empty()) return changed;
    const GridCell origin = world_to_grid(grid, robot.position());
    const std::size_t n = scan.ranges.size();

    auto mark = [&](GridCell c, CellState s) {
        const CellState cur = grid.get_unchecked(c.x, c.y);
        if (cur == s || cur == CellState::Occupied) return;
        grid.set_unchecked(c.x, c.y, s);
        changed.expand(c);
    };

    for (std::size_t i = 0; i < n; ++i) {
        const double angle = robot.yaw + kTwoPi * double(i) / double(n);
        const bool hit = !LidarScan::is_no_return(scan.ranges[i]);
        const double r = hit ? std::min(scan.ranges[i], scan.max_range) : scan.max_range;
        const Point2 end{robot.x + r * std::cos(angle), robot.y + r * std::sin(angle)};
        const GridCell end_cell = world_to_grid_unchecked(grid, end);
        walk_line(origin, end_cell, [&](GridCell c) {
            if (!grid.in_bounds(c)) return false;
            if (hit && c == end_cell) {
                mark(c, CellState::Occupied);
                return false;
            }
            mark(c, CellState::Free);
            return true;
        });
    }
    return changed;
}

/// Gray level for an overlay marker drawn on top of a PGM export.
struct PgmMarker {
    GridCell cell;
    std::uint8_t gray = 128;
};

inline constexpr std::uint8_t kPgmOccupied = 0;
inline constexpr std::uint8_t kPgmFree = 254;
inline constexpr std::uint8_t kPgmUnknown = 205;

/// Binary PGM (P5) in map_saver convention, top row first.
inline void write_pgm(std::ostream& os, const OccupancyGrid& grid, std::span<const PgmMarker> markers = {}) {
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(grid.width()) * grid.height());
    for (int y = 0; y < grid.height(); ++y) {
        for (int x = 0; x < grid.width(); ++x) {
            std::uint8_t v = kPgmUnknown;
            switch (grid.get_unchecked(x, y)) {
                case CellState::Free: v = kPgmFree; break;
                case CellState::Occupied: v = kPgmOccupied; break;
                case CellState::Unknown: v = kPgmUnknown; break;
            }
            pixels[std::size_t(grid.height() - 1 - y) * grid.width() + x] = v;
        }
    }
    for (const PgmMarker& m : markers) {
        if (!grid.in_bounds(m.cell)) continue;
        pixels[std::size_t(grid.height() - 1 - m.cell.y) * grid.width() + m.cell.x] = m.gray;
    }
    os << "P5\n" << grid.width() << ' ' << grid.height() << "\n255\n";
    os.write(reinterpret_cast<const char*>(pixels.data()), std::streamsize(pixels.size()));
}

}  // namespace rescue
