#pragma once

#include <array>
#include <deque>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescue/frontier_store.hpp"
#include "rescue/occupancy_grid.hpp"

namespace rescue {

inline constexpr std::array<GridCell, 4> kNeighbors4{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
inline constexpr std::array<GridCell, 8> kNeighbors8{
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

/// Free cell with at least one unknown 4-neighbor.
inline bool is_frontier_cell(const OccupancyGrid& grid, GridCell c) {
    if (grid.at(c) != CellState::Free) return false;
    for (const GridCell& d : kNeighbors4) {
        const GridCell n{c.x + d.x, c.y + d.y};
        if (grid.in_bounds(n) && grid.get_unchecked(n.x, n.y) == CellState::Unknown) return true;
    }
    return false;
}

/// Persistent wavefront state: visited layer plus the frontier cell index.
class ExplorationState {
public:
    ExplorationState(int width, int height)
        : width_(width), height_(height), visited_(std::size_t(width) * height, 0) {}

    explicit ExplorationState(const OccupancyGrid& grid) : ExplorationState(grid.width(), grid.height()) {}

    int width() const { return width_; }
    int height() const { return height_; }

    bool visited(GridCell c) const { return visited_[std::size_t(c.y) * width_ + c.x] != 0; }
    std::size_t visited_count() const { return std::size_t(std::count(visited_.begin(), visited_.end(), 1)); }

    const FrontierStore& store() const { return store_; }
    FrontierStore& store() { return store_; }

    /// Marks `c` visited; returns false if it already was. Visits are never undone.
    bool mark_visited(GridCell c) {
        std::uint8_t& v = visited_[std::size_t(c.y) * width_ + c.x];
        if (v) return false;
        v = 1;
        return true;
    }

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> visited_;
    FrontierStore store_;
};

struct FrontierDelta {
    std::vector<GridCell> added;
    std::vector<GridCell> removed;
    std::size_t enqueued = 0;   // cells pushed through the wavefront queue
    std::size_t seeds = 0;      // previous frontier cells re-examined

    bool empty() const { return added.empty() && removed.empty(); }
};

/// One Expanding Wavefront Frontier Detection step.
///
/// The wavefront starts at the stored frontier cells inside the observation
/// area (grown by one cell, since a cell's frontier status depends on its
/// neighbors) and at the robot cell if it has not been reached yet. It only
/// flows through free cells that were never visited, so each update costs
/// in proportion to the newly uncovered space.
inline FrontierDelta ewfd_update(ExplorationState& state, const OccupancyGrid& grid, const CellRect& observation_area,
                                 GridCell robot_cell) {
    if (grid.width() != state.width() || grid.height() != state.height())
        throw PreconditionError("exploration state does not match grid dimensions");
    if (!grid.is_free(robot_cell)) throw PreconditionError("robot cell is not free");

    FrontierStore& store = state.store();
    FrontierDelta delta;

    std::deque<GridCell> queue;
    if (!observation_area.empty()) {
        CellRect area{observation_area.min_x - 1, observation_area.min_y - 1, observation_area.max_x + 1,
                      observation_area.max_y + 1};
        for (GridCell c : store.query(area)) queue.push_back(c);
    }
    delta.seeds = queue.size();
    if (state.mark_visited(robot_cell)) queue.push_back(robot_cell);

    while (!queue.empty()) {
        const GridCell c = queue.front();
        queue.pop_front();
        ++delta.enqueued;

        const bool frontier = is_frontier_cell(grid, c);
        const bool stored = store.contains(c);
        if (frontier && !stored) {
            store.insert(c);
            delta.added.push_back(c);
        } else if (!frontier && stored) {
            store.remove(c);
            delta.removed.push_back(c);
        }
        if (grid.get_unchecked(c.x, c.y) != CellState::Free) continue;

        for (const GridCell& d : kNeighbors4) {
            const GridCell n{c.x + d.x, c.y + d.y};
            if (!grid.in_bounds(n)) continue;
            if (grid.get_unchecked(n.x, n.y) != CellState::Free || !state.mark_visited(n)) continue;
            queue.push_back(n);
        }
    }
    return delta;
}

/// Drops every stored cell that no longer passes the frontier test.
inline std::vector<GridCell> revalidate_frontiers(ExplorationState& state, const OccupancyGrid& grid) {
    std::vector<GridCell> removed;
    for (GridCell c : state.store().all()) {
        if (!is_frontier_cell(grid, c)) {
            state.store().remove(c);
            removed.push_back(c);
        }
    }
    return removed;
}

struct Frontier {
    Point2 centroid;
    std::size_t size = 0;
    std::vector<GridCell> cells;
};

/// 8-connected components of the stored frontier cells, smallest cell first.
/// Components with fewer than `min_size` cells are dropped.
inline std::vector<Frontier> cluster_frontiers(const FrontierStore& store, const OccupancyGrid& grid,
                                               std::size_t min_size) {
    const std::vector<GridCell> cells = store.all();
    std::vector<std::uint8_t> member(std::size_t(grid.width()) * grid.height(), 0);
    for (GridCell c : cells) member[grid.index(c)] = 1;

    std::vector<Frontier> out;
    std::vector<GridCell> stack;
    for (GridCell seed : cells) {
        if (member[grid.index(seed)] != 1) continue;
        Frontier f;
        member[grid.index(seed)] = 2;
        stack.push_back(seed);
        while (!stack.empty()) {
            const GridCell c = stack.back();
            stack.pop_back();
            f.cells.push_back(c);
            for (const GridCell& d : kNeighbors8) {
                const GridCell n{c.x + d.x, c.y + d.y};
                if (!grid.in_bounds(n) || member[grid.index(n)] != 1) continue;
                member[grid.index(n)] = 2;
                stack.push_back(n);
            }
        }
        if (f.cells.size() < min_size) continue;
        std::sort(f.cells.begin(), f.cells.end());
        double sx = 0.0;
        double sy = 0.0;
        for (GridCell c : f.cells) {
            const Point2 p = grid_to_world(grid, c);
            sx += p.x;
            sy += p.y;
        }
        f.size = f.cells.size();
        f.centroid = {sx / double(f.size), sy / double(f.size)};
        out.push_back(std::move(f));
    }
    return out;
}

inline nlohmann::ordered_json frontiers_to_json(const std::vector<Frontier>& frontiers) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < frontiers.size(); ++i) {
        const Frontier& f = frontiers[i];
        nlohmann::ordered_json cells = nlohmann::ordered_json::array();
        for (GridCell c : f.cells) cells.push_back({c.x, c.y});
        arr.push_back({{"id", i}, {"centroid", {f.centroid.x, f.centroid.y}}, {"size", f.size}, {"cells", cells}});
    }
    return arr;
}

}  // namespace rescue
