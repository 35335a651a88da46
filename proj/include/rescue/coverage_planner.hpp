#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescue/occupancy_grid.hpp"

namespace rescue {

struct CoverageGoal {
    Point2 position;
    int row = 0;
    int col = 0;
};

struct CoverageConfig {
    double cell_count_exponent = 1.0 / 3.0;  // lattice cells = round(A_free ^ exponent)
    int resample_cap = 20;
};

struct CoveragePlan {
    std::vector<CoverageGoal> goals;
    int rows = 0;
    int cols = 0;
    Point2 lattice_min;  // world extent covered by the lattice
    Point2 lattice_max;
};

/// Free area in square meters.
inline double free_space_area(const OccupancyGrid& inflated) {
    const std::size_t free = inflated.count(CellState::Free);
    if (free == 0) throw PreconditionError("map has no free cells");
    return double(free) * inflated.resolution() * inflated.resolution();
}

/// Splits the free-space bounding box into a square lattice sized from A_free
/// and picks one point per lattice cell that is free in both maps: the cell
/// center if possible, otherwise the first of `resample_cap` uniform draws.
/// Goals come out in row-major order; use snake_order for traversal.
inline CoveragePlan grid_divide_and_sample(const OccupancyGrid& grid, const OccupancyGrid& inflated, double a_free,
                                           std::uint64_t rng_seed, const CoverageConfig& config = {}) {
    if (!(a_free > 0.0)) throw PreconditionError("free area must be positive");
    const long target = std::max(1L, std::lround(std::pow(a_free, config.cell_count_exponent)));
    const int side = static_cast<int>(std::ceil(std::sqrt(double(target)) - 1e-12));

    CellRect box;
    for (int y = 0; y < inflated.height(); ++y)
        for (int x = 0; x < inflated.width(); ++x)
            if (inflated.get_unchecked(x, y) == CellState::Free) box.expand({x, y});
    if (box.empty()) throw PreconditionError("map has no free cells");

    CoveragePlan plan;
    plan.rows = side;
    plan.cols = side;
    const double res = inflated.resolution();
    plan.lattice_min = {inflated.origin().x + box.min_x * res, inflated.origin().y + box.min_y * res};
    plan.lattice_max = {inflated.origin().x + (box.max_x + 1) * res, inflated.origin().y + (box.max_y + 1) * res};
    const double cw = (plan.lattice_max.x - plan.lattice_min.x) / side;
    const double ch = (plan.lattice_max.y - plan.lattice_min.y) / side;

    auto valid = [&](Point2 p) {
        const GridCell c = world_to_grid_unchecked(grid, p);
        return grid.is_free(c) && inflated.is_free(world_to_grid_unchecked(inflated, p));
    };

    Rng rng(rng_seed);
    for (int row = 0; row < side; ++row) {
        for (int col = 0; col < side; ++col) {
            const double x0 = plan.lattice_min.x + col * cw;
            const double y0 = plan.lattice_min.y + row * ch;
            Point2 p{x0 + 0.5 * cw, y0 + 0.5 * ch};
            bool found = valid(p);
            for (int k = 0; k < config.resample_cap && !found; ++k) {
                p = {rng.uniform(x0, x0 + cw), rng.uniform(y0, y0 + ch)};
                found = valid(p);
            }
            if (found) plan.goals.push_back({p, row, col});
        }
    }
    if (plan.goals.empty()) throw PreconditionError("no valid coverage point in any lattice cell");
    return plan;
}

/// Boustrophedon order: rows ascending, even rows left to right, odd rows
/// right to left.
inline std::vector<CoverageGoal> snake_order(std::vector<CoverageGoal> goals) {
    std::stable_sort(goals.begin(), goals.end(), [](const CoverageGoal& a, const CoverageGoal& b) {
        if (a.row != b.row) return a.row < b.row;
        return (a.row % 2 == 0) ? a.col < b.col : a.col > b.col;
    });
    return goals;
}

inline nlohmann::ordered_json coverage_plan_to_json(const CoveragePlan& plan) {
    nlohmann::ordered_json goals = nlohmann::ordered_json::array();
    for (const CoverageGoal& g : plan.goals)
        goals.push_back({{"row", g.row}, {"col", g.col}, {"x", g.position.x}, {"y", g.position.y}});
    return {{"rows", plan.rows}, {"cols", plan.cols}, {"goals", goals}};
}

}  // namespace rescue
