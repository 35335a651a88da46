#include <gtest/gtest.h>

#include "rescue/coverage_planner.hpp"

using namespace rescue;

TEST(FreeSpaceArea, CountsFreeCellsTimesCellArea) {
    OccupancyGrid g(10, 10, 1.0, {}, CellState::Free);
    EXPECT_DOUBLE_EQ(free_space_area(g), 100.0);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 10; ++x) g.set({x, y}, CellState::Occupied);
    EXPECT_DOUBLE_EQ(free_space_area(g), 50.0);

    Rng rng(4);
    OccupancyGrid r(40, 30, 0.05, {}, CellState::Unknown);
    int free = 0;
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 40; ++x)
            if (rng.uniform() < 0.3) {
                r.set({x, y}, CellState::Free);
                ++free;
            }
    EXPECT_NEAR(free_space_area(r), free * 0.0025, 1e-12);
    EXPECT_THROW(free_space_area(OccupancyGrid(3, 3, 1.0)), PreconditionError);
}

TEST(GridDivide, SmallRoomGivesTwoByTwoLatticeOfCenters) {
    // 27 m^2 -> round(27^(1/3)) = 3 cells -> ceil(sqrt 3) = 2 per side.
    const OccupancyGrid g(9, 3, 1.0, {}, CellState::Free);
    ASSERT_DOUBLE_EQ(free_space_area(g), 27.0);
    const CoveragePlan plan = grid_divide_and_sample(g, g, 27.0, 1);
    EXPECT_EQ(plan.rows, 2);
    EXPECT_EQ(plan.cols, 2);
    ASSERT_EQ(plan.goals.size(), 4u);
    const double cx[2] = {2.25, 6.75};
    const double cy[2] = {0.75, 2.25};
    for (const CoverageGoal& goal : plan.goals) {
        EXPECT_DOUBLE_EQ(goal.position.x, cx[goal.col]);
        EXPECT_DOUBLE_EQ(goal.position.y, cy[goal.row]);
    }
}

TEST(GridDivide, OpenRoomUsesCellCenters) {
    const OccupancyGrid g(100, 100, 0.1, {-5.0, -5.0}, CellState::Free);
    const double a = free_space_area(g);
    const CoveragePlan plan = grid_divide_and_sample(g, g, a, 7);
    const long n = std::lround(std::cbrt(a));
    const int side = int(std::ceil(std::sqrt(double(n))));
    ASSERT_EQ(plan.rows, side);
    ASSERT_EQ(plan.goals.size(), std::size_t(side * side));
    const double w = 10.0 / side;
    for (const CoverageGoal& goal : plan.goals) {
        EXPECT_NEAR(goal.position.x, -5.0 + (goal.col + 0.5) * w, 1e-12);
        EXPECT_NEAR(goal.position.y, -5.0 + (goal.row + 0.5) * w, 1e-12);
    }
}

TEST(GridDivide, ResamplesAroundObstaclesAndSkipsSolidCells) {
    // 3x3 lattice over a 9x9 m room; the center lattice cell is fully blocked
    // and every other cell has a pillar on its center.
    OccupancyGrid g(90, 90, 0.1, {}, CellState::Free);
    for (int y = 30; y < 60; ++y)
        for (int x = 30; x < 60; ++x) g.set({x, y}, CellState::Occupied);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            for (int y = r * 30 + 12; y < r * 30 + 18; ++y)
                for (int x = c * 30 + 12; x < c * 30 + 18; ++x) g.set({x, y}, CellState::Occupied);

    CoverageConfig cfg;
    cfg.cell_count_exponent = 0.5;  // force 9 lattice cells regardless of the area
    const double a = 81.0;
    const CoveragePlan plan = grid_divide_and_sample(g, g, a, 3, cfg);
    ASSERT_EQ(plan.rows, 3);
    EXPECT_EQ(plan.goals.size(), 8u);
    for (const CoverageGoal& goal : plan.goals) {
        EXPECT_FALSE(goal.row == 1 && goal.col == 1);
        EXPECT_TRUE(g.is_free(world_to_grid(g, goal.position)));
        EXPECT_GE(goal.position.x, goal.col * 3.0);
        EXPECT_LT(goal.position.x, goal.col * 3.0 + 3.0);
        EXPECT_GE(goal.position.y, goal.row * 3.0);
        EXPECT_LT(goal.position.y, goal.row * 3.0 + 3.0);
    }
    // Same seed, same draws.
    const CoveragePlan again = grid_divide_and_sample(g, g, a, 3, cfg);
    ASSERT_EQ(again.goals.size(), plan.goals.size());
    for (std::size_t i = 0; i < plan.goals.size(); ++i) {
        EXPECT_EQ(again.goals[i].position.x, plan.goals[i].position.x);
        EXPECT_EQ(again.goals[i].position.y, plan.goals[i].position.y);
    }
}

TEST(GridDivide, GoalMustBeFreeInBothMaps) {
    const OccupancyGrid g(10, 10, 1.0, {}, CellState::Free);
    OccupancyGrid inflated = g;
    inflated.set({5, 5}, CellState::Occupied);
    CoverageConfig cfg;
    cfg.cell_count_exponent = 0.0;  // one lattice cell, center (5, 5)
    const CoveragePlan plan = grid_divide_and_sample(g, inflated, 100.0, 2, cfg);
    ASSERT_EQ(plan.goals.size(), 1u);
    EXPECT_TRUE(inflated.is_free(world_to_grid(inflated, plan.goals[0].position)));
}

TEST(GridDivide, RejectsBadInput) {
    const OccupancyGrid g(4, 4, 1.0, {}, CellState::Free);
    EXPECT_THROW(grid_divide_and_sample(g, g, 0.0, 1), PreconditionError);
    const OccupancyGrid none(4, 4, 1.0, {}, CellState::Occupied);
    EXPECT_THROW(grid_divide_and_sample(none, none, 4.0, 1), PreconditionError);
}

namespace {

std::vector<std::pair<int, int>> order(const std::vector<CoverageGoal>& goals) {
    std::vector<std::pair<int, int>> out;
    for (const CoverageGoal& g : goals) out.emplace_back(g.row, g.col);
    return out;
}

}  // namespace

TEST(SnakeOrder, TwoByTwo) {
    const std::vector<CoverageGoal> goals{{{}, 0, 0}, {{}, 0, 1}, {{}, 1, 0}, {{}, 1, 1}};
    EXPECT_EQ(order(snake_order(goals)), (std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 1}, {1, 0}}));
}

TEST(SnakeOrder, SingletonAndGaps) {
    EXPECT_EQ(order(snake_order({{{}, 0, 0}})), (std::vector<std::pair<int, int>>{{0, 0}}));
    std::vector<CoverageGoal> goals;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            if (!(r == 1 && c == 1)) goals.push_back({{}, r, c});
    std::reverse(goals.begin(), goals.end());
    EXPECT_EQ(order(snake_order(goals)),
              (std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {0, 2}, {1, 2}, {1, 0}, {2, 0}, {2, 1}, {2, 2}}));
}

TEST(CoveragePlanJson, ListsGoals) {
    CoveragePlan plan;
    plan.rows = plan.cols = 1;
    plan.goals.push_back({{1.5, 2.5}, 0, 0});
    const auto j = coverage_plan_to_json(plan);
    EXPECT_EQ(j["rows"], 1);
    EXPECT_EQ(j["goals"][0]["x"], 1.5);
    EXPECT_EQ(j["goals"][0]["y"], 2.5);
}
