#pragma once

#include <algorithm>
#include <vector>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/box.hpp>
#include <boost/geometry/geometries/point.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "rescue/occupancy_grid.hpp"

namespace rescue {

/// R-tree of frontier cells with insert, remove and inclusive rectangle queries.
class FrontierStore {
    using BgPoint = boost::geometry::model::point<int, 2, boost::geometry::cs::cartesian>;
    using BgBox = boost::geometry::model::box<BgPoint>;
    using Tree = boost::geometry::index::rtree<BgPoint, boost::geometry::index::quadratic<16>>;

public:
    /// Returns false if the cell was already stored.
    bool insert(GridCell c) {
        if (contains(c)) return false;
        tree_.insert(to_point(c));
        return true;
    }

    bool remove(GridCell c) { return tree_.remove(to_point(c)) > 0; }

    bool contains(GridCell c) const { return tree_.count(to_point(c)) > 0; }

    /// Stored cells inside `rect` (inclusive), sorted by (x, y).
    std::vector<GridCell> query(const CellRect& rect) const {
        std::vector<GridCell> out;
        if (rect.empty()) return out;
        const BgBox box(BgPoint(rect.min_x, rect.min_y), BgPoint(rect.max_x, rect.max_y));
        std::vector<BgPoint> hits;
        tree_.query(boost::geometry::index::covered_by(box), std::back_inserter(hits));
        out.reserve(hits.size());
        for (const BgPoint& p : hits) out.push_back(from_point(p));
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Every stored cell sorted by (x, y).
    std::vector<GridCell> all() const {
        std::vector<GridCell> out;
        out.reserve(tree_.size());
        for (const BgPoint& p : tree_) out.push_back(from_point(p));
        std::sort(out.begin(), out.end());
        return out;
    }

    std::size_t size() const { return tree_.size(); }
    bool empty() const { return tree_.empty(); }
    void clear() { tree_.clear(); }

private:
    static BgPoint to_point(GridCell c) { return BgPoint(c.x, c.y); }
    static GridCell from_point(const BgPoint& p) {
        return {boost::geometry::get<0>(p), boost::geometry::get<1>(p)};
    }

    Tree tree_;
};

}  // namespace rescue
