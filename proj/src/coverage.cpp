#include "topnav/coverage.hpp"

#include <queue>

namespace topnav {

std::vector<GridCell> reachable_free_cells(const World& world, GridCell start) {
    std::vector<GridCell> out;
    if (!world.is_traversable(start.row, start.col)) return out;
    std::vector<std::uint8_t> seen(world.rows() * world.cols(), 0);
    std::queue<GridCell> queue;
    queue.push(start);
    seen[start.row * world.cols() + start.col] = 1;
    while (!queue.empty()) {
        GridCell cur = queue.front();
        queue.pop();
        out.push_back(cur);
        const long long deltas[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (const auto& d : deltas) {
            long long r = static_cast<long long>(cur.row) + d[0];
            long long c = static_cast<long long>(cur.col) + d[1];
            if (r < 0 || c < 0 || r >= static_cast<long long>(world.rows()) ||
                c >= static_cast<long long>(world.cols()))
                continue;
            auto rr = static_cast<std::size_t>(r);
            auto cc = static_cast<std::size_t>(c);
            if (seen[rr * world.cols() + cc] || !world.is_traversable(rr, cc)) continue;
            seen[rr * world.cols() + cc] = 1;
            queue.push({rr, cc});
        }
    }
    return out;
}

CoverageTracker::CoverageTracker(const World& world, GridCell start, double max_range)
    : rows_(world.rows()), cols_(world.cols()), max_range_(max_range), start_(start) {
    covered_.assign(rows_ * cols_, 0);
    refresh(world);
}

void CoverageTracker::refresh(const World& world) {
    reachable_.assign(rows_ * cols_, 0);
    reachable_count_ = 0;
    for (const GridCell& c : reachable_free_cells(world, start_)) {
        reachable_[c.row * cols_ + c.col] = 1;
        ++reachable_count_;
    }
    // Walls may have moved; re-derive visibility from scratch.
    covered_.assign(rows_ * cols_, 0);
    for (const Pose& p : sensing_poses_) {
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) {
                if (!reachable_[r * cols_ + c] || covered_[r * cols_ + c]) continue;
                Vec2 center = world.cell_center({r, c});
                if (distance(p.position(), center) > max_range_) continue;
                if (line_of_sight(world, p.position(), center)) covered_[r * cols_ + c] = 1;
            }
    }
}

double CoverageTracker::add_sensing_pose(const World& world, const Pose& pose) {
    sensing_poses_.push_back(pose);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) {
            if (!reachable_[r * cols_ + c] || covered_[r * cols_ + c]) continue;
            Vec2 center = world.cell_center({r, c});
            if (distance(pose.position(), center) > max_range_) continue;
            if (line_of_sight(world, pose.position(), center)) covered_[r * cols_ + c] = 1;
        }
    return fraction();
}

double CoverageTracker::fraction() const {
    if (reachable_count_ == 0) return 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < covered_.size(); ++i)
        if (covered_[i] && reachable_[i]) ++n;
    return static_cast<double>(n) / static_cast<double>(reachable_count_);
}

}  // namespace topnav
