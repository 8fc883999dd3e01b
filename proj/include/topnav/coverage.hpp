#pragma once

#include <vector>

#include "topnav/world.hpp"

namespace topnav {

/// Tracks which reachable free cells have been sensed: a cell counts as
/// covered once some sensing pose had it within max_range line-of-sight.
/// Shared by the agent and the frontier baseline so their curves compare the
/// same quantity.
class CoverageTracker {
public:
    CoverageTracker(const World& world, GridCell start, double max_range);

    /// Mark everything visible from `pose` as covered. Returns the fraction.
    double add_sensing_pose(const World& world, const Pose& pose);

    /// Recompute reachability after the world changed (obstacle event).
    void refresh(const World& world);

    double fraction() const;
    std::size_t reachable_count() const { return reachable_count_; }

private:
    bool reachable_at(std::size_t r, std::size_t c) const { return reachable_[r * cols_ + c]; }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    double max_range_;
    GridCell start_;
    std::vector<std::uint8_t> reachable_;
    std::vector<std::uint8_t> covered_;
    std::size_t reachable_count_ = 0;
    std::vector<Pose> sensing_poses_;
};

/// Free cells 4-connected to `start` through traversable cells.
std::vector<GridCell> reachable_free_cells(const World& world, GridCell start);

}  // namespace topnav
