#pragma once

#include <optional>
#include <vector>

#include "topnav/agent.hpp"
#include "topnav/world.hpp"

namespace topnav {

enum class OccStatus : std::uint8_t { Unknown, Free, Occupied };

/// Static occupancy map built from registered scans. Cells transition from
/// Unknown exactly once; later contradicting evidence is ignored, which is
/// the classic static-map weakness under drift and moving obstacles.
class OccupancyGrid {
public:
    OccupancyGrid(std::size_t rows, std::size_t cols, double resolution);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double resolution() const { return resolution_; }

    OccStatus at(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }

    /// Carve one scan into the map: traversed cells become Free, terminal
    /// cells (hits short of max range) become Occupied.
    void update(const Pose& registered_pose, const LidarScan& scan);

private:
    void set_once(std::size_t r, std::size_t c, OccStatus v) {
        OccStatus& cell = cells_[r * cols_ + c];
        if (cell == OccStatus::Unknown) cell = v;
    }

    std::size_t rows_;
    std::size_t cols_;
    double resolution_;
    std::vector<OccStatus> cells_;
};

/// Representatives of the frontier clusters: free cells 4-adjacent to unknown
/// space, clustered by 8-connectivity; each cluster is reported as the member
/// cell nearest its centroid (ties toward lower row, then column).
std::vector<GridCell> find_frontiers(const OccupancyGrid& grid);

/// Shortest 4-connected path through Free cells from `from` to the nearest
/// frontier representative. Empty optional when no frontier is reachable.
std::optional<std::vector<GridCell>> plan_to_frontier(const OccupancyGrid& grid, GridCell from);

struct BaselineConfig {
    std::size_t lidar_rays = 36;
    double lidar_max_range = 12.0;
    std::size_t max_steps = 4000;
    std::size_t fail_limit = 10;  // consecutive failed motions before giving up
    double coverage_target = 0.95;
};

/// Nearest-frontier exploration in the same simulator, consuming raw
/// odometry. Produces the same episode-log schema as the agent.
EpisodeLog run_frontier_baseline(const BaselineConfig& config, const World& world, GridCell start);

}  // namespace topnav
