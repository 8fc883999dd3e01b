#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "topnav/geometry.hpp"

namespace topnav {

struct WorldError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridCell {
    std::size_t row = 0;
    std::size_t col = 0;
    bool operator==(const GridCell&) const = default;
};

/// A scripted wall relocation: at step `step` the wall at `from` vanishes and
/// `to` becomes a wall.
struct ObstacleEvent {
    std::size_t step = 0;
    GridCell from;
    GridCell to;
};

/// Per-motion odometry bias. Accumulates on every successful motion.
struct DriftProfile {
    double dx = 0.0;
    double dy = 0.0;
    double dyaw = 0.0;
};

struct LidarScan {
    std::vector<double> ranges;  // meters, length == ray count
    double max_range = 12.0;
    double origin_yaw = 0.0;  // world angle of ray 0
};

/// Fixed-length panoramic range + appearance vector. Ray i points at world
/// angle 2*pi*i/R regardless of agent yaw, so stored signatures can be
/// compared without de-rotation.
struct ObservationSignature {
    std::vector<double> depth;        // range / max_range, in (0, 1]
    std::vector<int> appearance;      // label seen along each ray, 0 at max range
};

struct MotionResult {
    bool succeeded = false;
    Pose true_pose;       // ground truth; hidden from the agent
    Pose odometry_pose;   // true pose plus accumulated drift
    std::optional<GridCell> blocked_at;
};

/// 2D grid world. Walls block rays and motion; "phantom" cells block motion
/// only (stand-ins for obstacles the lidar cannot see, like a curved chair
/// base). Free cells carry a small appearance label.
class World {
public:
    static constexpr int kWall = -1;

    World() = default;

    /// Parse the world description document (JSON text). Validates the grid,
    /// the boundary and every obstacle event.
    static World from_json_text(const std::string& text);
    static World load(const std::string& path);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double cell_size() const { return cell_size_; }
    const DriftProfile& drift() const { return drift_; }
    const std::vector<ObstacleEvent>& obstacle_events() const { return events_; }

    bool in_bounds(std::size_t r, std::size_t c) const { return r < rows_ && c < cols_; }
    bool is_wall(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c] == kWall; }
    bool is_free(std::size_t r, std::size_t c) const { return !is_wall(r, c); }
    bool is_phantom(std::size_t r, std::size_t c) const { return phantom_[r * cols_ + c] != 0; }
    /// A cell the robot can occupy: free and not a phantom obstacle.
    bool is_traversable(std::size_t r, std::size_t c) const {
        return is_free(r, c) && !is_phantom(r, c);
    }
    int label(std::size_t r, std::size_t c) const {
        int v = cells_[r * cols_ + c];
        return v < 0 ? 0 : v;
    }

    GridCell cell_of(double x, double y) const;
    Vec2 cell_center(GridCell c) const {
        return {(static_cast<double>(c.col) + 0.5) * cell_size_,
                (static_cast<double>(c.row) + 0.5) * cell_size_};
    }

    /// Apply every obstacle event scheduled at `step`. Returns how many fired.
    std::size_t apply_obstacle_events(std::size_t step);

    /// Number of events with step >= `step` (still pending).
    std::size_t pending_events(std::size_t step) const;

private:
    void validate() const;

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    double cell_size_ = 0.5;
    std::vector<int> cells_;          // kWall or appearance label 0..26
    std::vector<std::uint8_t> phantom_;
    std::vector<ObstacleEvent> events_;
    DriftProfile drift_;
};

struct RayHit {
    double range = 0.0;   // meters, capped at max_range
    bool hit = false;     // false when capped
    GridCell last_free;   // cell the ray occupied when it struck the wall
};

/// March a ray through the grid, returning the distance to the first wall
/// boundary (capped at max_range). Phantom cells are transparent.
RayHit cast_ray(const World& world, double ox, double oy, double angle, double max_range);

/// R evenly spaced rays starting at world angle pose.yaw.
LidarScan lidar_scan(const World& world, const Pose& pose, std::size_t rays, double max_range);

/// World-frame panorama: ray i at world angle 2*pi*i/R.
ObservationSignature panorama_signature(const World& world, const Pose& pose, std::size_t rays,
                                        double max_range);

/// Odometry bookkeeping for a run. `accumulated` grows by the world's drift
/// profile on every successful motion.
struct OdometryState {
    double ax = 0.0;
    double ay = 0.0;
    double ayaw = 0.0;
};

/// Straight-line motion. Atomic: if any swept cell blocks motion the pose is
/// unchanged and blocked_at names the offending cell.
MotionResult execute_motion(const World& world, const Pose& from, const Pose& target,
                            OdometryState& odom);

/// First motion-blocking cell on the open segment (from -> to), if any.
std::optional<GridCell> segment_blocked(const World& world, Vec2 from, Vec2 to);

/// True when no wall cell interrupts the segment (phantom cells and the
/// endpoints' own cells do not count). Used by the coverage metric.
bool line_of_sight(const World& world, Vec2 from, Vec2 to);

}  // namespace topnav
