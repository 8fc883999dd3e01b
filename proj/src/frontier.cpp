#include "topnav/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "topnav/coverage.hpp"

namespace topnav {

OccupancyGrid::OccupancyGrid(std::size_t rows, std::size_t cols, double resolution)
    : rows_(rows), cols_(cols), resolution_(resolution) {
    cells_.assign(rows_ * cols_, OccStatus::Unknown);
}

void OccupancyGrid::update(const Pose& registered_pose, const LidarScan& scan) {
    const std::size_t rays = scan.ranges.size();
    auto clamp_cell = [&](double x, double y) -> std::optional<GridCell> {
        long long c = static_cast<long long>(std::floor(x / resolution_));
        long long r = static_cast<long long>(std::floor(y / resolution_));
        if (r < 0 || c < 0 || r >= static_cast<long long>(rows_) || c >= static_cast<long long>(cols_))
            return std::nullopt;
        return GridCell{static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
    };

    if (auto origin = clamp_cell(registered_pose.x, registered_pose.y))
        set_once(origin->row, origin->col, OccStatus::Free);

    for (std::size_t i = 0; i < rays; ++i) {
        double angle = scan.origin_yaw + kTwoPi * static_cast<double>(i) / static_cast<double>(rays);
        double range = scan.ranges[i];
        // Sample along the ray at sub-cell resolution; robust to registration
        // error, which is the point of consuming raw odometry.
        double step = resolution_ * 0.25;
        for (double t = step; t < range - 1e-9; t += step) {
            if (auto cell = clamp_cell(registered_pose.x + t * std::cos(angle),
                                       registered_pose.y + t * std::sin(angle)))
                set_once(cell->row, cell->col, OccStatus::Free);
        }
        if (range < scan.max_range - 1e-9) {
            double t = range + resolution_ * 0.01;
            if (auto cell = clamp_cell(registered_pose.x + t * std::cos(angle),
                                       registered_pose.y + t * std::sin(angle)))
                set_once(cell->row, cell->col, OccStatus::Occupied);
        }
    }
}

std::vector<GridCell> find_frontiers(const OccupancyGrid& grid) {
    const std::size_t rows = grid.rows();
    const std::size_t cols = grid.cols();
    auto is_frontier = [&](std::size_t r, std::size_t c) {
        if (grid.at(r, c) != OccStatus::Free) return false;
        const long long deltas[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (const auto& d : deltas) {
            long long rr = static_cast<long long>(r) + d[0];
            long long cc = static_cast<long long>(c) + d[1];
            if (rr < 0 || cc < 0 || rr >= static_cast<long long>(rows) ||
                cc >= static_cast<long long>(cols))
                continue;
            if (grid.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) ==
                OccStatus::Unknown)
                return true;
        }
        return false;
    };

    std::vector<std::uint8_t> seen(rows * cols, 0);
    std::vector<GridCell> reps;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (seen[r * cols + c] || !is_frontier(r, c)) continue;
            // Flood one 8-connected cluster.
            std::vector<GridCell> cluster;
            std::queue<GridCell> queue;
            queue.push({r, c});
            seen[r * cols + c] = 1;
            while (!queue.empty()) {
                GridCell cur = queue.front();
                queue.pop();
                cluster.push_back(cur);
                for (long long dr = -1; dr <= 1; ++dr)
                    for (long long dc = -1; dc <= 1; ++dc) {
                        if (dr == 0 && dc == 0) continue;
                        long long rr = static_cast<long long>(cur.row) + dr;
                        long long cc = static_cast<long long>(cur.col) + dc;
                        if (rr < 0 || cc < 0 || rr >= static_cast<long long>(rows) ||
                            cc >= static_cast<long long>(cols))
                            continue;
                        auto r2 = static_cast<std::size_t>(rr);
                        auto c2 = static_cast<std::size_t>(cc);
                        if (seen[r2 * cols + c2] || !is_frontier(r2, c2)) continue;
                        seen[r2 * cols + c2] = 1;
                        queue.push({r2, c2});
                    }
            }
            double mr = 0.0, mc = 0.0;
            for (const GridCell& cell : cluster) {
                mr += static_cast<double>(cell.row);
                mc += static_cast<double>(cell.col);
            }
            mr /= static_cast<double>(cluster.size());
            mc /= static_cast<double>(cluster.size());
            GridCell best = cluster.front();
            double best_d = std::numeric_limits<double>::infinity();
            for (const GridCell& cell : cluster) {
                double d = std::hypot(static_cast<double>(cell.row) - mr,
                                      static_cast<double>(cell.col) - mc);
                bool better = d < best_d - 1e-12 ||
                              (std::abs(d - best_d) <= 1e-12 &&
                               (cell.row < best.row ||
                                (cell.row == best.row && cell.col < best.col)));
                if (better) {
                    best = cell;
                    best_d = d;
                }
            }
            reps.push_back(best);
        }
    }
    return reps;
}

std::optional<std::vector<GridCell>> plan_to_frontier(const OccupancyGrid& grid, GridCell from) {
    std::vector<GridCell> targets = find_frontiers(grid);
    if (targets.empty()) return std::nullopt;
    const std::size_t rows = grid.rows();
    const std::size_t cols = grid.cols();

    std::vector<int> dist(rows * cols, -1);
    std::vector<std::size_t> parent(rows * cols, 0);
    std::queue<GridCell> queue;
    if (grid.at(from.row, from.col) != OccStatus::Free) return std::nullopt;
    dist[from.row * cols + from.col] = 0;
    queue.push(from);
    while (!queue.empty()) {
        GridCell cur = queue.front();
        queue.pop();
        const long long deltas[4][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
        for (const auto& d : deltas) {
            long long rr = static_cast<long long>(cur.row) + d[0];
            long long cc = static_cast<long long>(cur.col) + d[1];
            if (rr < 0 || cc < 0 || rr >= static_cast<long long>(rows) ||
                cc >= static_cast<long long>(cols))
                continue;
            auto r2 = static_cast<std::size_t>(rr);
            auto c2 = static_cast<std::size_t>(cc);
            if (dist[r2 * cols + c2] >= 0 || grid.at(r2, c2) != OccStatus::Free) continue;
            dist[r2 * cols + c2] = dist[cur.row * cols + cur.col] + 1;
            parent[r2 * cols + c2] = cur.row * cols + cur.col;
            queue.push({r2, c2});
        }
    }

    // Nearest reachable representative; ties toward lower (row, col).
    std::optional<GridCell> goal;
    int best = std::numeric_limits<int>::max();
    for (const GridCell& t : targets) {
        int d = dist[t.row * cols + t.col];
        if (d < 0) continue;
        if (d < best) {
            best = d;
            goal = t;
        }
    }
    if (!goal) return std::nullopt;

    std::vector<GridCell> path;
    std::size_t idx = goal->row * cols + goal->col;
    while (dist[idx] > 0) {
        path.push_back({idx / cols, idx % cols});
        idx = parent[idx];
    }
    std::reverse(path.begin(), path.end());
    return path;
}

EpisodeLog run_frontier_baseline(const BaselineConfig& config, const World& world_in,
                                 GridCell start) {
    World world = world_in;
    if (!world.is_traversable(start.row, start.col))
        throw WorldError("baseline start cell is not traversable");

    OccupancyGrid grid(world.rows(), world.cols(), world.cell_size());
    CoverageTracker tracker(world, start, config.lidar_max_range);
    OdometryState odom;

    Vec2 c0 = world.cell_center(start);
    Pose true_pose(c0.x, c0.y, 0.0);

    EpisodeLog log;
    double distance_travelled = 0.0;
    double coverage_max = 0.0;
    std::size_t fail_streak = 0;
    std::vector<GridCell> path;
    std::size_t step = 0;

    auto odom_pose = [&]() {
        return Pose(true_pose.x + odom.ax, true_pose.y + odom.ay, true_pose.yaw + odom.ayaw);
    };
    auto sense = [&]() {
        LidarScan scan = lidar_scan(world, true_pose, config.lidar_rays, config.lidar_max_range);
        grid.update(odom_pose(), scan);
        coverage_max = std::max(coverage_max, tracker.add_sensing_pose(world, true_pose));
    };

    sense();

    std::optional<TerminalReason> terminal;
    while (!terminal) {
        if (world.apply_obstacle_events(step) > 0) tracker.refresh(world);

        StepReport report;
        report.step = step;

        if (path.empty()) {
            Pose op = odom_pose();
            auto plan = plan_to_frontier(grid, world.cell_of(op.x, op.y));
            if (!plan || plan->empty()) {
                terminal = coverage_max >= config.coverage_target ? TerminalReason::CoverageReached
                                                                  : TerminalReason::MaxSteps;
                break;
            }
            path = std::move(*plan);
        }

        GridCell next = path.front();
        path.erase(path.begin());
        // The plan lives in the odometry frame; the robot executes the
        // relative displacement from wherever it truly is.
        Pose op = odom_pose();
        Vec2 target_map{(static_cast<double>(next.col) + 0.5) * world.cell_size(),
                        (static_cast<double>(next.row) + 0.5) * world.cell_size()};
        Pose target(true_pose.x + (target_map.x - op.x), true_pose.y + (target_map.y - op.y), 0.0);

        report.motion_attempted = true;
        MotionResult mr = execute_motion(world, true_pose, target, odom);
        report.motion_succeeded = mr.succeeded;
        if (mr.succeeded) {
            distance_travelled += distance(true_pose, mr.true_pose);
            true_pose = mr.true_pose;
            fail_streak = 0;
            sense();
        } else {
            ++fail_streak;
            path.clear();  // static planner: replan from the same map
        }

        report.true_pose = true_pose;
        report.believed_pose = odom_pose();
        report.odometry_pose = mr.odometry_pose;
        report.distance_travelled = distance_travelled;
        report.coverage = coverage_max;
        log.steps.push_back(report);
        ++step;

        if (coverage_max >= config.coverage_target) {
            terminal = TerminalReason::CoverageReached;
        } else if (fail_streak >= config.fail_limit) {
            terminal = TerminalReason::Stuck;
        } else if (step >= config.max_steps) {
            terminal = TerminalReason::MaxSteps;
        }
    }

    log.terminal = *terminal;
    log.final_coverage = coverage_max;
    log.distance_travelled = distance_travelled;
    log.stuck_events = log.terminal == TerminalReason::Stuck ? 1 : 0;
    return log;
}

}  // namespace topnav
