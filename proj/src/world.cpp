#include "topnav/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace topnav {

namespace {

using nlohmann::json;

int parse_cell_char(char ch, std::size_t row, std::size_t col) {
    if (ch == '#') return World::kWall;
    if (ch == '.') return 0;
    if (ch >= 'a' && ch <= 'z') return 1 + (ch - 'a');
    throw WorldError("unknown grid character '" + std::string(1, ch) + "' at row " +
                     std::to_string(row) + ", col " + std::to_string(col));
}

GridCell parse_cell_ref(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        throw WorldError(std::string(what) + " must be a [row, col] pair");
    long long r = j[0].get<long long>();
    long long c = j[1].get<long long>();
    if (r < 0 || c < 0) throw WorldError(std::string(what) + " out of bounds");
    return {static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
}

}  // namespace

World World::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw WorldError(std::string("world document parse failure: ") + e.what());
    }
    if (!doc.is_object()) throw WorldError("world document must be a JSON object");

    World w;
    w.cell_size_ = doc.value("cell_size", 0.5);
    if (!(w.cell_size_ > 0.0)) throw WorldError("cell_size must be positive");

    if (!doc.contains("grid") || !doc["grid"].is_array() || doc["grid"].empty())
        throw WorldError("grid must be a non-empty array of strings");
    const auto& grid = doc["grid"];
    w.rows_ = grid.size();
    w.cols_ = grid[0].get<std::string>().size();
    if (w.cols_ == 0) throw WorldError("grid rows must be non-empty strings");
    w.cells_.reserve(w.rows_ * w.cols_);
    for (std::size_t r = 0; r < w.rows_; ++r) {
        const std::string row = grid[r].get<std::string>();
        if (row.size() != w.cols_)
            throw WorldError("grid is not rectangular: row " + std::to_string(r) + " has " +
                             std::to_string(row.size()) + " cells, expected " +
                             std::to_string(w.cols_));
        for (std::size_t c = 0; c < w.cols_; ++c) w.cells_.push_back(parse_cell_char(row[c], r, c));
    }
    w.phantom_.assign(w.rows_ * w.cols_, 0);

    if (doc.contains("phantom_obstacles")) {
        for (const auto& j : doc["phantom_obstacles"]) {
            GridCell cell = parse_cell_ref(j, "phantom obstacle");
            if (!w.in_bounds(cell.row, cell.col) || w.is_wall(cell.row, cell.col))
                throw WorldError("phantom obstacle must sit on a free cell");
            w.phantom_[cell.row * w.cols_ + cell.col] = 1;
        }
    }

    if (doc.contains("obstacle_events")) {
        for (const auto& j : doc["obstacle_events"]) {
            ObstacleEvent ev;
            if (!j.is_object() || !j.contains("step"))
                throw WorldError("obstacle event must be {step, from, to}");
            ev.step = j["step"].get<std::size_t>();
            ev.from = parse_cell_ref(j.at("from"), "obstacle event 'from'");
            ev.to = parse_cell_ref(j.at("to"), "obstacle event 'to'");
            w.events_.push_back(ev);
        }
        std::stable_sort(w.events_.begin(), w.events_.end(),
                         [](const ObstacleEvent& a, const ObstacleEvent& b) { return a.step < b.step; });
    }

    if (doc.contains("drift")) {
        const auto& d = doc["drift"];
        w.drift_.dx = d.value("dx", 0.0);
        w.drift_.dy = d.value("dy", 0.0);
        w.drift_.dyaw = d.value("dyaw", 0.0);
    }

    w.validate();
    return w;
}

World World::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw WorldError("cannot open world file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

void World::validate() const {
    bool any_free = false;
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) {
            bool border = r == 0 || c == 0 || r + 1 == rows_ || c + 1 == cols_;
            if (border && !is_wall(r, c))
                throw WorldError("grid boundary must be wall (open at row " + std::to_string(r) +
                                 ", col " + std::to_string(c) + ")");
            if (!is_wall(r, c)) any_free = true;
        }
    if (!any_free) throw WorldError("grid has no free cells");

    // Replay the event schedule against a scratch copy so invalid scripts are
    // rejected at load time, not mid-episode.
    std::vector<int> scratch = cells_;
    auto wall_at = [&](GridCell c) { return scratch[c.row * cols_ + c.col] == kWall; };
    for (const auto& ev : events_) {
        if (!in_bounds(ev.from.row, ev.from.col) || !in_bounds(ev.to.row, ev.to.col))
            throw WorldError("obstacle event out of bounds");
        if (!wall_at(ev.from))
            throw WorldError("obstacle event at step " + std::to_string(ev.step) +
                             ": 'from' cell is not occupied when it fires");
        if (wall_at(ev.to))
            throw WorldError("obstacle event at step " + std::to_string(ev.step) +
                             ": 'to' cell is not free when it fires");
        bool border = ev.to.row == 0 || ev.to.col == 0 || ev.to.row + 1 == rows_ ||
                      ev.to.col + 1 == cols_;
        if (border) throw WorldError("obstacle event would open the boundary");
        scratch[ev.from.row * cols_ + ev.from.col] = 0;
        scratch[ev.to.row * cols_ + ev.to.col] = kWall;
    }
}

GridCell World::cell_of(double x, double y) const {
    auto clamp_idx = [](double v, std::size_t n) {
        long long i = static_cast<long long>(std::floor(v));
        if (i < 0) i = 0;
        if (i >= static_cast<long long>(n)) i = static_cast<long long>(n) - 1;
        return static_cast<std::size_t>(i);
    };
    return {clamp_idx(y / cell_size_, rows_), clamp_idx(x / cell_size_, cols_)};
}

std::size_t World::apply_obstacle_events(std::size_t step) {
    std::size_t fired = 0;
    for (const auto& ev : events_) {
        if (ev.step != step) continue;
        if (!is_wall(ev.from.row, ev.from.col))
            throw WorldError("obstacle event: 'from' cell is not occupied");
        if (is_wall(ev.to.row, ev.to.col))
            throw WorldError("obstacle event: 'to' cell is not free");
        cells_[ev.from.row * cols_ + ev.from.col] = 0;
        cells_[ev.to.row * cols_ + ev.to.col] = kWall;
        ++fired;
    }
    return fired;
}

std::size_t World::pending_events(std::size_t step) const {
    return static_cast<std::size_t>(
        std::count_if(events_.begin(), events_.end(),
                      [step](const ObstacleEvent& e) { return e.step >= step; }));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Amanatides-Woo traversal. `visit(r, c, t)` is called for every cell the ray
// enters, with t the entry distance; it returns true to stop. Exact corner
// crossings visit both side cells and the diagonal cell at the same t, which
// matches an inclusive ray/segment intersection rule.
template <typename Visit>
void walk_grid(const World& w, double ox, double oy, double angle, double t_limit, Visit&& visit) {
    const double cs = w.cell_size();
    const double dx = std::cos(angle);
    const double dy = std::sin(angle);
    GridCell cur = w.cell_of(ox, oy);
    long long r = static_cast<long long>(cur.row);
    long long c = static_cast<long long>(cur.col);
    const long long sr = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);
    const long long sc = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);

    double t_max_x = kInf, t_max_y = kInf, t_delta_x = kInf, t_delta_y = kInf;
    if (sc != 0) {
        double edge = (sc > 0 ? (static_cast<double>(c) + 1.0) : static_cast<double>(c)) * cs;
        t_max_x = (edge - ox) / dx;
        t_delta_x = cs / std::abs(dx);
    }
    if (sr != 0) {
        double edge = (sr > 0 ? (static_cast<double>(r) + 1.0) : static_cast<double>(r)) * cs;
        t_max_y = (edge - oy) / dy;
        t_delta_y = cs / std::abs(dy);
    }

    auto in = [&](long long rr, long long cc) {
        return rr >= 0 && cc >= 0 && rr < static_cast<long long>(w.rows()) &&
               cc < static_cast<long long>(w.cols());
    };

    while (true) {
        double t;
        if (t_max_x < t_max_y) {
            t = t_max_x;
            if (t > t_limit) return;
            c += sc;
            t_max_x += t_delta_x;
            if (!in(r, c)) return;
            if (visit(static_cast<std::size_t>(r), static_cast<std::size_t>(c), t)) return;
        } else if (t_max_y < t_max_x) {
            t = t_max_y;
            if (t > t_limit) return;
            r += sr;
            t_max_y += t_delta_y;
            if (!in(r, c)) return;
            if (visit(static_cast<std::size_t>(r), static_cast<std::size_t>(c), t)) return;
        } else {
            // Exact corner crossing.
            t = t_max_x;
            if (t > t_limit || t == kInf) return;
            long long r2 = r + sr, c2 = c + sc;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
            if (in(r, c2) && visit(static_cast<std::size_t>(r), static_cast<std::size_t>(c2), t))
                return;
            if (in(r2, c) && visit(static_cast<std::size_t>(r2), static_cast<std::size_t>(c), t))
                return;
            r = r2;
            c = c2;
            if (!in(r, c)) return;
            if (visit(static_cast<std::size_t>(r), static_cast<std::size_t>(c), t)) return;
        }
    }
}

}  // namespace

RayHit cast_ray(const World& world, double ox, double oy, double angle, double max_range) {
    GridCell origin = world.cell_of(ox, oy);
    if (world.is_wall(origin.row, origin.col))
        throw WorldError("ray origin lies inside a wall cell");
    RayHit out;
    out.range = max_range;
    out.hit = false;
    out.last_free = origin;
    GridCell prev = origin;
    walk_grid(world, ox, oy, angle, max_range, [&](std::size_t r, std::size_t c, double t) {
        if (world.is_wall(r, c)) {
            out.range = std::min(t, max_range);
            out.hit = t <= max_range;
            out.last_free = prev;
            return true;
        }
        prev = {r, c};
        return false;
    });
    return out;
}

LidarScan lidar_scan(const World& world, const Pose& pose, std::size_t rays, double max_range) {
    LidarScan scan;
    scan.max_range = max_range;
    scan.origin_yaw = pose.yaw;
    scan.ranges.resize(rays);
    for (std::size_t i = 0; i < rays; ++i) {
        double angle = pose.yaw + kTwoPi * static_cast<double>(i) / static_cast<double>(rays);
        scan.ranges[i] = cast_ray(world, pose.x, pose.y, angle, max_range).range;
    }
    return scan;
}

ObservationSignature panorama_signature(const World& world, const Pose& pose, std::size_t rays,
                                        double max_range) {
    ObservationSignature sig;
    sig.depth.resize(rays);
    sig.appearance.resize(rays);
    for (std::size_t i = 0; i < rays; ++i) {
        double angle = kTwoPi * static_cast<double>(i) / static_cast<double>(rays);
        RayHit hit = cast_ray(world, pose.x, pose.y, angle, max_range);
        sig.depth[i] = hit.range / max_range;
        sig.appearance[i] = hit.hit ? world.label(hit.last_free.row, hit.last_free.col) : 0;
    }
    return sig;
}

std::optional<GridCell> segment_blocked(const World& world, Vec2 from, Vec2 to) {
    double len = distance(from, to);
    std::optional<GridCell> blocked;
    if (len < 1e-12) {
        GridCell c = world.cell_of(from.x, from.y);
        if (!world.is_traversable(c.row, c.col)) blocked = c;
        return blocked;
    }
    double angle = std::atan2(to.y - from.y, to.x - from.x);
    walk_grid(world, from.x, from.y, angle, len, [&](std::size_t r, std::size_t c, double) {
        if (!world.is_traversable(r, c)) {
            blocked = GridCell{r, c};
            return true;
        }
        return false;
    });
    return blocked;
}

bool line_of_sight(const World& world, Vec2 from, Vec2 to) {
    double len = distance(from, to);
    if (len < 1e-12) return true;
    double angle = std::atan2(to.y - from.y, to.x - from.x);
    bool clear = true;
    // Stop a hair short of the target so a target cell flush against a wall is
    // not counted as occluded by itself.
    walk_grid(world, from.x, from.y, angle, len - 1e-9, [&](std::size_t r, std::size_t c, double) {
        if (world.is_wall(r, c)) {
            clear = false;
            return true;
        }
        return false;
    });
    return clear;
}

MotionResult execute_motion(const World& world, const Pose& from, const Pose& target,
                            OdometryState& odom) {
    GridCell start = world.cell_of(from.x, from.y);
    if (!world.is_free(start.row, start.col))
        throw WorldError("motion start lies inside a wall cell");

    MotionResult result;
    auto blocked = segment_blocked(world, from.position(), target.position());
    if (blocked) {
        result.succeeded = false;
        result.true_pose = from;
        result.blocked_at = *blocked;
    } else {
        result.succeeded = true;
        result.true_pose = target;
        const DriftProfile& d = world.drift();
        odom.ax += d.dx;
        odom.ay += d.dy;
        odom.ayaw += d.dyaw;
    }
    result.odometry_pose = Pose(result.true_pose.x + odom.ax, result.true_pose.y + odom.ay,
                                result.true_pose.yaw + odom.ayaw);
    return result;
}

}  // namespace topnav
