#include "topnav/map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace topnav {

using nlohmann::json;

std::size_t TopoMap::visited_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(),
                      [](const TopoNode& n) { return n.status == NodeStatus::Visited; }));
}

std::optional<std::size_t> TopoMap::node_at(const GenerativeModel& model, const Pose& pose) const {
    std::optional<std::size_t> best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        double d = distance(model.pose_of(nodes_[i].position_id), pose);
        if (d <= config_.influence_radius && d < best_dist) {
            best = i;
            best_dist = d;
        }
    }
    return best;
}

std::optional<std::size_t> TopoMap::node_of_state(std::size_t state) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].state_id && *nodes_[i].state_id == state) return i;
    return std::nullopt;
}

std::optional<MatchResult> TopoMap::match_observation(
    const GenerativeModel& model, const ObservationSignature& signature) const {
    std::optional<MatchResult> best;
    for (std::size_t cls = 0; cls < model.num_observation_classes(); ++cls) {
        double score = similarity(signature, model.prototype(cls));
        if (!best || score > best->score) best = MatchResult{cls, score};
    }
    if (!best || best->score < config_.match_threshold) return std::nullopt;
    return best;
}

std::size_t TopoMap::add_visited_node(GenerativeModel& model, const Pose& pose,
                                      std::size_t obs_class) {
    std::size_t pos = model.add_position(pose);
    std::size_t state = model.grow_state(pos);
    nodes_.push_back(TopoNode{pos, state, NodeStatus::Visited, obs_class});
    return nodes_.size() - 1;
}

void TopoMap::mark_visited(std::size_t node_id, std::size_t obs_class) {
    TopoNode& n = nodes_.at(node_id);
    n.status = NodeStatus::Visited;
    n.observation_class = obs_class;
}

double heading_clearance(const ObservationSignature& sig, double max_range, double bisector,
                         std::size_t sector_count) {
    const std::size_t rays = sig.depth.size();
    const double half_window = std::numbers::pi / (2.0 * static_cast<double>(sector_count));
    double best = std::numeric_limits<double>::infinity();
    double nearest_delta = std::numeric_limits<double>::infinity();
    double nearest_range = max_range;
    for (std::size_t i = 0; i < rays; ++i) {
        double angle = kTwoPi * static_cast<double>(i) / static_cast<double>(rays);
        double delta = std::abs(std::remainder(angle - bisector, kTwoPi));
        double range = sig.depth[i] * max_range;
        if (delta <= half_window) best = std::min(best, range);
        if (delta < nearest_delta) {
            nearest_delta = delta;
            nearest_range = range;
        }
    }
    return std::isinf(best) ? nearest_range : best;
}

std::vector<std::size_t> TopoMap::expand_hypothetical(GenerativeModel& model,
                                                      const ObservationSignature& signature,
                                                      double max_range,
                                                      const Pose& believed_pose) {
    const ActionSpace& actions = model.actions();
    const double radius = config_.influence_radius;
    std::vector<std::size_t> created;

    std::optional<std::size_t> origin = node_at(model, believed_pose);

    for (std::size_t sector = 0; sector < actions.sector_count; ++sector) {
        const double bis = actions.bisector(sector);
        const double clearance =
            std::min(heading_clearance(signature, max_range, bis, actions.sector_count), max_range);
        const Vec2 dir{std::cos(bis), std::sin(bis)};

        std::optional<std::size_t> chain = origin;
        for (std::size_t k = 1; static_cast<double>(k) * radius < clearance; ++k) {
            Vec2 cand = believed_pose.position() + (static_cast<double>(k) * radius) * dir;
            Pose cand_pose(cand.x, cand.y, 0.0);

            // Nearest node of any distance; reuse it when the candidate would
            // crowd it, otherwise grow a fresh hypothetical node.
            std::optional<std::size_t> nearest;
            double nearest_dist = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < nodes_.size(); ++i) {
                double d = distance(model.pose_of(nodes_[i].position_id), cand_pose);
                if (d < nearest_dist) {
                    nearest = i;
                    nearest_dist = d;
                }
            }

            std::size_t link;
            if (nearest && nearest_dist < radius * (1.0 - 1e-9)) {
                link = *nearest;
            } else {
                std::size_t pos = model.add_position(cand_pose);
                std::size_t state = model.grow_state(pos);
                nodes_.push_back(TopoNode{pos, state, NodeStatus::Hypothetical, std::nullopt});
                link = nodes_.size() - 1;
                created.push_back(link);
            }

            if (chain && *chain != link && nodes_[*chain].state_id && nodes_[link].state_id) {
                std::size_t from = *nodes_[*chain].state_id;
                std::size_t to = *nodes_[link].state_id;
                model.seed_transition({from, to, sector}, config_.passage_seed);
                model.seed_transition({to, from, actions.opposite(sector)}, config_.passage_seed);
            }
            chain = link;
        }
    }
    return created;
}

BeliefState TopoMap::relocalise(const GenerativeModel& model,
                                std::span<const RecentView> window) const {
    if (window.size() < config_.relocalise_window)
        throw ModelError("relocalise: window shorter than configured");
    const std::size_t S = model.num_states();
    if (S == 0) throw ModelError("relocalise on an empty model");

    const CountMatrix obs = normalized(model.a_o());
    std::vector<double> belief(S, 1.0 / static_cast<double>(S));
    for (const RecentView& view : window) {
        const CountMatrix trans = normalized(model.b_s(view.action));
        std::vector<double> next(S, 0.0);
        for (std::size_t s = 0; s < S; ++s) {
            double v = 0.0;
            for (std::size_t sp = 0; sp < S; ++sp) v += trans.at(s, sp) * belief[sp];
            if (view.obs_class) v *= obs.at(*view.obs_class, s);
            next[s] = v;
        }
        double total = std::accumulate(next.begin(), next.end(), 0.0);
        if (total <= 0.0) throw ModelError("relocalise: vanished belief");
        for (double& v : next) v /= total;
        belief = std::move(next);
    }

    BeliefState out;
    out.q_s = std::move(belief);
    const std::size_t P = model.num_positions();
    const CountMatrix pos = normalized(model.a_p());
    out.q_p.assign(P, 0.0);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t s = 0; s < S; ++s) out.q_p[p] += pos.at(p, s) * out.q_s[s];
    auto best = std::max_element(out.q_p.begin(), out.q_p.end());
    out.believed_pose =
        model.pose_of(static_cast<std::size_t>(std::distance(out.q_p.begin(), best)));
    return out;
}

std::string TopoMap::to_json_text() const {
    json nodes = json::array();
    for (const auto& n : nodes_) {
        json jn;
        jn["position"] = n.position_id;
        if (n.state_id) jn["state"] = *n.state_id;
        jn["visited"] = n.status == NodeStatus::Visited;
        if (n.observation_class) jn["class"] = *n.observation_class;
        nodes.push_back(jn);
    }
    json j;
    j["config"] = {{"influence_radius", config_.influence_radius},
                   {"match_threshold", config_.match_threshold},
                   {"confidence_threshold", config_.confidence_threshold},
                   {"relocalise_window", config_.relocalise_window},
                   {"passage_seed", config_.passage_seed}};
    j["nodes"] = nodes;
    return j.dump();
}

TopoMap TopoMap::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ModelError(std::string("map parse failure: ") + e.what());
    }
    MapConfig cfg;
    const auto& jc = j.at("config");
    cfg.influence_radius = jc.at("influence_radius").get<double>();
    cfg.match_threshold = jc.at("match_threshold").get<double>();
    cfg.confidence_threshold = jc.at("confidence_threshold").get<double>();
    cfg.relocalise_window = jc.at("relocalise_window").get<std::size_t>();
    cfg.passage_seed = jc.at("passage_seed").get<double>();
    TopoMap map(cfg);
    for (const auto& jn : j.at("nodes")) {
        TopoNode n;
        n.position_id = jn.at("position").get<std::size_t>();
        if (jn.contains("state")) n.state_id = jn.at("state").get<std::size_t>();
        n.status = jn.at("visited").get<bool>() ? NodeStatus::Visited : NodeStatus::Hypothetical;
        if (jn.contains("class")) n.observation_class = jn.at("class").get<std::size_t>();
        map.nodes_.push_back(n);
    }
    return map;
}

bool TopoMap::operator==(const TopoMap& other) const {
    if (nodes_.size() != other.nodes_.size()) return false;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const TopoNode& a = nodes_[i];
        const TopoNode& b = other.nodes_[i];
        if (a.position_id != b.position_id || a.state_id != b.state_id || a.status != b.status ||
            a.observation_class != b.observation_class)
            return false;
    }
    return config_.influence_radius == other.config_.influence_radius &&
           config_.match_threshold == other.config_.match_threshold &&
           config_.confidence_threshold == other.config_.confidence_threshold &&
           config_.relocalise_window == other.config_.relocalise_window &&
           config_.passage_seed == other.config_.passage_seed;
}

}  // namespace topnav
