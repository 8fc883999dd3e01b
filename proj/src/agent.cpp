#include "topnav/agent.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace topnav {

const char* to_string(TerminalReason r) {
    switch (r) {
        case TerminalReason::CoverageReached: return "CoverageReached";
        case TerminalReason::GoalReached: return "GoalReached";
        case TerminalReason::MaxSteps: return "MaxSteps";
        case TerminalReason::Stuck: return "Stuck";
    }
    return "Unknown";
}

namespace {

Preferences exploration_prefs(const Preferences& base) {
    Preferences p;
    p.exploration_weight = base.exploration_weight > 0.0 ? base.exploration_weight : 1.0;
    p.utility_weight = 0.0;
    p.collision_weight = base.collision_weight;
    return p;
}

std::size_t argmax(const std::vector<double>& v) {
    return static_cast<std::size_t>(
        std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

}  // namespace

Agent::Agent(AgentConfig config, World world, GridCell start)
    : config_(config),
      world_(std::move(world)),
      model_(config.actions, config.count_floor, config.rates),
      map_(config.map),
      tracker_(world_, start, config.lidar_max_range),
      last_action_(config.actions.include_stay ? config.actions.stay_action() : 0) {
    init_start(start);
}

Agent::Agent(AgentConfig config, World world, GridCell start, GenerativeModel prior_model,
             TopoMap prior_map)
    : config_(config),
      world_(std::move(world)),
      model_(std::move(prior_model)),
      map_(std::move(prior_map)),
      tracker_(world_, start, config.lidar_max_range),
      last_action_(config.actions.include_stay ? config.actions.stay_action() : 0) {
    init_start(start);
}

void Agent::init_start(GridCell start) {
    if (!world_.is_traversable(start.row, start.col))
        throw WorldError("agent start cell is not traversable");
    Vec2 c = world_.cell_center(start);
    true_pose_ = Pose(c.x, c.y, 0.0);
    belief_.believed_pose = true_pose_;

    if (model_.num_states() > 0) {
        auto node = map_.node_at(model_, true_pose_);
        if (!node || !map_.node(*node).state_id)
            throw ModelError("prior map has no node at the start cell");
        current_node_ = node;
        belief_.q_s.assign(model_.num_states(), 0.0);
        belief_.q_s[*map_.node(*node).state_id] = 1.0;
        belief_.q_p.assign(model_.num_positions(), 0.0);
        belief_.q_p[map_.node(*node).position_id] = 1.0;
        belief_.believed_pose = model_.pose_of(map_.node(*node).position_id);
    }

    if (config_.mode == AgentMode::GoalSignature) {
        if (!config_.goal_signature && !config_.prefs.goal_class)
            throw ModelError("goal-signature mode requires a goal signature");
        // Is the goal familiar already?
        if (config_.prefs.goal_class) {
            resolved_goal_class_ = config_.prefs.goal_class;
        } else {
            double best = 0.0;
            for (std::size_t cls = 0; cls < model_.num_observation_classes(); ++cls) {
                double s = similarity(*config_.goal_signature, model_.prototype(cls));
                if (s > best) {
                    best = s;
                    resolved_goal_class_ = cls;
                }
            }
            if (best < config_.map.match_threshold) resolved_goal_class_.reset();
        }
    } else if (config_.mode == AgentMode::GoalPosition) {
        if (!config_.prefs.goal_position)
            throw ModelError("goal-position mode requires a goal position");
        if (*config_.prefs.goal_position >= model_.num_positions())
            throw ModelError("goal position does not exist in the prior model");
    }
}

bool Agent::goal_engaged() const {
    if (config_.mode == AgentMode::GoalPosition) return true;
    if (config_.mode == AgentMode::GoalSignature) return resolved_goal_class_.has_value();
    return false;
}

/// Breadth-first hop count over edges carrying evidence above the floor,
/// scaled by the influence radius: the agent's own estimate of how far the
/// goal is through the learned graph.
bool Agent::goal_within_horizon() const {
    const std::size_t S = model_.num_states();
    std::size_t src = argmax(belief_.q_s);

    std::vector<std::size_t> goal_states;
    for (const TopoNode& n : map_.nodes()) {
        if (!n.state_id) continue;
        if (config_.mode == AgentMode::GoalSignature) {
            if (n.observation_class && resolved_goal_class_ &&
                *n.observation_class == *resolved_goal_class_)
                goal_states.push_back(*n.state_id);
        } else if (config_.mode == AgentMode::GoalPosition) {
            if (n.position_id == *config_.prefs.goal_position) goal_states.push_back(*n.state_id);
        }
    }
    if (goal_states.empty()) return false;

    const double floor = model_.count_floor();
    auto max_hops = static_cast<std::size_t>(
        std::floor(config_.plan.horizon_m / config_.map.influence_radius));
    std::vector<int> dist(S, -1);
    std::queue<std::size_t> queue;
    queue.push(src);
    dist[src] = 0;
    while (!queue.empty()) {
        std::size_t s = queue.front();
        queue.pop();
        if (static_cast<std::size_t>(dist[s]) >= max_hops) continue;
        for (std::size_t a = 0; a < model_.actions().sector_count; ++a) {
            const CountMatrix& slab = model_.b_s(a);
            for (std::size_t next = 0; next < S; ++next) {
                if (dist[next] >= 0 || slab.at(next, s) <= floor + 0.5) continue;
                dist[next] = dist[s] + 1;
                queue.push(next);
            }
        }
    }
    for (std::size_t g : goal_states)
        if (dist[g] >= 0) return true;
    return false;
}

/// Where the learned graph says action `action` leads from `state`: the
/// above-floor transition target with the most evidence.
std::optional<std::size_t> Agent::motion_target(std::size_t state, std::size_t action) const {
    const CountMatrix& slab = model_.b_s(action);
    const double floor = model_.count_floor();
    std::optional<std::size_t> best;
    double best_excess = 1e-9;
    for (std::size_t next = 0; next < model_.num_states(); ++next) {
        if (next == state) continue;
        double excess = slab.at(next, state) - floor;
        if (excess > best_excess) {
            best = next;
            best_excess = excess;
        }
    }
    return best;
}

bool Agent::goal_reached() const {
    if (!current_node_) return false;
    const TopoNode& n = map_.node(*current_node_);
    if (state_confidence(belief_) < config_.map.confidence_threshold) return false;
    if (n.status != NodeStatus::Visited) return false;
    if (config_.mode == AgentMode::GoalSignature)
        return resolved_goal_class_ && n.observation_class &&
               *n.observation_class == *resolved_goal_class_;
    if (config_.mode == AgentMode::GoalPosition)
        return n.position_id == *config_.prefs.goal_position;
    return false;
}

void Agent::stuck_recovery(std::size_t state, StepReport& report) {
    for (std::size_t a = 0; a < model_.actions().sector_count; ++a) {
        auto target = motion_target(state, a);
        if (!target) continue;
        TransitionEdge edge{state, *target, a};
        model_.update_transition(
            edge,
            {TransitionDirection::Forward, TransitionFeasibility::Impossible,
             TransitionEvidence::Predicted},
            1.0, 1.0);
        report.transition_updates += 1;
        predicted_verdict_[{state, *target, a}] = true;
    }
    fail_streak_ = 0;
    ++stuck_events_;
    report.stuck_event = true;
}

StepReport Agent::step(std::optional<std::size_t> forced_action) {
    if (terminal_) throw ModelError("episode already terminated");

    StepReport report;
    report.step = step_index_;

    // Scripted world changes fire before the agent senses anything.
    if (world_.apply_obstacle_events(step_index_) > 0) tracker_.refresh(world_);

    // (1) acquire the panorama.
    ObservationSignature signature =
        panorama_signature(world_, true_pose_, config_.lidar_rays, config_.lidar_max_range);

    // (2) compare against stored memories.
    std::optional<MatchResult> match = map_.match_observation(model_, signature);

    bool cold_start = map_.size() == 0;
    std::size_t position_evidence = 0;
    if (cold_start) {
        std::size_t cls = model_.grow_observation_class(signature, config_.map.match_threshold);
        std::size_t node = map_.add_visited_node(model_, belief_.believed_pose, cls);
        const TopoNode& n = map_.node(node);
        model_.add_observation_evidence(cls, *n.state_id, config_.observation_evidence);
        current_node_ = node;
        position_evidence = n.position_id;
        belief_.q_s.assign(model_.num_states(), 0.0);
        belief_.q_s[*n.state_id] = 1.0;
        belief_.q_p.assign(model_.num_positions(), 0.0);
        belief_.q_p[n.position_id] = 1.0;
        tracker_.add_sensing_pose(world_, model_.pose_of(n.position_id));
        report.observation_class = cls;
    } else {
        // (3) infer the state from observation, position and previous belief.
        auto here = map_.node_at(model_, belief_.believed_pose);
        if (here) current_node_ = here;
        position_evidence =
            current_node_ ? map_.node(*current_node_).position_id : std::size_t{0};
        belief_.q_s.resize(model_.num_states(), 0.0);
        std::optional<std::size_t> obs_class;
        if (match) obs_class = match->class_id;
        belief_ = model_.infer_state(belief_, last_action_, obs_class, position_evidence);
        report.observation_class = obs_class;
    }

    report.confidence = state_confidence(belief_);
    std::size_t believed_state = argmax(belief_.q_s);

    // (4) confidence gate: grow evidence, or prioritise re-localising.
    if (!cold_start) {
        if (report.confidence >= config_.map.confidence_threshold) {
            relocalising_ = false;
            recent_views_.clear();
            std::optional<std::size_t> cls;
            if (match) {
                cls = match->class_id;
            } else {
                cls = model_.grow_observation_class(signature, config_.map.match_threshold,
                                                    believed_state);
                report.observation_class = cls;
            }
            if (match) model_.add_observation_evidence(*cls, believed_state,
                                                       config_.observation_evidence);
            model_.add_position_evidence(position_evidence, believed_state);
            if (current_node_ && map_.node(*current_node_).status == NodeStatus::Hypothetical) {
                map_.mark_visited(*current_node_, *cls);
                tracker_.add_sensing_pose(world_,
                                          model_.pose_of(map_.node(*current_node_).position_id));
            }
        } else {
            relocalising_ = true;
        }
    }

    if (relocalising_) {
        recent_views_.push_back({last_action_, match ? std::optional(match->class_id) : std::nullopt});
        while (recent_views_.size() > config_.map.relocalise_window) recent_views_.pop_front();
        if (recent_views_.size() == config_.map.relocalise_window) {
            std::vector<RecentView> window(recent_views_.begin(), recent_views_.end());
            BeliefState candidate = map_.relocalise(model_, window);
            if (state_confidence(candidate) >= config_.map.confidence_threshold) {
                belief_ = candidate;
                believed_state = argmax(belief_.q_s);
                current_node_ = map_.node_at(model_, belief_.believed_pose);
                relocalising_ = false;
                recent_views_.clear();
                report.confidence = state_confidence(belief_);
            }
        }
    }
    report.relocalising = relocalising_;

    // Goal bookkeeping: resolve a previously unfamiliar goal signature the
    // moment it matches the current memory, then check arrival.
    if (config_.mode == AgentMode::GoalSignature && !resolved_goal_class_ &&
        config_.goal_signature) {
        for (std::size_t cls = 0; cls < model_.num_observation_classes(); ++cls) {
            if (similarity(*config_.goal_signature, model_.prototype(cls)) >=
                config_.map.match_threshold) {
                resolved_goal_class_ = cls;
                break;
            }
        }
    }
    if (goal_engaged() && goal_reached()) {
        report.believed_pose = belief_.believed_pose;
        report.true_pose = true_pose_;
        report.odometry_pose =
            Pose(true_pose_.x + odom_.ax, true_pose_.y + odom_.ay, true_pose_.yaw + odom_.ayaw);
        report.node_id = current_node_;
        report.distance_travelled = distance_;
        coverage_max_ = std::max(coverage_max_, tracker_.fraction());
        report.coverage = coverage_max_;
        terminal_ = TerminalReason::GoalReached;
        ++step_index_;
        reports_.push_back(report);
        return report;
    }

    // (5) expand the frontier of imagined places.
    if (!relocalising_) {
        auto created = map_.expand_hypothetical(model_, signature, config_.lidar_max_range,
                                                belief_.believed_pose);
        report.new_nodes = created.size();
        belief_.q_s.resize(model_.num_states(), 0.0);
        belief_.q_p.resize(model_.num_positions(), 0.0);
    }

    // (6) plan.
    bool goal_directed = goal_engaged() && goal_within_horizon();
    Preferences prefs = goal_directed ? config_.prefs : exploration_prefs(config_.prefs);
    if (goal_directed && config_.mode == AgentMode::GoalSignature)
        prefs.goal_class = resolved_goal_class_;
    std::size_t action;
    PlanConfig plan = config_.plan;
    plan.rng_seed = config_.plan.rng_seed + 0x9e3779b97f4a7c15ULL * (step_index_ + 1);
    if (forced_action) {
        action = *forced_action;
        if (action >= config_.actions.action_count()) throw ModelError("scripted action out of range");
    } else {
        PlanResult plan_result =
            mcts_plan(model_, belief_, prefs, plan, config_.map.influence_radius);
        action = plan_result.chosen_action;
        if (config_.record_traces) {
            DecisionTrace trace;
            trace.step = step_index_;
            trace.confidence = report.confidence;
            trace.chosen_action = action;
            trace.goal_directed = goal_directed;
            trace.root_stats = plan_result.stats;
            trace.top = top_policies(model_, belief_, prefs, plan_result, 3);
            traces_.push_back(std::move(trace));
        }
    }
    report.chosen_action = action;
    last_action_ = action;

    // (7) move toward the neighbour the learned graph attaches to the action.
    std::optional<std::size_t> target_state;
    bool moved = false;
    if (!config_.actions.is_stay(action)) {
        target_state = motion_target(believed_state, action);
        if (target_state) {
            auto target_node = map_.node_of_state(*target_state);
            if (target_node) {
                Pose target = model_.pose_of(map_.node(*target_node).position_id);
                target.yaw = config_.actions.bisector(action);
                report.motion_attempted = true;
                MotionResult mr = execute_motion(world_, true_pose_, target, odom_);
                report.motion_succeeded = mr.succeeded;
                if (mr.succeeded) {
                    distance_ += distance(true_pose_, mr.true_pose);
                    true_pose_ = mr.true_pose;
                    belief_.believed_pose = target;  // intended-motion integration
                    current_node_ = target_node;
                    moved = true;
                }
                report.odometry_pose = mr.odometry_pose;
            }
        }
    }

    // (8) transition learning. An attempted motion identifies its edge
    // exactly, so the transition responsibility is 1; the prior-state
    // responsibility is the belief mass behind the attempt.
    if (report.motion_attempted && target_state) {
        TransitionEdge edge{believed_state, *target_state, action};
        double q_prev = belief_.q_s[believed_state];
        TransitionSituation situ{TransitionDirection::Forward,
                                 report.motion_succeeded ? TransitionFeasibility::Possible
                                                         : TransitionFeasibility::Impossible,
                                 TransitionEvidence::Experienced};
        model_.update_transition(edge, situ, 1.0, q_prev);
        report.transition_updates += 1;
        experienced_.insert({believed_state, *target_state, action});
    }

    // Predicted (lidar) feasibility for untried edges out of the acting
    // state, fired only when the verdict changes.
    if (!relocalising_) {
        for (std::size_t a = 0; a < config_.actions.sector_count; ++a) {
            auto next = motion_target(believed_state, a);
            if (!next) continue;
            if (experienced_.contains({believed_state, *next, a})) continue;
            auto next_node = map_.node_of_state(*next);
            if (!next_node) continue;
            double gap = distance(belief_.believed_pose,
                                  model_.pose_of(map_.node(*next_node).position_id));
            double clearance = heading_clearance(signature, config_.lidar_max_range,
                                                 config_.actions.bisector(a),
                                                 config_.actions.sector_count);
            bool blocked = clearance < gap * 0.999;
            auto memo = predicted_verdict_.find({believed_state, *next, a});
            if (memo != predicted_verdict_.end() && memo->second == blocked) continue;
            predicted_verdict_[{believed_state, *next, a}] = blocked;
            TransitionEdge edge{believed_state, *next, a};
            double q_trans = normalized_column(model_.b_s(a), believed_state)[*next];
            TransitionSituation situ{TransitionDirection::Forward,
                                     blocked ? TransitionFeasibility::Impossible
                                             : TransitionFeasibility::Possible,
                                     TransitionEvidence::Predicted};
            model_.update_transition(edge, situ, q_trans, belief_.q_s[believed_state]);
            report.transition_updates += 1;
        }
    }

    // Stuck detection: a run of failed motions without leaving the node.
    if (report.motion_attempted && !report.motion_succeeded) {
        ++fail_streak_;
    } else if (moved || config_.actions.is_stay(action)) {
        if (moved) fail_streak_ = 0;
    }
    if (fail_streak_ >= config_.stuck_window) stuck_recovery(believed_state, report);

    report.believed_pose = belief_.believed_pose;
    report.true_pose = true_pose_;
    if (!report.motion_attempted)
        report.odometry_pose =
            Pose(true_pose_.x + odom_.ax, true_pose_.y + odom_.ay, true_pose_.yaw + odom_.ayaw);
    report.node_id = current_node_;
    report.distance_travelled = distance_;
    coverage_max_ = std::max(coverage_max_, tracker_.fraction());
    report.coverage = coverage_max_;

    ++step_index_;

    if (config_.mode == AgentMode::Explore && coverage_max_ >= config_.coverage_target) {
        terminal_ = TerminalReason::CoverageReached;
    } else if (stuck_events_ >= config_.stuck_limit) {
        terminal_ = TerminalReason::Stuck;
    } else if (step_index_ >= config_.max_steps) {
        terminal_ = TerminalReason::MaxSteps;
    }

    reports_.push_back(report);
    return report;
}

EpisodeLog Agent::run() {
    while (!done()) step();
    return finish_log();
}

EpisodeLog Agent::run_script(std::span<const std::size_t> actions) {
    for (std::size_t a : actions) {
        if (done()) break;
        step(a);
    }
    if (!terminal_) terminal_ = TerminalReason::MaxSteps;
    return finish_log();
}

EpisodeLog Agent::finish_log() const {
    EpisodeLog log;
    log.steps = reports_;
    log.terminal = *terminal_;
    log.stuck_events = stuck_events_;
    log.final_coverage = coverage_max_;
    log.distance_travelled = distance_;
    return log;
}

EpisodeLog run_exploration(const AgentConfig& config, const World& world, GridCell start) {
    if (config.mode != AgentMode::Explore)
        throw ModelError("run_exploration requires Explore mode");
    Agent agent(config, world, start);
    return agent.run();
}

}  // namespace topnav
