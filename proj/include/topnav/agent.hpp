#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "topnav/coverage.hpp"
#include "topnav/map.hpp"
#include "topnav/model.hpp"
#include "topnav/planner.hpp"
#include "topnav/world.hpp"

namespace topnav {

enum class AgentMode { Explore, GoalSignature, GoalPosition };
enum class TerminalReason { CoverageReached, GoalReached, MaxSteps, Stuck };

const char* to_string(TerminalReason r);

struct AgentConfig {
    MapConfig map;
    PlanConfig plan;
    Preferences prefs;          // weights used while a goal is engaged
    ActionSpace actions;
    AgentMode mode = AgentMode::Explore;
    std::size_t max_steps = 400;
    std::size_t stuck_window = 5;
    std::size_t stuck_limit = 25;  // consecutive-recovery safety valve
    double coverage_target = 0.95;
    std::size_t lidar_rays = 36;
    double lidar_max_range = 12.0;
    double count_floor = 0.1;
    double observation_evidence = 1.0;  // Dirichlet bump per confident view
    LearningRateTable rates;
    std::optional<ObservationSignature> goal_signature;
    bool record_traces = false;
};

struct StepReport {
    std::size_t step = 0;
    Pose believed_pose;
    Pose true_pose;
    Pose odometry_pose;
    std::size_t chosen_action = 0;
    bool motion_attempted = false;
    bool motion_succeeded = false;
    std::optional<std::size_t> observation_class;
    double confidence = 0.0;
    std::size_t new_nodes = 0;
    std::size_t transition_updates = 0;
    double distance_travelled = 0.0;  // cumulative meters
    double coverage = 0.0;            // best fraction reached so far
    bool stuck_event = false;
    bool relocalising = false;
    std::optional<std::size_t> node_id;
};

struct EpisodeLog {
    std::vector<StepReport> steps;
    TerminalReason terminal = TerminalReason::MaxSteps;
    std::size_t stuck_events = 0;
    double final_coverage = 0.0;
    double distance_travelled = 0.0;
};

/// Interpretability record for one planning decision.
struct DecisionTrace {
    std::size_t step = 0;
    double confidence = 0.0;
    std::size_t chosen_action = 0;
    bool goal_directed = false;
    std::vector<RootActionStat> root_stats;
    std::vector<PolicyEvaluation> top;
};

/// The closed perception-action loop: observation handling, confidence-gated
/// model growth, transition learning, planning and motion, stuck recovery.
class Agent {
public:
    Agent(AgentConfig config, World world, GridCell start);
    Agent(AgentConfig config, World world, GridCell start, GenerativeModel prior_model,
          TopoMap prior_map);

    /// One full perception-action cycle. `forced_action` bypasses the
    /// planner (scripted replays); learning and reporting run unchanged.
    StepReport step(std::optional<std::size_t> forced_action = std::nullopt);

    bool done() const { return terminal_.has_value(); }
    TerminalReason terminal() const { return terminal_.value(); }

    EpisodeLog run();
    EpisodeLog run_script(std::span<const std::size_t> actions);

    const World& world() const { return world_; }
    const GenerativeModel& model() const { return model_; }
    const TopoMap& topo_map() const { return map_; }
    const BeliefState& belief() const { return belief_; }
    double coverage() const { return coverage_max_; }
    std::size_t stuck_events() const { return stuck_events_; }
    const std::vector<StepReport>& reports() const { return reports_; }
    const std::vector<DecisionTrace>& traces() const { return traces_; }
    std::optional<std::size_t> current_node() const { return current_node_; }

private:
    void init_start(GridCell start);
    bool goal_engaged() const;
    bool goal_within_horizon() const;
    std::optional<std::size_t> motion_target(std::size_t state, std::size_t action) const;
    bool goal_reached() const;
    void stuck_recovery(std::size_t state, StepReport& report);
    EpisodeLog finish_log() const;

    AgentConfig config_;
    World world_;
    GenerativeModel model_;
    TopoMap map_;
    BeliefState belief_;
    CoverageTracker tracker_;
    OdometryState odom_;

    Pose true_pose_;
    std::size_t step_index_ = 0;
    std::size_t last_action_;
    std::optional<std::size_t> current_node_;
    double distance_ = 0.0;
    double coverage_max_ = 0.0;
    std::size_t fail_streak_ = 0;
    std::size_t stuck_events_ = 0;
    bool relocalising_ = false;
    std::deque<RecentView> recent_views_;
    std::optional<std::size_t> resolved_goal_class_;
    std::optional<TerminalReason> terminal_;
    std::vector<StepReport> reports_;
    std::vector<DecisionTrace> traces_;

    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> experienced_;
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, bool> predicted_verdict_;
};

EpisodeLog run_exploration(const AgentConfig& config, const World& world, GridCell start);

}  // namespace topnav
