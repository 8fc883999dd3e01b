#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "topnav/map.hpp"
#include "topnav/model.hpp"

namespace topnav {

/// Goal preferences and term weights for the expected-free-energy score.
struct Preferences {
    std::optional<std::size_t> goal_class;     // preferred observation class
    std::optional<std::size_t> goal_position;  // preferred position id
    double utility_weight = 0.0;               // 5 for goal runs
    double exploration_weight = 1.0;           // 0 for goal runs
    double collision_weight = 2.0;

    bool has_goal() const { return goal_class.has_value() || goal_position.has_value(); }
};

struct PlanConfig {
    double horizon_m = 14.0;         // imagination horizon in travelled meters
    std::size_t mcts_budget = 200;   // simulations per decision
    double ucb_c = 1.414;
    double softmax_temperature = 1.0;
    std::uint64_t rng_seed = 0;

    std::size_t rollout_depth(double influence_radius) const {
        auto d = static_cast<std::size_t>(std::ceil(horizon_m / influence_radius));
        return d == 0 ? 1 : d;
    }
};

/// One imagined step of a policy.
struct StepPrediction {
    std::vector<double> state_dist;
    std::size_t predicted_position = 0;
    double info_gain = 0.0;
    double utility = 0.0;
    double collision_risk = 0.0;
};

struct PolicyEvaluation {
    std::vector<std::size_t> policy;
    std::vector<StepPrediction> steps;
    double total_efe = 0.0;
};

struct RootActionStat {
    std::size_t action = 0;
    std::size_t visits = 0;
    double mean_value = 0.0;  // mean of -EFE over simulations through this child
    double probability = 0.0; // softmax selection probability
};

struct PlanResult {
    std::size_t chosen_action = 0;
    std::vector<RootActionStat> stats;
};

/// Predictive transition semantics shared by every planning operation.
///
/// For a heading action the evidence above the count floor decides how much
/// belief mass moves: from state s, success mass flows to the above-floor
/// targets in proportion to their excess counts, and the remainder stays put
/// (a blocked motion leaves the agent where it was). Self-transition evidence
/// counts toward staying. STAY is the identity with zero risk.
struct PredictedStep {
    std::vector<double> state_dist;
    std::size_t predicted_position = 0;
    double collision_risk = 0.0;
};

PredictedStep predict_step(const GenerativeModel& model, const std::vector<double>& state_dist,
                           std::size_t action);

/// Expected Dirichlet information gain of the observation model under a state
/// distribution: per-state column entropy (over the known classes plus one
/// virtual unseen-class outcome at the floor) damped by the accumulated
/// evidence, averaged under the distribution.
double info_gain(const GenerativeModel& model, const std::vector<double>& state_dist);

/// Log-probability of emitting the preferred observation class (or occupying
/// the preferred position) under the state distribution, clamped at -20.
double utility(const GenerativeModel& model, const std::vector<double>& state_dist,
               const Preferences& prefs);

/// Chain predict_step over a policy and accumulate
///   total_efe = sum over steps of (-w_e * info_gain - w_u * utility + w_c * risk).
PolicyEvaluation evaluate_policy(const GenerativeModel& model, const BeliefState& belief,
                                 const std::vector<std::size_t>& policy, const Preferences& prefs);

/// UCB1 tree search over action sequences up to the rollout depth. Node value
/// is -total_efe of the simulated path. The root action is sampled from a
/// softmax over mean child values; temperature 0 degenerates to argmax.
PlanResult mcts_plan(const GenerativeModel& model, const BeliefState& belief,
                     const Preferences& prefs, const PlanConfig& config, double influence_radius);

/// Greedy best policy from the root statistics of a finished search (used for
/// trace export).
std::vector<PolicyEvaluation> top_policies(const GenerativeModel& model, const BeliefState& belief,
                                           const Preferences& prefs, const PlanResult& result,
                                           std::size_t count);

}  // namespace topnav
