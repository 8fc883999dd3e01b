#include "topnav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>

namespace topnav {

namespace {

// Pseudo-count in the denominator of the passage success estimate; keeps a
// single seeded edge from looking like a sure thing.
constexpr double kSuccessPrior = 1.0;
constexpr double kUtilityClamp = -20.0;

struct EdgeKernel {
    double success = 0.0;
    std::vector<std::pair<std::size_t, double>> targets;  // (state, mass | success)
};

EdgeKernel edge_kernel(const GenerativeModel& model, std::size_t state, std::size_t action) {
    const CountMatrix& slab = model.b_s(action);
    const double floor = model.count_floor();
    EdgeKernel k;
    double open = 0.0;
    for (std::size_t next = 0; next < slab.rows(); ++next) {
        double excess = slab.at(next, state) - floor;
        if (excess <= 1e-12 || next == state) continue;
        k.targets.emplace_back(next, excess);
        open += excess;
    }
    double stay_excess = std::max(0.0, slab.at(state, state) - floor);
    k.success = open / (open + stay_excess + kSuccessPrior);
    for (auto& [next, mass] : k.targets) mass = open > 0.0 ? mass / open : 0.0;
    return k;
}

/// Per-decision caches: edge kernels, per-state info gain, per-state goal
/// emission, and the position back-projection.
class PlanContext {
public:
    PlanContext(const GenerativeModel& model, const Preferences& prefs)
        : model_(model), prefs_(prefs), pos_(normalized(model.a_p())) {
        const std::size_t S = model.num_states();
        kernels_.resize(S * model.actions().action_count());
        kernel_ready_.assign(kernels_.size(), 0);
        gain_.resize(S);
        emission_.resize(S);
        const CountMatrix obs = normalized(model.a_o());
        const std::size_t O = model.num_observation_classes();
        const double floor = model.count_floor();
        for (std::size_t s = 0; s < S; ++s) {
            // Column entropy over the known classes plus one virtual
            // unseen-class outcome at the floor, damped by evidence volume.
            double total = floor;
            double excess = 0.0;
            for (std::size_t o = 0; o < O; ++o) {
                total += model.a_o().at(o, s);
                excess += model.a_o().at(o, s) - floor;
            }
            double h = 0.0;
            for (std::size_t o = 0; o < O; ++o) {
                double p = model.a_o().at(o, s) / total;
                if (p > 0.0) h -= p * std::log(p);
            }
            double pv = floor / total;
            if (pv > 0.0) h -= pv * std::log(pv);
            gain_[s] = h / (1.0 + excess);

            if (prefs_.goal_class) {
                emission_[s] = obs.at(*prefs_.goal_class, s);
            } else if (prefs_.goal_position) {
                emission_[s] = pos_.at(*prefs_.goal_position, s);
            }
        }
    }

    const EdgeKernel& kernel(std::size_t state, std::size_t action) {
        std::size_t idx = state * model_.actions().action_count() + action;
        if (!kernel_ready_[idx]) {
            kernels_[idx] = edge_kernel(model_, state, action);
            kernel_ready_[idx] = 1;
        }
        return kernels_[idx];
    }

    StepPrediction step(const std::vector<double>& dist, std::size_t action) {
        const std::size_t S = model_.num_states();
        StepPrediction out;
        out.state_dist.assign(S, 0.0);
        if (model_.actions().is_stay(action)) {
            out.state_dist = dist;
            out.collision_risk = 0.0;
        } else {
            double risk = 0.0;
            for (std::size_t s = 0; s < S; ++s) {
                double q = dist[s];
                if (q <= 0.0) continue;
                const EdgeKernel& k = kernel(s, action);
                out.state_dist[s] += q * (1.0 - k.success);
                for (const auto& [next, mass] : k.targets)
                    out.state_dist[next] += q * k.success * mass;
                risk += q * (1.0 - k.success);
            }
            out.collision_risk = risk;
        }

        out.info_gain = 0.0;
        for (std::size_t s = 0; s < S; ++s) out.info_gain += out.state_dist[s] * gain_[s];

        if (prefs_.has_goal() && prefs_.utility_weight > 0.0) {
            double p = 0.0;
            for (std::size_t s = 0; s < S; ++s) p += out.state_dist[s] * emission_[s];
            out.utility = p > 0.0 ? std::max(std::log(p), kUtilityClamp) : kUtilityClamp;
        }

        out.predicted_position = predicted_position(out.state_dist);
        return out;
    }

    double step_efe(const StepPrediction& p) const {
        return -prefs_.exploration_weight * p.info_gain - prefs_.utility_weight * p.utility +
               prefs_.collision_weight * p.collision_risk;
    }

    std::size_t predicted_position(const std::vector<double>& dist) const {
        // argmax of the A_p back-projection; ties break toward the lower id.
        std::size_t best = 0;
        double best_mass = -1.0;
        for (std::size_t p = 0; p < model_.num_positions(); ++p) {
            double mass = 0.0;
            for (std::size_t s = 0; s < dist.size(); ++s) mass += pos_.at(p, s) * dist[s];
            if (mass > best_mass + 1e-15) {
                best = p;
                best_mass = mass;
            }
        }
        return best;
    }

private:
    const GenerativeModel& model_;
    const Preferences& prefs_;
    CountMatrix pos_;
    std::vector<EdgeKernel> kernels_;
    std::vector<std::uint8_t> kernel_ready_;
    std::vector<double> gain_;
    std::vector<double> emission_;
};

void validate_prefs(const GenerativeModel& model, const Preferences& prefs) {
    if (prefs.utility_weight > 0.0 && !prefs.has_goal())
        throw std::invalid_argument("utility weight is positive but no goal is set");
    if (prefs.goal_class && *prefs.goal_class >= model.num_observation_classes())
        throw std::invalid_argument("goal class does not exist");
    if (prefs.goal_position && *prefs.goal_position >= model.num_positions())
        throw std::invalid_argument("goal position does not exist");
}

}  // namespace

PredictedStep predict_step(const GenerativeModel& model, const std::vector<double>& state_dist,
                           std::size_t action) {
    if (action >= model.actions().action_count()) throw std::invalid_argument("unknown action");
    if (state_dist.size() != model.num_states())
        throw std::invalid_argument("state distribution size mismatch");
    Preferences no_goal;
    no_goal.utility_weight = 0.0;
    PlanContext ctx(model, no_goal);
    StepPrediction p = ctx.step(state_dist, action);
    return PredictedStep{std::move(p.state_dist), p.predicted_position, p.collision_risk};
}

double info_gain(const GenerativeModel& model, const std::vector<double>& state_dist) {
    double g = 0.0;
    const std::size_t S = model.num_states();
    const double floor = model.count_floor();
    const std::size_t O = model.num_observation_classes();
    for (std::size_t s = 0; s < S; ++s) {
        double total = floor;
        double excess = 0.0;
        for (std::size_t o = 0; o < O; ++o) {
            total += model.a_o().at(o, s);
            excess += model.a_o().at(o, s) - floor;
        }
        double h = 0.0;
        for (std::size_t o = 0; o < O; ++o) {
            double pr = model.a_o().at(o, s) / total;
            if (pr > 0.0) h -= pr * std::log(pr);
        }
        double pv = floor / total;
        if (pv > 0.0) h -= pv * std::log(pv);
        g += state_dist[s] * h / (1.0 + excess);
    }
    return g;
}

double utility(const GenerativeModel& model, const std::vector<double>& state_dist,
               const Preferences& prefs) {
    if (!prefs.has_goal()) throw std::invalid_argument("utility requires a goal preference");
    validate_prefs(model, prefs);
    double p = 0.0;
    if (prefs.goal_class) {
        const CountMatrix obs = normalized(model.a_o());
        for (std::size_t s = 0; s < state_dist.size(); ++s)
            p += state_dist[s] * obs.at(*prefs.goal_class, s);
    } else {
        const CountMatrix pos = normalized(model.a_p());
        for (std::size_t s = 0; s < state_dist.size(); ++s)
            p += state_dist[s] * pos.at(*prefs.goal_position, s);
    }
    return p > 0.0 ? std::max(std::log(p), kUtilityClamp) : kUtilityClamp;
}

PolicyEvaluation evaluate_policy(const GenerativeModel& model, const BeliefState& belief,
                                 const std::vector<std::size_t>& policy,
                                 const Preferences& prefs) {
    validate_prefs(model, prefs);
    PlanContext ctx(model, prefs);
    PolicyEvaluation out;
    out.policy = policy;
    std::vector<double> dist = belief.q_s;
    for (std::size_t action : policy) {
        StepPrediction p = ctx.step(dist, action);
        out.total_efe += ctx.step_efe(p);
        dist = p.state_dist;
        out.steps.push_back(std::move(p));
    }
    return out;
}

namespace {

struct TreeNode {
    std::size_t action = 0;  // action leading here from the parent
    std::vector<double> state_dist;
    double efe_so_far = 0.0;
    std::size_t visits = 0;
    double value_sum = 0.0;
    std::vector<std::unique_ptr<TreeNode>> children;
    std::size_t next_untried = 0;
};

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

PlanResult mcts_plan(const GenerativeModel& model, const BeliefState& belief,
                     const Preferences& prefs, const PlanConfig& config, double influence_radius) {
    const std::size_t A = model.actions().action_count();
    if (model.num_states() == 0) throw std::invalid_argument("mcts_plan on an empty model");
    if (belief.q_s.size() != model.num_states())
        throw std::invalid_argument("belief does not match the model");
    if (config.mcts_budget < model.actions().sector_count)
        throw std::invalid_argument("mcts budget must be at least the sector count");
    validate_prefs(model, prefs);
    if (!(prefs.exploration_weight > 0.0) && !(prefs.utility_weight > 0.0 && prefs.has_goal()))
        throw std::invalid_argument("preferences give the planner nothing to optimise");

    const std::size_t depth_limit = config.rollout_depth(influence_radius);
    PlanContext ctx(model, prefs);
    std::mt19937_64 rng(config.rng_seed);

    TreeNode root;
    root.state_dist = belief.q_s;

    auto ucb_select = [&](TreeNode& node) -> TreeNode* {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& ch : node.children) {
            double m = ch->value_sum / static_cast<double>(ch->visits);
            lo = std::min(lo, m);
            hi = std::max(hi, m);
        }
        TreeNode* best = nullptr;
        double best_score = -std::numeric_limits<double>::infinity();
        for (const auto& ch : node.children) {
            double mean = ch->value_sum / static_cast<double>(ch->visits);
            double norm = hi > lo ? (mean - lo) / (hi - lo) : 0.5;
            double score = norm + config.ucb_c *
                                      std::sqrt(std::log(static_cast<double>(node.visits)) /
                                                static_cast<double>(ch->visits));
            if (score > best_score) {
                best = ch.get();
                best_score = score;
            }
        }
        return best;
    };

    for (std::size_t sim = 0; sim < config.mcts_budget; ++sim) {
        TreeNode* node = &root;
        std::vector<TreeNode*> path{node};
        std::size_t depth = 0;

        // Selection: descend fully expanded nodes.
        while (depth < depth_limit && node->next_untried >= A && !node->children.empty()) {
            node = ucb_select(*node);
            path.push_back(node);
            ++depth;
        }

        // Expansion: attach the next untried action in id order.
        if (depth < depth_limit && node->next_untried < A) {
            std::size_t action = node->next_untried++;
            StepPrediction p = ctx.step(node->state_dist, action);
            auto child = std::make_unique<TreeNode>();
            child->action = action;
            child->state_dist = std::move(p.state_dist);
            child->efe_so_far = node->efe_so_far + ctx.step_efe(p);
            node->children.push_back(std::move(child));
            node = node->children.back().get();
            path.push_back(node);
            ++depth;
        }

        // Rollout: uniform random actions to the depth limit.
        double efe = node->efe_so_far;
        std::vector<double> dist = node->state_dist;
        for (std::size_t d = depth; d < depth_limit; ++d) {
            std::size_t action = static_cast<std::size_t>(rng() % A);
            StepPrediction p = ctx.step(dist, action);
            efe += ctx.step_efe(p);
            dist = std::move(p.state_dist);
        }

        double value = -efe;
        for (TreeNode* n : path) {
            n->visits += 1;
            n->value_sum += value;
        }
    }

    PlanResult result;
    result.stats.reserve(root.children.size());
    double best_mean = -std::numeric_limits<double>::infinity();
    for (const auto& ch : root.children) {
        RootActionStat st;
        st.action = ch->action;
        st.visits = ch->visits;
        st.mean_value = ch->value_sum / static_cast<double>(ch->visits);
        best_mean = std::max(best_mean, st.mean_value);
        result.stats.push_back(st);
    }
    std::sort(result.stats.begin(), result.stats.end(),
              [](const RootActionStat& a, const RootActionStat& b) { return a.action < b.action; });

    const double temp = config.softmax_temperature;
    if (temp < 1e-9) {
        std::size_t chosen = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& st : result.stats) {
            if (st.mean_value > best) {
                best = st.mean_value;
                chosen = st.action;
            }
        }
        for (auto& st : result.stats) st.probability = st.action == chosen ? 1.0 : 0.0;
        result.chosen_action = chosen;
        return result;
    }

    double z = 0.0;
    for (const auto& st : result.stats) z += std::exp((st.mean_value - best_mean) / temp);
    for (auto& st : result.stats) st.probability = std::exp((st.mean_value - best_mean) / temp) / z;

    double u = uniform01(rng);
    double acc = 0.0;
    result.chosen_action = result.stats.back().action;
    for (const auto& st : result.stats) {
        acc += st.probability;
        if (u < acc) {
            result.chosen_action = st.action;
            break;
        }
    }
    return result;
}

std::vector<PolicyEvaluation> top_policies(const GenerativeModel& model, const BeliefState& belief,
                                           const Preferences& prefs, const PlanResult& result,
                                           std::size_t count) {
    std::vector<RootActionStat> ranked = result.stats;
    std::sort(ranked.begin(), ranked.end(), [](const RootActionStat& a, const RootActionStat& b) {
        if (a.mean_value != b.mean_value) return a.mean_value > b.mean_value;
        return a.action < b.action;
    });
    std::vector<PolicyEvaluation> out;
    for (std::size_t i = 0; i < ranked.size() && i < count; ++i)
        out.push_back(evaluate_policy(model, belief, {ranked[i].action}, prefs));
    return out;
}

}  // namespace topnav
