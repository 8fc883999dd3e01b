#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "topnav/actions.hpp"
#include "topnav/geometry.hpp"
#include "topnav/world.hpp"

namespace topnav {

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense count matrix that can grow along either dimension. Row-major.
class CountMatrix {
public:
    CountMatrix() = default;
    CountMatrix(std::size_t rows, std::size_t cols, double fill)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    void add_row(double fill);
    void add_col(double fill);

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class NormalizeAxis { Rows };  // outcomes run over rows within each column

/// Categorical view of a count matrix: each column rescaled to sum to 1.
CountMatrix normalized(const CountMatrix& counts, NormalizeAxis axis = NormalizeAxis::Rows);

/// One column of the categorical view.
std::vector<double> normalized_column(const CountMatrix& counts, std::size_t col);

enum class TransitionDirection { Forward, Reverse };
enum class TransitionFeasibility { Possible, Impossible };
enum class TransitionEvidence { Experienced, Predicted };

struct TransitionSituation {
    TransitionDirection direction = TransitionDirection::Forward;
    TransitionFeasibility feasibility = TransitionFeasibility::Possible;
    TransitionEvidence evidence = TransitionEvidence::Experienced;
};

/// Signed learning rates for the transition pseudo-count update, and the
/// global scale applied to every one of them.
struct LearningRateTable {
    double forward_possible = 7.0;
    double forward_impossible = -7.0;
    double forward_pred_possible = 5.0;
    double forward_pred_impossible = -5.0;
    double reverse_possible = 5.0;
    double reverse_impossible = -5.0;
    double reverse_pred_possible = 3.0;
    double reverse_pred_impossible = -3.0;
    double scale = 0.05;

    double rate(const TransitionSituation& s) const;
    /// Enforces the sign pattern and the experienced >= predicted,
    /// forward >= reverse magnitude ordering.
    void validate() const;
};

struct TransitionEdge {
    std::size_t from_state = 0;
    std::size_t to_state = 0;
    std::size_t action = 0;
};

/// Posterior beliefs carried between steps.
struct BeliefState {
    std::vector<double> q_s;  // over states, sums to 1
    std::vector<double> q_p;  // over positions, sums to 1
    Pose believed_pose;
};

/// Highest posterior state probability.
double state_confidence(const BeliefState& belief);

/// The agent's world model: Dirichlet-count observation and position
/// likelihoods, per-action transition counts, the pose table, and the stored
/// observation prototypes.
///
/// Matrix layout:
///   a_o(o, s)            counts of observation class o at state s
///   a_p(p, s)            counts of position p at state s
///   b_s(a).at(s_next, s_prev)  transition counts under action a
class GenerativeModel {
public:
    explicit GenerativeModel(ActionSpace actions, double count_floor = 0.1,
                             LearningRateTable rates = {});

    const ActionSpace& actions() const { return actions_; }
    double count_floor() const { return floor_; }
    const LearningRateTable& learning_rates() const { return rates_; }

    std::size_t num_states() const { return a_o_.cols(); }
    std::size_t num_positions() const { return poses_.size(); }
    std::size_t num_observation_classes() const { return a_o_.rows(); }

    const CountMatrix& a_o() const { return a_o_; }
    const CountMatrix& a_p() const { return a_p_; }
    const CountMatrix& b_s(std::size_t action) const { return b_s_.at(action); }
    const Pose& pose_of(std::size_t position) const { return poses_.at(position); }
    const std::vector<Pose>& pose_table() const { return poses_; }
    const ObservationSignature& prototype(std::size_t obs_class) const {
        return prototypes_.at(obs_class);
    }

    /// Append a pose to the pose table. Position ids are never reused.
    std::size_t add_position(const Pose& pose);

    /// Add a state anchored to an existing position. The new observation
    /// column is uninformative; the new position column points at the anchor;
    /// the new transition row/column is at the floor except self-transition
    /// under STAY.
    std::size_t grow_state(std::size_t anchor_position);

    /// Register a new observation class. Rejects prototypes that match an
    /// existing one at or above `match_threshold` unless `forced_state` is
    /// given, in which case the new class is also credited to that state.
    std::size_t grow_observation_class(const ObservationSignature& prototype,
                                       double match_threshold,
                                       std::optional<std::size_t> forced_state = std::nullopt);

    /// Dirichlet evidence: bump a_o(obs_class, state) by `weight`.
    void add_observation_evidence(std::size_t obs_class, std::size_t state, double weight = 1.0);
    /// Dirichlet evidence: bump a_p(position, state) by `weight`.
    void add_position_evidence(std::size_t position, std::size_t state, double weight = 1.0);

    /// Multiplicative pseudo-count update on a transition edge:
    ///   count += q_trans * q_prev * count * rate(situation) * scale
    /// clamped below at the count floor. A Forward situation also applies the
    /// matching Reverse rate to the opposite edge under the opposite action.
    void update_transition(const TransitionEdge& edge, const TransitionSituation& situation,
                           double q_trans, double q_prev);

    /// Seed a hypothetical passage: raise b_s(action).at(to, from) to
    /// floor + strength if it has no evidence yet. Returns true if it did.
    bool seed_transition(const TransitionEdge& edge, double strength);

    /// Whether an edge carries any evidence above the floor.
    bool transition_seeded(const TransitionEdge& edge) const {
        return b_s_.at(edge.action).at(edge.to_state, edge.from_state) > floor_ + 1e-12;
    }

    /// Exact posterior over states given the previous belief, the action that
    /// led here, the (optional) observation class and the position evidence:
    ///   q(s) ∝ P(o|s) · P(p|s) · Σ_{s'} P(s|s',a) q_prev(s')
    /// The position posterior blends a point mass at the evidence (0.9) with
    /// the position distribution implied by q(s) through A_p (0.1).
    BeliefState infer_state(const BeliefState& prev, std::size_t action,
                            std::optional<std::size_t> obs_class,
                            std::size_t position_evidence) const;

    std::string to_json_text() const;
    static GenerativeModel from_json_text(const std::string& text);

    bool operator==(const GenerativeModel& other) const;

private:
    ActionSpace actions_;
    double floor_ = 0.1;
    LearningRateTable rates_;
    CountMatrix a_o_;                 // classes x states
    CountMatrix a_p_;                 // positions x states
    std::vector<CountMatrix> b_s_;    // per action: states x states
    std::vector<Pose> poses_;         // position id -> believed pose
    std::vector<ObservationSignature> prototypes_;
};

}  // namespace topnav
