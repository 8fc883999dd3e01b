#include "topnav/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "topnav/similarity.hpp"

namespace topnav {

using nlohmann::json;

void CountMatrix::add_row(double fill) {
    data_.resize((rows_ + 1) * cols_, fill);
    ++rows_;
}

void CountMatrix::add_col(double fill) {
    std::vector<double> next(rows_ * (cols_ + 1));
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) next[r * (cols_ + 1) + c] = data_[r * cols_ + c];
        next[r * (cols_ + 1) + cols_] = fill;
    }
    data_ = std::move(next);
    ++cols_;
}

CountMatrix normalized(const CountMatrix& counts, NormalizeAxis) {
    CountMatrix out = counts;
    for (std::size_t c = 0; c < counts.cols(); ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < counts.rows(); ++r) sum += counts.at(r, c);
        for (std::size_t r = 0; r < counts.rows(); ++r) out.at(r, c) = counts.at(r, c) / sum;
    }
    return out;
}

std::vector<double> normalized_column(const CountMatrix& counts, std::size_t col) {
    std::vector<double> out(counts.rows());
    double sum = 0.0;
    for (std::size_t r = 0; r < counts.rows(); ++r) sum += counts.at(r, col);
    for (std::size_t r = 0; r < counts.rows(); ++r) out[r] = counts.at(r, col) / sum;
    return out;
}

double LearningRateTable::rate(const TransitionSituation& s) const {
    const bool fwd = s.direction == TransitionDirection::Forward;
    const bool ok = s.feasibility == TransitionFeasibility::Possible;
    const bool exp = s.evidence == TransitionEvidence::Experienced;
    if (fwd && exp) return ok ? forward_possible : forward_impossible;
    if (fwd) return ok ? forward_pred_possible : forward_pred_impossible;
    if (exp) return ok ? reverse_possible : reverse_impossible;
    return ok ? reverse_pred_possible : reverse_pred_impossible;
}

void LearningRateTable::validate() const {
    auto check = [](bool cond, const char* what) {
        if (!cond) throw ModelError(std::string("learning rate table: ") + what);
    };
    check(forward_possible > 0 && forward_pred_possible > 0 && reverse_possible > 0 &&
              reverse_pred_possible > 0,
          "possible rates must be positive");
    check(forward_impossible < 0 && forward_pred_impossible < 0 && reverse_impossible < 0 &&
              reverse_pred_impossible < 0,
          "impossible rates must be negative");
    check(std::abs(forward_possible) >= std::abs(reverse_possible) &&
              std::abs(forward_impossible) >= std::abs(reverse_impossible) &&
              std::abs(forward_pred_possible) >= std::abs(reverse_pred_possible) &&
              std::abs(forward_pred_impossible) >= std::abs(reverse_pred_impossible),
          "forward magnitude must dominate reverse");
    check(std::abs(forward_possible) >= std::abs(forward_pred_possible) &&
              std::abs(forward_impossible) >= std::abs(forward_pred_impossible) &&
              std::abs(reverse_possible) >= std::abs(reverse_pred_possible) &&
              std::abs(reverse_impossible) >= std::abs(reverse_pred_impossible),
          "experienced magnitude must dominate predicted");
    check(scale >= 0.0, "scale must be non-negative");
}

double state_confidence(const BeliefState& belief) {
    if (belief.q_s.empty()) return 0.0;
    return *std::max_element(belief.q_s.begin(), belief.q_s.end());
}

GenerativeModel::GenerativeModel(ActionSpace actions, double count_floor, LearningRateTable rates)
    : actions_(actions), floor_(count_floor), rates_(rates) {
    if (!(floor_ > 0.0)) throw ModelError("count floor must be positive");
    rates_.validate();
    b_s_.resize(actions_.action_count());
}

std::size_t GenerativeModel::add_position(const Pose& pose) {
    poses_.push_back(pose);
    a_p_.add_row(floor_);
    return poses_.size() - 1;
}

std::size_t GenerativeModel::grow_state(std::size_t anchor_position) {
    if (anchor_position >= num_positions()) throw ModelError("grow_state: unknown anchor position");
    const std::size_t s = num_states();

    a_o_.add_col(floor_);
    a_p_.add_col(floor_);
    a_p_.at(anchor_position, s) = 1.0 + floor_;

    for (std::size_t a = 0; a < b_s_.size(); ++a) {
        b_s_[a].add_row(floor_);
        b_s_[a].add_col(floor_);
        if (actions_.include_stay && a == actions_.stay_action()) b_s_[a].at(s, s) = 1.0 + floor_;
    }
    return s;
}

std::size_t GenerativeModel::grow_observation_class(const ObservationSignature& prototype,
                                                    double match_threshold,
                                                    std::optional<std::size_t> forced_state) {
    if (!forced_state) {
        for (std::size_t k = 0; k < prototypes_.size(); ++k) {
            if (similarity(prototype, prototypes_[k]) >= match_threshold)
                throw ModelError("duplicate observation prototype (matches class " +
                                 std::to_string(k) + ")");
        }
    }
    prototypes_.push_back(prototype);
    a_o_.add_row(floor_);
    const std::size_t cls = a_o_.rows() - 1;
    if (forced_state) add_observation_evidence(cls, *forced_state);
    return cls;
}

void GenerativeModel::add_observation_evidence(std::size_t obs_class, std::size_t state,
                                               double weight) {
    if (obs_class >= num_observation_classes() || state >= num_states())
        throw ModelError("observation evidence out of range");
    a_o_.at(obs_class, state) += weight;
}

void GenerativeModel::add_position_evidence(std::size_t position, std::size_t state,
                                            double weight) {
    if (position >= num_positions() || state >= num_states())
        throw ModelError("position evidence out of range");
    a_p_.at(position, state) += weight;
}

void GenerativeModel::update_transition(const TransitionEdge& edge,
                                        const TransitionSituation& situation, double q_trans,
                                        double q_prev) {
    if (edge.action >= b_s_.size() || edge.from_state >= num_states() ||
        edge.to_state >= num_states())
        throw ModelError("update_transition: unknown edge");

    double& count = b_s_[edge.action].at(edge.to_state, edge.from_state);
    count = std::max(floor_, count + q_trans * q_prev * count * rates_.rate(situation) *
                                 rates_.scale);

    if (situation.direction == TransitionDirection::Forward) {
        TransitionSituation rev = situation;
        rev.direction = TransitionDirection::Reverse;
        TransitionEdge back{edge.to_state, edge.from_state, actions_.opposite(edge.action)};
        double& rc = b_s_[back.action].at(back.to_state, back.from_state);
        rc = std::max(floor_, rc + q_trans * q_prev * rc * rates_.rate(rev) * rates_.scale);
    }
}

bool GenerativeModel::seed_transition(const TransitionEdge& edge, double strength) {
    if (edge.action >= b_s_.size() || edge.from_state >= num_states() ||
        edge.to_state >= num_states())
        throw ModelError("seed_transition: unknown edge");
    double& count = b_s_[edge.action].at(edge.to_state, edge.from_state);
    if (count > floor_ + 1e-12) return false;
    count = floor_ + strength;
    return true;
}

BeliefState GenerativeModel::infer_state(const BeliefState& prev, std::size_t action,
                                         std::optional<std::size_t> obs_class,
                                         std::size_t position_evidence) const {
    const std::size_t S = num_states();
    const std::size_t P = num_positions();
    if (S == 0) throw ModelError("infer_state on an empty model");
    if (prev.q_s.size() != S) throw ModelError("infer_state: stale previous belief");
    if (action >= b_s_.size()) throw ModelError("infer_state: unknown action");
    if (position_evidence >= P) throw ModelError("infer_state: unknown position");
    if (obs_class && *obs_class >= num_observation_classes())
        throw ModelError("infer_state: unknown observation class");

    const CountMatrix trans = normalized(b_s_[action]);
    const CountMatrix obs = normalized(a_o_);
    const CountMatrix pos = normalized(a_p_);

    BeliefState out;
    out.believed_pose = prev.believed_pose;
    out.q_s.assign(S, 0.0);
    double total = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        double prior = 0.0;
        for (std::size_t sp = 0; sp < S; ++sp) prior += trans.at(s, sp) * prev.q_s[sp];
        double w = prior * pos.at(position_evidence, s);
        if (obs_class) w *= obs.at(*obs_class, s);
        out.q_s[s] = w;
        total += w;
    }
    if (total <= 0.0) throw ModelError("infer_state: vanished posterior");
    for (double& v : out.q_s) v /= total;

    out.q_p.assign(P, 0.0);
    for (std::size_t p = 0; p < P; ++p) {
        double back = 0.0;
        for (std::size_t s = 0; s < S; ++s) back += pos.at(p, s) * out.q_s[s];
        out.q_p[p] = 0.1 * back;
    }
    out.q_p[position_evidence] += 0.9;
    return out;
}

bool GenerativeModel::operator==(const GenerativeModel& other) const {
    auto mat_eq = [](const CountMatrix& a, const CountMatrix& b) {
        return a.rows() == b.rows() && a.cols() == b.cols() && a.data() == b.data();
    };
    if (actions_.sector_count != other.actions_.sector_count ||
        actions_.include_stay != other.actions_.include_stay || floor_ != other.floor_)
        return false;
    if (!mat_eq(a_o_, other.a_o_) || !mat_eq(a_p_, other.a_p_)) return false;
    if (b_s_.size() != other.b_s_.size()) return false;
    for (std::size_t a = 0; a < b_s_.size(); ++a)
        if (!mat_eq(b_s_[a], other.b_s_[a])) return false;
    if (poses_.size() != other.poses_.size()) return false;
    for (std::size_t i = 0; i < poses_.size(); ++i) {
        if (poses_[i].x != other.poses_[i].x || poses_[i].y != other.poses_[i].y ||
            poses_[i].yaw != other.poses_[i].yaw)
            return false;
    }
    if (prototypes_.size() != other.prototypes_.size()) return false;
    for (std::size_t i = 0; i < prototypes_.size(); ++i) {
        if (prototypes_[i].depth != other.prototypes_[i].depth ||
            prototypes_[i].appearance != other.prototypes_[i].appearance)
            return false;
    }
    return true;
}

namespace {

json matrix_to_json(const CountMatrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

CountMatrix matrix_from_json(const json& j) {
    CountMatrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(), 0.0);
    m.data() = j.at("data").get<std::vector<double>>();
    if (m.data().size() != m.rows() * m.cols()) throw ModelError("matrix payload size mismatch");
    return m;
}

}  // namespace

std::string GenerativeModel::to_json_text() const {
    json j;
    j["sector_count"] = actions_.sector_count;
    j["include_stay"] = actions_.include_stay;
    j["count_floor"] = floor_;
    j["learning_rates"] = {
        {"forward_possible", rates_.forward_possible},
        {"forward_impossible", rates_.forward_impossible},
        {"forward_pred_possible", rates_.forward_pred_possible},
        {"forward_pred_impossible", rates_.forward_pred_impossible},
        {"reverse_possible", rates_.reverse_possible},
        {"reverse_impossible", rates_.reverse_impossible},
        {"reverse_pred_possible", rates_.reverse_pred_possible},
        {"reverse_pred_impossible", rates_.reverse_pred_impossible},
        {"scale", rates_.scale},
    };
    j["a_o"] = matrix_to_json(a_o_);
    j["a_p"] = matrix_to_json(a_p_);
    json slabs = json::array();
    for (const auto& m : b_s_) slabs.push_back(matrix_to_json(m));
    j["b_s"] = slabs;
    json poses = json::array();
    for (const auto& p : poses_) poses.push_back({p.x, p.y, p.yaw});
    j["poses"] = poses;
    json protos = json::array();
    for (const auto& sig : prototypes_)
        protos.push_back({{"depth", sig.depth}, {"appearance", sig.appearance}});
    j["prototypes"] = protos;
    return j.dump();
}

GenerativeModel GenerativeModel::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ModelError(std::string("model parse failure: ") + e.what());
    }
    ActionSpace actions{j.at("sector_count").get<std::size_t>(), j.at("include_stay").get<bool>()};
    LearningRateTable rates;
    const auto& lr = j.at("learning_rates");
    rates.forward_possible = lr.at("forward_possible").get<double>();
    rates.forward_impossible = lr.at("forward_impossible").get<double>();
    rates.forward_pred_possible = lr.at("forward_pred_possible").get<double>();
    rates.forward_pred_impossible = lr.at("forward_pred_impossible").get<double>();
    rates.reverse_possible = lr.at("reverse_possible").get<double>();
    rates.reverse_impossible = lr.at("reverse_impossible").get<double>();
    rates.reverse_pred_possible = lr.at("reverse_pred_possible").get<double>();
    rates.reverse_pred_impossible = lr.at("reverse_pred_impossible").get<double>();
    rates.scale = lr.at("scale").get<double>();

    GenerativeModel m(actions, j.at("count_floor").get<double>(), rates);
    m.a_o_ = matrix_from_json(j.at("a_o"));
    m.a_p_ = matrix_from_json(j.at("a_p"));
    m.b_s_.clear();
    for (const auto& slab : j.at("b_s")) m.b_s_.push_back(matrix_from_json(slab));
    if (m.b_s_.size() != actions.action_count())
        throw ModelError("transition slab count does not match the action space");
    for (const auto& p : j.at("poses"))
        m.poses_.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    for (const auto& proto : j.at("prototypes")) {
        ObservationSignature sig;
        sig.depth = proto.at("depth").get<std::vector<double>>();
        sig.appearance = proto.at("appearance").get<std::vector<int>>();
        m.prototypes_.push_back(std::move(sig));
    }
    if (m.a_o_.rows() != m.prototypes_.size() || m.a_p_.rows() != m.poses_.size())
        throw ModelError("model payload dimensions are inconsistent");
    return m;
}

}  // namespace topnav
