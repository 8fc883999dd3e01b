#pragma once

#include <optional>
#include <span>
#include <vector>

#include "topnav/model.hpp"
#include "topnav/similarity.hpp"

namespace topnav {

enum class NodeStatus { Visited, Hypothetical };

/// A place in the topological map. Node index == position id in the model's
/// pose table. Hypothetical nodes have a state but no observation class until
/// they are visited.
struct TopoNode {
    std::size_t position_id = 0;
    std::optional<std::size_t> state_id;
    NodeStatus status = NodeStatus::Hypothetical;
    std::optional<std::size_t> observation_class;
};

struct MapConfig {
    double influence_radius = 1.0;      // minimum spacing between nodes, meters
    double match_threshold = 0.85;      // signature similarity for a match
    double confidence_threshold = 0.6;  // belief confidence gate
    std::size_t relocalise_window = 3;  // consecutive views used to re-localise
    /// Transition pseudo-count placed on a newly sensed passage.
    double passage_seed = 4.0;
};

struct MatchResult {
    std::size_t class_id = 0;
    double score = 0.0;
};

/// One remembered (action, signature) pair for re-localisation. `action` is
/// the action that led to the view.
struct RecentView {
    std::size_t action = 0;
    std::optional<std::size_t> obs_class;
};

/// Shortest free range around a heading: the minimum panorama range over the
/// rays within a quarter sector of the bisector (at least the nearest ray).
double heading_clearance(const ObservationSignature& signature, double max_range, double bisector,
                         std::size_t sector_count);

/// Graph view over the generative model: node lifecycle, spacing, panorama
/// matching and lidar-driven expansion.
class TopoMap {
public:
    explicit TopoMap(MapConfig config = {}) : config_(config) {}

    const MapConfig& config() const { return config_; }
    std::size_t size() const { return nodes_.size(); }
    const TopoNode& node(std::size_t i) const { return nodes_.at(i); }
    const std::vector<TopoNode>& nodes() const { return nodes_; }

    std::size_t visited_count() const;

    /// Node whose pose lies within the influence radius of `pose`; the
    /// nearest one if several (ties break toward the lower id).
    std::optional<std::size_t> node_at(const GenerativeModel& model, const Pose& pose) const;

    /// Reverse lookup: node owning a state.
    std::optional<std::size_t> node_of_state(std::size_t state) const;

    /// Best stored prototype for a signature, or nullopt when the best score
    /// is below the match threshold.
    std::optional<MatchResult> match_observation(const GenerativeModel& model,
                                                 const ObservationSignature& signature) const;

    /// Create a Visited node (position + state) at `pose`.
    std::size_t add_visited_node(GenerativeModel& model, const Pose& pose,
                                 std::size_t obs_class);

    /// Flip a hypothetical node to Visited and attach its observation class.
    void mark_visited(std::size_t node_id, std::size_t obs_class);

    /// Drop hypothetical nodes along every sector bisector at influence-radius
    /// multiples, bounded by the panorama ranges, and seed transition counts
    /// between radius-adjacent nodes along each heading. Idempotent for a
    /// fixed (pose, signature) pair. Returns the ids of the new nodes.
    std::vector<std::size_t> expand_hypothetical(GenerativeModel& model,
                                                 const ObservationSignature& signature,
                                                 double max_range, const Pose& believed_pose);

    /// Forward-filter a window of consecutive views from a uniform state
    /// prior. The caller adopts the result only when its confidence clears
    /// the configured threshold.
    BeliefState relocalise(const GenerativeModel& model,
                           std::span<const RecentView> window) const;

    std::string to_json_text() const;
    static TopoMap from_json_text(const std::string& text);
    bool operator==(const TopoMap& other) const;

private:
    MapConfig config_;
    std::vector<TopoNode> nodes_;
};

}  // namespace topnav
