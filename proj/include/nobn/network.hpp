#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nobn {

using NodeId = std::uint32_t;

enum class State : std::uint8_t { kUnassigned = 0, kAbsent = 1, kPresent = 2 };

std::string_view to_string(State s) noexcept;

struct Link {
  NodeId parent;
  double q;  // probability that this parent alone activates the child

  bool operator==(const Link&) const = default;
};

/// One binary node. Roots carry a prior and no links; non-roots carry a leak
/// and at least one link.
struct NodeSpec {
  std::string name;
  std::optional<double> prior;
  double leak = 0.0;
  std::vector<Link> links;

  bool is_root() const noexcept { return links.empty(); }
  bool operator==(const NodeSpec&) const = default;
};

struct LevelLabels {
  std::vector<int> levels;
  int max_level = 0;
};

/// Longest path from any root, computed in one topological pass. Requires
/// every parent id to be smaller than its child's id.
LevelLabels label_levels(std::span<const NodeSpec> nodes);

/// Immutable noisy-OR DAG. Node ids are declaration order, and every parent
/// precedes its children, so id order is a topological order.
class Network {
 public:
  Network() = default;

  /// Validates and takes ownership of the node list. Throws Error(kValidation)
  /// on duplicate names, bad parent references, parents declared after use,
  /// duplicate links, out-of-range probabilities or a malformed root/non-root.
  static Network build(std::vector<NodeSpec> nodes);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }

  const NodeSpec& node(NodeId id) const { return nodes_.at(id); }
  std::span<const NodeSpec> nodes() const noexcept { return nodes_; }
  std::span<const NodeId> children(NodeId id) const { return children_.at(id); }

  std::optional<NodeId> find(std::string_view name) const;
  NodeId id_of(std::string_view name) const;

  int level(NodeId id) const { return levels_.at(id); }
  std::span<const int> levels() const noexcept { return levels_; }
  int max_level() const noexcept { return max_level_; }
  /// Number of levels, one more than the maximum label.
  int level_count() const noexcept { return empty() ? 0 : max_level_ + 1; }
  /// Ids with the given label, ascending; empty for labels out of range.
  std::span<const NodeId> nodes_at_level(int level) const;

  std::size_t arc_count() const noexcept { return arc_count_; }

  bool operator==(const Network& other) const { return nodes_ == other.nodes_; }

 private:
  std::vector<NodeSpec> nodes_;
  std::unordered_map<std::string, NodeId> name_index_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<int> levels_;
  std::vector<std::vector<NodeId>> by_level_;
  int max_level_ = 0;
  std::size_t arc_count_ = 0;
};

struct Observation {
  NodeId node;
  State state;

  bool operator==(const Observation&) const = default;
};

/// Observed nodes, kept sorted by node id.
struct Evidence {
  std::vector<Observation> items;

  bool empty() const noexcept { return items.empty(); }
  std::size_t size() const noexcept { return items.size(); }
  bool operator==(const Evidence&) const = default;
};

/// Sorts by id and throws Error(kValidation) on duplicate or unknown ids.
Evidence make_evidence(const Network& net, std::vector<Observation> items);

// ---------------------------------------------------------------------------
// Noisy-OR factor arithmetic

/// P(node = node_state | parents) under the leaky noisy-OR
///   P(present | pa) = 1 - (1 - leak) * prod_{present p} (1 - q_p).
/// For a root the prior is used and parent_states is ignored. Throws
/// Error(kValidation) if a parent is missing from parent_states.
double cpt_probability(const Network& net, NodeId node, State node_state,
                       const std::map<NodeId, State>& parent_states);

/// Same, reading parent states from a full per-node state vector. Every
/// parent must be assigned.
double node_factor(const Network& net, NodeId node, std::span<const State> values);

/// Negative product synergy: p_ab * p_notab_notb < p_a_notb * p_nota_b.
bool nps_holds(double p_ab, double p_nota_notb, double p_a_notb, double p_nota_b) noexcept;

// ---------------------------------------------------------------------------
// Assignments

/// Partial instantiation with a cached product of its known joint factors.
/// A factor P(X | parents(X)) is known once X and all of its parents are
/// assigned. The cache is maintained in linear and log space.
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(const Network& net);
  Assignment(const Network& net, const Evidence& ev);

  State get(NodeId id) const { return values_.at(id); }
  bool is_assigned(NodeId id) const { return values_.at(id) != State::kUnassigned; }
  std::span<const State> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t assigned_count() const noexcept { return assigned_count_; }
  bool all_assigned() const noexcept { return assigned_count_ == values_.size(); }

  /// Throws Error(kValidation) when the node is already assigned or the state
  /// is kUnassigned.
  void assign(const Network& net, NodeId id, State state);

  double known_factor_product() const noexcept { return product_; }
  double log_known_factor_product() const noexcept { return log_product_; }
  std::size_t known_factor_count() const noexcept { return known_factors_; }

  /// Deepest level holding an assigned node with an unassigned parent, or -1.
  int frontier_level(const Network& net) const;

 private:
  void absorb_factor(double f);

  std::vector<State> values_;
  std::size_t assigned_count_ = 0;
  std::size_t known_factors_ = 0;
  double product_ = 1.0;
  double log_product_ = 0.0;
};

/// Product of known factors, recomputed from scratch in id order.
double partial_probability(const Network& net, const Assignment& a);
double partial_probability(const Network& net, std::span<const State> values);

/// Full joint of a complete assignment, in id order. Throws Error(kValidation)
/// if any node is unassigned.
double joint_probability(const Network& net, std::span<const State> values);
double joint_probability(const Network& net, const Assignment& a);

// ---------------------------------------------------------------------------
// Barren-node pruning

struct PrunedNetwork {
  Network network;
  std::vector<NodeId> original_id;                 // new id -> old id
  std::vector<std::optional<NodeId>> new_id;       // old id -> new id

  /// Evidence expressed in the pruned network's ids. Every observed node is
  /// retained by construction.
  Evidence map(const Evidence& ev) const;
};

/// Restricts the network to the ancestral closure of evidence and query
/// nodes. Posteriors of retained nodes are unchanged.
PrunedNetwork prune_barren(const Network& net, const Evidence& ev,
                           std::span<const NodeId> query = {});

// ---------------------------------------------------------------------------
// Text formats

/// Parses the NET format. Throws Error(kSyntax) with "line:col" for malformed
/// input and Error(kValidation) for semantic problems (unknown parent,
/// duplicate name, probability out of range, cycle).
Network parse_network(std::string_view text);

/// Canonical form: one node per line in id order, 17 significant digits.
std::string print_network(const Network& net);

/// Parses `<name> <present|absent>` lines. A leading `case ...` header line
/// (the sidecar case format) is skipped.
Evidence parse_evidence(const Network& net, std::string_view text);
std::string print_evidence(const Network& net, const Evidence& ev);

/// `%.17g`: round-trip exact for doubles.
std::string format_probability(double p);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace nobn
