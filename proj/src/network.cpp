#include "nobn/network.hpp"

#include <algorithm>
#include <cmath>

#include "nobn/error.hpp"

namespace nobn {

std::string_view to_string(State s) noexcept {
  switch (s) {
    case State::kPresent: return "present";
    case State::kAbsent: return "absent";
    case State::kUnassigned: break;
  }
  return "unassigned";
}

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

[[noreturn]] void invalid(const std::string& msg) {
  throw Error(ErrorKind::kValidation, msg);
}

}  // namespace

LevelLabels label_levels(std::span<const NodeSpec> nodes) {
  LevelLabels out;
  out.levels.assign(nodes.size(), 0);
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    int level = 0;
    for (const Link& link : nodes[id].links) {
      level = std::max(level, out.levels[link.parent] + 1);
    }
    out.levels[id] = level;
    out.max_level = std::max(out.max_level, level);
  }
  return out;
}

Network Network::build(std::vector<NodeSpec> nodes) {
  Network net;
  net.children_.resize(nodes.size());
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    const NodeSpec& n = nodes[id];
    if (n.name.empty()) invalid("node " + std::to_string(id) + " has an empty name");
    if (!net.name_index_.emplace(n.name, static_cast<NodeId>(id)).second) {
      invalid("duplicate node name '" + n.name + "'");
    }
    if (n.is_root()) {
      if (!n.prior) invalid("root node '" + n.name + "' has no prior");
      if (!is_probability(*n.prior)) {
        invalid("prior of '" + n.name + "' is outside [0,1]");
      }
      continue;
    }
    if (n.prior) invalid("non-root node '" + n.name + "' must not carry a prior");
    if (!is_probability(n.leak)) invalid("leak of '" + n.name + "' is outside [0,1]");
    for (std::size_t i = 0; i < n.links.size(); ++i) {
      const Link& link = n.links[i];
      if (link.parent >= id) {
        invalid("parent " + std::to_string(link.parent) + " of '" + n.name +
                "' is not declared before it");
      }
      if (!is_probability(link.q)) {
        invalid("link probability " + nodes[link.parent].name + "->" + n.name +
                " is outside [0,1]");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (n.links[j].parent == link.parent) {
          invalid("duplicate parent '" + nodes[link.parent].name + "' on '" + n.name + "'");
        }
      }
      net.children_[link.parent].push_back(static_cast<NodeId>(id));
      ++net.arc_count_;
    }
  }
  LevelLabels labels = label_levels(nodes);
  net.levels_ = std::move(labels.levels);
  net.max_level_ = labels.max_level;
  net.by_level_.resize(nodes.empty() ? 0 : labels.max_level + 1);
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    net.by_level_[net.levels_[id]].push_back(static_cast<NodeId>(id));
  }
  net.nodes_ = std::move(nodes);
  return net;
}

std::optional<NodeId> Network::find(std::string_view name) const {
  auto it = name_index_.find(std::string(name));
  if (it == name_index_.end()) return std::nullopt;
  return it->second;
}

NodeId Network::id_of(std::string_view name) const {
  auto id = find(name);
  if (!id) invalid("unknown node '" + std::string(name) + "'");
  return *id;
}

std::span<const NodeId> Network::nodes_at_level(int level) const {
  if (level < 0 || static_cast<std::size_t>(level) >= by_level_.size()) return {};
  return by_level_[level];
}

Evidence make_evidence(const Network& net, std::vector<Observation> items) {
  std::sort(items.begin(), items.end(),
            [](const Observation& a, const Observation& b) { return a.node < b.node; });
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].node >= net.size()) {
      invalid("evidence references unknown node id " + std::to_string(items[i].node));
    }
    if (items[i].state == State::kUnassigned) {
      invalid("evidence for '" + net.node(items[i].node).name + "' has no state");
    }
    if (i > 0 && items[i].node == items[i - 1].node) {
      invalid("node '" + net.node(items[i].node).name + "' observed twice");
    }
  }
  return Evidence{std::move(items)};
}

// ---------------------------------------------------------------------------

double cpt_probability(const Network& net, NodeId node, State node_state,
                       const std::map<NodeId, State>& parent_states) {
  const NodeSpec& n = net.node(node);
  double p_present;
  if (n.is_root()) {
    p_present = *n.prior;
  } else {
    double survive = 1.0 - n.leak;
    for (const Link& link : n.links) {
      auto it = parent_states.find(link.parent);
      if (it == parent_states.end() || it->second == State::kUnassigned) {
        invalid("missing state for parent '" + net.node(link.parent).name + "' of '" +
                n.name + "'");
      }
      if (it->second == State::kPresent) survive *= 1.0 - link.q;
    }
    p_present = 1.0 - survive;
  }
  return node_state == State::kPresent ? p_present : 1.0 - p_present;
}

double node_factor(const Network& net, NodeId node, std::span<const State> values) {
  const NodeSpec& n = net.node(node);
  if (n.is_root()) {
    return values[node] == State::kPresent ? *n.prior : 1.0 - *n.prior;
  }
  double survive = 1.0 - n.leak;
  for (const Link& link : n.links) {
    if (values[link.parent] == State::kPresent) survive *= 1.0 - link.q;
  }
  return values[node] == State::kPresent ? 1.0 - survive : survive;
}

bool nps_holds(double p_ab, double p_nota_notb, double p_a_notb, double p_nota_b) noexcept {
  return p_ab * p_nota_notb < p_a_notb * p_nota_b;
}

// ---------------------------------------------------------------------------

Assignment::Assignment(const Network& net) : values_(net.size(), State::kUnassigned) {}

Assignment::Assignment(const Network& net, const Evidence& ev) : Assignment(net) {
  for (const Observation& o : ev.items) assign(net, o.node, o.state);
}

namespace {

bool parents_assigned(const NodeSpec& n, std::span<const State> values) {
  return std::all_of(n.links.begin(), n.links.end(), [&](const Link& l) {
    return values[l.parent] != State::kUnassigned;
  });
}

}  // namespace

void Assignment::absorb_factor(double f) {
  product_ *= f;
  log_product_ += std::log(f);
  ++known_factors_;
}

void Assignment::assign(const Network& net, NodeId id, State state) {
  if (state == State::kUnassigned) invalid("cannot assign the unassigned state");
  if (values_.at(id) != State::kUnassigned) {
    invalid("node '" + net.node(id).name + "' is already assigned");
  }
  values_[id] = state;
  ++assigned_count_;
  if (parents_assigned(net.node(id), values_)) absorb_factor(node_factor(net, id, values_));
  for (NodeId child : net.children(id)) {
    if (values_[child] != State::kUnassigned && parents_assigned(net.node(child), values_)) {
      absorb_factor(node_factor(net, child, values_));
    }
  }
}

int Assignment::frontier_level(const Network& net) const {
  for (int level = net.max_level(); level >= 0; --level) {
    for (NodeId id : net.nodes_at_level(level)) {
      if (values_[id] != State::kUnassigned && !parents_assigned(net.node(id), values_)) {
        return level;
      }
    }
  }
  return -1;
}

double partial_probability(const Network& net, std::span<const State> values) {
  double p = 1.0;
  for (std::size_t id = 0; id < net.size(); ++id) {
    if (values[id] == State::kUnassigned) continue;
    if (!parents_assigned(net.node(id), values)) continue;
    p *= node_factor(net, static_cast<NodeId>(id), values);
  }
  return p;
}

double partial_probability(const Network& net, const Assignment& a) {
  return partial_probability(net, a.values());
}

double joint_probability(const Network& net, std::span<const State> values) {
  if (values.size() != net.size()) invalid("assignment size does not match network");
  double p = 1.0;
  for (std::size_t id = 0; id < net.size(); ++id) {
    if (values[id] == State::kUnassigned) {
      invalid("joint of an incomplete assignment ('" + net.node(id).name + "' unassigned)");
    }
    p *= node_factor(net, static_cast<NodeId>(id), values);
  }
  return p;
}

double joint_probability(const Network& net, const Assignment& a) {
  return joint_probability(net, a.values());
}

// ---------------------------------------------------------------------------

Evidence PrunedNetwork::map(const Evidence& ev) const {
  Evidence out;
  out.items.reserve(ev.items.size());
  for (const Observation& o : ev.items) {
    const auto& mapped = new_id.at(o.node);
    if (!mapped) invalid("observed node was pruned");
    out.items.push_back({*mapped, o.state});
  }
  return out;
}

PrunedNetwork prune_barren(const Network& net, const Evidence& ev,
                           std::span<const NodeId> query) {
  std::vector<bool> keep(net.size(), false);
  for (const Observation& o : ev.items) keep.at(o.node) = true;
  for (NodeId q : query) keep.at(q) = true;
  // Parents precede children, so one reverse sweep closes over ancestors.
  for (std::size_t id = net.size(); id-- > 0;) {
    if (!keep[id]) continue;
    for (const Link& link : net.node(id).links) keep[link.parent] = true;
  }

  PrunedNetwork out;
  out.new_id.assign(net.size(), std::nullopt);
  std::vector<NodeSpec> nodes;
  for (std::size_t id = 0; id < net.size(); ++id) {
    if (!keep[id]) continue;
    out.new_id[id] = static_cast<NodeId>(nodes.size());
    out.original_id.push_back(static_cast<NodeId>(id));
    NodeSpec spec = net.node(id);
    for (Link& link : spec.links) link.parent = *out.new_id[link.parent];
    nodes.push_back(std::move(spec));
  }
  out.network = Network::build(std::move(nodes));
  return out;
}

}  // namespace nobn
