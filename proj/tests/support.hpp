#pragma once

// Fixtures and independent oracles shared by the unit and acceptance tests.
// Nothing here calls the search code it is used to check.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nobn/epsilon_ml.hpp"
#include "nobn/netgen.hpp"
#include "nobn/network.hpp"
#include "nobn/rng.hpp"

namespace nobn::testing {

inline const State P = State::kPresent;
inline const State A = State::kAbsent;
inline const State U = State::kUnassigned;

inline std::string data_path(const std::string& name) {
  return std::string(NOBN_TEST_DATA_DIR) + "/" + name;
}

/// A prior 0.2; B leak 0.1, A:0.8; C leak 0.05, B:0.9.
inline Network chain3() {
  return parse_network(
      "node A prior 0.2\n"
      "node B leak 0.1 parents A:0.8\n"
      "node C leak 0.05 parents B:0.9\n");
}

inline Evidence observe(const Network& net, std::vector<std::pair<std::string, State>> obs) {
  std::vector<Observation> items;
  for (auto& [name, s] : obs) items.push_back({net.id_of(name), s});
  return make_evidence(net, std::move(items));
}

/// Level labeling by repeated breadth-first relabeling from the roots: every
/// child of the current frontier gets the next label, and the last label a
/// node receives is kept.
inline std::vector<int> bfs_relabel_levels(const Network& net) {
  std::vector<int> level(net.size(), 0);
  std::vector<NodeId> frontier;
  for (std::size_t id = 0; id < net.size(); ++id) {
    if (net.node(id).is_root()) frontier.push_back(static_cast<NodeId>(id));
  }
  int current = 0;
  while (!frontier.empty()) {
    std::set<NodeId> successors;
    for (NodeId n : frontier) {
      for (NodeId c : net.children(n)) successors.insert(c);
    }
    ++current;
    for (NodeId s : successors) level[s] = current;
    frontier.assign(successors.begin(), successors.end());
  }
  return level;
}

/// Random layered network with wide parameter ranges, total size <= max_nodes.
inline Network random_network(Rng& rng, std::size_t min_levels, std::size_t max_levels,
                              std::size_t max_nodes) {
  NetShape shape;
  const std::size_t levels = min_levels + rng.below(max_levels - min_levels + 1);
  std::size_t budget = max_nodes;
  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t reserve = levels - l - 1;
    const std::size_t cap = std::min<std::size_t>(5, budget - reserve);
    const std::size_t n = 1 + rng.below(cap);
    shape.nodes_per_level.push_back(n);
    budget -= n;
  }
  shape.max_parents = 1 + rng.below(4);
  shape.parent_locality = rng.uniform();
  shape.prior_range = {0.01, 0.9};
  shape.q_range = {0.05, 1.0};
  shape.leak_range = {0.0, 0.3};
  shape.seed = rng.next();
  return gen_network(shape);
}

/// Evidence on a random subset of nodes at any level, mostly drawn from a
/// forward sample so it is usually possible.
inline Evidence random_evidence(const Network& net, Rng& rng) {
  const std::vector<State> truth = forward_sample(net, rng.next());
  std::vector<Observation> items;
  const double keep = 0.2 + 0.6 * rng.uniform();
  for (std::size_t id = 0; id < net.size(); ++id) {
    if (!rng.bernoulli(keep)) continue;
    State s = truth[id];
    if (rng.bernoulli(0.05)) s = s == P ? A : P;
    items.push_back({static_cast<NodeId>(id), s});
  }
  if (items.empty()) {
    const NodeId id = static_cast<NodeId>(rng.below(net.size()));
    items.push_back({id, truth[id]});
  }
  return make_evidence(net, std::move(items));
}

inline double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * rng.uniform());
}

/// Product of finding CPT entries and root priors for a parent decision,
/// evaluated with the map-based cpt_probability.
inline double oracle_extension_product(const Network& net, const Subproblem& sub,
                                       const std::vector<State>& decision) {
  std::map<NodeId, State> states;
  for (const Observation& o : sub.fixed_parents) states[o.node] = o.state;
  for (std::size_t j = 0; j < decision.size(); ++j) states[sub.free_parents[j]] = decision[j];
  double product = 1.0;
  for (const Observation& f : sub.findings) {
    std::map<NodeId, State> parents;
    for (const Link& l : net.node(f.node).links) parents[l.parent] = states.at(l.parent);
    product *= cpt_probability(net, f.node, f.state, parents);
  }
  for (std::size_t j = 0; j < decision.size(); ++j) {
    const NodeSpec& n = net.node(sub.free_parents[j]);
    if (n.is_root()) product *= decision[j] == P ? *n.prior : 1.0 - *n.prior;
  }
  return product;
}

/// Every decision over the free parents (binary counting, slot 0 fastest).
inline std::vector<std::vector<State>> all_decisions(std::size_t n) {
  std::vector<std::vector<State>> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<State> d(n);
    for (std::size_t j = 0; j < n; ++j) d[j] = (mask >> j) & 1 ? P : A;
    out.push_back(std::move(d));
  }
  return out;
}

/// Random two-level network: `parents` roots over `findings` leaves.
inline Network random_two_level(Rng& rng, std::size_t parents, std::size_t findings) {
  NetShape shape;
  shape.nodes_per_level = {parents, findings};
  shape.max_parents = 1 + rng.below(std::min<std::size_t>(parents, 5));
  shape.prior_range = {0.001, 0.6};
  shape.q_range = {0.05, 0.99};
  shape.leak_range = {0.0, 0.2};
  shape.seed = rng.next();
  return gen_network(shape);
}

}  // namespace nobn::testing
