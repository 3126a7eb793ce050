#include "nobn/netgen.hpp"

#include <algorithm>

#include "nobn/error.hpp"
#include "nobn/rng.hpp"

namespace nobn {

namespace {

[[noreturn]] void bad_shape(const std::string& msg) {
  throw Error(ErrorKind::kUsage, "invalid network shape: " + msg);
}

void check_range(const Range& r, const char* name) {
  if (!(r.lo >= 0.0 && r.hi <= 1.0 && r.lo <= r.hi)) {
    bad_shape(std::string(name) + " must satisfy 0 <= lo <= hi <= 1");
  }
}

std::string node_name(std::size_t level, std::size_t levels, std::size_t index) {
  if (level == 0) return "d" + std::to_string(index);
  if (level + 1 == levels) return "f" + std::to_string(index);
  return "h" + std::to_string(level) + "_" + std::to_string(index);
}

}  // namespace

NetShape NetShape::bn3_like(std::uint64_t seed) {
  NetShape shape;
  shape.nodes_per_level = {3, 10, 15, 20, 97};
  shape.seed = seed;
  return shape;
}

Network gen_network(const NetShape& shape) {
  if (shape.levels() < 2) bad_shape("at least two levels are required");
  for (std::size_t count : shape.nodes_per_level) {
    if (count == 0) bad_shape("every level needs at least one node");
  }
  if (shape.max_parents == 0) bad_shape("max_parents must be positive");
  if (!(shape.parent_locality >= 0.0 && shape.parent_locality <= 1.0)) {
    bad_shape("parent_locality must lie in [0,1]");
  }
  check_range(shape.prior_range, "prior_range");
  check_range(shape.q_range, "q_range");
  check_range(shape.leak_range, "leak_range");

  Rng rng(shape.seed);
  std::vector<NodeSpec> nodes;
  std::vector<std::size_t> layer_start;
  for (std::size_t level = 0; level < shape.levels(); ++level) {
    layer_start.push_back(nodes.size());
    const std::size_t above_begin = level == 0 ? 0 : layer_start[level - 1];
    const std::size_t above_end = layer_start[level];  // exclusive; also end of all shallower
    for (std::size_t i = 0; i < shape.nodes_per_level[level]; ++i) {
      NodeSpec spec;
      spec.name = node_name(level, shape.levels(), i);
      if (level == 0) {
        spec.prior = rng.uniform(shape.prior_range.lo, shape.prior_range.hi);
        nodes.push_back(std::move(spec));
        continue;
      }
      const std::size_t available = above_end;
      const std::size_t wanted =
          1 + rng.below(std::min<std::size_t>(shape.max_parents, available));
      std::vector<bool> used(above_end, false);
      auto add_parent = [&](std::size_t parent) {
        used[parent] = true;
        spec.links.push_back(
            {static_cast<NodeId>(parent), rng.uniform(shape.q_range.lo, shape.q_range.hi)});
      };
      add_parent(above_begin + rng.below(above_end - above_begin));
      while (spec.links.size() < wanted) {
        const bool local = rng.bernoulli(shape.parent_locality);
        const std::size_t begin = local ? above_begin : 0;
        std::vector<std::size_t> candidates;
        for (std::size_t p = begin; p < above_end; ++p) {
          if (!used[p]) candidates.push_back(p);
        }
        if (candidates.empty()) {
          for (std::size_t p = 0; p < above_end; ++p) {
            if (!used[p]) candidates.push_back(p);
          }
        }
        add_parent(candidates[rng.below(candidates.size())]);
      }
      std::sort(spec.links.begin(), spec.links.end(),
                [](const Link& a, const Link& b) { return a.parent < b.parent; });
      spec.leak = rng.uniform(shape.leak_range.lo, shape.leak_range.hi);
      nodes.push_back(std::move(spec));
    }
  }
  Network net = Network::build(std::move(nodes));
  for (std::size_t level = 0; level < shape.levels(); ++level) {
    for (std::size_t i = 0; i < shape.nodes_per_level[level]; ++i) {
      if (net.level(static_cast<NodeId>(layer_start[level] + i)) != static_cast<int>(level)) {
        throw Error(ErrorKind::kValidation, "generated level labels disagree with layers");
      }
    }
  }
  return net;
}

namespace {

std::vector<State> sample_with(const Network& net, Rng& rng) {
  std::vector<State> values(net.size(), State::kUnassigned);
  for (std::size_t id = 0; id < net.size(); ++id) {
    const NodeSpec& n = net.node(id);
    double p_present;
    if (n.is_root()) {
      p_present = *n.prior;
    } else {
      double survive = 1.0 - n.leak;
      for (const Link& link : n.links) {
        if (values[link.parent] == State::kPresent) survive *= 1.0 - link.q;
      }
      p_present = 1.0 - survive;
    }
    values[id] = rng.bernoulli(p_present) ? State::kPresent : State::kAbsent;
  }
  return values;
}

}  // namespace

std::vector<State> forward_sample(const Network& net, std::uint64_t seed) {
  Rng rng(seed);
  return sample_with(net, rng);
}

Case make_case(const Network& net, std::uint64_t seed, std::size_t finding_count,
               std::string case_id) {
  const auto deepest_span = net.nodes_at_level(net.max_level());
  std::vector<NodeId> deepest(deepest_span.begin(), deepest_span.end());
  if (net.empty() || finding_count > deepest.size()) {
    throw Error(ErrorKind::kUsage, "requested " + std::to_string(finding_count) +
                                       " findings but the deepest level has " +
                                       std::to_string(net.empty() ? 0 : deepest.size()));
  }
  Rng rng(seed);
  Case c;
  c.case_id = case_id.empty() ? "case-" + std::to_string(seed) : std::move(case_id);
  c.seed = seed;
  c.true_state = sample_with(net, rng);
  // Full Fisher-Yates so the selection order is independent of finding_count.
  for (std::size_t i = deepest.size(); i > 1; --i) {
    std::swap(deepest[i - 1], deepest[rng.below(i)]);
  }
  std::vector<Observation> items;
  for (std::size_t k = 0; k < finding_count; ++k) {
    items.push_back({deepest[k], c.true_state[deepest[k]]});
  }
  c.evidence = make_evidence(net, std::move(items));
  return c;
}

std::string print_case(const Network& net, const Case& c) {
  return "case " + c.case_id + " seed " + std::to_string(c.seed) + "\n" +
         print_evidence(net, c.evidence);
}

}  // namespace nobn
