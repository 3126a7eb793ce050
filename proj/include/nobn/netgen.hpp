#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nobn/network.hpp"

namespace nobn {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

/// Layered random network description. Layer 0 holds the roots ("diseases"),
/// the last layer the findings.
struct NetShape {
  std::vector<std::size_t> nodes_per_level;
  std::size_t max_parents = 3;
  double parent_locality = 0.8;  // chance an extra parent comes from the layer just above
  Range prior_range{0.001, 0.1};
  Range q_range{0.2, 0.95};
  Range leak_range{0.0, 0.05};
  std::uint64_t seed = 0;

  std::size_t levels() const noexcept { return nodes_per_level.size(); }

  /// Five layers, 3 roots over 97 findings, 145 nodes in total.
  static NetShape bn3_like(std::uint64_t seed);
};

/// Deterministic in the shape (seed included). Every node below layer 0 gets
/// 1..max_parents distinct parents from shallower layers, the first one from
/// the layer directly above, so level labels equal layer indices. Throws
/// Error(kUsage) for an invalid shape.
Network gen_network(const NetShape& shape);

/// Ancestral sample in id order.
std::vector<State> forward_sample(const Network& net, std::uint64_t seed);

struct Case {
  std::string case_id;
  std::uint64_t seed = 0;
  Evidence evidence;
  std::vector<State> true_state;
};

/// Samples a true state and observes `finding_count` deepest-level nodes
/// chosen uniformly without replacement. The choice order does not depend on
/// finding_count, so a larger count extends a smaller one with the same seed.
/// Throws Error(kUsage) if finding_count exceeds the deepest level.
Case make_case(const Network& net, std::uint64_t seed, std::size_t finding_count,
               std::string case_id = {});

/// Sidecar format: `case <id> seed <seed>` followed by evidence lines.
std::string print_case(const Network& net, const Case& c);

}  // namespace nobn
