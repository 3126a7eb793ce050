#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nobn/network.hpp"

namespace nobn {

inline constexpr std::size_t kDefaultFreeNodeCap = 24;

/// A complete instantiation and its joint probability.
struct Instantiation {
  std::vector<State> values;
  double joint = 0.0;

  bool operator==(const Instantiation&) const = default;
};

struct ExactResult {
  double evidence_probability = 0.0;
  std::vector<double> posteriors;  // P(present | evidence) per node
  std::uint64_t instantiation_count = 0;
};

using InstantiationVisitor = std::function<void(std::span<const State>, double joint)>;

/// Calls visit once for every complete assignment agreeing with ev, in binary
/// counting order over the free nodes (lowest free id is the least
/// significant digit, absent before present). Throws Error(kCapExceeded) when
/// more than free_node_cap nodes are unobserved.
void enumerate_consistent(const Network& net, const Evidence& ev, const InstantiationVisitor& visit,
                          std::size_t free_node_cap = kDefaultFreeNodeCap);

/// Brute-force posteriors. Throws Error(kImpossibleEvidence) when the
/// evidence has zero probability.
ExactResult exact_inference(const Network& net, const Evidence& ev,
                            std::size_t free_node_cap = kDefaultFreeNodeCap);

/// Every consistent complete assignment with joint >= epsilon, in enumeration
/// order.
std::vector<Instantiation> instantiations_above(const Network& net, const Evidence& ev,
                                                double epsilon,
                                                std::size_t free_node_cap = kDefaultFreeNodeCap);

}  // namespace nobn
