#include "nobn/exact.hpp"

#include "nobn/error.hpp"
#include "nobn/summation.hpp"

namespace nobn {

void enumerate_consistent(const Network& net, const Evidence& ev, const InstantiationVisitor& visit,
                          std::size_t free_node_cap) {
  std::vector<State> values(net.size(), State::kUnassigned);
  for (const Observation& o : ev.items) values.at(o.node) = o.state;
  std::vector<NodeId> free;
  for (std::size_t id = 0; id < net.size(); ++id) {
    if (values[id] == State::kUnassigned) free.push_back(static_cast<NodeId>(id));
  }
  if (free.size() > free_node_cap) {
    throw Error(ErrorKind::kCapExceeded,
                std::to_string(free.size()) + " free nodes exceed the exact-inference cap of " +
                    std::to_string(free_node_cap));
  }
  for (NodeId id : free) values[id] = State::kAbsent;

  // Binary counter with the lowest free id as digit 0.
  for (;;) {
    visit(values, joint_probability(net, values));
    std::size_t digit = 0;
    while (digit < free.size() && values[free[digit]] == State::kPresent) {
      values[free[digit]] = State::kAbsent;
      ++digit;
    }
    if (digit == free.size()) break;
    values[free[digit]] = State::kPresent;
  }
}

ExactResult exact_inference(const Network& net, const Evidence& ev, std::size_t free_node_cap) {
  CompensatedSum mass;
  std::vector<CompensatedSum> present(net.size());
  ExactResult result;
  enumerate_consistent(
      net, ev,
      [&](std::span<const State> values, double joint) {
        ++result.instantiation_count;
        mass.add(joint);
        for (std::size_t id = 0; id < values.size(); ++id) {
          if (values[id] == State::kPresent) present[id].add(joint);
        }
      },
      free_node_cap);
  result.evidence_probability = mass.value();
  if (!(result.evidence_probability > 0.0)) {
    throw Error(ErrorKind::kImpossibleEvidence, "evidence has zero probability");
  }
  result.posteriors.resize(net.size());
  for (std::size_t id = 0; id < net.size(); ++id) {
    result.posteriors[id] = present[id].value() / result.evidence_probability;
  }
  return result;
}

std::vector<Instantiation> instantiations_above(const Network& net, const Evidence& ev,
                                                double epsilon, std::size_t free_node_cap) {
  std::vector<Instantiation> out;
  enumerate_consistent(
      net, ev,
      [&](std::span<const State> values, double joint) {
        if (joint >= epsilon) out.push_back({{values.begin(), values.end()}, joint});
      },
      free_node_cap);
  return out;
}

}  // namespace nobn
