#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nobn/network.hpp"

namespace nobn {

/// One two-level search problem: assigned nodes of a single level whose
/// factors are still unknown, and the parents that would make them known.
struct Subproblem {
  std::vector<Observation> findings;       // sorted by id
  std::vector<NodeId> free_parents;        // search order
  std::vector<Observation> fixed_parents;  // sorted by id
};

/// A decision for every free parent (aligned with Subproblem::free_parents)
/// and the product of the factors it makes known:
///   prod_{findings} P(f | parents) * prod_{root free parents} P(r).
struct Extension {
  std::vector<State> parent_states;
  double new_factor_product = 0.0;
  double log_new_factor_product = 0.0;
};

/// Findings are the assigned nodes at `level` with at least one unassigned
/// parent. free_parents is ordered by descending strongest link into a
/// finding, ties by id. Returns nullopt when the level has no such nodes.
std::optional<Subproblem> build_subproblem(const Network& net, const Assignment& a, int level);

/// Search order for a set of free parents: descending max link probability
/// into any of the findings, ties broken by ascending id.
void order_free_parents(const Network& net, std::span<const Observation> findings,
                        std::vector<NodeId>& free_parents);

/// From-scratch product for a full parent decision. This is the reference
/// arithmetic: survive terms accumulate as (1 - leak), then fixed parents in
/// link order, then free parents in search order; finding factors multiply in
/// finding order and root priors in search order, finding part first.
double extension_product(const Network& net, const Subproblem& sub,
                         std::span<const State> parent_states);

/// Admissible bound on extension_product over every completion of the
/// decided prefix (decided.size() <= free_parents.size()). Undecided parents
/// are taken present for present findings, absent for absent findings, and
/// undecided roots contribute max(prior, 1 - prior). With a full decision
/// this equals extension_product bit for bit.
double upper_bound(const Network& net, const Subproblem& sub, std::span<const State> decided);

/// Threshold for one search. In log space `value` holds log(epsilon) and
/// products are accumulated as sums of logs.
struct Threshold {
  double value = 0.0;
  bool log_space = false;

  static Threshold linear(double epsilon) { return {epsilon, false}; }
  static Threshold log(double log_epsilon) { return {log_epsilon, true}; }
};

struct EpsilonMlStats {
  std::uint64_t bound_evaluations = 0;
  std::uint64_t pruned = 0;
  std::size_t peak_depth = 0;
};

/// Depth-first enumerator of every extension with product >= threshold.
/// Extensions stream out in discovery order; memory is one frame per free
/// parent. The network and subproblem must outlive the search.
class EpsilonMlSearch {
 public:
  EpsilonMlSearch(const Network& net, const Subproblem& sub, Threshold threshold);

  std::optional<Extension> next();

  const Subproblem& subproblem() const noexcept { return sub_; }
  const EpsilonMlStats& stats() const noexcept { return stats_; }

 private:
  struct ChildLink {
    std::uint32_t finding;
    double survive;  // 1 - q
  };
  struct Frame {
    std::array<State, 2> order{};
    std::uint8_t count = 0;
    std::uint8_t tried = 0;
    bool applied = false;
  };

  void apply(std::size_t depth, State s);
  void undo(std::size_t depth);
  double bound(std::size_t depth) const;
  bool accepts(double value) const noexcept;
  void open_frame(std::size_t depth);
  Extension make_extension() const;

  const Network& net_;
  const Subproblem& sub_;
  Threshold threshold_;

  // Flat per-free-parent and per-finding lists, indexed through offsets.
  std::vector<State> finding_state_;
  std::vector<double> survive_;              // per finding, decided part
  std::vector<ChildLink> links_;             // grouped by free parent
  std::vector<std::uint32_t> link_begin_;    // n_free + 1 offsets into links_
  std::vector<double> remaining_;            // (1-q) of a finding's free parents, slot order
  std::vector<std::uint32_t> remaining_depth_;
  std::vector<std::uint32_t> remaining_begin_;  // n_findings + 1 offsets
  std::vector<std::optional<double>> root_prior_;  // per free parent

  std::vector<State> decided_;
  std::vector<double> root_product_;  // prefix product of decided root factors
  std::vector<std::pair<std::uint32_t, double>> undo_log_;  // saved survive_ entries
  std::vector<std::size_t> undo_mark_;                      // undo_log_ size before each depth
  std::vector<Frame> frames_;
  bool started_ = false;
  bool done_ = false;
  EpsilonMlStats stats_;
};

/// Collects every extension of sub with product >= epsilon.
std::vector<Extension> epsilon_ml(const Network& net, const Subproblem& sub, double epsilon);

}  // namespace nobn
