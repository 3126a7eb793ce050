#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nobn/epsilon_ml.hpp"
#include "nobn/exact.hpp"
#include "nobn/network.hpp"

namespace nobn {

enum class ProbabilitySpace {
  kAuto,    // log space once the network has more than kLogSpaceFactorCount factors
  kLinear,
  kLog,
};

inline constexpr std::size_t kLogSpaceFactorCount = 200;

/// Reported for every EpsilonML call the engine makes.
struct ExpansionEvent {
  const Subproblem* subproblem;
  double partial_probability;  // known-factor product of the expanded state
  double epsilon_new;          // threshold handed to EpsilonML (linear space)
  const Extension* extension;  // one per returned extension
};

struct SearchOptions {
  bool keep_accepted = false;
  ProbabilitySpace space = ProbabilitySpace::kAuto;
  std::function<void(const ExpansionEvent&)> on_extension;
  /// The search stops early once this passes; the result is then truncated.
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct SearchResult {
  double mass_accumulated = 0.0;
  std::vector<double> score;               // per node: mass with the node present
  std::vector<double> posterior_estimate;  // score / mass; NaN when mass is 0
  std::uint64_t states_explored = 0;
  std::uint64_t accepted_count = 0;
  std::vector<Instantiation> accepted;     // filled when keep_accepted
  bool truncated = false;                  // stopped at the deadline

  bool posteriors_defined() const noexcept { return mass_accumulated > 0.0; }
};

/// True iff every node is assigned.
bool complete(const Network& net, const Assignment& a);

/// Enumerates every complete instantiation consistent with ev whose joint is
/// >= epsilon_target, depth first, level by level from the deepest frontier.
/// Each expansion calls EpsilonML with epsilon_target / P(known factors).
/// epsilon_target = 0 enumerates every consistent instantiation. Impossible
/// evidence yields mass 0 rather than an error.
SearchResult top_epsilon(const Network& net, const Evidence& ev, double epsilon_target,
                         const SearchOptions& options = {});

/// Strictly decreasing, non-negative thresholds.
class EpsilonSchedule {
 public:
  EpsilonSchedule() = default;
  /// Throws Error(kUsage) unless values are strictly decreasing and >= 0.
  explicit EpsilonSchedule(std::vector<double> values);

  /// 1e-2, 1e-4, ..., 1e-20.
  static EpsilonSchedule standard();
  /// Comma-separated list, e.g. "1e-2,1e-4".
  static EpsilonSchedule parse(std::string_view text);

  const std::vector<double>& values() const noexcept { return values_; }
  bool empty() const noexcept { return values_.empty(); }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
};

struct TraceRow {
  double epsilon = 0.0;
  std::uint64_t states_explored = 0;
  std::uint64_t accepted_count = 0;
  double mass_accumulated = 0.0;
  double elapsed_ms = 0.0;
  bool truncated = false;
};

using ConvergenceTrace = std::vector<TraceRow>;

/// One independent top_epsilon run per schedule entry.
ConvergenceTrace run_schedule(const Network& net, const Evidence& ev,
                              const EpsilonSchedule& schedule,
                              const SearchOptions& options = {});

/// `<joint> <name>=<p|a> ...` per instantiation in node-id order, sorted by
/// descending joint and then lexicographically by the assignment text.
std::string format_accepted(const Network& net, const std::vector<Instantiation>& accepted);

/// Scientific notation with a lowercase exponent, shortest round-trip form.
std::string format_epsilon(double epsilon);

}  // namespace nobn
