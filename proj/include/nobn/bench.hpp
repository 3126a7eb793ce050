#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nobn/netgen.hpp"
#include "nobn/network.hpp"
#include "nobn/top_epsilon.hpp"

namespace nobn {

inline constexpr double kConvergedFraction = 0.99;

struct BenchRow {
  std::string case_id;
  double epsilon = 0.0;
  std::uint64_t states_explored = 0;
  std::uint64_t accepted_count = 0;
  double mass_accumulated = 0.0;
  std::optional<double> gold_mass;
  std::optional<double> mass_fraction;
  std::optional<double> elapsed_ms;  // empty when timing is suppressed
};

/// `case_id,epsilon,states_explored,accepted_count,mass_accumulated,gold_mass,mass_fraction,elapsed_ms`
std::string bench_csv_header();
std::string format_bench_row(const BenchRow& row);

/// Rows for one case in schedule order. fraction = mass / gold when gold > 0.
std::vector<BenchRow> trace_rows(const std::string& case_id, const ConvergenceTrace& trace,
                                 std::optional<double> gold_mass, bool with_timing);

enum class GoldMode {
  kNone,
  kExact,     // brute-force oracle, subject to the free-node cap
  kDeepRun,   // top_epsilon at gold_epsilon stands in for the exact mass
};

struct BenchConfig {
  std::size_t cases = 1;
  std::size_t findings = 0;
  std::uint64_t seed = 0;
  EpsilonSchedule schedule = EpsilonSchedule::standard();
  unsigned jobs = 1;
  GoldMode gold = GoldMode::kNone;
  double gold_epsilon = 1e-30;
  std::size_t free_node_cap = 24;
  bool with_timing = true;
  /// Runs still going at this point stop early and mark their case truncated.
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct CaseSummary {
  std::string case_id;
  std::optional<double> gold_mass;
  /// Largest schedule epsilon whose mass fraction reaches kConvergedFraction.
  std::optional<double> convergence_epsilon;
  bool gold_capped = false;
  bool truncated = false;  // a schedule or gold run hit the deadline
};

struct BenchReport {
  std::vector<BenchRow> rows;  // sorted by case id, then decreasing epsilon
  std::vector<CaseSummary> cases;
  std::vector<std::string> warnings;
};

/// Seed of the i-th case for a bench seed (SplitMix64 stream).
std::uint64_t case_seed(std::uint64_t bench_seed, std::size_t index);

/// Generates config.cases cases with make_case, prunes barren nodes for each,
/// runs the schedule and the gold computation, in parallel over cases when
/// jobs > 1. Output does not depend on jobs.
BenchReport run_bench(const Network& net, const BenchConfig& config);

/// Runs a prepared list of cases (already generated) through the same path.
BenchReport run_cases(const Network& net, const std::vector<Case>& cases,
                      const BenchConfig& config);

/// Convergence table and the states-vs-(-log10 epsilon) table as CSV blocks.
std::string format_summary(const BenchReport& report);

/// Median of the convergence epsilons in -log10 space; cases that never
/// converge count as +infinity there. Returns nullopt for no cases.
std::optional<double> median_convergence_neglog(const BenchReport& report);

}  // namespace nobn
