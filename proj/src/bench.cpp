#include "nobn/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "nobn/error.hpp"
#include "nobn/exact.hpp"
#include "nobn/rng.hpp"

namespace nobn {

std::string bench_csv_header() {
  return "case_id,epsilon,states_explored,accepted_count,mass_accumulated,gold_mass,"
         "mass_fraction,elapsed_ms";
}

std::string format_bench_row(const BenchRow& row) {
  auto opt = [](const std::optional<double>& v) {
    return v ? format_probability(*v) : std::string();
  };
  std::string elapsed;
  if (row.elapsed_ms) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *row.elapsed_ms);
    elapsed = buf;
  }
  return row.case_id + "," + format_epsilon(row.epsilon) + "," +
         std::to_string(row.states_explored) + "," + std::to_string(row.accepted_count) + "," +
         format_probability(row.mass_accumulated) + "," + opt(row.gold_mass) + "," +
         opt(row.mass_fraction) + "," + elapsed;
}

std::vector<BenchRow> trace_rows(const std::string& case_id, const ConvergenceTrace& trace,
                                 std::optional<double> gold_mass, bool with_timing) {
  std::vector<BenchRow> rows;
  for (const TraceRow& t : trace) {
    BenchRow row;
    row.case_id = case_id;
    row.epsilon = t.epsilon;
    row.states_explored = t.states_explored;
    row.accepted_count = t.accepted_count;
    row.mass_accumulated = t.mass_accumulated;
    row.gold_mass = gold_mass;
    if (gold_mass && *gold_mass > 0.0) {
      row.mass_fraction = std::min(1.0, t.mass_accumulated / *gold_mass);
    }
    if (with_timing) row.elapsed_ms = t.elapsed_ms;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::uint64_t case_seed(std::uint64_t bench_seed, std::size_t index) {
  SplitMix64 stream(bench_seed);
  std::uint64_t s = 0;
  for (std::size_t i = 0; i <= index; ++i) s = stream.next();
  return s;
}

namespace {

struct CaseOutcome {
  std::vector<BenchRow> rows;
  CaseSummary summary;
  std::vector<std::string> warnings;
};

CaseOutcome run_one(const Network& net, const Case& c, const BenchConfig& config) {
  CaseOutcome out;
  out.summary.case_id = c.case_id;
  const PrunedNetwork pruned = prune_barren(net, c.evidence);
  const Evidence ev = pruned.map(c.evidence);
  SearchOptions options;
  options.deadline = config.deadline;
  const ConvergenceTrace trace = run_schedule(pruned.network, ev, config.schedule, options);
  out.summary.truncated = !trace.empty() && trace.back().truncated;

  std::optional<double> gold;
  switch (config.gold) {
    case GoldMode::kNone:
      break;
    case GoldMode::kExact:
      try {
        gold = exact_inference(pruned.network, ev, config.free_node_cap).evidence_probability;
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::kImpossibleEvidence) {
          gold = 0.0;
          out.warnings.push_back(c.case_id + ": impossible evidence");
        } else if (e.kind() == ErrorKind::kCapExceeded) {
          out.summary.gold_capped = true;
          out.warnings.push_back(c.case_id + ": gold skipped, " + e.what());
        } else {
          throw;
        }
      }
      break;
    case GoldMode::kDeepRun:
      if (out.summary.truncated) break;
      {
        const SearchResult deep = top_epsilon(pruned.network, ev, config.gold_epsilon, options);
        if (deep.truncated) {
          out.summary.truncated = true;
        } else {
          gold = deep.mass_accumulated;
        }
      }
      break;
  }
  out.summary.gold_mass = gold;
  if (out.summary.truncated) out.warnings.push_back(c.case_id + ": stopped at the deadline");
  out.rows = trace_rows(c.case_id, trace, gold, config.with_timing);
  for (const BenchRow& row : out.rows) {
    if (row.mass_fraction && *row.mass_fraction >= kConvergedFraction) {
      out.summary.convergence_epsilon = row.epsilon;
      break;
    }
  }
  return out;
}

}  // namespace

BenchReport run_cases(const Network& net, const std::vector<Case>& cases,
                      const BenchConfig& config) {
  std::vector<CaseOutcome> outcomes(cases.size());
  const unsigned jobs = std::max(1u, std::min<unsigned>(config.jobs, cases.size()));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < cases.size(); ++i) outcomes[i] = run_one(net, cases[i], config);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < cases.size(); i = next++) {
            outcomes[i] = run_one(net, cases[i], config);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<std::size_t> order(cases.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cases[a].case_id < cases[b].case_id;
  });
  BenchReport report;
  for (std::size_t i : order) {
    auto& o = outcomes[i];
    report.rows.insert(report.rows.end(), o.rows.begin(), o.rows.end());
    report.cases.push_back(std::move(o.summary));
    report.warnings.insert(report.warnings.end(), o.warnings.begin(), o.warnings.end());
  }
  return report;
}

BenchReport run_bench(const Network& net, const BenchConfig& config) {
  std::vector<Case> cases;
  for (std::size_t i = 0; i < config.cases; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "case-%03zu", i);
    cases.push_back(make_case(net, case_seed(config.seed, i), config.findings, id));
  }
  return run_cases(net, cases, config);
}

std::string format_summary(const BenchReport& report) {
  std::string out = "# convergence (largest epsilon with mass_fraction >= 0.99)\n";
  out += "case_id,gold_mass,convergence_epsilon\n";
  for (const CaseSummary& c : report.cases) {
    out += c.case_id + "," + (c.gold_mass ? format_probability(*c.gold_mass) : "") + "," +
           (c.convergence_epsilon ? format_epsilon(*c.convergence_epsilon) : "") + "\n";
  }
  out += "# states_vs_neglog10_epsilon\n";
  out += "case_id,neg_log10_epsilon,states_explored\n";
  for (const BenchRow& row : report.rows) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", row.epsilon > 0.0 ? -std::log10(row.epsilon) : INFINITY);
    out += row.case_id + "," + buf + "," + std::to_string(row.states_explored) + "\n";
  }
  return out;
}

std::optional<double> median_convergence_neglog(const BenchReport& report) {
  std::vector<double> values;
  for (const CaseSummary& c : report.cases) {
    values.push_back(c.convergence_epsilon && *c.convergence_epsilon > 0.0
                         ? -std::log10(*c.convergence_epsilon)
                         : std::numeric_limits<double>::infinity());
  }
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace nobn
