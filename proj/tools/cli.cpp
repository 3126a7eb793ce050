#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>

#include "nobn/bench.hpp"
#include "nobn/epsilon_ml.hpp"
#include "nobn/error.hpp"
#include "nobn/exact.hpp"
#include "nobn/netgen.hpp"
#include "nobn/network.hpp"
#include "nobn/top_epsilon.hpp"

namespace nobn::cli {

namespace {

namespace fs = std::filesystem;

std::string level_word(int levels) {
  static const char* const kWords[] = {"zero", "one", "two",   "three", "four", "five",
                                       "six",  "seven", "eight", "nine", "ten"};
  if (levels >= 0 && levels <= 10) return kWords[levels];
  return std::to_string(levels);
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    if (end > pos) out.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

double parse_double(const std::string& text, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0') {
    throw Error(ErrorKind::kUsage, std::string("bad ") + what + " '" + text + "'");
  }
  return v;
}

Range parse_range(const std::string& text, const char* what) {
  auto parts = split_csv(text);
  if (parts.size() != 2) {
    throw Error(ErrorKind::kUsage, std::string(what) + " expects lo,hi");
  }
  return {parse_double(parts[0], what), parse_double(parts[1], what)};
}

std::vector<NodeId> resolve_query(const Network& net, const std::string& names) {
  std::vector<NodeId> ids;
  for (const std::string& name : split_csv(names)) ids.push_back(net.id_of(name));
  return ids;
}

std::string fmt(double v) { return format_probability(v); }

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& net_path, std::ostream& out) {
  const Network net = parse_network(read_text_file(net_path));
  const int levels = net.level_count();
  out << net.size() << " nodes, " << net.arc_count() << " arcs, " << levels << " levels\n";
  out << level_word(levels) << "-level network\n";
  out << "max_level " << net.max_level() << "\n";
  for (int l = 0; l < levels; ++l) {
    out << "level " << l << ": " << net.nodes_at_level(l).size() << " nodes\n";
  }
  return kOk;
}

int cmd_exact(const std::string& net_path, const std::string& ev_path, std::size_t cap,
              std::ostream& out) {
  const Network net = parse_network(read_text_file(net_path));
  const Evidence ev = parse_evidence(net, read_text_file(ev_path));
  const ExactResult r = exact_inference(net, ev, cap);
  out << "evidence_probability " << fmt(r.evidence_probability) << "\n";
  out << "instantiations " << r.instantiation_count << "\n";
  for (std::size_t id = 0; id < net.size(); ++id) {
    out << "posterior " << net.node(static_cast<NodeId>(id)).name << " "
        << fmt(r.posteriors[id]) << "\n";
  }
  return kOk;
}

int cmd_eml(const std::string& net_path, const std::string& ev_path, double epsilon,
            std::ostream& out) {
  const Network net = parse_network(read_text_file(net_path));
  const Evidence ev = parse_evidence(net, read_text_file(ev_path));
  const Assignment a(net, ev);
  const int level = a.frontier_level(net);
  std::optional<Subproblem> sub;
  if (level >= 0) sub = build_subproblem(net, a, level);
  if (!sub) {
    throw Error(ErrorKind::kValidation, "no observed node has an unobserved parent");
  }
  auto names = [&](auto&& items, auto&& name_of) {
    std::string s;
    for (const auto& item : items) s += " " + name_of(item);
    return s;
  };
  auto obs_name = [&](const Observation& o) {
    return net.node(o.node).name + "=" + std::string(to_string(o.state));
  };
  out << "level " << level << "\n";
  out << "findings" << names(sub->findings, obs_name) << "\n";
  out << "free_parents"
      << names(sub->free_parents, [&](NodeId id) { return net.node(id).name; }) << "\n";
  out << "fixed_parents" << names(sub->fixed_parents, obs_name) << "\n";
  const auto extensions = epsilon_ml(net, *sub, epsilon);
  out << "extensions " << extensions.size() << "\n";
  for (const Extension& ext : extensions) {
    out << fmt(ext.new_factor_product);
    for (std::size_t j = 0; j < ext.parent_states.size(); ++j) {
      out << " " << net.node(sub->free_parents[j]).name
          << (ext.parent_states[j] == State::kPresent ? "=p" : "=a");
    }
    out << "\n";
  }
  return kOk;
}

struct InferArgs {
  std::string net_path;
  std::string ev_path;
  std::optional<double> epsilon;
  std::string schedule;
  std::string dump_path;
  std::string post_path;
  std::string query;
  std::string case_id;
  bool gold = false;
  bool no_timing = false;
  std::size_t cap = kDefaultFreeNodeCap;
};

int cmd_infer(const InferArgs& args, std::ostream& out, std::ostream& err) {
  const Network net = parse_network(read_text_file(args.net_path));
  const Evidence ev = parse_evidence(net, read_text_file(args.ev_path));
  if (args.epsilon && !args.schedule.empty()) {
    throw Error(ErrorKind::kUsage, "use either --epsilon or --schedule");
  }
  if (!args.epsilon && args.schedule.empty()) {
    throw Error(ErrorKind::kUsage, "one of --epsilon or --schedule is required");
  }
  const EpsilonSchedule schedule = args.epsilon ? EpsilonSchedule({*args.epsilon})
                                                : EpsilonSchedule::parse(args.schedule);
  const PrunedNetwork pruned = prune_barren(net, ev, resolve_query(net, args.query));
  const Evidence pev = pruned.map(ev);
  const std::string case_id =
      args.case_id.empty() ? fs::path(args.ev_path).stem().string() : args.case_id;

  SearchOptions options;
  options.keep_accepted = !args.dump_path.empty();
  ConvergenceTrace trace;
  SearchResult last;
  for (double epsilon : schedule.values()) {
    const auto start = std::chrono::steady_clock::now();
    last = top_epsilon(pruned.network, pev, epsilon, options);
    const auto stop = std::chrono::steady_clock::now();
    trace.push_back({epsilon, last.states_explored, last.accepted_count, last.mass_accumulated,
                     std::chrono::duration<double, std::milli>(stop - start).count()});
  }

  std::optional<double> gold;
  if (args.gold) {
    try {
      gold = exact_inference(pruned.network, pev, args.cap).evidence_probability;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kCapExceeded) {
        err << "warning: gold columns left empty: " << e.what() << "\n";
      } else if (e.kind() == ErrorKind::kImpossibleEvidence) {
        gold = 0.0;
      } else {
        throw;
      }
    }
  }

  out << bench_csv_header() << "\n";
  for (const BenchRow& row : trace_rows(case_id, trace, gold, !args.no_timing)) {
    out << format_bench_row(row) << "\n";
  }

  std::string post;
  if (last.posteriors_defined()) {
    for (std::size_t id = 0; id < pruned.network.size(); ++id) {
      post += pruned.network.node(static_cast<NodeId>(id)).name + "," +
              fmt(last.posterior_estimate[id]) + "\n";
    }
  } else {
    err << "warning: no instantiation reached epsilon "
        << format_epsilon(schedule.values().empty() ? 0.0 : schedule.values().back())
        << "; posterior estimates are undefined\n";
  }
  const std::string post_path = args.post_path.empty()
                                    ? fs::path(args.ev_path).replace_extension(".post").string()
                                    : args.post_path;
  write_text_file(post_path, post);
  if (!args.dump_path.empty()) {
    write_text_file(args.dump_path, format_accepted(pruned.network, last.accepted));
  }
  return kOk;
}

struct BenchArgs {
  std::string net_path;
  std::size_t cases = 1;
  std::size_t findings = 0;
  std::uint64_t seed = 0;
  std::string schedule;
  unsigned jobs = 1;
  std::string gold = "none";
  double gold_epsilon = 1e-30;
  std::string summary_path;
  bool no_timing = false;
  std::size_t cap = kDefaultFreeNodeCap;
};

int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err) {
  const Network net = parse_network(read_text_file(args.net_path));
  BenchConfig config;
  config.cases = args.cases;
  config.findings = args.findings;
  config.seed = args.seed;
  if (!args.schedule.empty()) config.schedule = EpsilonSchedule::parse(args.schedule);
  config.jobs = args.jobs;
  config.gold_epsilon = args.gold_epsilon;
  config.free_node_cap = args.cap;
  config.with_timing = !args.no_timing;
  if (args.gold == "none") {
    config.gold = GoldMode::kNone;
  } else if (args.gold == "exact") {
    config.gold = GoldMode::kExact;
  } else if (args.gold == "deep") {
    config.gold = GoldMode::kDeepRun;
  } else {
    throw Error(ErrorKind::kUsage, "--gold must be none, exact or deep");
  }
  const BenchReport report = run_bench(net, config);
  out << bench_csv_header() << "\n";
  for (const BenchRow& row : report.rows) out << format_bench_row(row) << "\n";
  for (const std::string& w : report.warnings) err << "warning: " << w << "\n";
  const std::string summary = format_summary(report);
  if (args.summary_path.empty()) {
    err << summary;
  } else {
    write_text_file(args.summary_path, summary);
  }
  return kOk;
}

struct GenArgs {
  std::string shape = "3,10,15,20,97";
  std::size_t max_parents = 3;
  double locality = 0.8;
  std::string prior_range = "0.001,0.1";
  std::string q_range = "0.2,0.95";
  std::string leak_range = "0,0.05";
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t cases = 0;
  std::size_t findings = 0;
};

int cmd_gen(const GenArgs& args, std::ostream& out) {
  NetShape shape;
  for (const std::string& count : split_csv(args.shape)) {
    const double v = parse_double(count, "--shape entry");
    if (!(v >= 1.0) || v != std::floor(v)) {
      throw Error(ErrorKind::kUsage, "--shape entries must be positive integers");
    }
    shape.nodes_per_level.push_back(static_cast<std::size_t>(v));
  }
  shape.max_parents = args.max_parents;
  shape.parent_locality = args.locality;
  shape.prior_range = parse_range(args.prior_range, "--prior-range");
  shape.q_range = parse_range(args.q_range, "--q-range");
  shape.leak_range = parse_range(args.leak_range, "--leak-range");
  shape.seed = args.seed;
  const Network net = gen_network(shape);

  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  const std::string net_path = (dir / "network.net").string();
  write_text_file(net_path, print_network(net));
  out << net_path << "\n";
  for (std::size_t i = 0; i < args.cases; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "case-%03zu", i);
    const Case c = make_case(net, case_seed(args.seed, i), args.findings, id);
    const std::string path = (dir / (std::string(id) + ".case")).string();
    write_text_file(path, print_case(net, c));
    out << path << "\n";
  }
  return kOk;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return kUsage;
    case ErrorKind::kCapExceeded: return kCap;
    case ErrorKind::kSyntax:
    case ErrorKind::kValidation:
    case ErrorKind::kImpossibleEvidence: break;
  }
  return kInput;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Search-based inference for multi-level noisy-OR belief networks", "nobn"};
  app.require_subcommand(1);

  std::string net_path;
  std::string ev_path;
  std::size_t cap = kDefaultFreeNodeCap;

  auto* validate = app.add_subcommand("validate", "Parse a network and summarize its levels");
  validate->add_option("network", net_path, "NET file")->required();

  auto* exact = app.add_subcommand("exact", "Brute-force posteriors (gold standard)");
  exact->add_option("network", net_path, "NET file")->required();
  exact->add_option("evidence", ev_path, "evidence or case file")->required();
  exact->add_option("--cap", cap, "maximum number of unobserved nodes");

  double eml_epsilon = 0.0;
  auto* eml = app.add_subcommand("eml", "Run EpsilonML on the deepest open level");
  eml->add_option("network", net_path, "NET file")->required();
  eml->add_option("evidence", ev_path, "evidence or case file")->required();
  eml->add_option("--epsilon", eml_epsilon, "threshold on the new factor product")->required();

  InferArgs infer_args;
  double infer_epsilon = 0.0;
  auto* infer = app.add_subcommand("infer", "Enumerate instantiations with joint >= epsilon");
  infer->add_option("network", infer_args.net_path, "NET file")->required();
  infer->add_option("evidence", infer_args.ev_path, "evidence or case file")->required();
  auto* eps_opt = infer->add_option("--epsilon", infer_epsilon, "single threshold");
  infer->add_option("--schedule", infer_args.schedule, "comma-separated decreasing thresholds");
  infer->add_option("--dump-accepted", infer_args.dump_path, "write accepted instantiations");
  infer->add_option("--post", infer_args.post_path, "posterior file (default <evidence>.post)");
  infer->add_option("--query", infer_args.query, "comma-separated nodes kept by pruning");
  infer->add_option("--case-id", infer_args.case_id, "case id column (default evidence stem)");
  infer->add_flag("--gold", infer_args.gold, "fill gold columns with the exact oracle");
  infer->add_flag("--no-timing", infer_args.no_timing, "leave elapsed_ms empty");
  infer->add_option("--cap", infer_args.cap, "oracle free-node cap");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Sample cases and run an epsilon schedule on each");
  bench->add_option("network", bench_args.net_path, "NET file")->required();
  bench->add_option("--cases", bench_args.cases, "number of cases");
  bench->add_option("--findings", bench_args.findings, "findings observed per case");
  bench->add_option("--seed", bench_args.seed, "bench seed");
  bench->add_option("--schedule", bench_args.schedule, "comma-separated decreasing thresholds");
  bench->add_option("--jobs", bench_args.jobs, "cases run in parallel");
  bench->add_option("--gold", bench_args.gold, "none | exact | deep");
  bench->add_option("--gold-epsilon", bench_args.gold_epsilon, "threshold of the deep gold run");
  bench->add_option("--summary", bench_args.summary_path, "summary file (default stderr)");
  bench->add_flag("--no-timing", bench_args.no_timing, "leave elapsed_ms empty");
  bench->add_option("--cap", bench_args.cap, "oracle free-node cap");

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate a layered network and sampled cases");
  gen->add_option("--shape", gen_args.shape, "nodes per level, roots first");
  gen->add_option("--max-parents", gen_args.max_parents, "maximum parents per node");
  gen->add_option("--locality", gen_args.locality, "chance of drawing from the level above");
  gen->add_option("--prior-range", gen_args.prior_range, "lo,hi for root priors");
  gen->add_option("--q-range", gen_args.q_range, "lo,hi for link probabilities");
  gen->add_option("--leak-range", gen_args.leak_range, "lo,hi for leaks");
  gen->add_option("--seed", gen_args.seed, "generator seed");
  gen->add_option("--out", gen_args.out_dir, "output directory")->required();
  gen->add_option("--cases", gen_args.cases, "number of case files");
  gen->add_option("--findings", gen_args.findings, "findings per case");

  std::vector<const char*> argv{"nobn"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(net_path, out);
    if (exact->parsed()) return cmd_exact(net_path, ev_path, cap, out);
    if (eml->parsed()) return cmd_eml(net_path, ev_path, eml_epsilon, out);
    if (infer->parsed()) {
      if (eps_opt->count() > 0) infer_args.epsilon = infer_epsilon;
      return cmd_infer(infer_args, out, err);
    }
    if (bench->parsed()) return cmd_bench(bench_args, out, err);
    if (gen->parsed()) return cmd_gen(gen_args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInput;
  }
  return kUsage;
}

}  // namespace nobn::cli
