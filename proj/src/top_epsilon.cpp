#include "nobn/top_epsilon.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <memory>

#include "nobn/error.hpp"
#include "nobn/summation.hpp"

namespace nobn {

namespace {

// Pruning thresholds are relaxed by this relative amount so that rounding
// differences between the incremental products and the id-order joint can
// never drop a qualifying instantiation. Acceptance itself is exact.
constexpr double kPruneSlack = 1e-9;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Frame {
  Assignment state;
  std::unique_ptr<Subproblem> sub;
  std::unique_ptr<EpsilonMlSearch> search;
  double partial = 1.0;
  double epsilon_new = 0.0;
};

double log_joint(const Network& net, std::span<const State> values) {
  double sum = 0.0;
  for (std::size_t id = 0; id < net.size(); ++id) {
    sum += std::log(node_factor(net, static_cast<NodeId>(id), values));
  }
  return sum;
}

// Used when no assigned node has an unassigned parent but some nodes are
// still open (no evidence, or query nodes without observed descendants): the
// deepest open node has no open children, so deciding it is safe.
Subproblem seed_subproblem(const Network& net, const Assignment& a) {
  std::optional<NodeId> pick;
  for (std::size_t id = 0; id < net.size(); ++id) {
    if (a.is_assigned(id)) continue;
    if (!pick || net.level(id) > net.level(*pick)) pick = static_cast<NodeId>(id);
  }
  return Subproblem{{}, {*pick}, {}};
}

class Engine {
 public:
  Engine(const Network& net, double epsilon, const SearchOptions& options)
      : net_(net), epsilon_(epsilon), options_(options) {
    log_space_ = options.space == ProbabilitySpace::kLog ||
                 (options.space == ProbabilitySpace::kAuto && net.size() > kLogSpaceFactorCount);
    log_epsilon_ = epsilon > 0.0 ? std::log(epsilon) : kNegInf;
    score_.resize(net.size());
    result_.score.assign(net.size(), 0.0);
  }

  SearchResult run(const Evidence& ev) {
    visit(Assignment(net_, ev));
    while (!frames_.empty()) {
      if (options_.deadline && result_.states_explored % 1024 == 0 &&
          std::chrono::steady_clock::now() >= *options_.deadline) {
        result_.truncated = true;
        break;
      }
      Frame& top = frames_.back();
      std::optional<Extension> ext = top.search->next();
      if (!ext) {
        frames_.pop_back();
        continue;
      }
      if (options_.on_extension) {
        options_.on_extension({top.sub.get(), top.partial, top.epsilon_new, &*ext});
      }
      Assignment child = top.state;
      for (std::size_t j = 0; j < ext->parent_states.size(); ++j) {
        child.assign(net_, top.sub->free_parents[j], ext->parent_states[j]);
      }
      if (!may_reach_target(child)) continue;
      visit(std::move(child));
    }
    return finish();
  }

 private:
  bool may_reach_target(const Assignment& a) const {
    if (epsilon_ == 0.0) return true;
    if (log_space_) return a.log_known_factor_product() >= log_epsilon_ + std::log1p(-kPruneSlack);
    return a.known_factor_product() >= epsilon_ * (1.0 - kPruneSlack);
  }

  void visit(Assignment state) {
    ++result_.states_explored;
    if (complete(net_, state)) {
      accept_if_qualifies(state);
      return;
    }
    if (!may_reach_target(state)) return;

    auto frame = Frame{std::move(state), nullptr, nullptr, 1.0, 0.0};
    const int level = frame.state.frontier_level(net_);
    std::optional<Subproblem> sub;
    if (level >= 0) sub = build_subproblem(net_, frame.state, level);
    if (!sub) sub = seed_subproblem(net_, frame.state);
    frame.sub = std::make_unique<Subproblem>(std::move(*sub));

    Threshold threshold;
    if (log_space_) {
      const double log_partial = frame.state.log_known_factor_product();
      const double log_new = log_epsilon_ == kNegInf ? kNegInf : log_epsilon_ - log_partial;
      frame.partial = std::exp(log_partial);
      frame.epsilon_new = std::exp(log_new);
      threshold = Threshold::log(log_new == kNegInf ? kNegInf : log_new + std::log1p(-kPruneSlack));
    } else {
      frame.partial = frame.state.known_factor_product();
      frame.epsilon_new = epsilon_ == 0.0 ? 0.0 : epsilon_ / frame.partial;
      threshold = Threshold::linear(frame.epsilon_new * (1.0 - kPruneSlack));
    }
    frame.search = std::make_unique<EpsilonMlSearch>(net_, *frame.sub, threshold);
    frames_.push_back(std::move(frame));
  }

  void accept_if_qualifies(const Assignment& state) {
    double joint;
    if (log_space_) {
      const double lj = log_joint(net_, state.values());
      if (!(lj >= log_epsilon_)) return;
      joint = std::exp(lj);
    } else {
      joint = joint_probability(net_, state.values());
      if (!(joint >= epsilon_)) return;
    }
    ++result_.accepted_count;
    mass_.add(joint);
    const auto values = state.values();
    for (std::size_t id = 0; id < values.size(); ++id) {
      if (values[id] == State::kPresent) score_[id].add(joint);
    }
    if (options_.keep_accepted) {
      result_.accepted.push_back({{values.begin(), values.end()}, joint});
    }
  }

  SearchResult finish() {
    result_.mass_accumulated = mass_.value();
    result_.posterior_estimate.resize(net_.size());
    for (std::size_t id = 0; id < net_.size(); ++id) {
      result_.score[id] = score_[id].value();
      result_.posterior_estimate[id] = result_.mass_accumulated > 0.0
                                           ? result_.score[id] / result_.mass_accumulated
                                           : std::numeric_limits<double>::quiet_NaN();
    }
    return std::move(result_);
  }

  const Network& net_;
  double epsilon_;
  double log_epsilon_;
  bool log_space_ = false;
  const SearchOptions& options_;
  std::vector<Frame> frames_;
  CompensatedSum mass_;
  std::vector<CompensatedSum> score_;
  SearchResult result_;
};

}  // namespace

bool complete(const Network& net, const Assignment& a) {
  return a.size() == net.size() && a.all_assigned();
}

SearchResult top_epsilon(const Network& net, const Evidence& ev, double epsilon_target,
                         const SearchOptions& options) {
  if (!(epsilon_target >= 0.0)) {
    throw Error(ErrorKind::kUsage, "epsilon must be a non-negative number");
  }
  return Engine(net, epsilon_target, options).run(ev);
}

// ---------------------------------------------------------------------------

EpsilonSchedule::EpsilonSchedule(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0.0) || !std::isfinite(values_[i])) {
      throw Error(ErrorKind::kUsage, "schedule values must be finite and non-negative");
    }
    if (i > 0 && !(values_[i] < values_[i - 1])) {
      throw Error(ErrorKind::kUsage, "schedule must be strictly decreasing");
    }
  }
}

EpsilonSchedule EpsilonSchedule::standard() {
  std::vector<double> values;
  for (int exponent = 2; exponent <= 20; exponent += 2) {
    values.push_back(std::strtod(("1e-" + std::to_string(exponent)).c_str(), nullptr));
  }
  return EpsilonSchedule(std::move(values));
}

EpsilonSchedule EpsilonSchedule::parse(std::string_view text) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view item = text.substr(pos, end - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw Error(ErrorKind::kUsage, "bad epsilon '" + std::string(item) + "' in schedule");
    }
    values.push_back(v);
    if (end == text.size()) break;
    pos = end + 1;
  }
  return EpsilonSchedule(std::move(values));
}

ConvergenceTrace run_schedule(const Network& net, const Evidence& ev,
                              const EpsilonSchedule& schedule, const SearchOptions& options) {
  ConvergenceTrace trace;
  for (double epsilon : schedule.values()) {
    const auto start = std::chrono::steady_clock::now();
    SearchResult r = top_epsilon(net, ev, epsilon, options);
    const auto stop = std::chrono::steady_clock::now();
    trace.push_back({epsilon, r.states_explored, r.accepted_count, r.mass_accumulated,
                     std::chrono::duration<double, std::milli>(stop - start).count(),
                     r.truncated});
    if (r.truncated) break;
  }
  return trace;
}

std::string format_accepted(const Network& net, const std::vector<Instantiation>& accepted) {
  std::vector<std::pair<double, std::string>> lines;
  lines.reserve(accepted.size());
  for (const Instantiation& inst : accepted) {
    std::string body;
    for (std::size_t id = 0; id < inst.values.size(); ++id) {
      body += ' ';
      body += net.node(static_cast<NodeId>(id)).name;
      body += inst.values[id] == State::kPresent ? "=p" : "=a";
    }
    lines.emplace_back(inst.joint, std::move(body));
  }
  std::sort(lines.begin(), lines.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  std::string out;
  for (const auto& [joint, body] : lines) {
    out += format_probability(joint);
    out += body;
    out += '\n';
  }
  return out;
}

std::string format_epsilon(double epsilon) {
  if (epsilon == 0.0) return "0";
  char buf[48];
  for (int precision = 0; precision <= 16; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*e", precision, epsilon);
    if (std::strtod(buf, nullptr) == epsilon) break;
  }
  // Normalize "1e-02" / "1e+00" to "1e-2" / "1e0".
  std::string s(buf);
  const auto e = s.find('e');
  if (e == std::string::npos) return s;
  std::string mantissa = s.substr(0, e);
  std::string exponent = s.substr(e + 1);
  const bool negative = !exponent.empty() && exponent[0] == '-';
  if (!exponent.empty() && (exponent[0] == '-' || exponent[0] == '+')) exponent.erase(0, 1);
  exponent.erase(0, std::min(exponent.find_first_not_of('0'), exponent.size() - 1));
  return mantissa + "e" + (negative ? "-" : "") + exponent;
}

}  // namespace nobn
