#include "nobn/epsilon_ml.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "nobn/error.hpp"

namespace nobn {

namespace {

double root_factor(const NodeSpec& n, State s) {
  return s == State::kPresent ? *n.prior : 1.0 - *n.prior;
}

double best_root_factor(const NodeSpec& n) { return std::max(*n.prior, 1.0 - *n.prior); }

// Where each parent of a finding comes from: a fixed state or a free slot,
// indexed by node id.
struct ParentLookup {
  static constexpr std::uint32_t kNoSlot = ~std::uint32_t{0};
  std::vector<State> fixed;
  std::vector<std::uint32_t> slot;

  ParentLookup(const Network& net, const Subproblem& sub)
      : fixed(net.size(), State::kUnassigned), slot(net.size(), kNoSlot) {
    for (const Observation& o : sub.fixed_parents) fixed[o.node] = o.state;
    for (std::size_t j = 0; j < sub.free_parents.size(); ++j) {
      slot[sub.free_parents[j]] = static_cast<std::uint32_t>(j);
    }
  }

  // (1 - leak) times (1 - q) of fixed present parents in link order; the free
  // parents of the finding go to `free` as (slot, 1 - q) in slot order.
  double base_survive(const Network& net, NodeId finding,
                      std::vector<std::pair<std::uint32_t, double>>& free) const {
    const NodeSpec& n = net.node(finding);
    free.clear();
    double s = 1.0 - n.leak;
    for (const Link& link : n.links) {
      if (fixed[link.parent] != State::kUnassigned) {
        if (fixed[link.parent] == State::kPresent) s *= 1.0 - link.q;
      } else if (slot[link.parent] != kNoSlot) {
        free.emplace_back(slot[link.parent], 1.0 - link.q);
      } else {
        throw Error(ErrorKind::kValidation, "parent '" + net.node(link.parent).name +
                                                "' of finding '" + n.name +
                                                "' is neither fixed nor free");
      }
    }
    std::sort(free.begin(), free.end());
    return s;
  }
};

// Shared by extension_product and upper_bound: a decided slot uses its
// state, an undecided slot takes the state maximizing each factor.
double reference_product(const Network& net, const Subproblem& sub,
                         std::span<const State> decided) {
  const ParentLookup lookup(net, sub);
  const std::size_t n_free = sub.free_parents.size();
  std::vector<std::pair<std::uint32_t, double>> free;
  double findings = 1.0;
  for (const Observation& f : sub.findings) {
    double s = lookup.base_survive(net, f.node, free);
    for (const auto& [j, survive] : free) {
      const bool present = j < decided.size() ? decided[j] == State::kPresent
                                              : f.state == State::kPresent;
      if (present) s *= survive;
    }
    findings *= f.state == State::kPresent ? 1.0 - s : s;
  }
  double roots = 1.0;
  for (std::size_t j = 0; j < n_free; ++j) {
    const NodeSpec& p = net.node(sub.free_parents[j]);
    if (!p.is_root()) continue;
    roots *= j < decided.size() ? root_factor(p, decided[j]) : best_root_factor(p);
  }
  return findings * roots;
}

}  // namespace

void order_free_parents(const Network& net, std::span<const Observation> findings,
                        std::vector<NodeId>& free_parents) {
  // Strongest link into a finding, by node id; non-free parents stay negative.
  std::vector<double> relevance(net.size(), -1.0);
  for (NodeId p : free_parents) relevance[p] = 0.0;
  for (const Observation& f : findings) {
    for (const Link& link : net.node(f.node).links) {
      double& r = relevance[link.parent];
      if (r >= 0.0) r = std::max(r, link.q);
    }
  }
  std::sort(free_parents.begin(), free_parents.end(), [&](NodeId a, NodeId b) {
    return relevance[a] != relevance[b] ? relevance[a] > relevance[b] : a < b;
  });
}

std::optional<Subproblem> build_subproblem(const Network& net, const Assignment& a, int level) {
  Subproblem sub;
  std::vector<bool> seen(net.size(), false);
  for (std::size_t id = 0; id < net.size(); ++id) {
    if (net.level(id) != level || !a.is_assigned(id)) continue;
    const NodeSpec& n = net.node(id);
    const bool open = std::any_of(n.links.begin(), n.links.end(),
                                  [&](const Link& l) { return !a.is_assigned(l.parent); });
    if (!open) continue;
    sub.findings.push_back({static_cast<NodeId>(id), a.get(id)});
    for (const Link& link : n.links) {
      if (seen[link.parent]) continue;
      seen[link.parent] = true;
      if (a.is_assigned(link.parent)) {
        sub.fixed_parents.push_back({link.parent, a.get(link.parent)});
      } else {
        sub.free_parents.push_back(link.parent);
      }
    }
  }
  if (sub.findings.empty()) return std::nullopt;
  std::sort(sub.fixed_parents.begin(), sub.fixed_parents.end(),
            [](const Observation& x, const Observation& y) { return x.node < y.node; });
  order_free_parents(net, sub.findings, sub.free_parents);
  return sub;
}

double extension_product(const Network& net, const Subproblem& sub,
                         std::span<const State> parent_states) {
  if (parent_states.size() != sub.free_parents.size()) {
    throw Error(ErrorKind::kValidation, "extension does not decide every free parent");
  }
  return reference_product(net, sub, parent_states);
}

double upper_bound(const Network& net, const Subproblem& sub, std::span<const State> decided) {
  if (decided.size() > sub.free_parents.size()) {
    throw Error(ErrorKind::kValidation, "decision is longer than the free-parent list");
  }
  return reference_product(net, sub, decided);
}

// ---------------------------------------------------------------------------

EpsilonMlSearch::EpsilonMlSearch(const Network& net, const Subproblem& sub, Threshold threshold)
    : net_(net), sub_(sub), threshold_(threshold) {
  const std::size_t n_free = sub.free_parents.size();
  const ParentLookup lookup(net, sub);
  links_.resize(n_free);
  root_prior_.resize(n_free);
  for (std::size_t j = 0; j < n_free; ++j) {
    const NodeSpec& p = net.node(sub.free_parents[j]);
    if (p.is_root()) root_prior_[j] = *p.prior;
  }
  std::vector<std::pair<std::uint32_t, double>> free;
  const std::size_t n_findings = sub.findings.size();
  finding_state_.reserve(n_findings);
  survive_.reserve(n_findings);
  remaining_begin_.reserve(n_findings + 1);
  remaining_begin_.push_back(0);
  std::vector<std::uint32_t> per_parent(n_free + 1, 0);
  for (std::size_t i = 0; i < n_findings; ++i) {
    const Observation& f = sub.findings[i];
    finding_state_.push_back(f.state);
    survive_.push_back(lookup.base_survive(net, f.node, free));
    for (const auto& [j, survive] : free) {
      remaining_.push_back(survive);
      remaining_depth_.push_back(j);
      ++per_parent[j + 1];
    }
    remaining_begin_.push_back(static_cast<std::uint32_t>(remaining_.size()));
  }
  // Group the (finding, 1-q) pairs by free parent, findings ascending.
  link_begin_.assign(n_free + 1, 0);
  for (std::size_t j = 0; j < n_free; ++j) link_begin_[j + 1] = link_begin_[j] + per_parent[j + 1];
  links_.resize(remaining_.size());
  std::vector<std::uint32_t> fill(link_begin_.begin(), link_begin_.end() - 1);
  for (std::size_t i = 0; i < n_findings; ++i) {
    for (std::uint32_t k = remaining_begin_[i]; k < remaining_begin_[i + 1]; ++k) {
      links_[fill[remaining_depth_[k]]++] = {static_cast<std::uint32_t>(i), remaining_[k]};
    }
  }
  decided_.assign(n_free, State::kUnassigned);
  root_product_.assign(n_free + 1, threshold_.log_space ? 0.0 : 1.0);
  undo_mark_.assign(n_free, 0);
  undo_log_.reserve(remaining_.size());
  frames_.reserve(n_free);
}

bool EpsilonMlSearch::accepts(double value) const noexcept { return value >= threshold_.value; }

void EpsilonMlSearch::apply(std::size_t depth, State s) {
  decided_[depth] = s;
  undo_mark_[depth] = undo_log_.size();
  if (s == State::kPresent) {
    for (std::uint32_t k = link_begin_[depth]; k < link_begin_[depth + 1]; ++k) {
      const ChildLink& cl = links_[k];
      undo_log_.emplace_back(cl.finding, survive_[cl.finding]);
      survive_[cl.finding] *= cl.survive;
    }
  }
  if (root_prior_[depth]) {
    const double f = s == State::kPresent ? *root_prior_[depth] : 1.0 - *root_prior_[depth];
    root_product_[depth + 1] =
        threshold_.log_space ? root_product_[depth] + std::log(f) : root_product_[depth] * f;
  } else {
    root_product_[depth + 1] = root_product_[depth];
  }
}

void EpsilonMlSearch::undo(std::size_t depth) {
  while (undo_log_.size() > undo_mark_[depth]) {
    survive_[undo_log_.back().first] = undo_log_.back().second;
    undo_log_.pop_back();
  }
  decided_[depth] = State::kUnassigned;
}

double EpsilonMlSearch::bound(std::size_t depth) const {
  const bool log_space = threshold_.log_space;
  double findings = log_space ? 0.0 : 1.0;
  for (std::size_t i = 0; i < finding_state_.size(); ++i) {
    double f;
    if (finding_state_[i] == State::kPresent) {
      double s = survive_[i];
      const auto first = remaining_depth_.begin() + remaining_begin_[i];
      const auto last = remaining_depth_.begin() + remaining_begin_[i + 1];
      for (auto k = static_cast<std::size_t>(std::lower_bound(first, last, depth) -
                                             remaining_depth_.begin());
           k < remaining_begin_[i + 1]; ++k) {
        s *= remaining_[k];
      }
      f = 1.0 - s;
    } else {
      f = survive_[i];
    }
    findings = log_space ? findings + std::log(f) : findings * f;
  }
  double roots = root_product_[depth];
  for (std::size_t j = depth; j < root_prior_.size(); ++j) {
    if (!root_prior_[j]) continue;
    const double m = std::max(*root_prior_[j], 1.0 - *root_prior_[j]);
    roots = log_space ? roots + std::log(m) : roots * m;
  }
  return log_space ? findings + roots : findings * roots;
}

void EpsilonMlSearch::open_frame(std::size_t depth) {
  Frame fr;
  std::array<double, 2> bounds{};
  for (State s : {State::kPresent, State::kAbsent}) {
    apply(depth, s);
    const double b = bound(depth + 1);
    undo(depth);
    ++stats_.bound_evaluations;
    if (accepts(b)) {
      bounds[fr.count] = b;
      fr.order[fr.count++] = s;
    } else {
      ++stats_.pruned;
    }
  }
  // Roots try the branch with the larger bound first; non-roots try present first.
  if (fr.count == 2 && root_prior_[depth] && bounds[1] > bounds[0]) {
    std::swap(fr.order[0], fr.order[1]);
  }
  frames_.push_back(fr);
  stats_.peak_depth = std::max(stats_.peak_depth, frames_.size());
}

Extension EpsilonMlSearch::make_extension() const {
  Extension ext;
  ext.parent_states = decided_;
  const double value = bound(decided_.size());
  if (threshold_.log_space) {
    ext.log_new_factor_product = value;
    ext.new_factor_product = std::exp(value);
  } else {
    ext.new_factor_product = value;
    ext.log_new_factor_product = std::log(value);
  }
  return ext;
}

std::optional<Extension> EpsilonMlSearch::next() {
  if (done_) return std::nullopt;
  const std::size_t n_free = decided_.size();
  if (!started_) {
    started_ = true;
    ++stats_.bound_evaluations;
    if (!accepts(bound(0))) {
      ++stats_.pruned;
      done_ = true;
      return std::nullopt;
    }
    if (n_free == 0) {
      done_ = true;
      return make_extension();
    }
    open_frame(0);
  }
  while (!frames_.empty()) {
    const std::size_t depth = frames_.size() - 1;
    Frame& fr = frames_.back();
    if (fr.applied) {
      undo(depth);
      fr.applied = false;
    }
    if (fr.tried == fr.count) {
      frames_.pop_back();
      continue;
    }
    apply(depth, fr.order[fr.tried++]);
    fr.applied = true;
    if (depth + 1 == n_free) return make_extension();
    open_frame(depth + 1);
  }
  done_ = true;
  return std::nullopt;
}

std::vector<Extension> epsilon_ml(const Network& net, const Subproblem& sub, double epsilon) {
  EpsilonMlSearch search(net, sub, Threshold::linear(epsilon));
  std::vector<Extension> out;
  while (auto ext = search.next()) out.push_back(std::move(*ext));
  return out;
}

}  // namespace nobn
