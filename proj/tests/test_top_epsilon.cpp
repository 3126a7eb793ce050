#include <doctest.h>

#include <cmath>
#include <map>

#include "nobn/error.hpp"
#include "nobn/exact.hpp"
#include "nobn/top_epsilon.hpp"
#include "support.hpp"

using namespace nobn;
using namespace nobn::testing;

namespace {

SearchOptions keep(ProbabilitySpace space = ProbabilitySpace::kAuto) {
  SearchOptions o;
  o.keep_accepted = true;
  o.space = space;
  return o;
}

std::map<std::vector<State>, double> as_map(const std::vector<Instantiation>& xs) {
  std::map<std::vector<State>, double> out;
  for (const auto& x : xs) out.emplace(x.values, x.joint);
  return out;
}

}  // namespace

TEST_CASE("chain3 with C present") {
  const Network net = chain3();
  const Evidence ev = observe(net, {{"C", P}});

  const SearchResult r = top_epsilon(net, ev, 0.1, keep());
  REQUIRE(r.accepted.size() == 1);
  CHECK(r.accepted[0].values == std::vector<State>{P, P, P});
  CHECK(r.mass_accumulated == doctest::Approx(0.14842));
  CHECK(r.accepted_count == 1);

  const SearchResult all = top_epsilon(net, ev, 0.0, keep());
  CHECK(all.accepted.size() == 4);
  CHECK(all.mass_accumulated == doctest::Approx(0.25862).epsilon(1e-14));
  CHECK(all.score[0] == doctest::Approx(0.15022).epsilon(1e-14));
  CHECK(all.score[1] == doctest::Approx(0.22082).epsilon(1e-14));
  CHECK(all.posterior_estimate[0] == doctest::Approx(0.15022 / 0.25862).epsilon(1e-13));
  CHECK(all.posterior_estimate[2] == 1.0);

  const SearchResult none = top_epsilon(net, ev, 0.5, keep());
  CHECK(none.accepted.empty());
  CHECK(none.mass_accumulated == 0.0);
  CHECK(!none.posteriors_defined());
  CHECK(std::isnan(none.posterior_estimate[0]));
  CHECK(none.states_explored >= 1);

  CHECK_THROWS_AS(top_epsilon(net, ev, -1.0), Error);
  CHECK_THROWS_AS(top_epsilon(net, ev, NAN), Error);
}

TEST_CASE("complete()") {
  const Network net = chain3();
  Assignment a(net);
  CHECK(!complete(net, a));
  a.assign(net, 0, P);
  a.assign(net, 1, A);
  CHECK(!complete(net, a));
  a.assign(net, 2, P);
  CHECK(complete(net, a));

  const Network empty = Network::build({});
  CHECK(complete(empty, Assignment(empty)));
  const SearchResult r = top_epsilon(empty, Evidence{}, 0.5);
  CHECK(r.accepted_count == 1);
  CHECK(r.mass_accumulated == 1.0);
}

TEST_CASE("searches without a findings frontier") {
  const Network net = chain3();
  // No evidence: every instantiation is reachable through the seeding path.
  const SearchResult all = top_epsilon(net, Evidence{}, 0.0, keep());
  CHECK(all.accepted.size() == 8);
  CHECK(all.mass_accumulated == doctest::Approx(1.0).epsilon(1e-14));

  // Evidence only on the root: C and B are hidden below it.
  const SearchResult root = top_epsilon(net, observe(net, {{"A", P}}), 0.0, keep());
  CHECK(root.accepted.size() == 4);
  CHECK(root.mass_accumulated == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(root.posterior_estimate[1] == doctest::Approx(0.82).epsilon(1e-13));

  const SearchResult mid = top_epsilon(net, observe(net, {{"B", A}}), 0.0, keep());
  CHECK(mid.accepted.size() == 4);
  CHECK(mid.mass_accumulated == doctest::Approx(0.2 * 0.18 + 0.8 * 0.9).epsilon(1e-14));
}

TEST_CASE("impossible evidence yields zero mass") {
  const Network net = parse_network(read_text_file(data_path("zero_root.net")));
  const Evidence ev = observe(net, {{"Z", P}});
  const SearchResult r = top_epsilon(net, ev, 0.0);
  // Zero-joint states still satisfy joint >= 0, as for the oracle.
  CHECK(r.accepted_count == instantiations_above(net, ev, 0.0).size());
  CHECK(r.mass_accumulated == 0.0);
  CHECK(!r.posteriors_defined());
  CHECK(top_epsilon(net, ev, 1e-300).accepted_count == 0);
}

TEST_CASE("top_epsilon agrees with the exact oracle on random networks") {
  Rng rng(4242);
  for (int trial = 0; trial < 120; ++trial) {
    const Network net = random_network(rng, 2, 5, 12);
    const Evidence ev = random_evidence(net, rng);
    const double eps = rng.bernoulli(0.1) ? 0.0 : log_uniform(rng, 1e-16, 1e-1);
    const auto want = as_map(instantiations_above(net, ev, eps));
    const SearchResult got = top_epsilon(net, ev, eps, keep());
    const auto got_map = as_map(got.accepted);
    REQUIRE(got_map.size() == got.accepted.size());
    CHECK(got_map.size() == want.size());
    for (const auto& [values, joint] : want) {
      REQUIRE(got_map.count(values) == 1);
      CHECK(got_map.at(values) == joint);
    }
    CHECK(got.accepted_count == got.accepted.size());
  }
}

TEST_CASE("epsilon zero recovers exact posteriors") {
  Rng rng(8);
  for (int trial = 0; trial < 60; ++trial) {
    const Network net = random_network(rng, 2, 5, 12);
    const Evidence ev = random_evidence(net, rng);
    const SearchResult r = top_epsilon(net, ev, 0.0);
    ExactResult exact;
    try {
      exact = exact_inference(net, ev);
    } catch (const Error&) {
      CHECK(r.mass_accumulated == 0.0);
      continue;
    }
    CHECK(std::fabs(r.mass_accumulated - exact.evidence_probability) <=
          1e-9 * exact.evidence_probability);
    for (std::size_t i = 0; i < net.size(); ++i) {
      CHECK(std::fabs(r.posterior_estimate[i] - exact.posteriors[i]) <= 1e-9);
    }
    for (const Observation& o : ev.items) {
      CHECK(r.posterior_estimate[o.node] == (o.state == P ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("results are monotone in epsilon") {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const Network net = random_network(rng, 2, 5, 12);
    const Evidence ev = random_evidence(net, rng);
    const double hi = log_uniform(rng, 1e-12, 1e-1);
    const double lo = hi * log_uniform(rng, 1e-4, 1.0);
    const SearchResult big = top_epsilon(net, ev, lo, keep());
    const SearchResult small = top_epsilon(net, ev, hi, keep());
    const auto big_map = as_map(big.accepted);
    for (const auto& x : small.accepted) CHECK(big_map.count(x.values) == 1);
    CHECK(big.accepted_count >= small.accepted_count);
    CHECK(big.mass_accumulated >= small.mass_accumulated);
    for (std::size_t i = 0; i < net.size(); ++i) CHECK(big.score[i] >= small.score[i]);
  }
}

TEST_CASE("every expansion clears the scaled threshold") {
  Rng rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const Network net = random_network(rng, 2, 5, 12);
    const Evidence ev = random_evidence(net, rng);
    const double eps = log_uniform(rng, 1e-12, 1e-1);
    SearchOptions o;
    std::size_t events = 0;
    bool ok = true;
    o.on_extension = [&](const ExpansionEvent& e) {
      ++events;
      if (e.extension->new_factor_product < e.epsilon_new * (1.0 - 1e-9)) ok = false;
      if (e.partial_probability * e.extension->new_factor_product < eps * (1.0 - 1e-9)) ok = false;
    };
    top_epsilon(net, ev, eps, o);
    CHECK(ok);
    (void)events;
  }
}

TEST_CASE("log space matches linear space") {
  Rng rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const Network net = random_network(rng, 2, 5, 12);
    const Evidence ev = random_evidence(net, rng);
    const double eps = log_uniform(rng, 1e-14, 1e-1);
    const SearchResult lin = top_epsilon(net, ev, eps, keep(ProbabilitySpace::kLinear));
    const SearchResult lg = top_epsilon(net, ev, eps, keep(ProbabilitySpace::kLog));
    const auto a = as_map(lin.accepted);
    const auto b = as_map(lg.accepted);
    for (const auto& [values, joint] : a) {
      if (std::fabs(std::log(joint) - std::log(eps)) < 1e-9) continue;
      CHECK(b.count(values) == 1);
    }
    for (const auto& [values, joint] : b) {
      if (std::fabs(std::log(joint) - std::log(eps)) < 1e-9) continue;
      CHECK(a.count(values) == 1);
    }
  }
}

TEST_CASE("epsilon schedules") {
  CHECK(EpsilonSchedule::standard().size() == 10);
  CHECK(EpsilonSchedule::standard().values().front() == 1e-2);
  CHECK(EpsilonSchedule::standard().values().back() == 1e-20);
  CHECK(EpsilonSchedule::parse("1e-2,1e-4").values() == std::vector<double>{1e-2, 1e-4});
  CHECK(EpsilonSchedule::parse("0.5, 0").values() == std::vector<double>{0.5, 0.0});
  CHECK_THROWS_AS(EpsilonSchedule::parse("1e-4,1e-2"), Error);
  CHECK_THROWS_AS(EpsilonSchedule::parse("1e-2,1e-2"), Error);
  CHECK_THROWS_AS(EpsilonSchedule::parse("-1"), Error);
  CHECK_THROWS_AS(EpsilonSchedule::parse("x"), Error);
  CHECK_THROWS_AS(EpsilonSchedule::parse(""), Error);

  const Network net = chain3();
  const auto trace =
      run_schedule(net, observe(net, {{"C", P}}), EpsilonSchedule::parse("1e-2,1e-4"));
  REQUIRE(trace.size() == 2);
  CHECK(trace[0].epsilon == 1e-2);
  CHECK(trace[0].accepted_count == 3);
  CHECK(trace[0].mass_accumulated == doctest::Approx(0.25682).epsilon(1e-14));
  CHECK(trace[1].accepted_count == 4);
  CHECK(trace[1].mass_accumulated == doctest::Approx(0.25862).epsilon(1e-14));
  CHECK(trace[1].states_explored >= trace[0].states_explored);
}

TEST_CASE("formatting") {
  CHECK(format_epsilon(1e-2) == "1e-2");
  CHECK(format_epsilon(1e-20) == "1e-20");
  CHECK(format_epsilon(2.5e-7) == "2.5e-7");
  CHECK(format_epsilon(0.0) == "0");
  CHECK(format_epsilon(1.0) == "1e0");

  const Network net = chain3();
  const SearchResult r = top_epsilon(net, observe(net, {{"C", P}}), 0.01, keep());
  const auto joint = [&](std::vector<State> v) { return format_probability(joint_probability(net, v)); };
  CHECK(format_accepted(net, r.accepted) == joint({P, P, P}) + " A=p B=p C=p\n" +
                                                joint({A, P, P}) + " A=a B=p C=p\n" +
                                                joint({A, A, P}) + " A=a B=a C=p\n");
}
