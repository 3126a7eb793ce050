#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "../tools/cli.hpp"
#include "nobn/bench.hpp"
#include "support.hpp"

using namespace nobn;
using namespace nobn::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run nobn_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nobn-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> fields(const std::string& row) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = row.find(',', pos);
    out.push_back(row.substr(pos, end == std::string::npos ? std::string::npos : end - pos));
    if (end == std::string::npos) return out;
    pos = end + 1;
  }
}

}  // namespace

TEST_CASE("bench row formatting") {
  BenchRow row;
  row.case_id = "c";
  row.epsilon = 1e-4;
  row.states_explored = 9;
  row.accepted_count = 3;
  row.mass_accumulated = 0.5;
  CHECK(format_bench_row(row) == "c,1e-4,9,3,0.5,,,");
  row.gold_mass = 1.0;
  row.mass_fraction = 0.5;
  row.elapsed_ms = 1.25;
  CHECK(format_bench_row(row) == "c,1e-4,9,3,0.5,1,0.5,1.250");
  CHECK(fields(bench_csv_header()).size() == 8);
}

TEST_CASE("median convergence") {
  BenchReport report;
  CHECK(!median_convergence_neglog(report));
  report.cases = {{"a", 1.0, 1e-2, false}, {"b", 1.0, 1e-6, false}, {"c", 1.0, {}, false}};
  CHECK(*median_convergence_neglog(report) == doctest::Approx(6.0));
  CHECK(case_seed(5, 0) != case_seed(5, 1));
  CHECK(case_seed(5, 3) == case_seed(5, 3));
}

TEST_CASE("validate") {
  auto r = nobn_cli({"validate", data_path("chain3.net")});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("3 nodes, 2 arcs, 3 levels\n", 0) == 0);

  r = nobn_cli({"validate", data_path("fig3.net")});
  CHECK(r.code == 0);
  CHECK(r.out.find("three-level network") != std::string::npos);

  r = nobn_cli({"validate", data_path("cycle.net")});
  CHECK(r.code == 2);
  CHECK(r.err.find("cycle") != std::string::npos);

  CHECK(nobn_cli({"validate", data_path("missing.net")}).code == 2);
  CHECK(nobn_cli({}).code == 1);
  CHECK(nobn_cli({"frobnicate"}).code == 1);
  CHECK(nobn_cli({"--help"}).code == 0);
}

TEST_CASE("exact") {
  auto r = nobn_cli({"exact", data_path("chain3.net"), data_path("chain3_c.ev")});
  REQUIRE(r.code == 0);
  const auto out = lines(r.out);
  REQUIRE(out.size() == 5);
  CHECK(std::stod(out[0].substr(out[0].find(' ') + 1)) == doctest::Approx(0.25862));
  CHECK(out[1] == "instantiations 4");
  CHECK(out[2].rfind("posterior A ", 0) == 0);
  CHECK(std::stod(out[2].substr(12)) == doctest::Approx(0.15022 / 0.25862));
  CHECK(std::stod(out[3].substr(12)) == doctest::Approx(0.22082 / 0.25862));

  CHECK(nobn_cli({"exact", data_path("chain3.net"), data_path("chain3_c.ev"), "--cap", "1"})
            .code == 3);
  CHECK(nobn_cli({"exact", data_path("zero_root.net"), data_path("impossible.ev")}).code == 2);
}

TEST_CASE("eml") {
  auto r = nobn_cli({"eml", data_path("bn2o.net"), data_path("bn2o.ev"), "--epsilon", "0"});
  REQUIRE(r.code == 0);
  const auto out = lines(r.out);
  CHECK(out[0] == "level 1");
  CHECK(out[1] == "findings f1=present f2=absent f3=present");
  CHECK(out[4] == "extensions 8");
  CHECK(out.size() == 13);

  r = nobn_cli({"eml", data_path("chain3.net"), data_path("chain3_c.ev"), "--epsilon", "0.1"});
  REQUIRE(r.code == 0);
  CHECK(lines(r.out)[2] == "free_parents B");
  CHECK(lines(r.out)[4] == "extensions 1");
  CHECK(lines(r.out)[5] == format_probability(0.905) + " B=p");
}

TEST_CASE("infer") {
  const fs::path dir = scratch("infer");
  const fs::path ev = dir / "c.ev";
  fs::copy_file(data_path("chain3_c.ev"), ev);

  auto r = nobn_cli({"infer", data_path("chain3.net"), ev.string(), "--epsilon", "0", "--gold",
                     "--no-timing"});
  REQUIRE(r.code == 0);
  auto out = lines(r.out);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == bench_csv_header());
  auto f = fields(out[1]);
  CHECK(f[0] == "c");
  CHECK(f[1] == "0");
  CHECK(f[6] == "1");
  CHECK(f[7] == "");
  const auto post = lines(read_text_file((dir / "c.post").string()));
  REQUIRE(post.size() == 3);
  CHECK(post[0].rfind("A,", 0) == 0);
  CHECK(post[2] == "C,1");

  r = nobn_cli({"infer", data_path("chain3.net"), ev.string(), "--schedule", "1e-2,1e-4",
                "--gold", "--dump-accepted", (dir / "dump.txt").string()});
  REQUIRE(r.code == 0);
  out = lines(r.out);
  REQUIRE(out.size() == 3);
  CHECK(std::stod(fields(out[1])[6]) == doctest::Approx(0.25682 / 0.25862).epsilon(1e-12));
  CHECK(fields(out[2])[6] == "1");
  CHECK(!fields(out[1])[7].empty());
  CHECK(lines(read_text_file((dir / "dump.txt").string())).size() == 4);

  const fs::path bad = dir / "bad.ev";
  fs::copy_file(data_path("impossible.ev"), bad);
  r = nobn_cli({"infer", data_path("zero_root.net"), bad.string(), "--epsilon", "0", "--gold"});
  CHECK(r.code == 0);
  f = fields(lines(r.out)[1]);
  CHECK(f[4] == "0");
  CHECK(f[6] == "");
  CHECK(read_text_file((dir / "bad.post").string()).empty());
  CHECK(r.err.find("warning") != std::string::npos);

  r = nobn_cli({"infer", data_path("chain3.net"), ev.string(), "--epsilon", "0", "--gold",
                "--cap", "0"});
  CHECK(r.code == 0);
  CHECK(fields(lines(r.out)[1])[5] == "");
  CHECK(r.err.find("warning") != std::string::npos);

  CHECK(nobn_cli({"infer", data_path("chain3.net"), ev.string()}).code == 1);
  CHECK(nobn_cli({"infer", data_path("chain3.net"), ev.string(), "--schedule", "1e-4,1e-2"})
            .code == 1);
}

TEST_CASE("bench on chain3 and determinism across jobs") {
  const fs::path dir = scratch("bench");
  auto r = nobn_cli({"bench", data_path("chain3.net"), "--cases", "1", "--findings", "1",
                     "--gold", "exact", "--no-timing", "--summary",
                     (dir / "summary.csv").string()});
  REQUIRE(r.code == 0);
  const auto out = lines(r.out);
  REQUIRE(out.size() == 11);
  CHECK(fields(out.back())[6] == "1");

  const fs::path gen = dir / "gen";
  REQUIRE(nobn_cli({"gen", "--shape", "3,6,12", "--seed", "5", "--out", gen.string()}).code == 0);
  const std::string net = (gen / "network.net").string();
  std::vector<std::string> base{"bench", net, "--cases", "6", "--findings", "8", "--seed",
                                "9", "--gold", "exact", "--no-timing", "--schedule",
                                "1e-2,1e-4,1e-6"};
  auto one = base;
  one.insert(one.end(), {"--jobs", "1", "--summary", (dir / "s1").string()});
  auto four = base;
  four.insert(four.end(), {"--jobs", "4", "--summary", (dir / "s4").string()});
  const Run a = nobn_cli(one);
  const Run b = nobn_cli(four);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(read_text_file((dir / "s1").string()) == read_text_file((dir / "s4").string()));
  CHECK(lines(a.out).size() == 1 + 6 * 3);

  CHECK(nobn_cli({"bench", net, "--gold", "sometimes"}).code == 1);
  CHECK(nobn_cli({"bench", net, "--findings", "13"}).code == 1);
}

TEST_CASE("gen") {
  const fs::path a = scratch("gen-a");
  const fs::path b = scratch("gen-b");
  auto ra = nobn_cli({"gen", "--seed", "3", "--out", a.string(), "--cases", "2", "--findings",
                      "26"});
  auto rb = nobn_cli({"gen", "--seed", "3", "--out", b.string(), "--cases", "2", "--findings",
                      "26"});
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  CHECK(lines(ra.out).size() == 3);
  for (const char* name : {"network.net", "case-000.case", "case-001.case"}) {
    CHECK(read_text_file((a / name).string()) == read_text_file((b / name).string()));
  }
  auto v = nobn_cli({"validate", (a / "network.net").string()});
  CHECK(v.code == 0);
  CHECK(v.out.rfind("145 nodes", 0) == 0);
  CHECK(v.out.find("five-level network") != std::string::npos);

  CHECK(nobn_cli({"gen", "--out", a.string(), "--shape", "3,x"}).code == 1);
  CHECK(nobn_cli({"gen", "--out", a.string(), "--q-range", "0.5"}).code == 1);
  CHECK(nobn_cli({"gen"}).code == 1);
}
