#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "nobn/io.hpp"
#include "oracles.hpp"

using nobn::ParentSet;

namespace {

std::string write(const nobn::ScoreTable& t) {
  std::ostringstream out;
  nobn::write_score_file(out, t);
  return out.str();
}

nobn::ScoreTable read(const std::string& text) {
  std::istringstream in(text);
  return nobn::read_score_file(in);
}

}  // namespace

TEST_CASE("score file layout", "[io]") {
  nobn::ScoreTable t;
  t.names = {"A", "B", "C"};
  t.entries = {{{0, {}, {}, 10.0}},
               {{1, ParentSet::of({0, 2}), nobn::Representation(nobn::NoisyOrParams{{0.25, 0.5}}), 7.5},
                {1, {}, {}, 9.0}},
               {{2, ParentSet::of({0}), {}, -1.25}}};
  const std::string expected =
      "3\n"
      "A 1\n"
      "10.000000 T 0\n"
      "B 2\n"
      "7.500000 N 2 A C | 0.250000 0.500000\n"
      "9.000000 T 0\n"
      "C 1\n"
      "-1.250000 T 1 A\n";
  CHECK(write(t) == expected);
  const auto back = read(expected);
  CHECK(back.names == t.names);
  CHECK(back.entries[1][0].rep.noisy_or().q == std::vector<double>{0.25, 0.5});
  CHECK(back.entries[1][0].parents == ParentSet::of({0, 2}));
  CHECK(write(back) == expected);
}

TEST_CASE("score file round trip is byte-identical", "[io]") {
  std::mt19937_64 rng(14);
  for (int rep = 0; rep < 5; ++rep) {
    const auto d = oracle::random_dataset(5, 150, rng);
    nobn::ScoringOptions opt;
    opt.epsilon = std::log(20.0);
    const auto table = nobn::build_score_table(d, opt).table;
    const auto text = write(table);
    const auto back = read(text);
    REQUIRE(write(back) == text);
    for (int v = 0; v < 5; ++v) {
      REQUIRE(back.entries[v].size() == table.entries[v].size());
      for (std::size_t i = 0; i < table.entries[v].size(); ++i) {
        REQUIRE(back.entries[v][i].parents == table.entries[v][i].parents);
        REQUIRE(back.entries[v][i].kind() == table.entries[v][i].kind());
        REQUIRE(std::abs(back.entries[v][i].score - table.entries[v][i].score) <= 5e-7);
      }
    }
  }
}

TEST_CASE("noisy-OR parameters follow their parent names", "[io]") {
  const auto t = read("2\nX 1\n1.000000 T 0\nY 1\n2.000000 N 1 X | 0.300000\n");
  CHECK(t.entries[1][0].rep.noisy_or().q == std::vector<double>{0.3});
  const auto u = read("3\nA 1\n0.5 T 0\nB 1\n0.5 T 0\nC 1\n1.0 N 2 B A | 0.2 0.7\n");
  // parameters are stored in variable order: A then B
  CHECK(u.entries[2][0].rep.noisy_or().q == std::vector<double>{0.7, 0.2});
}

TEST_CASE("malformed score files", "[io]") {
  CHECK_THROWS_AS(read(""), nobn::parse_error);
  CHECK_THROWS_AS(read("2\nA 1\n1.0 T 0\n"), nobn::parse_error);
  CHECK_THROWS_AS(read("1\nA 1\n1.0 X 0\n"), nobn::parse_error);
  CHECK_THROWS_AS(read("2\nA 1\n1.0 T 1 C\nB 1\n1.0 T 0\n"), nobn::parse_error);
  CHECK_THROWS_AS(read("2\nA 1\n1.0 T 1 A\nB 1\n1.0 T 0\n"), nobn::parse_error);
  CHECK_THROWS_AS(read("2\nA 1\n1.0 T 0\nB 1\n1.0 N 1 A\n"), nobn::parse_error);
  CHECK_THROWS_AS(read("2\nA 1\n1.0 T 0\nB 1\nabc T 0\n"), nobn::parse_error);
  CHECK_THROWS_AS(read("1\nA 0\n"), nobn::parse_error);
  CHECK_THROWS_AS(read("1\nA 1\n1.0 T 0\nextra\n"), nobn::parse_error);
  try {
    read("2\nA 1\n1.0 T 0\nB 1\n1.0 Q 0\n");
  } catch (const nobn::parse_error& e) {
    CHECK(e.row() == 5);
  }
  CHECK_THROWS_AS(nobn::load_score_file("/nonexistent.scores"), nobn::io_error);
}

TEST_CASE("network JSON round trip", "[io]") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const auto net = oracle::random_network(5, rng, 0.5, 0.5);
    const auto j = nobn::network_to_json(net);
    CHECK(j.at("variables").size() == 5);
    CHECK(j.contains("totalScore"));
    const auto back = nobn::network_from_json(nobn::json::parse(j.dump()));
    REQUIRE(back.key() == net.key());
    for (int v = 0; v < 5; ++v) {
      if (net.node(v).rep.is_noisy_or())
        CHECK(back.node(v).rep.noisy_or().q == net.node(v).rep.noisy_or().q);
      else
        CHECK(back.node(v).rep.cpt().rows == net.node(v).rep.cpt().rows);
    }
  }
}

TEST_CASE("network JSON validation", "[io]") {
  const auto good = nobn::json::parse(R"({"variables":["A","B"],"nodes":[
      {"name":"A","parents":[],"rep":"table","params":{"cpt":[[0.5,0.5]]}},
      {"name":"B","parents":["A"],"rep":"noisy-or","params":{"q":[0.3]}}]})");
  CHECK(nobn::network_from_json(good).node(1).rep.is_noisy_or());

  auto cyclic = good;
  cyclic["nodes"][0] = nobn::json::parse(R"({"name":"A","parents":["B"],"rep":"noisy-or","params":{"q":[0.3]}})");
  CHECK_THROWS_AS(nobn::network_from_json(cyclic), nobn::parse_error);

  auto bad_q = good;
  bad_q["nodes"][1]["params"]["q"] = {1.5};
  CHECK_THROWS_AS(nobn::network_from_json(bad_q), nobn::parse_error);

  auto bad_cpt = good;
  bad_cpt["nodes"][0]["params"]["cpt"] = {{0.5, 0.6}};
  CHECK_THROWS_AS(nobn::network_from_json(bad_cpt), nobn::parse_error);

  auto unknown = good;
  unknown["nodes"][1]["parents"] = {"Z"};
  CHECK_THROWS_AS(nobn::network_from_json(unknown), nobn::parse_error);

  CHECK_THROWS_AS(nobn::network_from_json(nobn::json::parse(R"({"nodes":[]})")), nobn::parse_error);
}

TEST_CASE("credible set JSON and DOT", "[io]") {
  std::mt19937_64 rng(9);
  const auto t = oracle::random_table(4, rng);
  const auto cs = nobn::enumerate_credible(t, 2.0, 0);
  const auto j = nobn::credible_set_to_json(cs);
  CHECK(j.at("count") == cs.networks.size());
  CHECK(j.at("networks").size() == cs.networks.size());
  CHECK(j.at("truncated") == false);
  CHECK(j.at("opt").get<double>() == cs.opt);

  const auto gt = nobn::gen_single_noisyor(2, 1);
  const auto dot = nobn::network_to_dot(gt.network);
  CHECK(dot.find("digraph") == 0);
  CHECK(dot.find("\"X1\" -> \"Y\"") != std::string::npos);
  CHECK(dot.find("noisy-OR") != std::string::npos);
}
