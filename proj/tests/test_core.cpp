#include <catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "nobn/core.hpp"

using Catch::Matchers::WithinAbs;
using nobn::LocalScore;
using nobn::Network;
using nobn::ParentSet;
using nobn::Representation;

TEST_CASE("epsilon from Bayes factor is the natural log", "[core]") {
  CHECK_THAT(nobn::epsilon_from_bayes_factor(20.0), WithinAbs(2.99573, 1e-5));
  CHECK_THAT(nobn::epsilon_from_bayes_factor(std::exp(1.0)), WithinAbs(1.0, 1e-12));
  CHECK_THAT(nobn::epsilon_from_bayes_factor(1.0001), WithinAbs(9.9995e-5, 1e-9));
  CHECK_THROWS_AS(nobn::epsilon_from_bayes_factor(1.0), nobn::invalid_argument);
  CHECK_THROWS_AS(nobn::epsilon_from_bayes_factor(0.5), nobn::invalid_argument);
}

TEST_CASE("configuration index round-trips for sets up to 20 members", "[core]") {
  std::mt19937_64 rng(3);
  for (int size = 0; size <= 20; ++size) {
    std::vector<int> pool(40);
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(size);
    const auto ps = ParentSet::from_members(pool);
    REQUIRE(ps.size() == size);
    for (std::size_t j = 0; j < ps.configurations(); ++j) REQUIRE(ps.config_of(ps.row_of(j)) == j);
  }
}

TEST_CASE("parent set algebra", "[core]") {
  const auto a = ParentSet::of({1, 3});
  const auto b = ParentSet::of({1, 3, 4});
  CHECK(a.strict_subset_of(b));
  CHECK_FALSE(b.subset_of(a));
  CHECK(a.subset_of(a));
  CHECK_FALSE(a.strict_subset_of(a));
  CHECK(b.without(4) == a);
  CHECK(b.members() == std::vector<int>{1, 3, 4});
  CHECK(b.highest() == 4);
  CHECK(ParentSet{}.highest() == -1);
  CHECK(nobn::lexicographic_less(ParentSet::of({0, 5}), ParentSet::of({1, 2})));
  CHECK_THROWS_AS(ParentSet{}.with(64), nobn::invalid_argument);
}

namespace {

Network make_network(std::vector<std::pair<ParentSet, bool>> layout) {
  std::vector<std::string> names;
  std::vector<LocalScore> nodes;
  for (int v = 0; v < static_cast<int>(layout.size()); ++v) {
    names.push_back("V" + std::to_string(v));
    Representation rep = layout[v].second
                             ? Representation(nobn::NoisyOrParams{std::vector<double>(layout[v].first.size(), 0.5)})
                             : Representation{};
    nodes.push_back({v, layout[v].first, rep, 1.0 + v});
  }
  return Network(names, nodes);
}

}  // namespace

TEST_CASE("canonical keys", "[core]") {
  const auto net = make_network({{ParentSet{}, false}, {ParentSet::of({0}), false}, {ParentSet::of({0, 1}), true},
                                 {ParentSet::of({2}), false}});
  SECTION("node order of construction does not matter") {
    auto nodes = net.nodes();
    std::reverse(nodes.begin(), nodes.end());
    CHECK(Network::from_unordered(net.names(), nodes).key() == nobn::canonicalize(net));
  }
  SECTION("representation distinguishes networks") {
    const auto other = make_network({{ParentSet{}, false}, {ParentSet::of({0}), false},
                                     {ParentSet::of({0, 1}), true}, {ParentSet::of({2}), true}});
    CHECK(other.key() != net.key());
  }
  SECTION("empty network differs from an edged one") {
    const auto empty = make_network({{ParentSet{}, false}, {ParentSet{}, false}, {ParentSet{}, false},
                                     {ParentSet{}, false}});
    CHECK(empty.key() != net.key());
  }
  CHECK(net.total_score() == 1.0 + 2.0 + 3.0 + 4.0);
  CHECK(net.noisy_or_count() == 1);
}

TEST_CASE("acyclicity", "[core]") {
  const auto A = ParentSet{}, fromA = ParentSet::of({0}), fromB = ParentSet::of({1});
  CHECK(nobn::is_acyclic({A, fromA, fromB}));
  CHECK_FALSE(nobn::is_acyclic({fromB, fromA}));
  CHECK(nobn::topological_order({fromB, A}) == std::vector<int>{1, 0});
  CHECK_THROWS_AS(nobn::topological_order({fromB, fromA}), nobn::invalid_argument);
}

TEST_CASE("network rejects malformed nodes", "[core]") {
  std::vector<std::string> names{"A", "B"};
  CHECK_THROWS_AS(Network(names, {{0, ParentSet::of({0}), {}, 0.0}, {1, {}, {}, 0.0}}), nobn::invalid_argument);
  CHECK_THROWS_AS(Network(names, {{0, ParentSet::of({2}), {}, 0.0}, {1, {}, {}, 0.0}}), nobn::invalid_argument);
  CHECK_THROWS_AS(Network(names, {{1, {}, {}, 0.0}, {0, {}, {}, 0.0}}), nobn::invalid_argument);
}

TEST_CASE("score table validation", "[core]") {
  nobn::ScoreTable t;
  t.names = {"A", "B"};
  t.entries = {{{0, {}, {}, 1.0}}, {}};
  CHECK_THROWS_AS(t.validate(), nobn::invalid_argument);
  t.entries[1] = {{1, ParentSet::of({0}), {}, 2.0}, {1, {}, {}, 1.5}};
  CHECK_NOTHROW(t.validate());
  t.sort();
  CHECK(t.entries[1].front().score == 1.5);
  t.entries[1].push_back({1, ParentSet::of({1}), {}, 0.0});
  CHECK_THROWS_AS(t.validate(), nobn::invalid_argument);
}
