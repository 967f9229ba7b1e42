#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "nobn/data.hpp"
#include "oracles.hpp"

using nobn::ParentSet;

namespace {

nobn::Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return nobn::parse_csv(in);
}

}  // namespace

TEST_CASE("csv parsing", "[data]") {
  const auto d = parse("A,B\n0,1\n1,1\n");
  CHECK(d.n() == 2);
  CHECK(d.N() == 2);
  CHECK(d.value(1, 0) == 1);
  CHECK(d.index_of("B") == 1);

  SECTION("CRLF, BOM and trailing blank lines") {
    const auto e = parse("\xEF\xBB\xBF" "A,B\r\n0,1\r\n1,1\r\n\r\n");
    CHECK(e.names() == d.names());
    CHECK(e.rows() == d.rows());
  }
}

TEST_CASE("csv errors name the row and column", "[data]") {
  try {
    parse("A,B\n0,0\n1,1\n0,2\n");
    FAIL("expected a parse error");
  } catch (const nobn::parse_error& e) {
    CHECK(e.row() == 3);
    CHECK(std::string(e.what()).find("column B") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("A,B\n"), nobn::parse_error);
  CHECK_THROWS_WITH(parse("A,B\n"), Catch::Matchers::ContainsSubstring("no instances"));
  CHECK_THROWS_AS(parse("A,A\n0,1\n"), nobn::parse_error);
  CHECK_THROWS_AS(parse("A,B\n0\n"), nobn::parse_error);
  CHECK_THROWS_AS(parse("A,B\n0,\n"), nobn::parse_error);
  CHECK_THROWS_AS(nobn::load_csv("/nonexistent/file.csv"), nobn::io_error);
}

TEST_CASE("csv write then parse is the identity", "[data]") {
  std::mt19937_64 rng(8);
  const auto d = oracle::random_dataset(5, 40, rng);
  std::ostringstream out;
  nobn::write_csv(out, d);
  const auto back = parse(out.str());
  CHECK(back.names() == d.names());
  CHECK(back.rows() == d.rows());
}

TEST_CASE("counts on a hand example", "[data]") {
  const auto d = parse("A,B\n0,0\n1,1\n1,1\n");
  const auto cv = nobn::counts(d, 1, ParentSet::of({0}));
  CHECK(cv.n_jk[0] == std::array<std::int64_t, 2>{1, 0});
  CHECK(cv.n_jk[1] == std::array<std::int64_t, 2>{0, 2});
  const auto marginal = nobn::counts(d, 1, ParentSet{});
  CHECK(marginal.n_jk.size() == 1);
  CHECK(marginal.n_jk[0] == std::array<std::int64_t, 2>{1, 2});
  CHECK_THROWS_AS(nobn::counts(d, 1, ParentSet::of({1})), nobn::invalid_argument);
}

TEST_CASE("counts agree with a row-scan oracle on every family", "[data][oracle]") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const auto d = oracle::random_dataset(n, 1 + rng() % 50, rng);
    for (int child = 0; child < n; ++child) {
      const std::uint64_t others = ((std::uint64_t{1} << n) - 1) & ~(std::uint64_t{1} << child);
      for (std::uint64_t m = others;; m = (m - 1) & others) {
        const ParentSet ps(m);
        const auto cv = nobn::counts(d, child, ps);
        REQUIRE(cv.n_jk == oracle::naive_counts(d, child, ps.members()));
        REQUIRE(cv.total() == static_cast<std::int64_t>(d.N()));
        REQUIRE(nobn::counts(d, child, ps).n_jk == cv.n_jk);
        if (m == 0) break;
      }
    }
  }
}

TEST_CASE("summing counts over the child gives the parent counts", "[data]") {
  std::mt19937_64 rng(5);
  const auto d = oracle::random_dataset(4, 60, rng);
  const auto ps = ParentSet::of({0, 2});
  const auto cv = nobn::counts(d, 1, ps);
  const auto joint = nobn::counts(d, 3, ps);
  for (std::size_t j = 0; j < cv.n_jk.size(); ++j) CHECK(cv.n_j(j) == joint.n_j(j));
}
