#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Everything here is deliberately naive: full joint tables, all
// labeled DAGs, row-by-row counting.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "nobn/nobn.hpp"

namespace oracle {

using nobn::ParentSet;

/// Counts by scanning rows and decoding each parent value separately.
inline std::vector<std::array<std::int64_t, 2>> naive_counts(const nobn::Dataset& d, int child,
                                                             const std::vector<int>& parents) {
  std::vector<std::array<std::int64_t, 2>> out(std::size_t{1} << parents.size(), {0, 0});
  for (std::size_t r = 0; r < d.N(); ++r) {
    std::size_t j = 0;
    for (std::size_t p = 0; p < parents.size(); ++p)
      if (d.value(r, parents[p])) j += std::size_t{1} << p;
    ++out[j][d.value(r, child)];
  }
  return out;
}

/// P(child = 0 | config) of a noisy-OR, straight from the product form.
inline double noisyor_p0(const std::vector<double>& q, std::size_t config) {
  double p = 1.0;
  for (std::size_t l = 0; l < q.size(); ++l)
    if ((config >> l) & 1u) p *= q[l];
  return p;
}

/// Every labeled DAG on n nodes as per-node parent masks.
inline std::vector<std::vector<ParentSet>> all_dags(int n) {
  std::vector<std::vector<ParentSet>> out;
  std::vector<ParentSet> cur(n);
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  auto rec = [&](auto&& self, int v) -> void {
    if (v == n) {
      if (nobn::is_acyclic(cur)) out.push_back(cur);
      return;
    }
    const std::uint64_t others = full & ~(std::uint64_t{1} << v);
    for (std::uint64_t m = others;; m = (m - 1) & others) {
      cur[v] = ParentSet(m);
      self(self, v + 1);
      if (m == 0) break;
    }
  };
  rec(rec, 0);
  return out;
}

struct BruteCredible {
  double opt = nobn::kInf;
  std::set<nobn::CanonicalKey> keys;
  std::vector<double> scores;
};

/// OPT and the credible set by trying every DAG and every combination of
/// table entries with the DAG's exact parent sets.
inline BruteCredible brute_credible(const nobn::ScoreTable& t, double epsilon,
                                    const std::vector<std::vector<ParentSet>>& dags) {
  const int n = t.n();
  struct Combo {
    nobn::CanonicalKey key;
    double score;
  };
  std::vector<Combo> all;
  for (const auto& dag : dags) {
    std::vector<std::vector<const nobn::LocalScore*>> options(n);
    bool ok = true;
    for (int v = 0; v < n && ok; ++v) {
      for (const auto& e : t.entries[v])
        if (e.parents == dag[v]) options[v].push_back(&e);
      ok = !options[v].empty();
    }
    if (!ok) continue;
    std::vector<std::size_t> pick(n, 0);
    while (true) {
      Combo c;
      c.score = 0.0;
      for (int v = 0; v < n; ++v) {
        const auto* e = options[v][pick[v]];
        c.score += e->score;
        c.key.emplace_back(e->parents.mask(), e->kind());
      }
      all.push_back(std::move(c));
      int v = 0;
      while (v < n && ++pick[v] == options[v].size()) pick[v++] = 0;
      if (v == n) break;
    }
  }
  BruteCredible out;
  for (const auto& c : all) out.opt = std::min(out.opt, c.score);
  for (const auto& c : all)
    if (c.score <= out.opt + epsilon + nobn::kScoreSlack) {
      out.keys.insert(c.key);
      out.scores.push_back(c.score);
    }
  return out;
}

/// P(query | evidence) from the full joint distribution.
inline std::array<double, 2> joint_posterior(const nobn::Network& net, const nobn::Evidence& ev, int query) {
  const int n = net.n();
  std::array<double, 2> acc{0.0, 0.0};
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x) {
    bool match = true;
    for (const auto& [v, val] : ev)
      if (static_cast<int>((x >> v) & 1u) != val) match = false;
    if (!match) continue;
    double p = 1.0;
    for (int v = 0; v < n; ++v) {
      const auto& node = net.node(v);
      const auto members = node.parents.members();
      std::size_t j = 0;
      for (std::size_t i = 0; i < members.size(); ++i)
        if ((x >> members[i]) & 1u) j += std::size_t{1} << i;
      const int k = static_cast<int>((x >> v) & 1u);
      double p0;
      if (node.rep.is_noisy_or())
        p0 = noisyor_p0(node.rep.noisy_or().q, j);
      else
        p0 = node.rep.cpt().rows.at(j)[0];
      p *= k == 0 ? p0 : 1.0 - p0;
    }
    acc[(x >> query) & 1u] += p;
  }
  const double z = acc[0] + acc[1];
  return {acc[0] / z, acc[1] / z};
}

/// Random DAG over n nodes with random full-CPT or noisy-OR parameters.
inline nobn::Network random_network(int n, std::mt19937_64& rng, double edge_prob = 0.4, double noisy_or_prob = 0.4) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("V" + std::to_string(i));
  std::vector<nobn::LocalScore> nodes(n);
  for (int pos = 0; pos < n; ++pos) {
    const int v = order[pos];
    ParentSet ps;
    for (int prev = 0; prev < pos; ++prev)
      if (u(rng) < edge_prob) ps = ps.with(order[prev]);
    nobn::Representation rep;
    if (!ps.empty() && u(rng) < noisy_or_prob) {
      nobn::NoisyOrParams q;
      for (int i = 0; i < ps.size(); ++i) q.q.push_back(0.05 + 0.9 * u(rng));
      rep = nobn::Representation(q);
    } else {
      nobn::Cpt cpt;
      for (std::size_t j = 0; j < ps.configurations(); ++j) {
        const double p = 0.05 + 0.9 * u(rng);
        cpt.rows.push_back({p, 1.0 - p});
      }
      rep = nobn::Representation(cpt);
    }
    nodes[v] = nobn::LocalScore{v, ps, rep, 0.0};
  }
  return nobn::Network(names, nodes);
}

/// Random score table: every node has the empty set plus a random selection
/// of other parent sets, each with one or both representations.
inline nobn::ScoreTable random_table(int n, std::mt19937_64& rng, double keep_prob = 0.35) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  nobn::ScoreTable t;
  for (int v = 0; v < n; ++v) t.names.push_back("V" + std::to_string(v));
  t.entries.resize(n);
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  for (int v = 0; v < n; ++v) {
    const std::uint64_t others = full & ~(std::uint64_t{1} << v);
    const double base = 20.0 + 10.0 * u(rng);
    t.entries[v].push_back({v, ParentSet{}, nobn::Representation{}, base});
    for (std::uint64_t m = others; m; m = (m - 1) & others) {
      if (u(rng) > keep_prob) continue;
      const ParentSet ps(m);
      const double s = base - 4.0 * u(rng) + 0.5 * ps.size();
      t.entries[v].push_back({v, ps, nobn::Representation{}, s});
      if (u(rng) < 0.5) {
        nobn::NoisyOrParams q{std::vector<double>(ps.size(), 0.5)};
        t.entries[v].push_back({v, ps, nobn::Representation(q), s - 2.0 + 4.0 * u(rng)});
      }
    }
  }
  t.sort();
  return t;
}

/// Random binary dataset where each variable depends on a few earlier ones.
inline nobn::Dataset random_dataset(int n, std::size_t N, std::mt19937_64& rng) {
  const auto net = random_network(n, rng, 0.5, 0.5);
  return nobn::forward_sample(net, N, rng());
}

}  // namespace oracle
