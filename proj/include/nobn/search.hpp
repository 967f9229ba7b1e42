#pragma once

// Exact search over score tables: the optimal network score by dynamic
// programming over variable subsets, and enumeration of every network whose
// score lies within epsilon of it.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "nobn/core.hpp"

namespace nobn {

inline constexpr int kDefaultMaxSearchNodes = 24;
inline constexpr std::size_t kDefaultMaxNetworks = 100000;

namespace detail {

inline void check_search_capacity(const ScoreTable& tables, int max_nodes) {
  tables.validate();
  if (tables.n() < 1) throw invalid_argument("score table has no nodes");
  if (tables.n() > max_nodes)
    throw capacity_error("exact search supports at most " + std::to_string(max_nodes) + " variables, got " +
                         std::to_string(tables.n()));
}

/// Lowest-scoring entry of a node whose parents all lie in `allowed`, or
/// +inf. Entries are sorted ascending so the first match wins.
inline double best_within(const std::vector<LocalScore>& entries, std::uint64_t allowed) {
  for (const auto& e : entries)
    if ((e.parents.mask() & ~allowed) == 0) return e.score;
  return kInf;
}

}  // namespace detail

/// Minimum over DAGs of the summed local scores, via
///   best(S) = min_{v in S} best_within(v, S \ {v}) + best(S \ {v}).
inline double optimal_score(const ScoreTable& unsorted, int max_nodes = kDefaultMaxSearchNodes) {
  detail::check_search_capacity(unsorted, max_nodes);
  ScoreTable tables = unsorted;
  tables.sort();
  const int n = tables.n();
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> best(subsets, kInf);
  best[0] = 0.0;
  for (std::size_t s = 1; s < subsets; ++s) {
    double b = kInf;
    for (std::size_t m = s; m; m &= m - 1) {
      const int v = std::countr_zero(m);
      const std::size_t rest = s & ~(std::size_t{1} << v);
      if (best[rest] == kInf) continue;
      const double local = detail::best_within(tables.entries[v], rest);
      b = std::min(b, local + best[rest]);
    }
    best[s] = b;
  }
  if (!std::isfinite(best[subsets - 1])) throw invalid_argument("score table admits no acyclic network");
  return best[subsets - 1];
}

namespace detail {

class CredibleEnumerator {
 public:
  CredibleEnumerator(const ScoreTable& tables, double limit, std::size_t max_networks)
      : tables_(tables), limit_(limit), max_networks_(max_networks), n_(tables.n()) {
    bound_.assign(n_ + 1, 0.0);
    for (int v = n_ - 1; v >= 0; --v) bound_[v] = bound_[v + 1] + tables_.entries[v].front().score;
    chosen_.assign(n_, nullptr);
  }

  void run() { descend(0, 0.0); }

  std::vector<std::vector<const LocalScore*>> found;
  bool truncated = false;

 private:
  // Nodes reachable from v along edges parent -> child among assigned nodes.
  std::uint64_t reachable_from(int v, int assigned) const {
    std::uint64_t seen = std::uint64_t{1} << v;
    std::vector<int> stack{v};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int w = 0; w < assigned; ++w)
        if (!((seen >> w) & 1u) && chosen_[w]->parents.contains(u)) {
          seen |= std::uint64_t{1} << w;
          stack.push_back(w);
        }
    }
    return seen;
  }

  bool descend(int v, double partial) {
    if (v == n_) {
      if (partial > limit_) return true;
      if (max_networks_ != 0 && found.size() >= max_networks_) {
        truncated = true;
        return false;
      }
      found.push_back(chosen_);
      return true;
    }
    const std::uint64_t reach = reachable_from(v, v);
    for (const auto& e : tables_.entries[v]) {
      if (partial + e.score + bound_[v + 1] > limit_) break;
      if (e.parents.mask() & reach) continue;
      chosen_[v] = &e;
      if (!descend(v + 1, partial + e.score)) return false;
    }
    chosen_[v] = nullptr;
    return true;
  }

  const ScoreTable& tables_;
  double limit_;
  std::size_t max_networks_;
  int n_;
  std::vector<double> bound_;
  std::vector<const LocalScore*> chosen_;
};

}  // namespace detail

/// Every acyclic assignment of one table entry per node scoring at most
/// OPT + epsilon (+ kScoreSlack). With max_networks > 0 the search stops
/// after that many networks and flags the result as truncated when more
/// exist; 0 means unbounded. Networks are ordered by score, then by
/// canonical key.
inline CredibleSet enumerate_credible(const ScoreTable& tables, double epsilon,
                                      std::size_t max_networks = kDefaultMaxNetworks,
                                      int max_nodes = kDefaultMaxSearchNodes) {
  if (!(epsilon >= 0.0)) throw invalid_argument("epsilon must be >= 0");
  ScoreTable sorted = tables;
  sorted.sort();
  const double opt = optimal_score(sorted, max_nodes);

  detail::CredibleEnumerator dfs(sorted, opt + epsilon + kScoreSlack, max_networks);
  dfs.run();

  CredibleSet out;
  out.epsilon = epsilon;
  out.opt = opt;
  out.truncated = dfs.truncated;
  std::set<CanonicalKey> seen;
  for (const auto& assignment : dfs.found) {
    std::vector<LocalScore> nodes;
    nodes.reserve(assignment.size());
    for (const auto* e : assignment) nodes.push_back(*e);
    Network net(sorted.names, std::move(nodes));
    if (seen.insert(net.key()).second) out.networks.push_back(std::move(net));
  }
  std::stable_sort(out.networks.begin(), out.networks.end(), [](const Network& a, const Network& b) {
    const double sa = a.total_score(), sb = b.total_score();
    if (sa != sb) return sa < sb;
    return a.key() < b.key();
  });
  return out;
}

/// The lowest-scoring network (first in canonical order on ties).
inline Network optimal_network(const ScoreTable& tables, int max_nodes = kDefaultMaxSearchNodes) {
  auto cs = enumerate_credible(tables, 0.0, 0, max_nodes);
  return cs.networks.front();
}

}  // namespace nobn
