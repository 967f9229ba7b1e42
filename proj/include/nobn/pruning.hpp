#pragma once

// Candidate parent-set enumeration with safe pruning, and the merge of the
// full-CPT and noisy-OR score lists into one table per node.
//
// Rules (all comparisons carry kScoreSlack in favour of keeping):
//   subset rule     P < P', s(P) + eps <= s(P')              -> drop P'
//   penalty rule    P < P', s(P) - pen(P') + eps < 0         -> drop P' and every superset
//   infeasibility   some record has child = 1, all parents 0 -> no noisy-OR for P
//   null rule       |P| ln(N)/2 > s_cpt({}) + eps            -> no noisy-OR for P or supersets

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "nobn/core.hpp"
#include "nobn/cpt_scoring.hpp"
#include "nobn/data.hpp"
#include "nobn/noisyor.hpp"

namespace nobn {

inline bool prune_by_subset(const LocalScore& subset, const LocalScore& superset, double epsilon) {
  if (subset.child != superset.child) throw invalid_argument("subset rule compares scores of different nodes");
  if (!subset.parents.strict_subset_of(superset.parents))
    throw invalid_argument("subset rule needs a strict subset");
  return subset.score + epsilon <= superset.score - kScoreSlack;
}

/// Penalty of a parent set under a representation.
inline double penalty(RepKind kind, ParentSet parents, std::size_t N) {
  return kind == RepKind::FullCpt ? penalty_full(parents, N) : penalty_noisyor(parents, N);
}

/// True when `superset` (scored as `kind`) and all of its supersets can be
/// dropped given the score of a subset.
inline bool prune_supersets_by_penalty(const LocalScore& subset, ParentSet superset, RepKind kind, std::size_t N,
                                       double epsilon) {
  if (!subset.parents.strict_subset_of(superset)) throw invalid_argument("penalty rule needs a strict subset");
  return subset.score + epsilon + kScoreSlack < penalty(kind, superset, N);
}

inline bool prune_noisyor_by_null(double null_score, ParentSet parents, std::size_t N, double epsilon) {
  return penalty_noisyor(parents, N) > null_score + epsilon + kScoreSlack;
}

// ---------------------------------------------------------------------------

struct PruneStats {
  double candidates = 0;     // lattice size (under the cardinality cap)
  std::size_t visited = 0;
  std::size_t scored = 0;
  std::size_t retained = 0;
  std::size_t subset_pruned = 0;
  std::size_t penalty_cut = 0;
  std::size_t null_cut = 0;
  std::size_t infeasible = 0;

  double unvisited() const { return candidates - static_cast<double>(visited); }
  double pruned_fraction() const { return candidates > 0 ? 1.0 - static_cast<double>(retained) / candidates : 0.0; }

  PruneStats& operator+=(const PruneStats& o) {
    candidates += o.candidates;
    visited += o.visited;
    scored += o.scored;
    retained += o.retained;
    subset_pruned += o.subset_pruned;
    penalty_cut += o.penalty_cut;
    null_cut += o.null_cut;
    infeasible += o.infeasible;
    return *this;
  }
};

struct NodeScores {
  std::vector<LocalScore> cpt;
  std::vector<LocalScore> noisy_or;
  PruneStats cpt_stats;
  PruneStats noisy_or_stats;
};

namespace detail {

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double lattice_size(int others, int min_size, int max_size) {
  double total = 0.0;
  for (int k = min_size; k <= std::min(max_size, others); ++k) total += binomial(others, k);
  return total;
}

struct Visit {
  bool alive = false;
  double score = kInf;  // +inf when not scored under this representation
};

struct LatticeNode {
  double best_subset = kInf;  // lowest score over scored strict subsets
  double score = kInf;
};

/// Breadth-first walk of the parent-set lattice of `child`: cardinality
/// ascending, lexicographic within a cardinality. A candidate is generated
/// only when all of its immediate subsets are alive, so cutting a candidate
/// removes its whole upper cone.
inline void walk_lattice(int n, int child, int max_size, const std::function<Visit(ParentSet, double)>& visit) {
  std::map<std::uint64_t, LatticeNode> layer;
  const auto root = visit(ParentSet{}, kInf);
  if (!root.alive) return;
  layer.emplace(0, LatticeNode{kInf, root.score});

  for (int k = 1; k <= max_size && !layer.empty(); ++k) {
    std::vector<ParentSet> next;
    for (const auto& [mask, node] : layer) {
      const ParentSet base(mask);
      for (int x = base.highest() + 1; x < n; ++x) {
        if (x == child) continue;
        const ParentSet cand = base.with(x);
        bool all_alive = true;
        for (int m : base.members()) all_alive = all_alive && layer.count(cand.without(m).mask());
        if (all_alive) next.push_back(cand);
      }
    }
    std::sort(next.begin(), next.end(), lexicographic_less);

    std::map<std::uint64_t, LatticeNode> next_layer;
    for (ParentSet cand : next) {
      double best = kInf;
      for (int m : cand.members()) {
        const auto& sub = layer.at(cand.without(m).mask());
        best = std::min({best, sub.best_subset, sub.score});
      }
      const auto v = visit(cand, best);
      if (v.alive) next_layer.emplace(cand.mask(), LatticeNode{best, v.score});
    }
    layer = std::move(next_layer);
  }
}

inline int resolve_cap(int n, std::optional<int> max_parents) {
  const int others = n - 1;
  if (!max_parents) return others;
  if (*max_parents < 0) throw invalid_argument("max parents must be >= 0");
  return std::min(*max_parents, others);
}

}  // namespace detail

/// Scores the surviving candidates of one node under both representations.
/// Retained lists hold only finite scores; candidates removed by a rule are
/// absent.
inline NodeScores enumerate_node_scores(const Dataset& data, int child, double epsilon, const FitConfig& cfg = {},
                                        std::optional<int> max_parents = std::nullopt) {
  if (epsilon < 0.0) throw invalid_argument("epsilon must be >= 0");
  const int n = data.n();
  const std::size_t N = data.N();
  const int cap = detail::resolve_cap(n, max_parents);
  NodeScores out;
  out.cpt_stats.candidates = detail::lattice_size(n - 1, 0, cap);
  out.noisy_or_stats.candidates = detail::lattice_size(n - 1, 1, cap);

  double null_score = kInf;
  detail::walk_lattice(n, child, cap, [&](ParentSet cand, double best_subset) -> detail::Visit {
    auto& st = out.cpt_stats;
    ++st.visited;
    if (!cand.empty() && best_subset + epsilon + kScoreSlack < penalty_full(cand, N)) {
      ++st.penalty_cut;
      return {};
    }
    auto s = bic_full(data, child, cand);
    ++st.scored;
    const double score = s.score;
    if (cand.empty()) null_score = score;
    if (best_subset + epsilon <= score - kScoreSlack) {
      ++st.subset_pruned;
    } else {
      ++st.retained;
      out.cpt.push_back(std::move(s));
    }
    return {true, score};
  });

  HotStartCache cache;
  detail::walk_lattice(n, child, cap, [&](ParentSet cand, double best_subset) -> detail::Visit {
    if (cand.empty()) return {true, kInf};
    auto& st = out.noisy_or_stats;
    ++st.visited;
    if (prune_noisyor_by_null(null_score, cand, N, epsilon)) {
      ++st.null_cut;
      return {};
    }
    if (best_subset + epsilon + kScoreSlack < penalty_noisyor(cand, N)) {
      ++st.penalty_cut;
      return {};
    }
    const auto cv = counts(data, child, cand);
    if (noisyor_infeasible(cv)) {
      ++st.infeasible;
      return {true, kInf};
    }
    auto s = bic_noisyor(cv, N, cache, cfg);
    ++st.scored;
    const double score = s.score;
    if (best_subset + epsilon <= score - kScoreSlack) {
      ++st.subset_pruned;
    } else {
      ++st.retained;
      out.noisy_or.push_back(std::move(s));
    }
    return {true, score};
  });

  std::stable_sort(out.cpt.begin(), out.cpt.end(), score_order);
  std::stable_sort(out.noisy_or.begin(), out.noisy_or.end(), score_order);
  return out;
}

/// Every candidate of one node scored without any pruning: all parent sets
/// under a full CPT and every feasible non-empty parent set as a noisy-OR.
/// Fits run in the same cardinality/lexicographic order as
/// enumerate_node_scores so hot starts coincide.
inline NodeScores exhaustive_node_scores(const Dataset& data, int child, const FitConfig& cfg = {},
                                         std::optional<int> max_parents = std::nullopt) {
  const int n = data.n();
  const int cap = detail::resolve_cap(n, max_parents);
  std::vector<int> others;
  for (int v = 0; v < n; ++v)
    if (v != child) others.push_back(v);

  std::vector<std::vector<ParentSet>> by_size(cap + 1);
  const std::uint64_t limit = std::uint64_t{1} << others.size();
  for (std::uint64_t bits = 0; bits < limit; ++bits) {
    ParentSet p;
    for (std::size_t i = 0; i < others.size(); ++i)
      if ((bits >> i) & 1u) p = p.with(others[i]);
    if (p.size() <= cap) by_size[p.size()].push_back(p);
  }

  NodeScores out;
  HotStartCache cache;
  for (auto& layer : by_size) {
    std::sort(layer.begin(), layer.end(), lexicographic_less);
    for (ParentSet p : layer) {
      out.cpt.push_back(bic_full(data, child, p));
      ++out.cpt_stats.scored;
      if (p.empty()) continue;
      const auto cv = counts(data, child, p);
      if (noisyor_infeasible(cv)) {
        ++out.noisy_or_stats.infeasible;
        continue;
      }
      out.noisy_or.push_back(bic_noisyor(cv, data.N(), cache, cfg));
      ++out.noisy_or_stats.scored;
    }
  }
  out.cpt_stats.candidates = static_cast<double>(out.cpt_stats.scored);
  out.cpt_stats.visited = out.cpt_stats.retained = out.cpt_stats.scored;
  out.noisy_or_stats.candidates = static_cast<double>(out.noisy_or_stats.scored + out.noisy_or_stats.infeasible);
  out.noisy_or_stats.visited = static_cast<std::size_t>(out.noisy_or_stats.candidates);
  out.noisy_or_stats.retained = out.noisy_or_stats.scored;
  std::stable_sort(out.cpt.begin(), out.cpt.end(), score_order);
  std::stable_sort(out.noisy_or.begin(), out.noisy_or.end(), score_order);
  return out;
}

struct MergeResult {
  std::vector<LocalScore> entries;
  std::size_t cpt_pruned = 0;
  std::size_t noisy_or_pruned = 0;
};

/// Union of both lists of one node, dropping an entry of one list when an
/// entry of the other list over a subset (equal sets included) of its parents
/// satisfies the subset rule or the penalty rule against it. Sorted ascending.
inline MergeResult merge_tables(const std::vector<LocalScore>& cpt, const std::vector<LocalScore>& noisy_or,
                                double epsilon, std::size_t N) {
  auto dominated = [&](const LocalScore& e, const std::vector<LocalScore>& other) {
    const double pen = penalty(e.kind(), e.parents, N);
    for (const auto& o : other) {
      if (o.child != e.child) throw invalid_argument("merging score lists of different nodes");
      if (!o.parents.subset_of(e.parents)) continue;
      if (o.score + epsilon <= e.score - kScoreSlack) return true;
      if (o.score + epsilon + kScoreSlack < pen) return true;
    }
    return false;
  };
  MergeResult out;
  for (const auto& e : cpt) {
    if (dominated(e, noisy_or))
      ++out.cpt_pruned;
    else
      out.entries.push_back(e);
  }
  for (const auto& e : noisy_or) {
    if (dominated(e, cpt))
      ++out.noisy_or_pruned;
    else
      out.entries.push_back(e);
  }
  std::stable_sort(out.entries.begin(), out.entries.end(), score_order);
  return out;
}

// ---------------------------------------------------------------------------

struct ScoringOptions {
  double epsilon = 0.0;
  FitConfig fit;
  std::optional<int> max_parents;
  int threads = 1;
  bool noisy_or = true;  // false: full-CPT candidates only
  bool prune = true;     // false: exhaustive scoring, plain union
};

struct NodeReport {
  PruneStats cpt;
  PruneStats noisy_or;
  std::size_t merge_pruned = 0;
  std::size_t entries = 0;
};

struct ScoringResult {
  ScoreTable table;
  std::vector<NodeReport> reports;
};

/// Scores every node. Nodes are independent and are processed by up to
/// `threads` workers; results do not depend on the worker count.
inline ScoringResult build_score_table(const Dataset& data, const ScoringOptions& opt) {
  if (opt.epsilon < 0.0) throw invalid_argument("epsilon must be >= 0");
  opt.fit.validate();
  const int n = data.n();
  ScoringResult out;
  out.table.names = data.names();
  out.table.entries.resize(n);
  out.reports.resize(n);

  auto score_node = [&](int v) {
    NodeScores ns = opt.prune ? enumerate_node_scores(data, v, opt.epsilon, opt.fit, opt.max_parents)
                              : exhaustive_node_scores(data, v, opt.fit, opt.max_parents);
    if (!opt.noisy_or) {
      ns.noisy_or.clear();
      ns.noisy_or_stats = {};
    }
    NodeReport rep{ns.cpt_stats, ns.noisy_or_stats, 0, 0};
    std::vector<LocalScore> merged;
    if (opt.prune) {
      auto m = merge_tables(ns.cpt, ns.noisy_or, opt.epsilon, data.N());
      rep.merge_pruned = m.cpt_pruned + m.noisy_or_pruned;
      merged = std::move(m.entries);
    } else {
      merged = std::move(ns.cpt);
      merged.insert(merged.end(), ns.noisy_or.begin(), ns.noisy_or.end());
      std::stable_sort(merged.begin(), merged.end(), score_order);
    }
    rep.entries = merged.size();
    out.table.entries[v] = std::move(merged);
    out.reports[v] = rep;
  };

  const int workers = std::clamp(opt.threads, 1, std::max(1, n));
  if (workers == 1) {
    for (int v = 0; v < n; ++v) score_node(v);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
      std::vector<std::jthread> pool;
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
          for (int v = next++; v < n; v = next++) {
            try {
              score_node(v);
            } catch (...) {
              std::lock_guard lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          }
        });
    }
    if (failure) std::rethrow_exception(failure);
  }
  out.table.validate();
  return out;
}

}  // namespace nobn
