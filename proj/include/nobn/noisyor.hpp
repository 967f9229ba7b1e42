#pragma once

// Noisy-OR CPDs: CPT expansion, the negative log-likelihood minimised when
// fitting, its analytic gradient, projected gradient descent with a geometric
// backtracking line search, hot starts and the noisy-OR BIC local score.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "nobn/core.hpp"
#include "nobn/cpt_scoring.hpp"
#include "nobn/data.hpp"

namespace nobn {

struct FitConfig {
  double threshold = 1e-6;   // convergence threshold t
  int max_iter = 500;
  double clamp = 1e-6;       // q stays in [clamp, 1 - clamp]
  double initial_step = 1.0;
  double shrink = 0.5;
  int max_trials = 40;       // line-search schedule length
  double hot_start_default = 0.9;

  void validate() const {
    if (!(threshold > 0.0)) throw invalid_argument("threshold must be > 0");
    if (max_iter < 0) throw invalid_argument("max_iter must be >= 0");
    if (!(clamp > 0.0 && clamp < 0.5)) throw invalid_argument("clamp must lie in (0, 0.5)");
    if (!(initial_step > 0.0)) throw invalid_argument("initial step must be > 0");
    if (!(shrink > 0.0 && shrink < 1.0)) throw invalid_argument("shrink factor must lie in (0, 1)");
    if (max_trials < 1) throw invalid_argument("max_trials must be >= 1");
    if (!(hot_start_default > 0.0 && hot_start_default < 1.0))
      throw invalid_argument("hot-start default must lie in (0, 1)");
  }
};

/// Fitted parameters of already-scored parent sets of one node.
class HotStartCache {
 public:
  struct Entry {
    NoisyOrParams params;
    double objective = 0.0;
  };

  void insert(ParentSet parents, NoisyOrParams params, double objective) {
    entries_[parents.mask()] = Entry{std::move(params), objective};
  }
  const Entry* find(ParentSet parents) const {
    auto it = entries_.find(parents.mask());
    return it == entries_.end() ? nullptr : &it->second;
  }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<std::uint64_t, Entry> entries_;
};

// ---------------------------------------------------------------------------

/// phi_j0 = product of q over the parents active in configuration j (1 when
/// none is active); phi_j1 = 1 - phi_j0.
inline Cpt expand_cpt(const NoisyOrParams& params) {
  const auto& q = params.q;
  if (q.size() >= 63) throw capacity_error("too many noisy-OR parents to expand");
  const std::size_t configs = std::size_t{1} << q.size();
  std::vector<double> phi0(configs, 1.0);
  for (std::size_t j = 1; j < configs; ++j) {
    const int low = std::countr_zero(j);
    phi0[j] = phi0[j & (j - 1)] * q[low];
  }
  Cpt cpt;
  cpt.rows.resize(configs);
  for (std::size_t j = 0; j < configs; ++j) cpt.rows[j] = {phi0[j], 1.0 - phi0[j]};
  return cpt;
}

/// True iff some record has child = 1 while every candidate parent is 0. A
/// noisy-OR then assigns that record probability zero.
inline bool noisyor_infeasible(const CountVector& cv) { return !cv.n_jk.empty() && cv.n_jk[0][1] > 0; }

namespace detail {

/// Non-empty cells of a count vector, the only ones the objective touches.
struct ActiveCell {
  std::size_t config;
  double n0;
  double n1;
};

inline std::vector<ActiveCell> active_cells(const CountVector& cv) {
  if (noisyor_infeasible(cv))
    throw infeasible_candidate("noisy-OR infeasible: a record has the child set to 1 while all candidate parents are 0");
  std::vector<ActiveCell> cells;
  for (std::size_t j = 1; j < cv.n_jk.size(); ++j)
    if (cv.n_jk[j][0] || cv.n_jk[j][1])
      cells.push_back({j, static_cast<double>(cv.n_jk[j][0]), static_cast<double>(cv.n_jk[j][1])});
  return cells;
}

inline double phi0_of(std::size_t j, std::span<const double> q) {
  double p = 1.0;
  for (std::size_t m = j; m; m &= m - 1) p *= q[std::countr_zero(m)];
  return p;
}

inline double objective(const std::vector<ActiveCell>& cells, std::span<const double> q) {
  double f = 0.0;
  for (const auto& c : cells) {
    const double p0 = phi0_of(c.config, q);
    if (c.n0 > 0) f -= c.n0 * std::log(p0);
    if (c.n1 > 0) {
      if (p0 >= 1.0) return kInf;
      f -= c.n1 * std::log1p(-p0);
    }
  }
  return f;
}

inline std::vector<double> gradient(const std::vector<ActiveCell>& cells, std::span<const double> q) {
  std::vector<double> g(q.size(), 0.0);
  for (const auto& c : cells) {
    const double p0 = phi0_of(c.config, q);
    const double odds = c.n1 > 0 ? c.n1 * p0 / (1.0 - p0) : 0.0;
    for (std::size_t m = c.config; m; m &= m - 1) {
      const int l = std::countr_zero(m);
      g[l] -= (c.n0 - odds) / q[l];
    }
  }
  return g;
}

inline void check_arity(const CountVector& cv, const NoisyOrParams& q) {
  if (q.q.size() != static_cast<std::size_t>(cv.parents.size()))
    throw invalid_argument("noisy-OR parameter count does not match the parent set");
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace detail

/// Negative log-likelihood -sum n_jk ln phi_jk of the counts under the
/// noisy-OR with parameters q.
inline double nor_objective(const CountVector& cv, const NoisyOrParams& q) {
  detail::check_arity(cv, q);
  return detail::objective(detail::active_cells(cv), q.q);
}

/// d/dq_m of nor_objective:
///   -sum_{j : m active} [ n_j0 / q_m - n_j1 (phi_j0 / q_m) / (1 - phi_j0) ]
inline std::vector<double> nor_gradient(const CountVector& cv, const NoisyOrParams& q) {
  detail::check_arity(cv, q);
  return detail::gradient(detail::active_cells(cv), q.q);
}

inline std::vector<double> clamp_params(std::span<const double> q, double clamp) {
  std::vector<double> out(q.begin(), q.end());
  for (auto& v : out) v = std::clamp(v, clamp, 1.0 - clamp);
  return out;
}

/// Scans the schedule s0 * rho^m (m < max_trials) from the largest step and
/// returns the step whose clamped point clamp(q - step * grad) has the lowest
/// objective, provided it is strictly below the current value; 0 if no step
/// decreases. The scan stops once values rise again after a decrease.
template <class Objective>
double geometric_line_search(std::span<const double> q, std::span<const double> grad, Objective&& objective,
                             const FitConfig& cfg) {
  const double current = objective(std::span<const double>(q));
  std::vector<double> trial(q.size());
  double best_step = 0.0;
  double best_value = current;
  double step = cfg.initial_step;
  for (int m = 0; m < cfg.max_trials; ++m, step *= cfg.shrink) {
    for (std::size_t i = 0; i < q.size(); ++i) trial[i] = std::clamp(q[i] - step * grad[i], cfg.clamp, 1.0 - cfg.clamp);
    const double value = objective(std::span<const double>(trial));
    if (value < best_value) {
      best_value = value;
      best_step = step;
    } else if (best_step > 0.0) {
      break;
    }
  }
  return best_step;
}

struct FitResult {
  NoisyOrParams params;
  double objective = 0.0;
  int iterations = 0;
};

/// Projected gradient descent on nor_objective. Stops after max_iter steps,
/// when no step of the line-search schedule improves, or when either the
/// gradient change or the objective improvement falls below the threshold.
/// Returns the lowest-objective iterate seen.
inline FitResult fit_noisyor(const CountVector& cv, const NoisyOrParams& init, const FitConfig& cfg = {}) {
  cfg.validate();
  detail::check_arity(cv, init);
  const auto cells = detail::active_cells(cv);
  auto objective = [&cells](std::span<const double> q) { return detail::objective(cells, q); };

  std::vector<double> q = clamp_params(init.q, cfg.clamp);
  double f = objective(q);
  if (!std::isfinite(f)) throw infeasible_candidate("noisy-OR objective is not finite at the initial point");
  std::vector<double> g = detail::gradient(cells, q);

  FitResult best{NoisyOrParams{q}, f, 0};
  int it = 0;
  while (it < cfg.max_iter) {
    const double step = geometric_line_search(q, g, objective, cfg);
    if (step == 0.0) break;
    ++it;
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::clamp(q[i] - step * g[i], cfg.clamp, 1.0 - cfg.clamp);
    const double f_next = objective(q);
    auto g_next = detail::gradient(cells, q);
    const double grad_change = detail::euclidean_distance(g_next, g);
    const double improvement = f - f_next;
    f = f_next;
    g = std::move(g_next);
    if (f < best.objective) {
      best.params.q = q;
      best.objective = f;
    }
    if (grad_change < cfg.threshold || improvement < cfg.threshold) break;
  }
  best.iterations = it;
  return best;
}

/// Initial parameters for a parent set: inherits the fit of the cached
/// immediate subset with the lowest objective (first in member order on
/// ties); parents not covered start at the configured default.
inline NoisyOrParams hot_start(const HotStartCache& cache, ParentSet parents, const FitConfig& cfg = {}) {
  const auto members = parents.members();
  NoisyOrParams out{std::vector<double>(members.size(), cfg.hot_start_default)};
  const HotStartCache::Entry* chosen = nullptr;
  int dropped = -1;
  for (int m : members) {
    const auto* e = cache.find(parents.without(m));
    if (e && (!chosen || e->objective < chosen->objective)) {
      chosen = e;
      dropped = m;
    }
  }
  if (!chosen) return out;
  std::size_t src = 0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i] == dropped) continue;
    out.q[i] = chosen->params.q.at(src++);
  }
  return out;
}

/// |P| parameters, each weighted ln(N)/2.
inline double penalty_noisyor(ParentSet parents, std::size_t N) { return parents.size() * bic_weight(N); }

/// Noisy-OR BIC score of (child, parents) fitted from a hot start; the fit is
/// added to the cache.
inline LocalScore bic_noisyor(const CountVector& cv, std::size_t N, HotStartCache& cache, const FitConfig& cfg = {}) {
  if (cv.parents.empty()) throw invalid_argument("a noisy-OR needs at least one parent");
  if (noisyor_infeasible(cv))
    throw infeasible_candidate("noisy-OR infeasible: a record has the child set to 1 while all candidate parents are 0");
  auto fit = fit_noisyor(cv, hot_start(cache, cv.parents, cfg), cfg);
  cache.insert(cv.parents, fit.params, fit.objective);
  const double score = fit.objective + penalty_noisyor(cv.parents, N);
  return LocalScore{cv.child, cv.parents, Representation(std::move(fit.params)), score};
}

inline LocalScore bic_noisyor(const Dataset& data, int child, ParentSet parents, HotStartCache& cache,
                              const FitConfig& cfg = {}) {
  return bic_noisyor(counts(data, child, parents), data.N(), cache, cfg);
}

}  // namespace nobn
