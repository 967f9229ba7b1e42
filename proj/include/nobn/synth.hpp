#pragma once

// Synthetic ground truths, ancestral sampling and the evaluation metrics of
// the parameter-recovery and inference-error experiments.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "nobn/core.hpp"
#include "nobn/data.hpp"
#include "nobn/inference.hpp"
#include "nobn/noisyor.hpp"
#include "nobn/pruning.hpp"
#include "nobn/search.hpp"

namespace nobn {

/// splitmix64 finaliser; derives independent seeds from (seed, stream ids).
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t s = mix_seed(seed);
  for (auto id : ids) s = mix_seed(s ^ id);
  return s;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct GroundTruth {
  Network network;
  int child = 0;
  NoisyOrParams true_q;
};

/// Star network: `parent_count` roots X1..Xk with prior 0.5 feeding a
/// noisy-OR child Y whose q_l are drawn uniformly from {0.01, ..., 0.99}.
inline GroundTruth gen_single_noisyor(int parent_count, std::uint64_t seed) {
  if (parent_count < 1 || parent_count >= kMaxVariables) throw invalid_argument("parent count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> grid(1, 99);
  std::vector<std::string> names;
  std::vector<LocalScore> nodes;
  ParentSet parents;
  for (int i = 0; i < parent_count; ++i) {
    names.push_back("X" + std::to_string(i + 1));
    nodes.push_back(LocalScore{i, ParentSet{}, Representation(Cpt{{{0.5, 0.5}}}), 0.0});
    parents = parents.with(i);
  }
  NoisyOrParams q;
  for (int i = 0; i < parent_count; ++i) q.q.push_back(grid(rng) / 100.0);
  names.push_back("Y");
  nodes.push_back(LocalScore{parent_count, parents, Representation(q), 0.0});
  return GroundTruth{Network(std::move(names), std::move(nodes)), parent_count, q};
}

/// N i.i.d. instances by ancestral sampling.
inline Dataset forward_sample(const Network& net, std::size_t N, std::uint64_t seed) {
  if (N < 1) throw invalid_argument("sample count must be >= 1");
  const auto order = topological_order(net.parent_sets());
  std::vector<Cpt> cpts;
  for (const auto& node : net.nodes()) {
    cpts.push_back(node.rep.is_noisy_or() ? expand_cpt(node.rep.noisy_or()) : node.rep.cpt());
    if (cpts.back().rows.size() != node.parents.configurations())
      throw invalid_argument("network node lacks parameters for sampling");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::uint64_t> rows(N, 0);
  for (auto& row : rows)
    for (int v : order) {
      const double p1 = cpts[v].rows[net.node(v).parents.config_of(row)][1];
      if (unif(rng) < p1) row |= std::uint64_t{1} << v;
    }
  return Dataset(net.names(), std::move(rows));
}

inline Dataset forward_sample(const GroundTruth& gt, std::size_t N, std::uint64_t seed) {
  return forward_sample(gt.network, N, seed);
}

/// Mean over components of |q_hat - q_true| / q_true.
inline double relative_param_error(const NoisyOrParams& estimate, const NoisyOrParams& truth) {
  if (estimate.q.size() != truth.q.size()) throw invalid_argument("parameter vectors differ in length");
  if (truth.q.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < truth.q.size(); ++i) {
    if (!(truth.q[i] > 0.0)) throw invalid_argument("true parameters must be positive");
    total += std::abs(estimate.q[i] - truth.q[i]) / truth.q[i];
  }
  return total / static_cast<double>(truth.q.size());
}

/// sum_j w_j sum_k theta_jk ln(theta_jk / phi_jk); +inf when theta puts mass
/// where phi has none.
inline double conditional_kl(const Cpt& truth, const Cpt& approx, std::span<const double> weights) {
  if (truth.rows.size() != approx.rows.size() || weights.size() != truth.rows.size())
    throw invalid_argument("conditional KL needs CPTs and weights over the same configurations");
  double kl = 0.0;
  for (std::size_t j = 0; j < truth.rows.size(); ++j) {
    if (weights[j] == 0.0) continue;
    double row = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double t = truth.rows[j][k];
      if (t <= 0.0) continue;
      const double a = approx.rows[j][k];
      if (a <= 0.0) return kInf;
      row += t * std::log(t / a);
    }
    kl += weights[j] * row;
  }
  return kl;
}

inline std::vector<double> uniform_weights(std::size_t configs) {
  return std::vector<double>(configs, 1.0 / static_cast<double>(configs));
}

// ---------------------------------------------------------------------------
// Parameter recovery

struct RecoveryTrial {
  int parent_count = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<double> q_true;
  std::vector<double> q_hat;
  double relative_error = 0.0;
  double kl = 0.0;
  int iterations = 0;
};

struct RecoveryCell {
  int parent_count = 0;
  std::size_t samples = 0;
  std::vector<RecoveryTrial> trials;
  double median_relative_error = 0.0;
  double median_kl = 0.0;
};

/// Generate a single noisy-OR, sample it, fit the child's parameters from
/// the default starting point and compare against the truth.
inline RecoveryTrial recovery_trial(int parent_count, std::size_t N, std::uint64_t seed, const FitConfig& cfg = {}) {
  const auto gt = gen_single_noisyor(parent_count, derive_seed(seed, {1}));
  const auto data = forward_sample(gt, N, derive_seed(seed, {2}));
  const auto cv = counts(data, gt.child, gt.network.node(gt.child).parents);
  const auto fit = fit_noisyor(cv, hot_start(HotStartCache{}, cv.parents, cfg), cfg);
  RecoveryTrial t;
  t.parent_count = parent_count;
  t.samples = N;
  t.seed = seed;
  t.q_true = gt.true_q.q;
  t.q_hat = fit.params.q;
  t.relative_error = relative_param_error(fit.params, gt.true_q);
  t.kl = conditional_kl(expand_cpt(gt.true_q), expand_cpt(fit.params), uniform_weights(cv.n_jk.size()));
  t.iterations = fit.iterations;
  return t;
}

/// `trials` recovery trials per (parent count, sample size); trial i uses a
/// seed derived from (seed, parent count, sample size, i).
inline std::vector<RecoveryCell> recovery_experiment(const std::vector<int>& parent_counts,
                                                     const std::vector<std::size_t>& sample_sizes, int trials,
                                                     std::uint64_t seed, const FitConfig& cfg = {}) {
  if (trials < 1) throw invalid_argument("trials must be >= 1");
  std::vector<RecoveryCell> cells;
  for (int k : parent_counts)
    for (std::size_t N : sample_sizes) {
      RecoveryCell cell{k, N, {}, 0.0, 0.0};
      std::vector<double> rel, kl;
      for (int i = 0; i < trials; ++i) {
        auto t = recovery_trial(k, N, derive_seed(seed, {static_cast<std::uint64_t>(k), N, static_cast<std::uint64_t>(i)}), cfg);
        rel.push_back(t.relative_error);
        kl.push_back(t.kl);
        cell.trials.push_back(std::move(t));
      }
      cell.median_relative_error = median(rel);
      cell.median_kl = median(kl);
      cells.push_back(std::move(cell));
    }
  return cells;
}

// ---------------------------------------------------------------------------
// Inference error

inline constexpr double kRelativeErrorFloor = 0.001;

struct InferenceErrors {
  double median_absolute = 0.0;
  double median_relative = 0.0;
  double mean_absolute = 0.0;
  double max_absolute = 0.0;
  std::size_t samples = 0;
  std::size_t flagged = 0;  // queries where the learned network rejected the evidence
};

/// Per trial: pick ceil(n/10) evidence nodes, draw their states one at a time
/// from the truth's posterior given the evidence so far, then compare
/// P(V = 1 | e) under both networks for every other node.
inline InferenceErrors inference_error_eval(const Network& learned, const Network& truth, int trials,
                                            std::uint64_t seed) {
  if (learned.names() != truth.names()) throw invalid_argument("networks are over different variables");
  if (trials < 1) throw invalid_argument("trials must be >= 1");
  const int n = truth.n();
  const int evidence_count = static_cast<int>(std::ceil(0.1 * n));
  std::vector<double> abs_err, rel_err;
  InferenceErrors out;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<int> nodes(n);
    std::iota(nodes.begin(), nodes.end(), 0);
    std::shuffle(nodes.begin(), nodes.end(), rng);
    Evidence ev;
    for (int i = 0; i < evidence_count; ++i) {
      const int v = nodes[i];
      const auto p = posterior(truth, ev, v);
      ev[v] = unif(rng) < p[1] ? 1 : 0;
    }
    for (int v = 0; v < n; ++v) {
      if (ev.count(v)) continue;
      const double p_truth = posterior(truth, ev, v)[1];
      double a = 0.0;
      try {
        a = std::abs(posterior(learned, ev, v)[1] - p_truth);
      } catch (const inconsistent_evidence&) {
        a = 1.0;
        ++out.flagged;
      }
      abs_err.push_back(a);
      rel_err.push_back(a / std::max(p_truth, kRelativeErrorFloor));
    }
  }
  out.samples = abs_err.size();
  out.median_absolute = median(abs_err);
  out.median_relative = median(rel_err);
  if (!abs_err.empty()) {
    out.mean_absolute = std::accumulate(abs_err.begin(), abs_err.end(), 0.0) / static_cast<double>(abs_err.size());
    out.max_absolute = *std::max_element(abs_err.begin(), abs_err.end());
  }
  return out;
}

struct InferenceCell {
  std::size_t samples = 0;
  double opt = 0.0;
  double cpt_only_opt = 0.0;
  std::size_t credible_count = 0;
  bool truncated = false;
  InferenceErrors best;
  InferenceErrors worst;
  InferenceErrors cpt_only;
};

/// Sample from the truth, learn the credible set, and measure inference
/// error of its best and worst members and of the best full-CPT-only network.
inline InferenceCell inference_experiment(const Network& truth, std::size_t N, int trials, std::uint64_t seed,
                                          const ScoringOptions& scoring,
                                          std::size_t max_networks = kDefaultMaxNetworks) {
  const auto data = forward_sample(truth, N, derive_seed(seed, {N, 1}));
  const auto mixed = build_score_table(data, scoring);
  const auto credible = enumerate_credible(mixed.table, scoring.epsilon, max_networks);
  auto cpt_opts = scoring;
  cpt_opts.noisy_or = false;
  const auto cpt_table = build_score_table(data, cpt_opts);
  const auto cpt_best = optimal_network(cpt_table.table);

  InferenceCell cell;
  cell.samples = N;
  cell.opt = credible.opt;
  cell.cpt_only_opt = cpt_best.total_score();
  cell.credible_count = credible.networks.size();
  cell.truncated = credible.truncated;
  const auto eval_seed = derive_seed(seed, {N, 2});
  cell.best = inference_error_eval(credible.networks.front(), truth, trials, eval_seed);
  cell.worst = inference_error_eval(credible.networks.back(), truth, trials, eval_seed);
  cell.cpt_only = inference_error_eval(cpt_best, truth, trials, eval_seed);
  return cell;
}

}  // namespace nobn
