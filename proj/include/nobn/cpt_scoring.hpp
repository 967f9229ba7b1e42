#pragma once

// Maximum-likelihood full CPTs and their BIC local score:
//   score(P) = -sum_jk n_jk ln theta_jk + 2^|P| * ln(N)/2

#include <cmath>

#include "nobn/core.hpp"
#include "nobn/data.hpp"

namespace nobn {

/// theta_jk = n_jk / n_j; unseen configurations get (0.5, 0.5).
inline Cpt mle_cpt(const CountVector& cv) {
  Cpt cpt;
  cpt.rows.resize(cv.n_jk.size());
  for (std::size_t j = 0; j < cv.n_jk.size(); ++j) {
    const auto nj = cv.n_j(j);
    if (nj == 0) {
      cpt.rows[j] = {0.5, 0.5};
    } else {
      const double p0 = static_cast<double>(cv.n_jk[j][0]) / static_cast<double>(nj);
      cpt.rows[j] = {p0, static_cast<double>(cv.n_jk[j][1]) / static_cast<double>(nj)};
    }
  }
  return cpt;
}

/// sum n_jk ln theta_jk with 0 ln 0 = 0. Returns -infinity when a positive
/// count meets a zero probability.
inline double log_likelihood(const CountVector& cv, const Cpt& cpt) {
  if (cpt.rows.size() != cv.n_jk.size()) throw invalid_argument("CPT and count vector sizes differ");
  double ll = 0.0;
  for (std::size_t j = 0; j < cv.n_jk.size(); ++j)
    for (int k = 0; k < 2; ++k) {
      const auto n = cv.n_jk[j][k];
      if (n == 0) continue;
      const double p = cpt.rows[j][k];
      if (p <= 0.0) return -kInf;
      ll += static_cast<double>(n) * std::log(p);
    }
  return ll;
}

inline double bic_weight(std::size_t N) {
  if (N < 1) throw invalid_argument("instance count must be >= 1");
  return std::log(static_cast<double>(N)) / 2.0;
}

/// 2^|P| parameters, each weighted ln(N)/2.
inline double penalty_full(ParentSet parents, std::size_t N) {
  return std::ldexp(1.0, parents.size()) * bic_weight(N);
}

inline LocalScore bic_full(const Dataset& data, int child, ParentSet parents) {
  const auto cv = counts(data, child, parents);
  auto cpt = mle_cpt(cv);
  const double score = -log_likelihood(cv, cpt) + penalty_full(parents, data.N());
  return LocalScore{child, parents, Representation(std::move(cpt)), score};
}

}  // namespace nobn
