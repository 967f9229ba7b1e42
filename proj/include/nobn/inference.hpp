#pragma once

// Exact posterior marginals by variable elimination over dense binary
// factors. Noisy-OR nodes are expanded to full tables first.

#include <algorithm>
#include <iterator>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "nobn/core.hpp"
#include "nobn/noisyor.hpp"

namespace nobn {

/// Dense factor over binary variables; bit p of an index holds the value of
/// vars[p]. vars is kept sorted.
struct Factor {
  std::vector<int> vars;
  std::vector<double> values;

  bool mentions(int v) const { return std::binary_search(vars.begin(), vars.end(), v); }
};

using Evidence = std::map<int, int>;

namespace detail {

inline int position(const std::vector<int>& vars, int v) {
  return static_cast<int>(std::lower_bound(vars.begin(), vars.end(), v) - vars.begin());
}

// Maps an index over `to` onto the sub-index over `from` (from is a subset).
inline std::size_t project(std::size_t idx, const std::vector<int>& to, const std::vector<int>& from) {
  std::size_t out = 0;
  for (std::size_t p = 0; p < from.size(); ++p) {
    const int q = position(to, from[p]);
    if ((idx >> q) & 1u) out |= std::size_t{1} << p;
  }
  return out;
}

inline Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(), std::back_inserter(out.vars));
  if (out.vars.size() >= 30) throw capacity_error("factor too large for dense elimination");
  out.values.resize(std::size_t{1} << out.vars.size());
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = a.values[project(i, out.vars, a.vars)] * b.values[project(i, out.vars, b.vars)];
  return out;
}

inline Factor sum_out(const Factor& f, int v) {
  const int p = position(f.vars, v);
  Factor out;
  for (int u : f.vars)
    if (u != v) out.vars.push_back(u);
  out.values.assign(std::size_t{1} << out.vars.size(), 0.0);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const std::size_t low = i & ((std::size_t{1} << p) - 1);
    const std::size_t high = (i >> (p + 1)) << p;
    out.values[low | high] += f.values[i];
  }
  return out;
}

inline Factor reduce(const Factor& f, int v, int value) {
  const int p = position(f.vars, v);
  Factor out;
  for (int u : f.vars)
    if (u != v) out.vars.push_back(u);
  out.values.resize(std::size_t{1} << out.vars.size());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const std::size_t low = i & ((std::size_t{1} << p) - 1);
    const std::size_t high = (i >> p) << (p + 1);
    out.values[i] = f.values[low | high | (static_cast<std::size_t>(value) << p)];
  }
  return out;
}

}  // namespace detail

/// One factor P(v | parents(v)) per node.
inline std::vector<Factor> to_factor_network(const Network& net) {
  std::vector<Factor> factors;
  factors.reserve(net.n());
  for (int v = 0; v < net.n(); ++v) {
    const auto& node = net.node(v);
    const Cpt cpt = node.rep.is_noisy_or() ? expand_cpt(node.rep.noisy_or()) : node.rep.cpt();
    if (cpt.rows.size() != node.parents.configurations())
      throw invalid_argument("node " + net.names()[v] + " carries no parameters matching its parent set");
    Factor f;
    f.vars = node.parents.with(v).members();
    f.values.resize(std::size_t{1} << f.vars.size());
    const int child_pos = detail::position(f.vars, v);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      std::uint64_t row = 0;
      for (std::size_t p = 0; p < f.vars.size(); ++p)
        if ((i >> p) & 1u) row |= std::uint64_t{1} << f.vars[p];
      const int k = static_cast<int>((i >> child_pos) & 1u);
      f.values[i] = cpt.rows[node.parents.config_of(row)][k];
    }
    factors.push_back(std::move(f));
  }
  return factors;
}

/// Greedy min-degree elimination order over `vars` for the given factors
/// (ties broken by lowest index).
inline std::vector<int> min_degree_order(const std::vector<Factor>& factors, std::set<int> vars) {
  std::map<int, std::set<int>> adj;
  for (int v : vars) adj[v];
  for (const auto& f : factors)
    for (int a : f.vars)
      for (int b : f.vars)
        if (a != b) adj[a].insert(b);
  std::vector<int> order;
  while (!vars.empty()) {
    int pick = -1;
    std::size_t degree = 0;
    for (int v : vars) {
      const std::size_t d = adj[v].size();
      if (pick < 0 || d < degree) {
        pick = v;
        degree = d;
      }
    }
    order.push_back(pick);
    const auto nbrs = adj[pick];
    for (int a : nbrs) {
      adj[a].erase(pick);
      for (int b : nbrs)
        if (a != b) adj[a].insert(b);
    }
    adj.erase(pick);
    vars.erase(pick);
  }
  return order;
}

/// P(query | evidence) as {P(0), P(1)}, eliminating the remaining variables
/// in `order` (which must list every non-query, non-evidence variable).
inline std::array<double, 2> posterior(const Network& net, const Evidence& evidence, int query,
                                       std::span<const int> order) {
  if (query < 0 || query >= net.n()) throw invalid_argument("query node out of range");
  if (evidence.count(query)) throw invalid_argument("query node is part of the evidence");
  for (const auto& [v, val] : evidence)
    if (v < 0 || v >= net.n() || (val != 0 && val != 1)) throw invalid_argument("malformed evidence");

  auto factors = to_factor_network(net);
  for (auto& f : factors)
    for (const auto& [v, val] : evidence)
      if (f.mentions(v)) f = detail::reduce(f, v, val);

  std::set<int> expected;
  for (int v = 0; v < net.n(); ++v)
    if (v != query && !evidence.count(v)) expected.insert(v);
  if (std::set<int>(order.begin(), order.end()) != expected || order.size() != expected.size())
    throw invalid_argument("elimination order must cover each hidden variable exactly once");

  for (int v : order) {
    std::optional<Factor> prod;
    std::vector<Factor> rest;
    for (auto& f : factors) {
      if (f.mentions(v))
        prod = prod ? detail::multiply(*prod, f) : f;
      else
        rest.push_back(std::move(f));
    }
    if (prod) rest.push_back(detail::sum_out(*prod, v));
    factors = std::move(rest);
  }
  Factor result{{}, {1.0}};
  for (const auto& f : factors) result = detail::multiply(result, f);
  if (result.vars.size() != 1) throw invalid_argument("elimination left unexpected variables");
  const std::array<double, 2> p{result.values[0], result.values[1]};
  const double z = p[0] + p[1];
  if (!(z > 0.0)) throw inconsistent_evidence("evidence has zero probability under the network");
  return {p[0] / z, p[1] / z};
}

inline std::array<double, 2> posterior(const Network& net, const Evidence& evidence, int query) {
  std::set<int> hidden;
  for (int v = 0; v < net.n(); ++v)
    if (v != query && !evidence.count(v)) hidden.insert(v);
  auto factors = to_factor_network(net);
  const auto order = min_degree_order(factors, hidden);
  return posterior(net, evidence, query, order);
}

}  // namespace nobn
