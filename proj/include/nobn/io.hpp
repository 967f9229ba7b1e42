#pragma once

// File formats: the score file, network / credible-set JSON and DOT export.
//
// Score file:
//   <number of variables>
//   per variable: "<name> <entry count>" followed by entry lines
//     <score %.6f> <T|N> <k> <parent names...> [| <q1 %.6f> ... <qk %.6f>]
//   T marks a full CPT, N a noisy-OR (which carries the | q section).

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nobn/core.hpp"
#include "nobn/synth.hpp"

namespace nobn {

using json = nlohmann::json;

inline std::string format_fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline void write_score_file(std::ostream& out, const ScoreTable& table) {
  table.validate();
  out << table.n() << '\n';
  for (int v = 0; v < table.n(); ++v) {
    out << table.names[v] << ' ' << table.entries[v].size() << '\n';
    for (const auto& e : table.entries[v]) {
      const auto members = e.parents.members();
      out << format_fixed6(e.score) << ' ' << rep_letter(e.kind()) << ' ' << members.size();
      for (int p : members) out << ' ' << table.names[p];
      if (e.rep.is_noisy_or()) {
        out << " |";
        for (double q : e.rep.noisy_or().q) out << ' ' << format_fixed6(q);
      }
      out << '\n';
    }
  }
}

inline ScoreTable read_score_file(std::istream& in) {
  std::vector<std::vector<std::string>> lines;
  std::vector<long> line_no;
  std::string raw;
  long no = 0;
  while (std::getline(in, raw)) {
    ++no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::istringstream ss(raw);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    lines.push_back(std::move(tok));
    line_no.push_back(no);
  }
  std::size_t pos = 0;
  auto fail = [&](const std::string& msg) -> parse_error {
    const long at = pos < line_no.size() ? line_no[pos] : no;
    return parse_error("score file line " + std::to_string(at) + ": " + msg, at);
  };
  auto to_long = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      long v = std::stol(s, &used);
      if (used != s.size() || v < 0) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw fail("expected a non-negative integer, got '" + s + "'");
    }
  };
  auto to_double = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw fail("expected a number, got '" + s + "'");
    }
  };

  if (lines.empty() || lines[0].size() != 1) throw fail("first line must hold the variable count");
  const long n = to_long(lines[0][0]);
  if (n < 1 || n > kMaxVariables) throw fail("variable count out of range");
  ++pos;

  struct RawEntry {
    double score;
    RepKind kind;
    std::vector<std::string> parents;
    std::vector<double> q;
    long line;
  };
  ScoreTable table;
  std::vector<std::vector<RawEntry>> raw_entries;
  for (long v = 0; v < n; ++v) {
    if (pos >= lines.size() || lines[pos].size() != 2) throw fail("expected '<name> <entry count>'");
    table.names.push_back(lines[pos][0]);
    const long count = to_long(lines[pos][1]);
    ++pos;
    raw_entries.emplace_back();
    for (long e = 0; e < count; ++e) {
      if (pos >= lines.size()) throw fail("unexpected end of file");
      const auto& tok = lines[pos];
      if (tok.size() < 3) throw fail("entry needs '<score> <rep> <k> ...'");
      RawEntry r{to_double(tok[0]), RepKind::FullCpt, {}, {}, line_no[pos]};
      if (tok[1] == "T")
        r.kind = RepKind::FullCpt;
      else if (tok[1] == "N")
        r.kind = RepKind::NoisyOr;
      else
        throw fail("representation must be T or N, got '" + tok[1] + "'");
      const long k = to_long(tok[2]);
      if (tok.size() < static_cast<std::size_t>(3 + k)) throw fail("fewer parent names than announced");
      r.parents.assign(tok.begin() + 3, tok.begin() + 3 + k);
      std::size_t rest = 3 + static_cast<std::size_t>(k);
      if (r.kind == RepKind::NoisyOr) {
        if (tok.size() != rest + 1 + static_cast<std::size_t>(k) || tok[rest] != "|")
          throw fail("noisy-OR entry needs '| q1 ... qk'");
        for (std::size_t i = rest + 1; i < tok.size(); ++i) r.q.push_back(to_double(tok[i]));
      } else if (tok.size() != rest) {
        throw fail("trailing tokens after full-CPT entry");
      }
      raw_entries.back().push_back(std::move(r));
      ++pos;
    }
  }
  if (pos != lines.size()) throw fail("trailing content after the last variable");

  std::map<std::string, int> index;
  for (int v = 0; v < static_cast<int>(table.names.size()); ++v)
    if (!index.emplace(table.names[v], v).second)
      throw parse_error("score file: duplicate variable name '" + table.names[v] + "'");
  table.entries.resize(n);
  for (int v = 0; v < n; ++v)
    for (auto& r : raw_entries[v]) {
      ParentSet ps;
      for (const auto& name : r.parents) {
        auto it = index.find(name);
        if (it == index.end())
          throw parse_error("score file line " + std::to_string(r.line) + ": unknown parent '" + name + "'", r.line);
        if (it->second == v || ps.contains(it->second))
          throw parse_error("score file line " + std::to_string(r.line) + ": bad parent '" + name + "'", r.line);
        ps = ps.with(it->second);
      }
      // q values are listed in the order the parents appear on the line
      Representation rep;
      if (r.kind == RepKind::NoisyOr) {
        std::vector<std::pair<int, double>> by_index;
        for (std::size_t i = 0; i < r.parents.size(); ++i) by_index.emplace_back(index.at(r.parents[i]), r.q[i]);
        std::sort(by_index.begin(), by_index.end());
        NoisyOrParams q;
        for (const auto& [_, value] : by_index) q.q.push_back(value);
        rep = Representation(std::move(q));
      }
      table.entries[v].push_back(LocalScore{v, ps, std::move(rep), r.score});
    }
  // file order is kept so that rewriting reproduces the input
  try {
    table.validate();
  } catch (const invalid_argument& e) {
    throw parse_error(std::string("score file: ") + e.what());
  }
  return table;
}

inline ScoreTable load_score_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open score file: " + path);
  return read_score_file(in);
}

// ---------------------------------------------------------------------------
// JSON

inline json local_score_to_json(const LocalScore& e, const std::vector<std::string>& names) {
  json parents = json::array();
  for (int p : e.parents.members()) parents.push_back(names.at(p));
  json node{{"name", names.at(e.child)}, {"parents", parents}, {"score", e.score}};
  if (e.rep.is_noisy_or()) {
    node["rep"] = "noisy-or";
    node["params"] = {{"q", e.rep.noisy_or().q}};
  } else {
    node["rep"] = "table";
    const auto& rows = e.rep.cpt().rows;
    if (rows.empty()) {
      node["params"] = nullptr;
    } else {
      json cpt = json::array();
      for (const auto& r : rows) cpt.push_back({r[0], r[1]});
      node["params"] = {{"cpt", cpt}};
    }
  }
  return node;
}

inline json network_to_json(const Network& net) {
  json nodes = json::array();
  for (const auto& e : net.nodes()) nodes.push_back(local_score_to_json(e, net.names()));
  return json{{"variables", net.names()}, {"totalScore", net.total_score()}, {"nodes", nodes}};
}

inline Network network_from_json(const json& j) {
  try {
    const auto names = j.at("variables").get<std::vector<std::string>>();
    std::map<std::string, int> index;
    for (int v = 0; v < static_cast<int>(names.size()); ++v)
      if (!index.emplace(names[v], v).second) throw parse_error("network JSON: duplicate variable " + names[v]);
    std::vector<LocalScore> nodes;
    for (const auto& node : j.at("nodes")) {
      const auto name = node.at("name").get<std::string>();
      if (!index.count(name)) throw parse_error("network JSON: unknown node " + name);
      const int child = index.at(name);
      std::vector<int> members;
      for (const auto& p : node.at("parents")) {
        const auto pn = p.get<std::string>();
        if (!index.count(pn)) throw parse_error("network JSON: unknown parent " + pn);
        members.push_back(index.at(pn));
      }
      const ParentSet parents = ParentSet::from_members(members);
      if (parents.size() != static_cast<int>(members.size())) throw parse_error("network JSON: repeated parent");
      // parameters are indexed by parent configuration with parents sorted
      // by variable index
      std::vector<int> sorted = members;
      std::sort(sorted.begin(), sorted.end());
      if (sorted != members) throw parse_error("network JSON: parents of " + name + " must follow variable order");
      const auto rep_name = node.at("rep").get<std::string>();
      Representation rep;
      if (rep_name == "noisy-or") {
        NoisyOrParams q{node.at("params").at("q").get<std::vector<double>>()};
        if (q.q.size() != members.size()) throw parse_error("network JSON: q length mismatch for " + name);
        for (double v : q.q)
          if (!(v > 0.0 && v < 1.0)) throw parse_error("network JSON: q outside (0,1) for " + name);
        rep = Representation(std::move(q));
      } else if (rep_name == "table") {
        Cpt cpt;
        if (!node.at("params").is_null())
          for (const auto& row : node.at("params").at("cpt")) cpt.rows.push_back({row.at(0).get<double>(), row.at(1).get<double>()});
        if (!cpt.rows.empty() && (cpt.rows.size() != parents.configurations() || !cpt.row_stochastic(1e-9)))
          throw parse_error("network JSON: malformed CPT for " + name);
        rep = Representation(std::move(cpt));
      } else {
        throw parse_error("network JSON: unknown rep '" + rep_name + "'");
      }
      nodes.push_back(LocalScore{child, parents, std::move(rep), node.value("score", 0.0)});
    }
    if (nodes.size() != names.size()) throw parse_error("network JSON: expected one node entry per variable");
    auto net = Network::from_unordered(names, std::move(nodes));
    if (!is_acyclic(net.parent_sets())) throw parse_error("network JSON: graph has a cycle");
    return net;
  } catch (const json::exception& e) {
    throw parse_error(std::string("network JSON: ") + e.what());
  } catch (const invalid_argument& e) {
    throw parse_error(std::string("network JSON: ") + e.what());
  }
}

inline Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open network file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw parse_error(std::string("network JSON: ") + e.what());
  }
  return network_from_json(j);
}

inline json credible_set_to_json(const CredibleSet& cs) {
  json nets = json::array();
  for (const auto& n : cs.networks) nets.push_back(network_to_json(n));
  return json{{"epsilon", cs.epsilon},
              {"opt", cs.opt},
              {"count", cs.networks.size()},
              {"truncated", cs.truncated},
              {"networks", nets}};
}

/// Graphviz rendering; noisy-OR children are drawn as double octagons.
inline std::string network_to_dot(const Network& net, const std::string& title = "network") {
  std::ostringstream out;
  out << "digraph \"" << title << "\" {\n";
  for (int v = 0; v < net.n(); ++v) {
    out << "  \"" << net.names()[v] << "\"";
    if (net.node(v).rep.is_noisy_or()) out << " [shape=doubleoctagon, xlabel=\"noisy-OR\"]";
    out << ";\n";
  }
  for (int v = 0; v < net.n(); ++v)
    for (int p : net.node(v).parents.members()) {
      out << "  \"" << net.names()[p] << "\" -> \"" << net.names()[v] << "\"";
      if (net.node(v).rep.is_noisy_or()) out << " [style=dashed]";
      out << ";\n";
    }
  out << "}\n";
  return out.str();
}

inline json prune_stats_to_json(const PruneStats& s) {
  return json{{"candidates", s.candidates},     {"visited", s.visited},         {"scored", s.scored},
              {"retained", s.retained},         {"subsetPruned", s.subset_pruned}, {"penaltyCut", s.penalty_cut},
              {"nullCut", s.null_cut},          {"infeasible", s.infeasible}};
}

inline json recovery_to_json(const std::vector<RecoveryCell>& cells) {
  json out = json::array();
  for (const auto& c : cells) {
    json trials = json::array();
    for (const auto& t : c.trials)
      trials.push_back({{"seed", t.seed},
                        {"qTrue", t.q_true},
                        {"qHat", t.q_hat},
                        {"relativeError", t.relative_error},
                        {"kl", t.kl},
                        {"iterations", t.iterations}});
    out.push_back({{"parentSize", c.parent_count},
                   {"samples", c.samples},
                   {"medianRelativeError", c.median_relative_error},
                   {"medianKL", c.median_kl},
                   {"trials", trials}});
  }
  return out;
}

inline json inference_errors_to_json(const InferenceErrors& e) {
  return json{{"medianAbsolute", e.median_absolute}, {"medianRelative", e.median_relative},
              {"meanAbsolute", e.mean_absolute},     {"maxAbsolute", e.max_absolute},
              {"queries", e.samples},                {"flagged", e.flagged}};
}

inline json inference_cell_to_json(const InferenceCell& c) {
  return json{{"samples", c.samples},
              {"opt", c.opt},
              {"cptOnlyOpt", c.cpt_only_opt},
              {"credibleCount", c.credible_count},
              {"truncated", c.truncated},
              {"best", inference_errors_to_json(c.best)},
              {"worst", inference_errors_to_json(c.worst)},
              {"cptOnly", inference_errors_to_json(c.cpt_only)}};
}

}  // namespace nobn
