#pragma once

// Shared domain types: binary datasets, parent sets, count vectors, CPDs,
// local scores, score tables, networks and credible sets.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

namespace nobn {

// ---------------------------------------------------------------------------
// Errors

class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class invalid_argument : public error {
 public:
  using error::error;
};

class io_error : public error {
 public:
  using error::error;
};

class parse_error : public error {
 public:
  parse_error(const std::string& what, long row = -1, std::string column = {})
      : error(what), row_(row), column_(std::move(column)) {}
  long row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  long row_;
  std::string column_;
};

class capacity_error : public error {
 public:
  using error::error;
};

class infeasible_candidate : public error {
 public:
  using error::error;
};

class inconsistent_evidence : public error {
 public:
  using error::error;
};

// ---------------------------------------------------------------------------
// Numeric conventions

/// Slack applied in favour of keeping a candidate in every pruning and
/// credible-window comparison.
inline constexpr double kScoreSlack = 1e-9;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Maximum number of variables a dataset can hold (rows are 64-bit masks).
inline constexpr int kMaxVariables = 64;

inline double epsilon_from_bayes_factor(double bf) {
  if (!(bf > 1.0) || !std::isfinite(bf))
    throw invalid_argument("Bayes factor must be a finite value > 1, got " + std::to_string(bf));
  return std::log(bf);
}

// ---------------------------------------------------------------------------
// ParentSet

/// A subset of variable indices stored as a bitmask. Members are iterated in
/// ascending index order; member p of the set owns bit p of a configuration
/// index.
class ParentSet {
 public:
  constexpr ParentSet() = default;
  constexpr explicit ParentSet(std::uint64_t mask) : mask_(mask) {}

  static ParentSet of(std::initializer_list<int> members) {
    ParentSet s;
    for (int m : members) s = s.with(m);
    return s;
  }
  template <class Range>
  static ParentSet from_members(const Range& members) {
    ParentSet s;
    for (int m : members) s = s.with(m);
    return s;
  }

  constexpr std::uint64_t mask() const noexcept { return mask_; }
  constexpr int size() const noexcept { return std::popcount(mask_); }
  constexpr bool empty() const noexcept { return mask_ == 0; }
  constexpr bool contains(int v) const noexcept { return (mask_ >> v) & 1u; }

  ParentSet with(int v) const {
    check_index(v);
    return ParentSet(mask_ | (std::uint64_t{1} << v));
  }
  ParentSet without(int v) const {
    check_index(v);
    return ParentSet(mask_ & ~(std::uint64_t{1} << v));
  }

  constexpr bool subset_of(ParentSet other) const noexcept { return (mask_ & ~other.mask_) == 0; }
  constexpr bool strict_subset_of(ParentSet other) const noexcept {
    return subset_of(other) && mask_ != other.mask_;
  }

  std::vector<int> members() const {
    std::vector<int> out;
    out.reserve(size());
    for (std::uint64_t m = mask_; m; m &= m - 1) out.push_back(std::countr_zero(m));
    return out;
  }

  /// Highest member index, or -1 for the empty set.
  constexpr int highest() const noexcept { return mask_ ? 63 - std::countl_zero(mask_) : -1; }

  /// Number of parent configurations, 2^|members|.
  std::size_t configurations() const {
    if (size() >= 63) throw capacity_error("parent set too large to enumerate configurations");
    return std::size_t{1} << size();
  }

  /// Configuration index of a row given as a bitmask of variable values.
  std::size_t config_of(std::uint64_t row) const noexcept {
    std::size_t j = 0;
    int bit = 0;
    for (std::uint64_t m = mask_; m; m &= m - 1, ++bit)
      j |= static_cast<std::size_t>((row >> std::countr_zero(m)) & 1u) << bit;
    return j;
  }

  /// Inverse of config_of: the variable-value mask realising configuration j.
  std::uint64_t row_of(std::size_t j) const noexcept {
    std::uint64_t row = 0;
    int bit = 0;
    for (std::uint64_t m = mask_; m; m &= m - 1, ++bit)
      if ((j >> bit) & 1u) row |= std::uint64_t{1} << std::countr_zero(m);
    return row;
  }

  friend constexpr bool operator==(ParentSet, ParentSet) = default;
  friend constexpr auto operator<=>(ParentSet, ParentSet) = default;

 private:
  static void check_index(int v) {
    if (v < 0 || v >= kMaxVariables) throw invalid_argument("variable index out of range: " + std::to_string(v));
  }
  std::uint64_t mask_ = 0;
};

/// Lexicographic order on ascending member lists (the lattice traversal order
/// within one cardinality).
inline bool lexicographic_less(ParentSet a, ParentSet b) {
  const auto ma = a.members();
  const auto mb = b.members();
  return std::lexicographical_compare(ma.begin(), ma.end(), mb.begin(), mb.end());
}

// ---------------------------------------------------------------------------
// Dataset

/// Immutable complete binary data. Row i is stored as a bitmask whose bit v
/// holds the value of variable v.
class Dataset {
 public:
  Dataset(std::vector<std::string> names, std::vector<std::uint64_t> rows)
      : names_(std::move(names)), rows_(std::move(rows)) {
    if (names_.empty()) throw invalid_argument("dataset needs at least one variable");
    if (names_.size() > static_cast<std::size_t>(kMaxVariables))
      throw capacity_error("dataset has more than 64 variables");
    if (rows_.empty()) throw invalid_argument("dataset has no instances");
    std::set<std::string> seen;
    for (const auto& n : names_)
      if (!seen.insert(n).second) throw invalid_argument("duplicate variable name: " + n);
    const std::uint64_t allowed =
        names_.size() == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << names_.size()) - 1;
    for (auto r : rows_)
      if (r & ~allowed) throw invalid_argument("row sets bits beyond the variable count");
  }

  /// Builds a dataset from a dense 0/1 matrix (rows x variables).
  static Dataset from_matrix(std::vector<std::string> names, const std::vector<std::vector<int>>& values) {
    std::vector<std::uint64_t> rows;
    rows.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto& v = values[i];
      if (v.size() != names.size()) throw invalid_argument("ragged row " + std::to_string(i + 1));
      std::uint64_t r = 0;
      for (std::size_t c = 0; c < v.size(); ++c) {
        if (v[c] != 0 && v[c] != 1) throw invalid_argument("non-binary value in row " + std::to_string(i + 1));
        if (v[c]) r |= std::uint64_t{1} << c;
      }
      rows.push_back(r);
    }
    return Dataset(std::move(names), std::move(rows));
  }

  int n() const noexcept { return static_cast<int>(names_.size()); }
  std::size_t N() const noexcept { return rows_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<std::uint64_t>& rows() const noexcept { return rows_; }
  int value(std::size_t row, int var) const { return static_cast<int>((rows_.at(row) >> var) & 1u); }

  int index_of(const std::string& name) const {
    for (int i = 0; i < n(); ++i)
      if (names_[i] == name) return i;
    throw invalid_argument("unknown variable: " + name);
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::uint64_t> rows_;
};

// ---------------------------------------------------------------------------
// Counts and CPDs

/// Sufficient statistics n_jk for one (child, parent set) family.
struct CountVector {
  int child = 0;
  ParentSet parents;
  std::vector<std::array<std::int64_t, 2>> n_jk;

  std::int64_t n_j(std::size_t j) const { return n_jk[j][0] + n_jk[j][1]; }
  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& c : n_jk) t += c[0] + c[1];
    return t;
  }
};

/// Dense conditional probability table; rows[j][k] = P(child = k | config j).
struct Cpt {
  std::vector<std::array<double, 2>> rows;

  bool row_stochastic(double tol = 1e-12) const {
    for (const auto& r : rows) {
      if (r[0] < 0.0 || r[1] < 0.0 || r[0] > 1.0 || r[1] > 1.0) return false;
      if (std::abs(r[0] + r[1] - 1.0) > tol) return false;
    }
    return true;
  }
};

/// Noisy-OR inhibitor probabilities: q[l] = P(child = 0 | only parent l active).
struct NoisyOrParams {
  std::vector<double> q;
};

enum class RepKind : std::uint8_t { FullCpt = 0, NoisyOr = 1 };

inline char rep_letter(RepKind k) { return k == RepKind::FullCpt ? 'T' : 'N'; }

/// A CPD family together with its parameters. The tag is derived from the
/// held alternative so the two cannot disagree. A FullCpt with no rows means
/// the parameters were not carried along (e.g. scores read from a file).
class Representation {
 public:
  Representation() : params_(Cpt{}) {}
  explicit Representation(Cpt cpt) : params_(std::move(cpt)) {}
  explicit Representation(NoisyOrParams q) : params_(std::move(q)) {}

  RepKind kind() const noexcept { return params_.index() == 0 ? RepKind::FullCpt : RepKind::NoisyOr; }
  bool is_noisy_or() const noexcept { return kind() == RepKind::NoisyOr; }
  const Cpt& cpt() const { return std::get<Cpt>(params_); }
  const NoisyOrParams& noisy_or() const { return std::get<NoisyOrParams>(params_); }

 private:
  std::variant<Cpt, NoisyOrParams> params_;
};

/// Score of one (child, parent set, representation) triple; lower is better.
struct LocalScore {
  int child = 0;
  ParentSet parents;
  Representation rep;
  double score = 0.0;

  RepKind kind() const noexcept { return rep.kind(); }
};

/// Deterministic ordering of local scores: ascending score, then
/// representation, then parent set.
inline bool score_order(const LocalScore& a, const LocalScore& b) {
  if (a.score != b.score) return a.score < b.score;
  if (a.kind() != b.kind()) return a.kind() < b.kind();
  return a.parents < b.parents;
}

/// Per-node candidate lists, each sorted ascending by score.
struct ScoreTable {
  std::vector<std::string> names;
  std::vector<std::vector<LocalScore>> entries;

  int n() const noexcept { return static_cast<int>(entries.size()); }

  void sort() {
    for (auto& e : entries) std::stable_sort(e.begin(), e.end(), score_order);
  }

  /// Throws unless every node has at least one entry, entries name their own
  /// node and no entry lists its child as a parent.
  void validate() const {
    if (names.size() != entries.size()) throw invalid_argument("score table names/entries size mismatch");
    for (int v = 0; v < n(); ++v) {
      if (entries[v].empty()) throw invalid_argument("no candidate parent sets for node " + names[v]);
      for (const auto& e : entries[v]) {
        if (e.child != v) throw invalid_argument("entry filed under wrong node " + names[v]);
        if (e.parents.contains(v)) throw invalid_argument("node " + names[v] + " lists itself as parent");
        if (e.parents.highest() >= n()) throw invalid_argument("parent index out of range for " + names[v]);
        if (!std::isfinite(e.score)) throw invalid_argument("non-finite score for node " + names[v]);
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Networks

/// Canonical identity of a network: per node (in index order) its parent mask
/// and representation tag.
using CanonicalKey = std::vector<std::pair<std::uint64_t, RepKind>>;

/// One chosen LocalScore per node. The total is the plain sum of the chosen
/// local scores.
class Network {
 public:
  Network() = default;
  Network(std::vector<std::string> names, std::vector<LocalScore> nodes)
      : names_(std::move(names)), nodes_(std::move(nodes)) {
    if (names_.size() != nodes_.size()) throw invalid_argument("network names/nodes size mismatch");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].child != static_cast<int>(i)) throw invalid_argument("network node index mismatch");
      if (nodes_[i].parents.contains(static_cast<int>(i))) throw invalid_argument("self-loop in network");
      if (nodes_[i].parents.highest() >= static_cast<int>(nodes_.size()))
        throw invalid_argument("parent index out of range");
    }
  }

  /// Builds a network from local scores given in any order.
  static Network from_unordered(std::vector<std::string> names, std::vector<LocalScore> nodes) {
    std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) { return a.child < b.child; });
    return Network(std::move(names), std::move(nodes));
  }

  int n() const noexcept { return static_cast<int>(nodes_.size()); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<LocalScore>& nodes() const noexcept { return nodes_; }
  const LocalScore& node(int v) const { return nodes_.at(v); }

  double total_score() const {
    double s = 0.0;
    for (const auto& e : nodes_) s += e.score;
    return s;
  }

  std::vector<ParentSet> parent_sets() const {
    std::vector<ParentSet> out;
    out.reserve(nodes_.size());
    for (const auto& e : nodes_) out.push_back(e.parents);
    return out;
  }

  CanonicalKey key() const {
    CanonicalKey k;
    k.reserve(nodes_.size());
    for (const auto& e : nodes_) k.emplace_back(e.parents.mask(), e.kind());
    return k;
  }

  int noisy_or_count() const {
    return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& e) { return e.rep.is_noisy_or(); }));
  }

 private:
  std::vector<std::string> names_;
  std::vector<LocalScore> nodes_;
};

inline CanonicalKey canonicalize(const Network& net) { return net.key(); }

/// True iff the digraph with edges parent -> child has no directed cycle.
inline bool is_acyclic(const std::vector<ParentSet>& parents) {
  const int n = static_cast<int>(parents.size());
  std::vector<int> indegree(n, 0);
  for (int v = 0; v < n; ++v)
    for (int p : parents[v].members()) {
      if (p >= n) return false;
      ++indegree[v];
    }
  std::vector<int> ready;
  for (int v = 0; v < n; ++v)
    if (indegree[v] == 0) ready.push_back(v);
  int visited = 0;
  while (!ready.empty()) {
    const int u = ready.back();
    ready.pop_back();
    ++visited;
    for (int v = 0; v < n; ++v)
      if (parents[v].contains(u) && --indegree[v] == 0) ready.push_back(v);
  }
  return visited == n;
}

/// Topological order of an acyclic parent assignment (parents first).
inline std::vector<int> topological_order(const std::vector<ParentSet>& parents) {
  const int n = static_cast<int>(parents.size());
  std::vector<int> order;
  std::vector<bool> placed(n, false);
  while (static_cast<int>(order.size()) < n) {
    bool progressed = false;
    for (int v = 0; v < n; ++v) {
      if (placed[v]) continue;
      bool ok = true;
      for (int p : parents[v].members()) ok = ok && placed[p];
      if (ok) {
        placed[v] = true;
        order.push_back(v);
        progressed = true;
      }
    }
    if (!progressed) throw invalid_argument("parent assignment contains a cycle");
  }
  return order;
}

/// All networks whose score lies in [opt, opt + epsilon].
struct CredibleSet {
  double epsilon = 0.0;
  double opt = 0.0;
  std::vector<Network> networks;
  bool truncated = false;

  std::set<CanonicalKey> keys() const {
    std::set<CanonicalKey> out;
    for (const auto& n : networks) out.insert(n.key());
    return out;
  }
};

}  // namespace nobn
