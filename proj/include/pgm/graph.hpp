#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pgm/common.hpp"

namespace pgm {

enum class EdgeKind { directed, undirected };

struct Edge {
  std::string tail;
  std::string head;
  EdgeKind kind = EdgeKind::directed;
};

// Graph over named nodes with directed and/or undirected edges.  Nodes are
// kept sorted by name and values are immutable after construction; every
// listing below follows name order so repeated runs emit identical bytes.
class MixedGraph {
 public:
  MixedGraph() = default;

  MixedGraph(std::vector<std::string> nodes, const std::vector<Edge>& edges) {
    for (const auto& n : nodes)
      if (n.empty()) throw ArgumentError("node names must be non-empty");
    std::sort(nodes.begin(), nodes.end());
    if (std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end())
      throw ArgumentError("duplicate node name");
    names_ = std::move(nodes);
    cells_.assign(names_.size() * names_.size(), kNone);
    for (const auto& e : edges) {
      int t = index_of(e.tail), h = index_of(e.head);
      if (t == h) throw ArgumentError("self-loop on node '" + e.tail + "'");
      if (cell(t, h) != kNone || cell(h, t) != kNone)
        throw ArgumentError("more than one edge between '" + e.tail + "' and '" + e.head + "'");
      if (e.kind == EdgeKind::directed)
        at(t, h) = kArc;
      else
        at(t, h) = at(h, t) = kUndirected;
    }
  }

  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& nodes() const { return names_; }
  const std::string& name(int v) const { return names_[static_cast<std::size_t>(v)]; }

  bool contains(const std::string& n) const {
    return std::binary_search(names_.begin(), names_.end(), n);
  }

  int index_of(const std::string& n) const {
    auto it = std::lower_bound(names_.begin(), names_.end(), n);
    if (it == names_.end() || *it != n) throw ArgumentError("unknown node '" + n + "'");
    return static_cast<int>(it - names_.begin());
  }

  bool has_arc(int tail, int head) const { return cell(tail, head) == kArc; }
  bool has_undirected(int a, int b) const { return cell(a, b) == kUndirected; }
  bool adjacent(int a, int b) const { return cell(a, b) != kNone || cell(b, a) != kNone; }

  std::vector<int> parents(int v) const {
    std::vector<int> out;
    for (int u = 0; u < size(); ++u)
      if (cell(u, v) == kArc) out.push_back(u);
    return out;
  }

  std::vector<int> children(int v) const {
    std::vector<int> out;
    for (int u = 0; u < size(); ++u)
      if (cell(v, u) == kArc) out.push_back(u);
    return out;
  }

  std::vector<int> undirected_neighbours(int v) const {
    std::vector<int> out;
    for (int u = 0; u < size(); ++u)
      if (cell(v, u) == kUndirected) out.push_back(u);
    return out;
  }

  std::vector<int> adjacents(int v) const {
    std::vector<int> out;
    for (int u = 0; u < size(); ++u)
      if (u != v && adjacent(u, v)) out.push_back(u);
    return out;
  }

  /// Edges in canonical order: unordered pairs (i < j) by name, arcs keeping
  /// their true tail, undirected edges with lexicographic endpoint order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (int i = 0; i < size(); ++i)
      for (int j = i + 1; j < size(); ++j) {
        if (cell(i, j) == kArc)
          out.push_back({names_[i], names_[j], EdgeKind::directed});
        else if (cell(j, i) == kArc)
          out.push_back({names_[j], names_[i], EdgeKind::directed});
        else if (cell(i, j) == kUndirected)
          out.push_back({names_[i], names_[j], EdgeKind::undirected});
      }
    return out;
  }

  std::size_t edge_count() const { return edges().size(); }

  bool operator==(const MixedGraph& o) const {
    return names_ == o.names_ && cells_ == o.cells_;
  }
  bool operator!=(const MixedGraph& o) const { return !(*this == o); }

  /// Canonical text form, usable as a deterministic ordering key.
  std::string encode() const {
    std::string s = "nodes:";
    for (const auto& n : names_) s += n + ",";
    s += ";";
    for (const auto& e : edges())
      s += e.tail + (e.kind == EdgeKind::directed ? ">" : "-") + e.head + ";";
    return s;
  }

 protected:
  static constexpr std::uint8_t kNone = 0, kArc = 1, kUndirected = 2;

  std::uint8_t cell(int a, int b) const {
    return cells_[static_cast<std::size_t>(a) * names_.size() + static_cast<std::size_t>(b)];
  }
  std::uint8_t& at(int a, int b) {
    return cells_[static_cast<std::size_t>(a) * names_.size() + static_cast<std::size_t>(b)];
  }

  std::vector<std::string> names_;
  std::vector<std::uint8_t> cells_;
};

namespace detail {

// Kahn's algorithm over the directed part, smallest node name first.
// Returns node indices, or nullopt when a directed cycle exists.
inline std::optional<std::vector<int>> try_topological(const MixedGraph& g) {
  const int n = g.size();
  std::vector<int> indeg(n, 0);
  for (int v = 0; v < n; ++v) indeg[v] = static_cast<int>(g.parents(v).size());
  std::set<int> ready;
  for (int v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.insert(v);
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    int v = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(v);
    for (int c : g.children(v))
      if (--indeg[c] == 0) ready.insert(c);
  }
  if (static_cast<int>(order.size()) != n) return std::nullopt;
  return order;
}

// Names one directed cycle, for error messages.
inline std::string find_cycle(const MixedGraph& g) {
  const int n = g.size();
  std::vector<int> state(n, 0), stack;
  std::string cycle;
  auto dfs = [&](auto&& self, int v) -> bool {
    state[v] = 1;
    stack.push_back(v);
    for (int c : g.children(v)) {
      if (state[c] == 1) {
        auto it = std::find(stack.begin(), stack.end(), c);
        for (; it != stack.end(); ++it) cycle += g.name(*it) + " -> ";
        cycle += g.name(c);
        return true;
      }
      if (state[c] == 0 && self(self, c)) return true;
    }
    state[v] = 2;
    stack.pop_back();
    return false;
  };
  for (int v = 0; v < n; ++v)
    if (state[v] == 0 && dfs(dfs, v)) return cycle;
  return "unlocated cycle";
}

}  // namespace detail

// Directed acyclic graph.  Acyclicity is checked at construction.
class Dag : public MixedGraph {
 public:
  Dag() = default;

  Dag(std::vector<std::string> nodes, const std::vector<std::pair<std::string, std::string>>& arcs)
      : MixedGraph(std::move(nodes), to_edges(arcs)) {
    validate();
  }

  explicit Dag(const MixedGraph& g) : MixedGraph(g) {
    for (const auto& e : edges())
      if (e.kind == EdgeKind::undirected)
        throw StructureError("undirected edge in a DAG: " + e.tail + " - " + e.head);
    validate();
  }

 private:
  static std::vector<Edge> to_edges(const std::vector<std::pair<std::string, std::string>>& arcs) {
    std::vector<Edge> es;
    es.reserve(arcs.size());
    for (const auto& [t, h] : arcs) es.push_back({t, h, EdgeKind::directed});
    return es;
  }
  void validate() const {
    if (!detail::try_topological(*this))
      throw StructureError("directed cycle: " + detail::find_cycle(*this));
  }
};

// Undirected graph.
class UGraph : public MixedGraph {
 public:
  UGraph() = default;

  UGraph(std::vector<std::string> nodes, const std::vector<std::pair<std::string, std::string>>& links)
      : MixedGraph(std::move(nodes), to_edges(links)) {}

  explicit UGraph(const MixedGraph& g) : MixedGraph(g) {
    for (const auto& e : edges())
      if (e.kind == EdgeKind::directed)
        throw StructureError("directed edge in an undirected graph: " + e.tail + " -> " + e.head);
  }

 private:
  static std::vector<Edge> to_edges(const std::vector<std::pair<std::string, std::string>>& links) {
    std::vector<Edge> es;
    es.reserve(links.size());
    for (const auto& [a, b] : links) es.push_back({a, b, EdgeKind::undirected});
    return es;
  }
};

// Partially directed graph whose directed part must be acyclic.
class Pdag : public MixedGraph {
 public:
  Pdag() = default;

  Pdag(std::vector<std::string> nodes, const std::vector<Edge>& edges)
      : MixedGraph(std::move(nodes), edges) {
    validate();
  }

  explicit Pdag(const MixedGraph& g) : MixedGraph(g) { validate(); }

 private:
  void validate() const {
    if (!detail::try_topological(*this))
      throw StructureError("directed cycle: " + detail::find_cycle(*this));
  }
};

/// Topological order of a DAG; ties broken by node name.
inline std::vector<std::string> topological_order(const Dag& g) {
  auto order = detail::try_topological(g);
  if (!order) throw StructureError("directed cycle: " + detail::find_cycle(g));
  std::vector<std::string> out;
  out.reserve(order->size());
  for (int v : *order) out.push_back(g.name(v));
  return out;
}

namespace detail {

inline std::vector<bool> to_mask(const MixedGraph& g, const std::vector<std::string>& set) {
  std::vector<bool> mask(static_cast<std::size_t>(g.size()), false);
  for (const auto& n : set) mask[static_cast<std::size_t>(g.index_of(n))] = true;
  return mask;
}

inline void check_separation_args(const MixedGraph& g, const std::vector<std::string>& a,
                                  const std::vector<std::string>& b,
                                  const std::vector<std::string>& c) {
  if (a.empty() || b.empty()) throw ArgumentError("separation query needs non-empty endpoint sets");
  std::set<std::string> seen;
  auto add_all = [&](const std::vector<std::string>& s) {
    for (const auto& n : s) {
      g.index_of(n);
      if (!seen.insert(n).second) throw ArgumentError("separation sets overlap at '" + n + "'");
    }
  };
  add_all(a);
  add_all(b);
  add_all(c);
}

}  // namespace detail

/// True iff every path from A to B passes through C (undirected separation).
inline bool u_separated(const UGraph& g, const std::vector<std::string>& a,
                        const std::vector<std::string>& b, const std::vector<std::string>& c) {
  detail::check_separation_args(g, a, b, c);
  auto in_a = detail::to_mask(g, a), in_b = detail::to_mask(g, b), in_c = detail::to_mask(g, c);
  std::vector<bool> visited(static_cast<std::size_t>(g.size()), false);
  std::deque<int> queue;
  for (int v = 0; v < g.size(); ++v)
    if (in_a[v]) {
      visited[v] = true;
      queue.push_back(v);
    }
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    if (in_b[v]) return false;
    if (in_c[v]) continue;  // separator absorbs the walk
    for (int u : g.undirected_neighbours(v))
      if (!visited[u]) {
        visited[u] = true;
        queue.push_back(u);
      }
  }
  return true;
}

/// True iff C d-separates A from B: every A-B path is blocked either by a
/// non-collider in C or by a collider with no descendant in C.  Implemented
/// as reachability over (node, arrival direction) states.
inline bool d_separated(const Dag& g, const std::vector<std::string>& a,
                        const std::vector<std::string>& b, const std::vector<std::string>& c) {
  detail::check_separation_args(g, a, b, c);
  const int n = g.size();
  auto in_a = detail::to_mask(g, a), in_b = detail::to_mask(g, b), in_c = detail::to_mask(g, c);

  // Nodes in C or with a descendant in C (collider pass-through condition).
  std::vector<bool> anc_of_c(static_cast<std::size_t>(n), false);
  {
    std::deque<int> queue;
    for (int v = 0; v < n; ++v)
      if (in_c[v]) {
        anc_of_c[v] = true;
        queue.push_back(v);
      }
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      for (int p : g.parents(v))
        if (!anc_of_c[p]) {
          anc_of_c[p] = true;
          queue.push_back(p);
        }
    }
  }

  enum { kFromChild = 0, kFromParent = 1 };
  std::vector<std::array<bool, 2>> visited(static_cast<std::size_t>(n), {false, false});
  std::deque<std::pair<int, int>> queue;
  auto push = [&](int v, int dir) {
    if (!visited[static_cast<std::size_t>(v)][static_cast<std::size_t>(dir)]) {
      visited[static_cast<std::size_t>(v)][static_cast<std::size_t>(dir)] = true;
      queue.emplace_back(v, dir);
    }
  };
  for (int v = 0; v < n; ++v)
    if (in_a[v]) push(v, kFromChild);

  while (!queue.empty()) {
    auto [v, dir] = queue.front();
    queue.pop_front();
    if (in_b[v]) return false;
    if (dir == kFromChild) {
      if (!in_c[v]) {
        for (int p : g.parents(v)) push(p, kFromChild);
        for (int ch : g.children(v)) push(ch, kFromParent);
      }
    } else {
      if (!in_c[v])
        for (int ch : g.children(v)) push(ch, kFromParent);
      if (anc_of_c[v])
        for (int p : g.parents(v)) push(p, kFromChild);
    }
  }
  return true;
}

/// Markov blanket in a DAG: parents, children, and the children's other parents.
inline std::vector<std::string> markov_blanket(const Dag& g, const std::string& x) {
  int v = g.index_of(x);
  std::set<int> mb;
  for (int p : g.parents(v)) mb.insert(p);
  for (int ch : g.children(v)) {
    mb.insert(ch);
    for (int sp : g.parents(ch)) mb.insert(sp);
  }
  mb.erase(v);
  std::vector<std::string> out;
  for (int u : mb) out.push_back(g.name(u));
  return out;
}

/// Markov blanket in an undirected graph: the neighbours.
inline std::vector<std::string> markov_blanket(const UGraph& g, const std::string& x) {
  int v = g.index_of(x);
  std::vector<std::string> out;
  for (int u : g.undirected_neighbours(v)) out.push_back(g.name(u));
  return out;
}

/// Moral graph: undirected skeleton plus marriages between co-parents.
inline UGraph moralize(const Dag& g) {
  std::set<std::pair<int, int>> links;
  auto add = [&](int a, int b) { links.insert({std::min(a, b), std::max(a, b)}); };
  for (int v = 0; v < g.size(); ++v) {
    auto ps = g.parents(v);
    for (int p : ps) add(p, v);
    for (std::size_t i = 0; i < ps.size(); ++i)
      for (std::size_t j = i + 1; j < ps.size(); ++j) add(ps[i], ps[j]);
  }
  std::vector<std::pair<std::string, std::string>> named;
  for (auto [a, b] : links) named.emplace_back(g.name(a), g.name(b));
  return UGraph(g.nodes(), named);
}

/// Undirected graph with one link per edge of g, directions dropped.
inline UGraph skeleton(const MixedGraph& g) {
  std::vector<std::pair<std::string, std::string>> links;
  for (const auto& e : g.edges()) {
    auto a = e.tail, b = e.head;
    if (b < a) std::swap(a, b);
    links.emplace_back(a, b);
  }
  return UGraph(g.nodes(), links);
}

/// Unshielded converging connections (a, c, b): a -> c <- b with a, b
/// non-adjacent; listed with a < b, sorted.
inline std::vector<std::array<std::string, 3>> v_structures(const Dag& g) {
  std::vector<std::array<std::string, 3>> out;
  for (int c = 0; c < g.size(); ++c) {
    auto ps = g.parents(c);
    for (std::size_t i = 0; i < ps.size(); ++i)
      for (std::size_t j = i + 1; j < ps.size(); ++j)
        if (!g.adjacent(ps[i], ps[j]))
          out.push_back({g.name(ps[i]), g.name(c), g.name(ps[j])});
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

// Orientation state used while completing a pattern: 0 none, 1 arc, 2 undirected.
struct PatternCells {
  int n = 0;
  std::vector<std::uint8_t> m;
  std::uint8_t get(int a, int b) const { return m[static_cast<std::size_t>(a) * n + b]; }
  void set(int a, int b, std::uint8_t v) { m[static_cast<std::size_t>(a) * n + b] = v; }
  bool arc(int a, int b) const { return get(a, b) == 1; }
  bool und(int a, int b) const { return get(a, b) == 2; }
  bool adj(int a, int b) const { return get(a, b) != 0 || get(b, a) != 0; }
  // Directed path a ->* b using arcs only.
  bool reaches(int a, int b) const {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::deque<int> q{a};
    seen[static_cast<std::size_t>(a)] = true;
    while (!q.empty()) {
      int v = q.front();
      q.pop_front();
      if (v == b) return true;
      for (int u = 0; u < n; ++u)
        if (arc(v, u) && !seen[u]) {
          seen[u] = true;
          q.push_back(u);
        }
    }
    return false;
  }
  // Orients a - b as a -> b unless that closes a directed cycle.
  bool orient(int a, int b) {
    if (!und(a, b)) return false;
    if (reaches(b, a)) return false;
    set(a, b, 1);
    set(b, a, 0);
    return true;
  }
};

// The three standard orientation-propagation rules, applied to fixpoint.
// Rules only direct undirected edges, never flip arcs, and refuse any
// orientation that would close a directed cycle.
inline void propagate_orientations(PatternCells& p) {
  bool changed = true;
  while (changed) {
    changed = false;
    const int n = p.n;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b) continue;
        // Rule 1: a -> b, b - c, a and c non-adjacent  =>  b -> c.
        if (p.arc(a, b))
          for (int c = 0; c < n; ++c)
            if (c != a && c != b && p.und(b, c) && !p.adj(a, c)) changed |= p.orient(b, c);
        // Rule 2: a -> b -> c with a - c  =>  a -> c.
        if (p.und(a, b)) {
          for (int c = 0; c < n; ++c)
            if (c != a && c != b && p.arc(a, c) && p.arc(c, b)) {
              changed |= p.orient(a, b);
              break;
            }
        }
        // Rule 3: a - b, a - c, a - d, c -> b, d -> b, c and d non-adjacent  =>  a -> b.
        if (p.und(a, b)) {
          std::vector<int> pointers;
          for (int c = 0; c < n; ++c)
            if (c != a && c != b && p.und(a, c) && p.arc(c, b)) pointers.push_back(c);
          bool fired = false;
          for (std::size_t i = 0; i < pointers.size() && !fired; ++i)
            for (std::size_t j = i + 1; j < pointers.size() && !fired; ++j)
              if (!p.adj(pointers[i], pointers[j])) {
                changed |= p.orient(a, b);
                fired = true;
              }
        }
      }
  }
}

inline Pdag pattern_to_pdag(const std::vector<std::string>& names, const PatternCells& p) {
  std::vector<Edge> es;
  const int n = p.n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (p.arc(i, j)) es.push_back({names[i], names[j], EdgeKind::directed});
      else if (p.arc(j, i)) es.push_back({names[j], names[i], EdgeKind::directed});
      else if (p.und(i, j)) es.push_back({names[i], names[j], EdgeKind::undirected});
    }
  return Pdag(names, es);
}

}  // namespace detail

/// Equivalence-class representative of a DAG: its skeleton with exactly the
/// compelled edges directed (v-structures plus their propagation closure).
inline Pdag cpdag(const Dag& g) {
  const int n = g.size();
  detail::PatternCells p{n, std::vector<std::uint8_t>(static_cast<std::size_t>(n) * n, 0)};
  for (const auto& e : g.edges()) {
    int t = g.index_of(e.tail), h = g.index_of(e.head);
    p.set(t, h, 2);
    p.set(h, t, 2);
  }
  for (const auto& vs : v_structures(g)) {
    int a = g.index_of(vs[0]), c = g.index_of(vs[1]), b = g.index_of(vs[2]);
    p.set(a, c, 1); p.set(c, a, 0);
    p.set(b, c, 1); p.set(c, b, 0);
  }
  detail::propagate_orientations(p);
  return detail::pattern_to_pdag(g.nodes(), p);
}

struct ChordalCheck {
  bool chordal = false;
  std::vector<std::string> elimination_order;  // perfect elimination order when chordal
};

/// Maximum-cardinality search followed by the fill-in check.
inline ChordalCheck is_chordal(const UGraph& g) {
  const int n = g.size();
  std::vector<int> weight(static_cast<std::size_t>(n), 0);
  std::vector<bool> numbered(static_cast<std::size_t>(n), false);
  std::vector<int> visit;
  visit.reserve(static_cast<std::size_t>(n));
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int v = 0; v < n; ++v)
      if (!numbered[v] && (best == -1 || weight[v] > weight[best])) best = v;
    numbered[best] = true;
    visit.push_back(best);
    for (int u : g.undirected_neighbours(best))
      if (!numbered[u]) ++weight[u];
  }
  std::vector<int> pos(static_cast<std::size_t>(n), 0);
  std::vector<int> order(visit.rbegin(), visit.rend());  // elimination order
  for (int i = 0; i < n; ++i) pos[order[i]] = i;
  // Perfect elimination check: the later neighbours of v, minus the earliest
  // of them, must all neighbour that earliest one.
  for (int i = 0; i < n; ++i) {
    int v = order[i];
    std::vector<int> later;
    for (int u : g.undirected_neighbours(v))
      if (pos[u] > i) later.push_back(u);
    if (later.size() < 2) continue;
    int u0 = *std::min_element(later.begin(), later.end(),
                               [&](int x, int y) { return pos[x] < pos[y]; });
    for (int w : later)
      if (w != u0 && !g.adjacent(u0, w)) return {false, {}};
  }
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n));
  for (int v : order) names.push_back(g.name(v));
  return {true, names};
}

namespace detail {

inline void bron_kerbosch(const UGraph& g, std::set<int>& r, std::set<int> p, std::set<int> x,
                          std::vector<std::vector<int>>& out) {
  if (p.empty() && x.empty()) {
    out.emplace_back(r.begin(), r.end());
    return;
  }
  int pivot = -1;
  std::size_t best = 0;
  for (int u : p) {
    auto nb = g.undirected_neighbours(u);
    std::size_t k = 0;
    for (int w : nb)
      if (p.count(w)) ++k;
    if (pivot == -1 || k > best) {
      pivot = u;
      best = k;
    }
  }
  std::vector<int> candidates;
  for (int v : p)
    if (pivot == -1 || !g.adjacent(pivot, v)) candidates.push_back(v);
  for (int v : candidates) {
    std::set<int> p2, x2;
    for (int w : g.undirected_neighbours(v)) {
      if (p.count(w)) p2.insert(w);
      if (x.count(w)) x2.insert(w);
    }
    r.insert(v);
    bron_kerbosch(g, r, std::move(p2), std::move(x2), out);
    r.erase(v);
    p.erase(v);
    x.insert(v);
  }
}

}  // namespace detail

/// Maximal cliques, members name-sorted.  For chordal graphs the listing is
/// ordered with the running-intersection property so separators are well
/// defined; otherwise cliques are listed lexicographically.
inline std::vector<std::vector<std::string>> cliques(const UGraph& g) {
  const int n = g.size();
  auto chordal = is_chordal(g);
  std::vector<std::vector<int>> raw;
  if (chordal.chordal) {
    std::vector<int> pos(static_cast<std::size_t>(n), 0);
    std::vector<int> order;
    for (const auto& nm : chordal.elimination_order) order.push_back(g.index_of(nm));
    for (int i = 0; i < n; ++i) pos[order[i]] = i;
    for (int i = 0; i < n; ++i) {
      int v = order[i];
      std::vector<int> clique{v};
      for (int u : g.undirected_neighbours(v))
        if (pos[u] > i) clique.push_back(u);
      raw.push_back(std::move(clique));
    }
  } else {
    std::set<int> r, x, p;
    for (int v = 0; v < n; ++v) p.insert(v);
    detail::bron_kerbosch(g, r, std::move(p), std::move(x), raw);
  }
  // Keep maximal sets only.
  std::vector<std::set<int>> sets;
  for (auto& c : raw) sets.emplace_back(c.begin(), c.end());
  std::vector<std::vector<std::string>> named;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    bool maximal = true;
    for (std::size_t j = 0; j < sets.size() && maximal; ++j) {
      if (i == j || sets[j].size() < sets[i].size()) continue;
      if (sets[j].size() == sets[i].size() && j > i) continue;
      if (std::includes(sets[j].begin(), sets[j].end(), sets[i].begin(), sets[i].end()) &&
          sets[j] != sets[i])
        maximal = false;
      if (sets[j] == sets[i] && j < i) maximal = false;  // drop duplicates
    }
    if (!maximal) continue;
    std::vector<std::string> names;
    for (int v : sets[i]) names.push_back(g.name(v));
    std::sort(names.begin(), names.end());
    named.push_back(std::move(names));
  }
  std::sort(named.begin(), named.end());
  if (!chordal.chordal || named.size() <= 1) return named;

  // Running-intersection order: greedily append the clique with the largest
  // overlap with the nodes covered so far, ties lexicographic.
  std::vector<std::vector<std::string>> ordered{named.front()};
  std::set<std::string> covered(named.front().begin(), named.front().end());
  std::vector<std::vector<std::string>> rest(named.begin() + 1, named.end());
  while (!rest.empty()) {
    std::size_t pick = 0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < rest.size(); ++i) {
      std::size_t overlap = 0;
      for (const auto& nm : rest[i])
        if (covered.count(nm)) ++overlap;
      if (i == 0 || overlap > best) {
        pick = i;
        best = overlap;
      }
    }
    covered.insert(rest[pick].begin(), rest[pick].end());
    ordered.push_back(rest[pick]);
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return ordered;
}

/// Consistent extension of a partially directed graph: a DAG with the same
/// skeleton and v-structures.  Throws StructureError when none exists.
inline Dag pdag_extension(const Pdag& g) {
  const int n = g.size();
  detail::PatternCells p{n, std::vector<std::uint8_t>(static_cast<std::size_t>(n) * n, 0)};
  for (const auto& e : g.edges()) {
    int t = g.index_of(e.tail), h = g.index_of(e.head);
    if (e.kind == EdgeKind::directed) {
      p.set(t, h, 1);
    } else {
      p.set(t, h, 2);
      p.set(h, t, 2);
    }
  }
  std::vector<bool> removed(static_cast<std::size_t>(n), false);
  std::vector<std::pair<std::string, std::string>> arcs;
  for (const auto& e : g.edges())
    if (e.kind == EdgeKind::directed) arcs.emplace_back(e.tail, e.head);
  int left = n;
  while (left > 0) {
    int found = -1;
    for (int v = 0; v < n && found < 0; ++v) {
      if (removed[v]) continue;
      bool sink = true;
      for (int u = 0; u < n && sink; ++u)
        if (!removed[u] && p.arc(v, u)) sink = false;
      if (!sink) continue;
      // Every undirected neighbour must be adjacent to all other adjacents of v.
      bool ok = true;
      for (int u = 0; u < n && ok; ++u) {
        if (removed[u] || !p.und(v, u)) continue;
        for (int w = 0; w < n && ok; ++w) {
          if (removed[w] || w == u || w == v) continue;
          if (p.adj(v, w) && !p.adj(u, w)) ok = false;
        }
      }
      if (ok) found = v;
    }
    if (found < 0) throw StructureError("partially directed graph admits no consistent extension");
    for (int u = 0; u < n; ++u)
      if (!removed[u] && p.und(found, u)) {
        arcs.emplace_back(g.name(u), g.name(found));
        p.set(found, u, 0);
        p.set(u, found, 0);
      }
    removed[static_cast<std::size_t>(found)] = true;
    --left;
  }
  return Dag(g.nodes(), arcs);
}

}  // namespace pgm
