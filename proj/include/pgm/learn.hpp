#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "pgm/citests.hpp"
#include "pgm/common.hpp"
#include "pgm/data.hpp"
#include "pgm/graph.hpp"
#include "pgm/rng.hpp"
#include "pgm/scores.hpp"

namespace pgm {

enum class Algo { gs, hc, hybrid };
enum class CiKind { chi2, g2, zf };

struct LearnConfig {
  CiKind test = CiKind::g2;
  double alpha = 0.05;
  ScoreKind score = ScoreKind::bic;
  double iss = 1.0;
  int restarts = 0;
  int tabu = 0;
  int max_parents = 8;
  std::uint64_t seed = 0;
  bool markov_network = false;  // Grow-Shrink stops at the symmetric-blanket graph

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0,1)");
    if (restarts < 0) throw ArgumentError("restarts must be nonnegative");
    if (tabu < 0) throw ArgumentError("tabu length must be nonnegative");
    if (max_parents < 1) throw ArgumentError("max parents must be at least 1");
  }
};

// Conditional-independence oracle over positions into a name-sorted variable
// list; returns a p-value.  Tests inject exact oracles through this seam.
struct CiContext {
  std::vector<std::string> names;  // sorted
  std::function<double(int x, int y, const std::vector<int>& z)> p_value;
};

/// Builds the configured test.  The discrete tests keep a pointer to the
/// dataset, so the context must not outlive it.
inline CiContext make_ci_context(const Dataset& d, const LearnConfig& cfg) {
  CiContext ctx;
  ctx.names = [&] {
    std::vector<std::string> ns;
    for (const auto& v : d.variables()) ns.push_back(v.name);
    std::sort(ns.begin(), ns.end());
    return ns;
  }();
  if (cfg.test == CiKind::zf) {
    if (!d.all_continuous())
      throw ArgumentError("fisher z test requires all-continuous data");
    auto stats = std::make_shared<GaussStats>(gauss_stats(d));
    auto names = ctx.names;
    ctx.p_value = [stats, names](int x, int y, const std::vector<int>& z) {
      std::vector<std::string> zn;
      for (int v : z) zn.push_back(names[static_cast<std::size_t>(v)]);
      return test_fisher_z(*stats, names[static_cast<std::size_t>(x)],
                           names[static_cast<std::size_t>(y)], zn)
          .p_value;
    };
  } else {
    if (!d.all_discrete())
      throw ArgumentError("discrete tests require all-discrete data");
    const auto kind = cfg.test == CiKind::chi2 ? DiscreteTestKind::chi2 : DiscreteTestKind::g2;
    auto names = ctx.names;
    const Dataset* data = &d;
    ctx.p_value = [data, names, kind](int x, int y, const std::vector<int>& z) {
      std::vector<std::string> zn;
      for (int v : z) zn.push_back(names[static_cast<std::size_t>(v)]);
      return test_discrete(
                 contingency_table(*data, {names[static_cast<std::size_t>(x)],
                                           names[static_cast<std::size_t>(y)]},
                                   zn),
                 kind)
          .p_value;
    };
  }
  return ctx;
}

namespace detail {

// Growing then shrinking passes, candidates scanned in name order; each pass
// restarts until a full sweep changes nothing.
inline std::set<int> grow_shrink_positions(const CiContext& ci, int x, double alpha) {
  const int p = static_cast<int>(ci.names.size());
  std::set<int> mb;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < p; ++y) {
      if (y == x || mb.count(y)) continue;
      std::vector<int> z(mb.begin(), mb.end());
      if (ci.p_value(x, y, z) <= alpha) {
        mb.insert(y);
        changed = true;
      }
    }
  }
  changed = true;
  while (changed) {
    changed = false;
    for (int y : std::vector<int>(mb.begin(), mb.end())) {
      std::vector<int> z;
      for (int m : mb)
        if (m != y) z.push_back(m);
      if (ci.p_value(x, y, z) > alpha) {
        mb.erase(y);
        changed = true;
      }
    }
  }
  return mb;
}

// All index combinations of the pool, sizes 0..max_size, sizes ascending and
// members lexicographic within a size; fn returning true stops the scan.
inline bool for_each_subset(const std::vector<int>& pool, int max_size,
                            const std::function<bool(const std::vector<int>&)>& fn) {
  const int n = static_cast<int>(pool.size());
  for (int s = 0; s <= std::min(max_size, n); ++s) {
    std::vector<int> pick(static_cast<std::size_t>(s));
    std::function<bool(int, int)> rec = [&](int start, int depth) {
      if (depth == s) {
        std::vector<int> subset;
        for (int i : pick) subset.push_back(pool[static_cast<std::size_t>(i)]);
        return fn(subset);
      }
      for (int i = start; i < n; ++i) {
        pick[static_cast<std::size_t>(depth)] = i;
        if (rec(i + 1, depth + 1)) return true;
      }
      return false;
    };
    if (s == 0) {
      if (fn({})) return true;
    } else if (rec(0, 0)) {
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Grow-Shrink Markov blanket of one variable.
inline std::vector<std::string> grow_shrink_mb(const Dataset& d, const std::string& x,
                                               const LearnConfig& cfg) {
  cfg.validate();
  auto ci = make_ci_context(d, cfg);
  const auto it = std::lower_bound(ci.names.begin(), ci.names.end(), x);
  if (it == ci.names.end() || *it != x) throw ArgumentError("unknown variable '" + x + "'");
  const int xi = static_cast<int>(it - ci.names.begin());
  std::vector<std::string> out;
  for (int v : detail::grow_shrink_positions(ci, xi, cfg.alpha))
    out.push_back(ci.names[static_cast<std::size_t>(v)]);
  return out;
}

/// Grow-Shrink structure learning against an arbitrary conditional
/// independence oracle: blankets, symmetry by intersection, neighbour
/// identification by exhaustive small-separator search, v-structure
/// orientation, then orientation propagation.
inline Pdag gs_structure_with_test(const CiContext& ci, const LearnConfig& cfg,
                                   std::vector<std::string>* notes = nullptr) {
  cfg.validate();
  const int p = static_cast<int>(ci.names.size());
  auto note = [&](const std::string& s) {
    if (notes) notes->push_back(s);
  };

  std::vector<std::set<int>> mb(static_cast<std::size_t>(p));
  for (int x = 0; x < p; ++x) mb[static_cast<std::size_t>(x)] = detail::grow_shrink_positions(ci, x, cfg.alpha);
  // Symmetry by intersection.
  std::vector<std::set<int>> mbs(static_cast<std::size_t>(p));
  for (int x = 0; x < p; ++x)
    for (int y : mb[static_cast<std::size_t>(x)])
      if (mb[static_cast<std::size_t>(y)].count(x)) mbs[static_cast<std::size_t>(x)].insert(y);

  if (cfg.markov_network) {
    std::vector<Edge> edges;
    for (int x = 0; x < p; ++x)
      for (int y : mbs[static_cast<std::size_t>(x)])
        if (x < y)
          edges.push_back({ci.names[static_cast<std::size_t>(x)],
                           ci.names[static_cast<std::size_t>(y)], EdgeKind::undirected});
    return Pdag(ci.names, edges);
  }

  // Neighbour identification inside blankets: x and y stay adjacent when no
  // small subset of the smaller blanket residue separates them.
  std::set<std::pair<int, int>> adjacent;
  std::map<std::pair<int, int>, std::vector<int>> sepset;
  for (int x = 0; x < p; ++x)
    for (int y : mbs[static_cast<std::size_t>(x)]) {
      if (y <= x) continue;
      std::vector<int> tx, ty;
      for (int m : mbs[static_cast<std::size_t>(x)])
        if (m != y) tx.push_back(m);
      for (int m : mbs[static_cast<std::size_t>(y)])
        if (m != x) ty.push_back(m);
      const std::vector<int>& pool = ty.size() < tx.size() ? ty : tx;
      bool separated = detail::for_each_subset(pool, cfg.max_parents, [&](const std::vector<int>& s) {
        if (ci.p_value(x, y, s) > cfg.alpha) {
          sepset[{x, y}] = s;
          return true;
        }
        return false;
      });
      if (!separated) adjacent.insert({x, y});
    }

  // V-structure votes from unshielded triples whose separator excludes the middle.
  auto is_adjacent = [&](int a, int b) {
    return adjacent.count({std::min(a, b), std::max(a, b)}) > 0;
  };
  std::set<std::pair<int, int>> arcs_wanted;
  for (int z = 0; z < p; ++z)
    for (int x = 0; x < p; ++x)
      for (int y = x + 1; y < p; ++y) {
        if (x == z || y == z || !is_adjacent(x, z) || !is_adjacent(y, z) || is_adjacent(x, y))
          continue;
        std::vector<int> sep;
        auto it = sepset.find({x, y});
        if (it != sepset.end()) {
          sep = it->second;
        } else {
          for (int m : mbs[static_cast<std::size_t>(x)])
            if (m != y) sep.push_back(m);
        }
        if (std::find(sep.begin(), sep.end(), z) == sep.end()) {
          arcs_wanted.insert({x, z});
          arcs_wanted.insert({y, z});
        }
      }

  detail::PatternCells cells{p, std::vector<std::uint8_t>(static_cast<std::size_t>(p) * p, 0)};
  for (auto [x, y] : adjacent) {
    cells.set(x, y, 2);
    cells.set(y, x, 2);
  }
  for (auto [a, b] : arcs_wanted) {
    if (arcs_wanted.count({b, a})) {
      if (a < b)
        note("conflicting v-structure orientations at " + ci.names[static_cast<std::size_t>(a)] +
             " - " + ci.names[static_cast<std::size_t>(b)] + "; left undirected");
      continue;
    }
    if (!cells.orient(a, b))
      note("orientation " + ci.names[static_cast<std::size_t>(a)] + " -> " +
           ci.names[static_cast<std::size_t>(b)] + " skipped to keep the directed part acyclic");
  }
  detail::propagate_orientations(cells);
  return detail::pattern_to_pdag(ci.names, cells);
}

/// Grow-Shrink structure learning on data.
inline Pdag gs_structure(const Dataset& d, const LearnConfig& cfg,
                         std::vector<std::string>* notes = nullptr) {
  return gs_structure_with_test(make_ci_context(d, cfg), cfg, notes);
}

// Accepted hill-climbing moves must improve the score by more than this;
// the post-hoc local-optimum property is asserted against the same value.
inline constexpr double kHillClimbEps = 1e-6;

namespace detail {

struct HcMove {
  EdgeChange::Kind kind;
  int tail, head;

  std::string key(const std::vector<std::string>& names) const {
    static const char* kNames[] = {"add", "remove", "reverse"};
    return std::string(kNames[kind]) + "|" + names[static_cast<std::size_t>(tail)] + "|" +
           names[static_cast<std::size_t>(head)];
  }
  HcMove inverse() const {
    switch (kind) {
      case EdgeChange::add:
        return {EdgeChange::remove, tail, head};
      case EdgeChange::remove:
        return {EdgeChange::add, tail, head};
      default:
        return {EdgeChange::reverse, head, tail};
    }
  }
};

// Mutable working graph for the search; positions index name-sorted variables.
struct HcState {
  int p = 0;
  std::vector<std::set<int>> parents;

  bool has_arc(int t, int h) const { return parents[static_cast<std::size_t>(h)].count(t) > 0; }
  bool adjacent(int a, int b) const { return has_arc(a, b) || has_arc(b, a); }

  bool reaches(int from, int to, int skip_tail = -1, int skip_head = -1) const {
    std::vector<int> stack{from};
    std::vector<bool> seen(static_cast<std::size_t>(p), false);
    seen[static_cast<std::size_t>(from)] = true;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      if (v == to) return true;
      for (int c = 0; c < p; ++c)
        if (has_arc(v, c) && !(v == skip_tail && c == skip_head) && !seen[static_cast<std::size_t>(c)]) {
          seen[static_cast<std::size_t>(c)] = true;
          stack.push_back(c);
        }
    }
    return false;
  }

  void apply(const HcMove& m) {
    switch (m.kind) {
      case EdgeChange::add:
        parents[static_cast<std::size_t>(m.head)].insert(m.tail);
        break;
      case EdgeChange::remove:
        parents[static_cast<std::size_t>(m.head)].erase(m.tail);
        break;
      case EdgeChange::reverse:
        parents[static_cast<std::size_t>(m.head)].erase(m.tail);
        parents[static_cast<std::size_t>(m.tail)].insert(m.head);
        break;
    }
  }
};

struct HcEngine {
  const Dataset& d;
  const LearnConfig& cfg;
  std::vector<std::string> names;       // sorted
  std::vector<int> column;              // dataset column per position
  const std::set<std::pair<int, int>>* allowed = nullptr;  // superstructure, pairs a<b
  ScoreCache cache;

  explicit HcEngine(const Dataset& data, const LearnConfig& config) : d(data), cfg(config) {
    for (const auto& v : d.variables()) names.push_back(v.name);
    std::sort(names.begin(), names.end());
    for (const auto& nm : names) column.push_back(d.index_of(nm));
  }

  bool pair_allowed(int a, int b) const {
    if (!allowed) return true;
    return allowed->count({std::min(a, b), std::max(a, b)}) > 0;
  }

  double local(int pos, const std::set<int>& ps) {
    std::vector<int> cols;
    for (int q : ps) cols.push_back(column[static_cast<std::size_t>(q)]);
    return cache.local(d, column[static_cast<std::size_t>(pos)], cols, cfg.score, cfg.iss);
  }

  double move_delta(const HcState& s, const HcMove& m) {
    auto with = [](std::set<int> v, int x) {
      v.insert(x);
      return v;
    };
    auto without = [](std::set<int> v, int x) {
      v.erase(x);
      return v;
    };
    switch (m.kind) {
      case EdgeChange::add:
        return local(m.head, with(s.parents[static_cast<std::size_t>(m.head)], m.tail)) -
               local(m.head, s.parents[static_cast<std::size_t>(m.head)]);
      case EdgeChange::remove:
        return local(m.head, without(s.parents[static_cast<std::size_t>(m.head)], m.tail)) -
               local(m.head, s.parents[static_cast<std::size_t>(m.head)]);
      default: {
        double delta = local(m.head, without(s.parents[static_cast<std::size_t>(m.head)], m.tail)) -
                       local(m.head, s.parents[static_cast<std::size_t>(m.head)]);
        delta += local(m.tail, with(s.parents[static_cast<std::size_t>(m.tail)], m.head)) -
                 local(m.tail, s.parents[static_cast<std::size_t>(m.tail)]);
        return delta;
      }
    }
  }

  std::vector<HcMove> legal_moves(const HcState& s) const {
    std::vector<HcMove> out;
    const int p = s.p;
    for (int t = 0; t < p; ++t)
      for (int h = 0; h < p; ++h) {
        if (t == h) continue;
        if (s.has_arc(t, h)) {
          out.push_back({EdgeChange::remove, t, h});
          if (static_cast<int>(s.parents[static_cast<std::size_t>(t)].size()) < cfg.max_parents &&
              !s.reaches(t, h, t, h))
            out.push_back({EdgeChange::reverse, t, h});
        } else if (!s.adjacent(t, h) && pair_allowed(t, h)) {
          if (static_cast<int>(s.parents[static_cast<std::size_t>(h)].size()) < cfg.max_parents &&
              !s.reaches(h, t))
            out.push_back({EdgeChange::add, t, h});
        }
      }
    return out;
  }

  double total_score(const HcState& s) {
    double total = 0.0;
    for (int v = 0; v < s.p; ++v) total += local(v, s.parents[static_cast<std::size_t>(v)]);
    return total;
  }

  // Greedy ascent with an optional tabu list of recently inverted moves.
  double ascend(HcState& s) {
    std::deque<std::string> tabu;
    double total = total_score(s);
    const std::size_t max_steps = 200 + 40 * static_cast<std::size_t>(s.p) * s.p;
    for (std::size_t step = 0; step < max_steps; ++step) {
      bool have_best = false;
      HcMove best{};
      double best_delta = 0.0;
      std::string best_key;
      for (const auto& m : legal_moves(s)) {
        const std::string key = m.key(names);
        if (std::find(tabu.begin(), tabu.end(), key) != tabu.end()) continue;
        const double delta = move_delta(s, m);
        const bool better =
            !have_best || delta > best_delta + kHillClimbEps ||
            (std::fabs(delta - best_delta) <= kHillClimbEps && key < best_key);
        if (better) {
          have_best = true;
          best = m;
          best_delta = delta;
          best_key = key;
        }
      }
      if (!have_best || best_delta <= kHillClimbEps) break;
      s.apply(best);
      total += best_delta;
      if (cfg.tabu > 0) {
        tabu.push_back(best.inverse().key(names));
        while (static_cast<int>(tabu.size()) > cfg.tabu) tabu.pop_front();
      }
    }
    return total;
  }

  Dag to_dag(const HcState& s) const {
    std::vector<std::pair<std::string, std::string>> arcs;
    for (int h = 0; h < s.p; ++h)
      for (int t : s.parents[static_cast<std::size_t>(h)])
        arcs.emplace_back(names[static_cast<std::size_t>(t)], names[static_cast<std::size_t>(h)]);
    return Dag(names, arcs);
  }

  // Ascent from the empty graph, then seeded restarts from perturbed copies
  // of the incumbent; the winner is picked by score, then graph encoding.
  Dag search() {
    const int p = static_cast<int>(names.size());
    HcState state{p, std::vector<std::set<int>>(static_cast<std::size_t>(p))};
    double best_total = ascend(state);
    Dag best = to_dag(state);
    std::string best_code = best.encode();
    for (int r = 1; r <= cfg.restarts; ++r) {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));
      // best's node order is the same sorted name list, so positions align.
      HcState restart{p, std::vector<std::set<int>>(static_cast<std::size_t>(p))};
      for (int v = 0; v < p; ++v)
        for (int q : best.parents(v)) restart.parents[static_cast<std::size_t>(v)].insert(q);
      for (int k = 0; k < 2; ++k) {
        auto moves = legal_moves(restart);
        if (moves.empty()) break;
        restart.apply(moves[static_cast<std::size_t>(rng.next_below(moves.size()))]);
      }
      const double total = ascend(restart);
      Dag candidate = to_dag(restart);
      const std::string code = candidate.encode();
      if (total > best_total + kHillClimbEps ||
          (std::fabs(total - best_total) <= kHillClimbEps && code < best_code)) {
        best_total = total;
        best = std::move(candidate);
        best_code = code;
      }
    }
    return best;
  }
};

}  // namespace detail

/// Greedy score ascent over add/remove/reverse moves with deterministic
/// tie-breaking, optional tabu list, and seeded random restarts.
inline Dag hill_climb(const Dataset& d, const LearnConfig& cfg) {
  cfg.validate();
  if (!d.all_discrete() && !d.all_continuous())
    throw ArgumentError("hill climbing needs homogeneous variable kinds");
  detail::HcEngine engine(d, cfg);
  return engine.search();
}

/// Restrict-then-maximise: a Grow-Shrink skeleton bounds the moves of a
/// score-based hill climb.
inline Dag hybrid_learn(const Dataset& d, const LearnConfig& cfg,
                        std::vector<std::string>* notes = nullptr) {
  cfg.validate();
  if (!d.all_discrete() && !d.all_continuous())
    throw ArgumentError("hybrid learning needs homogeneous variable kinds");
  LearnConfig restrict_cfg = cfg;
  restrict_cfg.markov_network = false;
  const Pdag superstructure = gs_structure(d, restrict_cfg, notes);
  std::set<std::pair<int, int>> allowed;
  detail::HcEngine engine(d, cfg);
  for (const auto& e : superstructure.edges()) {
    const int a = static_cast<int>(std::lower_bound(engine.names.begin(), engine.names.end(), e.tail) -
                                   engine.names.begin());
    const int b = static_cast<int>(std::lower_bound(engine.names.begin(), engine.names.end(), e.head) -
                                   engine.names.begin());
    allowed.insert({std::min(a, b), std::max(a, b)});
  }
  engine.allowed = &allowed;
  return engine.search();
}

}  // namespace pgm
