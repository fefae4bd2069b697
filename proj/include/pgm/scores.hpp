#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "pgm/common.hpp"
#include "pgm/data.hpp"
#include "pgm/graph.hpp"
#include "pgm/matrix.hpp"
#include "pgm/regress.hpp"

namespace pgm {

// Larger is better for every kind; penalties are subtracted.
enum class ScoreKind { loglik, aic, bic, bdeu };

struct ScoreValue {
  double total = 0.0;
  std::map<std::string, double> per_node;
};

namespace detail {

// Maximised multinomial log-likelihood of node given parents, plus the free
// parameter count (levels - 1 per parent configuration).
inline double discrete_local_loglik(const Dataset& d, int node, const std::vector<int>& parents,
                                    long long* free_params) {
  const int card = d.variable(node).cardinality();
  std::vector<int> pcards;
  long long q = 1;
  for (int p : parents) {
    pcards.push_back(d.variable(p).cardinality());
    q *= pcards.back();
  }
  std::vector<long long> counts(static_cast<std::size_t>(q) * card, 0);
  for (long long r = 0; r < d.n(); ++r) {
    long long row = 0;
    for (std::size_t i = 0; i < parents.size(); ++i) row = row * pcards[i] + d.level(r, parents[i]);
    ++counts[static_cast<std::size_t>(row) * card + d.level(r, node)];
  }
  double ll = 0.0;
  for (long long row = 0; row < q; ++row) {
    long long nrow = 0;
    for (int k = 0; k < card; ++k) nrow += counts[static_cast<std::size_t>(row) * card + k];
    if (nrow == 0) continue;
    for (int k = 0; k < card; ++k) {
      const long long c = counts[static_cast<std::size_t>(row) * card + k];
      if (c > 0) ll += double(c) * std::log(double(c) / double(nrow));
    }
  }
  if (free_params) *free_params = static_cast<long long>(card - 1) * q;
  return ll;
}

// Maximised Gaussian log-likelihood of node regressed on parents; the
// variance plugged in is the maximum-likelihood one (rss / n).
inline double gaussian_local_loglik(const Dataset& d, int node, const std::vector<int>& parents,
                                    long long* free_params) {
  const long long n = d.n();
  const int k = static_cast<int>(parents.size());
  if (n <= k + 1) throw ArgumentError("too few rows to score '" + d.variable(node).name + "'");
  const detail::LeastSquares ls = detail::least_squares(d, node, parents);
  const double sigma2 = std::max(ls.rss / double(n), 1e-300);
  if (free_params) *free_params = k + 2;  // intercept, coefficients, variance
  return -0.5 * double(n) * (std::log(2.0 * M_PI * sigma2) + 1.0);
}

// Dirichlet-multinomial marginal log-likelihood with the imaginary sample
// size split uniformly: alpha_row = iss/q, alpha_cell = iss/(q*levels).
inline double bdeu_local(const Dataset& d, int node, const std::vector<int>& parents, double iss) {
  const int card = d.variable(node).cardinality();
  std::vector<int> pcards;
  long long q = 1;
  for (int p : parents) {
    pcards.push_back(d.variable(p).cardinality());
    q *= pcards.back();
  }
  std::vector<long long> counts(static_cast<std::size_t>(q) * card, 0);
  for (long long r = 0; r < d.n(); ++r) {
    long long row = 0;
    for (std::size_t i = 0; i < parents.size(); ++i) row = row * pcards[i] + d.level(r, parents[i]);
    ++counts[static_cast<std::size_t>(row) * card + d.level(r, node)];
  }
  const double alpha_row = iss / double(q);
  const double alpha_cell = alpha_row / double(card);
  double score = 0.0;
  for (long long row = 0; row < q; ++row) {
    long long nrow = 0;
    for (int k = 0; k < card; ++k) nrow += counts[static_cast<std::size_t>(row) * card + k];
    if (nrow == 0) continue;
    score += std::lgamma(alpha_row) - std::lgamma(alpha_row + double(nrow));
    for (int k = 0; k < card; ++k) {
      const long long c = counts[static_cast<std::size_t>(row) * card + k];
      if (c > 0) score += std::lgamma(alpha_cell + double(c)) - std::lgamma(alpha_cell);
    }
  }
  return score;
}

}  // namespace detail

/// Decomposed local score of one node with the given parent set (dataset
/// column indices).  This is the quantity the cache memoises.
inline double local_score(const Dataset& d, int node, std::vector<int> parents, ScoreKind kind,
                          double iss) {
  std::sort(parents.begin(), parents.end());
  const bool discrete = d.variable(node).kind == VarKind::discrete;
  for (int p : parents)
    if ((d.variable(p).kind == VarKind::discrete) != discrete)
      throw ArgumentError("mixed-kind families are not scoreable");
  if (kind == ScoreKind::bdeu) {
    if (!discrete) throw ArgumentError("bdeu requires discrete data");
    if (!(iss > 0.0)) throw ArgumentError("bdeu requires a positive imaginary sample size");
    return detail::bdeu_local(d, node, parents, iss);
  }
  long long k = 0;
  const double ll = discrete ? detail::discrete_local_loglik(d, node, parents, &k)
                             : detail::gaussian_local_loglik(d, node, parents, &k);
  switch (kind) {
    case ScoreKind::loglik:
      return ll;
    case ScoreKind::aic:
      return ll - double(k);
    case ScoreKind::bic:
      return ll - 0.5 * double(k) * std::log(double(d.n()));
    default:
      return ll;
  }
}

/// Network score with its per-node decomposition.
inline ScoreValue score(const Dataset& d, const Dag& g, ScoreKind kind, double iss = 1.0) {
  ScoreValue sv;
  for (int v = 0; v < g.size(); ++v) {
    const int node = d.index_of(g.name(v));
    std::vector<int> parents;
    for (int p : g.parents(v)) parents.push_back(d.index_of(g.name(p)));
    const double local = local_score(d, node, std::move(parents), kind, iss);
    sv.per_node[g.name(v)] = local;
    sv.total += local;
  }
  return sv;
}

// Memoised local scores keyed by (node, parent set).  Concurrent readers,
// exclusive writers; totals do not depend on who computed an entry first.
class ScoreCache {
 public:
  double local(const Dataset& d, int node, std::vector<int> parents, ScoreKind kind, double iss) {
    std::sort(parents.begin(), parents.end());
    const Key key{node, parents, static_cast<int>(kind), std::bit_cast<std::uint64_t>(iss)};
    {
      std::shared_lock lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    const double value = local_score(d, node, parents, kind, iss);
    std::unique_lock lock(mu_);
    cache_.emplace(key, value);
    return value;
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return cache_.size();
  }

 private:
  struct Key {
    int node;
    std::vector<int> parents;
    int kind;
    std::uint64_t iss_bits;
    bool operator<(const Key& o) const {
      return std::tie(node, parents, kind, iss_bits) < std::tie(o.node, o.parents, o.kind, o.iss_bits);
    }
  };
  mutable std::shared_mutex mu_;
  std::map<Key, double> cache_;
};

struct EdgeChange {
  enum Kind { add, remove, reverse } kind = add;
  std::string tail;
  std::string head;
};

namespace detail {

inline bool dag_has_path(const Dag& g, int from, int to, int skip_tail = -1, int skip_head = -1) {
  std::vector<int> stack{from};
  std::vector<bool> seen(static_cast<std::size_t>(g.size()), false);
  seen[static_cast<std::size_t>(from)] = true;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    for (int c : g.children(v)) {
      if (v == skip_tail && c == skip_head) continue;
      if (!seen[static_cast<std::size_t>(c)]) {
        seen[static_cast<std::size_t>(c)] = true;
        stack.push_back(c);
      }
    }
  }
  return false;
}

}  // namespace detail

/// score(changed graph) - score(g), recomputing only the affected per-node
/// terms.  The change must keep the graph acyclic.
inline double score_delta(const Dataset& d, const Dag& g, const EdgeChange& change, ScoreKind kind,
                          double iss, ScoreCache& cache) {
  const int t = g.index_of(change.tail);
  const int h = g.index_of(change.head);
  if (t == h) throw ArgumentError("edge change with identical endpoints");
  auto parents_of = [&](int v) {
    std::vector<int> ps;
    for (int p : g.parents(v)) ps.push_back(d.index_of(g.name(p)));
    return ps;
  };
  const int dt = d.index_of(change.tail);
  const int dh = d.index_of(change.head);
  auto with = [](std::vector<int> v, int x) {
    v.push_back(x);
    return v;
  };
  auto without = [](std::vector<int> v, int x) {
    v.erase(std::find(v.begin(), v.end(), x));
    return v;
  };
  switch (change.kind) {
    case EdgeChange::add: {
      if (g.adjacent(t, h)) throw StructureError("edge already present");
      if (detail::dag_has_path(g, h, t))
        throw StructureError("adding " + change.tail + " -> " + change.head + " creates a cycle");
      const auto old_ps = parents_of(h);
      return cache.local(d, dh, with(old_ps, dt), kind, iss) - cache.local(d, dh, old_ps, kind, iss);
    }
    case EdgeChange::remove: {
      if (!g.has_arc(t, h)) throw StructureError("no such arc to remove");
      const auto old_ps = parents_of(h);
      return cache.local(d, dh, without(old_ps, dt), kind, iss) - cache.local(d, dh, old_ps, kind, iss);
    }
    case EdgeChange::reverse: {
      if (!g.has_arc(t, h)) throw StructureError("no such arc to reverse");
      if (detail::dag_has_path(g, t, h, t, h))
        throw StructureError("reversing " + change.tail + " -> " + change.head + " creates a cycle");
      const auto old_h = parents_of(h);
      const auto old_t = parents_of(t);
      double delta = cache.local(d, dh, without(old_h, dt), kind, iss) -
                     cache.local(d, dh, old_h, kind, iss);
      delta += cache.local(d, dt, with(old_t, dh), kind, iss) - cache.local(d, dt, old_t, kind, iss);
      return delta;
    }
  }
  throw ArgumentError("unknown edge change");
}

}  // namespace pgm
