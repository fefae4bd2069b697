#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pgm/common.hpp"
#include "pgm/parallel.hpp"
#include "pgm/params.hpp"
#include "pgm/rng.hpp"

namespace pgm {

// Hard evidence clamps nodes to levels; soft evidence replaces whole local
// distributions (flattened row-major, one row per parent configuration).
struct Evidence {
  std::map<std::string, std::string> hard;
  std::map<std::string, std::vector<double>> soft;
};

struct QueryResult {
  std::vector<std::string> query;  // name-sorted
  std::vector<int> cards;
  std::vector<double> table;  // mixed radix over query, first variable most significant
  std::string method;
  long long samples = 0;              // samplers only
  long long accepted = 0;             // logic sampling survivors
  double effective_sample_size = 0.0; // likelihood weighting

  double at(const std::vector<int>& levels) const {
    long long idx = 0;
    for (std::size_t i = 0; i < cards.size(); ++i) idx = idx * cards[i] + levels[i];
    return table[static_cast<std::size_t>(idx)];
  }
};

/// New network with the named local distributions replaced; structure unchanged.
inline BayesianNetwork apply_soft_evidence(const BayesianNetwork& bn,
                                           const std::map<std::string, std::vector<double>>& soft) {
  if (soft.empty()) return bn;
  if (!bn.discrete()) throw ArgumentError("soft evidence needs a discrete network");
  BayesianNetwork out = bn;
  for (const auto& [name, table] : soft) {
    const int v = out.index_of(name);
    Cpt c = out.cpt(v);
    if (table.size() != c.p.size())
      throw ArgumentError("soft evidence for '" + name + "': expected " +
                          std::to_string(c.p.size()) + " probabilities, got " +
                          std::to_string(table.size()));
    for (long long row = 0; row < c.rows(); ++row) {
      double s = 0.0;
      for (int k = 0; k < c.cardinality; ++k) {
        const double x = table[static_cast<std::size_t>(row) * c.cardinality + k];
        if (x < 0.0 || x > 1.0)
          throw ArgumentError("soft evidence for '" + name + "': probability out of range");
        s += x;
      }
      if (std::fabs(s - 1.0) > 1e-12)
        throw ArgumentError("soft evidence for '" + name + "': row " + std::to_string(row) +
                            " does not sum to 1");
    }
    c.p = table;
    c.uniform_rows.clear();
    out.locals[static_cast<std::size_t>(v)] = std::move(c);
  }
  out.validate();
  return out;
}

namespace detail {

struct Factor {
  std::vector<int> vars;   // bn node indices, ascending
  std::vector<int> cards;
  std::vector<double> t;   // mixed radix, first var most significant

  double at(const std::vector<int>& full_assignment) const {
    long long idx = 0;
    for (std::size_t i = 0; i < vars.size(); ++i)
      idx = idx * cards[i] + full_assignment[static_cast<std::size_t>(vars[i])];
    return t[static_cast<std::size_t>(idx)];
  }
};

inline Factor factor_of_node(const BayesianNetwork& bn, int v) {
  const Cpt& c = bn.cpt(v);
  Factor f;
  f.vars.push_back(v);
  for (const auto& pn : c.parents) f.vars.push_back(bn.index_of(pn));
  std::sort(f.vars.begin(), f.vars.end());
  for (int u : f.vars) f.cards.push_back(bn.variables[static_cast<std::size_t>(u)].cardinality());
  long long size = 1;
  for (int card : f.cards) size *= card;
  f.t.resize(static_cast<std::size_t>(size));
  std::vector<int> levels(f.vars.size(), 0);
  for (long long idx = 0; idx < size; ++idx) {
    std::vector<int> pl;
    pl.reserve(c.parents.size());
    int own = 0;
    for (std::size_t i = 0; i < f.vars.size(); ++i)
      if (f.vars[i] == v) own = levels[i];
    for (const auto& pn : c.parents) {
      const int pv = bn.index_of(pn);
      for (std::size_t i = 0; i < f.vars.size(); ++i)
        if (f.vars[i] == pv) pl.push_back(levels[i]);
    }
    f.t[static_cast<std::size_t>(idx)] = c.at(c.row_of(pl), own);
    for (std::size_t i = f.vars.size(); i-- > 0;) {
      if (++levels[i] < f.cards[i]) break;
      levels[i] = 0;
    }
  }
  return f;
}

inline Factor reduce_factor(const Factor& f, int var, int level) {
  auto pos = std::find(f.vars.begin(), f.vars.end(), var);
  if (pos == f.vars.end()) return f;
  const std::size_t k = static_cast<std::size_t>(pos - f.vars.begin());
  Factor g;
  for (std::size_t i = 0; i < f.vars.size(); ++i)
    if (i != k) {
      g.vars.push_back(f.vars[i]);
      g.cards.push_back(f.cards[i]);
    }
  long long size = 1;
  for (int card : g.cards) size *= card;
  g.t.resize(static_cast<std::size_t>(size));
  std::vector<int> levels(f.vars.size(), 0);
  levels[k] = level;
  for (long long out = 0; out < size; ++out) {
    long long rem = out;
    for (std::size_t i = g.vars.size(); i-- > 0;) {
      const std::size_t src = i < k ? i : i + 1;
      levels[src] = static_cast<int>(rem % g.cards[i]);
      rem /= g.cards[i];
    }
    long long idx = 0;
    for (std::size_t i = 0; i < f.vars.size(); ++i) idx = idx * f.cards[i] + levels[i];
    g.t[static_cast<std::size_t>(out)] = f.t[static_cast<std::size_t>(idx)];
  }
  return g;
}

inline Factor multiply_factors(const Factor& a, const Factor& b) {
  Factor g;
  g.vars = a.vars;
  for (std::size_t i = 0; i < b.vars.size(); ++i)
    if (std::find(g.vars.begin(), g.vars.end(), b.vars[i]) == g.vars.end())
      g.vars.push_back(b.vars[i]);
  std::sort(g.vars.begin(), g.vars.end());
  std::map<int, int> card_of;
  for (std::size_t i = 0; i < a.vars.size(); ++i) card_of[a.vars[i]] = a.cards[i];
  for (std::size_t i = 0; i < b.vars.size(); ++i) card_of[b.vars[i]] = b.cards[i];
  long long size = 1;
  for (int v : g.vars) {
    g.cards.push_back(card_of[v]);
    size *= g.cards.back();
  }
  g.t.resize(static_cast<std::size_t>(size));
  std::vector<int> levels(g.vars.size(), 0);
  auto index_into = [&](const Factor& f) {
    long long idx = 0;
    for (std::size_t i = 0; i < f.vars.size(); ++i) {
      const std::size_t gi = static_cast<std::size_t>(
          std::find(g.vars.begin(), g.vars.end(), f.vars[i]) - g.vars.begin());
      idx = idx * f.cards[i] + levels[gi];
    }
    return idx;
  };
  for (long long out = 0; out < size; ++out) {
    g.t[static_cast<std::size_t>(out)] =
        a.t[static_cast<std::size_t>(index_into(a))] * b.t[static_cast<std::size_t>(index_into(b))];
    for (std::size_t i = g.vars.size(); i-- > 0;) {
      if (++levels[i] < g.cards[i]) break;
      levels[i] = 0;
    }
  }
  return g;
}

inline Factor sum_out(const Factor& f, int var) {
  auto pos = std::find(f.vars.begin(), f.vars.end(), var);
  if (pos == f.vars.end()) return f;
  const std::size_t k = static_cast<std::size_t>(pos - f.vars.begin());
  Factor g;
  for (std::size_t i = 0; i < f.vars.size(); ++i)
    if (i != k) {
      g.vars.push_back(f.vars[i]);
      g.cards.push_back(f.cards[i]);
    }
  long long size = 1;
  for (int card : g.cards) size *= card;
  g.t.assign(static_cast<std::size_t>(size), 0.0);
  std::vector<int> levels(f.vars.size(), 0);
  const long long fsize = static_cast<long long>(f.t.size());
  for (long long idx = 0; idx < fsize; ++idx) {
    long long out = 0;
    for (std::size_t i = 0; i < f.vars.size(); ++i)
      if (i != k) out = out * f.cards[i] + levels[i];
    g.t[static_cast<std::size_t>(out)] += f.t[static_cast<std::size_t>(idx)];
    for (std::size_t i = f.vars.size(); i-- > 0;) {
      if (++levels[i] < f.cards[i]) break;
      levels[i] = 0;
    }
  }
  return g;
}

inline std::map<int, int> resolve_hard(const BayesianNetwork& bn, const Evidence& ev) {
  std::map<int, int> hard;
  for (const auto& [name, label] : ev.hard) {
    if (ev.soft.count(name))
      throw ArgumentError("node '" + name + "' carries both hard and soft evidence");
    const int v = bn.index_of(name);
    hard[v] = bn.variables[static_cast<std::size_t>(v)].level_index(label);
  }
  return hard;
}

inline std::vector<int> resolve_query(const BayesianNetwork& bn, const std::vector<std::string>& query) {
  if (query.empty()) throw ArgumentError("query set must be non-empty");
  std::set<int> q;
  for (const auto& nm : query)
    if (!q.insert(bn.index_of(nm)).second) throw ArgumentError("query names '" + nm + "' twice");
  return std::vector<int>(q.begin(), q.end());
}

// Exact conditional query; elimination order is min-degree on the interaction
// graph of the reduced factors unless an explicit order is supplied.
inline QueryResult variable_elimination_impl(const BayesianNetwork& bn,
                                             const std::vector<std::string>& query, const Evidence& ev,
                                             const std::vector<std::string>* forced_order) {
  if (!bn.discrete()) throw ArgumentError("variable elimination needs a discrete network");
  const BayesianNetwork net = apply_soft_evidence(bn, ev.soft);
  const auto hard = resolve_hard(net, ev);
  const auto qvars = resolve_query(net, query);

  std::vector<Factor> factors;
  for (int v = 0; v < net.dag.size(); ++v) {
    Factor f = factor_of_node(net, v);
    for (const auto& [hv, lvl] : hard) f = reduce_factor(f, hv, lvl);
    factors.push_back(std::move(f));
  }

  std::set<int> keep(qvars.begin(), qvars.end());
  std::vector<int> to_eliminate;
  for (int v = 0; v < net.dag.size(); ++v)
    if (!keep.count(v) && !hard.count(v)) to_eliminate.push_back(v);

  if (forced_order) {
    std::vector<int> order;
    for (const auto& nm : *forced_order) {
      const int v = net.index_of(nm);
      if (std::find(to_eliminate.begin(), to_eliminate.end(), v) == to_eliminate.end())
        throw ArgumentError("forced elimination order names '" + nm + "' which is not eliminable");
      order.push_back(v);
    }
    if (order.size() != to_eliminate.size())
      throw ArgumentError("forced elimination order is incomplete");
    to_eliminate = order;
  }

  auto eliminate_one = [&](int v) {
    Factor product;
    bool have = false;
    std::vector<Factor> rest;
    for (auto& f : factors) {
      if (std::find(f.vars.begin(), f.vars.end(), v) != f.vars.end()) {
        product = have ? multiply_factors(product, f) : f;
        have = true;
      } else {
        rest.push_back(std::move(f));
      }
    }
    if (have) rest.push_back(sum_out(product, v));
    factors = std::move(rest);
  };

  if (forced_order) {
    for (int v : to_eliminate) eliminate_one(v);
  } else {
    std::set<int> pending(to_eliminate.begin(), to_eliminate.end());
    while (!pending.empty()) {
      // Min-degree on the current interaction graph, ties by name (= index).
      int best = -1;
      std::size_t best_deg = 0;
      for (int v : pending) {
        std::set<int> nb;
        for (const auto& f : factors)
          if (std::find(f.vars.begin(), f.vars.end(), v) != f.vars.end())
            nb.insert(f.vars.begin(), f.vars.end());
        nb.erase(v);
        if (best == -1 || nb.size() < best_deg) {
          best = v;
          best_deg = nb.size();
        }
      }
      eliminate_one(best);
      pending.erase(best);
    }
  }

  Factor joint;
  joint.t = {1.0};
  for (const auto& f : factors) joint = multiply_factors(joint, f);
  double total = 0.0;
  for (double x : joint.t) total += x;
  if (total <= 0.0) throw EvidenceError("evidence has probability zero");

  QueryResult res;
  res.method = "ve";
  for (int v : qvars) {
    res.query.push_back(net.dag.name(v));
    res.cards.push_back(net.variables[static_cast<std::size_t>(v)].cardinality());
  }
  long long size = 1;
  for (int c : res.cards) size *= c;
  res.table.assign(static_cast<std::size_t>(size), 0.0);
  std::vector<int> levels(qvars.size(), 0);
  for (long long idx = 0; idx < size; ++idx) {
    bool consistent = true;
    for (std::size_t i = 0; i < qvars.size(); ++i) {
      auto it = hard.find(qvars[i]);
      if (it != hard.end() && it->second != levels[i]) consistent = false;
    }
    if (consistent) {
      long long jidx = 0;
      for (std::size_t i = 0; i < joint.vars.size(); ++i) {
        const std::size_t qi = static_cast<std::size_t>(
            std::find(qvars.begin(), qvars.end(), joint.vars[i]) - qvars.begin());
        jidx = jidx * joint.cards[i] + levels[qi];
      }
      res.table[static_cast<std::size_t>(idx)] = joint.t[static_cast<std::size_t>(jidx)] / total;
    }
    for (std::size_t i = qvars.size(); i-- > 0;) {
      if (++levels[i] < res.cards[i]) break;
      levels[i] = 0;
    }
  }
  return res;
}

// Sample chunking shared by both samplers: chunk c draws from substream
// derive_seed(seed, c), and chunk results merge in index order, so estimates
// do not depend on the worker count.
inline constexpr long long kSampleChunk = 8192;

struct SampleLayout {
  std::vector<int> topo;          // node indices in topological order
  std::vector<int> qvars;         // query node indices (ascending)
  std::vector<int> qcards;
  long long qsize = 1;

  long long query_index(const std::vector<int>& assignment) const {
    long long idx = 0;
    for (std::size_t i = 0; i < qvars.size(); ++i)
      idx = idx * qcards[i] + assignment[static_cast<std::size_t>(qvars[i])];
    return idx;
  }
};

inline SampleLayout sample_layout(const BayesianNetwork& bn, const std::vector<int>& qvars) {
  SampleLayout lay;
  for (const auto& nm : topological_order(bn.dag)) lay.topo.push_back(bn.index_of(nm));
  lay.qvars = qvars;
  for (int v : qvars) {
    lay.qcards.push_back(bn.variables[static_cast<std::size_t>(v)].cardinality());
    lay.qsize *= lay.qcards.back();
  }
  return lay;
}

inline int sample_level(const Cpt& c, long long row, Rng& rng) {
  const double u = rng.next_unit();
  double acc = 0.0;
  for (int k = 0; k < c.cardinality; ++k) {
    acc += c.at(row, k);
    if (u < acc) return k;
  }
  return c.cardinality - 1;
}

}  // namespace detail

/// Exact conditional probability of the query nodes given the evidence.
inline QueryResult variable_elimination(const BayesianNetwork& bn,
                                        const std::vector<std::string>& query,
                                        const Evidence& ev = {}) {
  return detail::variable_elimination_impl(bn, query, ev, nullptr);
}

/// Forward sampling with rejection of draws that contradict the hard
/// evidence.  Fails when nothing survives.
inline QueryResult logic_sampling(const BayesianNetwork& bn, const std::vector<std::string>& query,
                                  const Evidence& ev, long long n_samples, std::uint64_t seed) {
  if (!bn.discrete()) throw ArgumentError("logic sampling needs a discrete network");
  if (n_samples < 1) throw ArgumentError("sample count must be at least 1");
  const BayesianNetwork net = apply_soft_evidence(bn, ev.soft);
  const auto hard = detail::resolve_hard(net, ev);
  const auto qvars = detail::resolve_query(net, query);
  const auto lay = detail::sample_layout(net, qvars);

  const long long chunks = (n_samples + detail::kSampleChunk - 1) / detail::kSampleChunk;
  std::vector<std::vector<long long>> counts(static_cast<std::size_t>(chunks));
  std::vector<long long> survivors(static_cast<std::size_t>(chunks), 0);
  run_indexed(static_cast<std::size_t>(chunks), [&](std::size_t c) {
    Rng rng(derive_seed(seed, c));
    const long long take =
        std::min(detail::kSampleChunk, n_samples - static_cast<long long>(c) * detail::kSampleChunk);
    std::vector<long long> local(static_cast<std::size_t>(lay.qsize), 0);
    std::vector<int> assignment(static_cast<std::size_t>(net.dag.size()), 0);
    for (long long s = 0; s < take; ++s) {
      bool ok = true;
      for (int v : lay.topo) {
        const Cpt& cp = net.cpt(v);
        std::vector<int> pl;
        pl.reserve(cp.parents.size());
        for (const auto& pn : cp.parents)
          pl.push_back(assignment[static_cast<std::size_t>(net.index_of(pn))]);
        const int drawn = detail::sample_level(cp, cp.row_of(pl), rng);
        assignment[static_cast<std::size_t>(v)] = drawn;
        auto it = hard.find(v);
        if (it != hard.end() && it->second != drawn) {
          // Rejection at the first mismatch is part of the pinned stream.
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      ++survivors[c];
      ++local[static_cast<std::size_t>(lay.query_index(assignment))];
    }
    counts[c] = std::move(local);
  });

  long long accepted = 0;
  std::vector<long long> total(static_cast<std::size_t>(lay.qsize), 0);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    accepted += survivors[c];
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += counts[c][i];
  }
  if (accepted == 0)
    throw SamplingError("no sample matched the evidence; raise the sample count or use "
                        "likelihood weighting");
  QueryResult res;
  res.method = "logic-sampling";
  res.samples = n_samples;
  res.accepted = accepted;
  for (int v : qvars) {
    res.query.push_back(net.dag.name(v));
    res.cards.push_back(net.variables[static_cast<std::size_t>(v)].cardinality());
  }
  res.table.resize(static_cast<std::size_t>(lay.qsize));
  for (std::size_t i = 0; i < res.table.size(); ++i)
    res.table[i] = double(total[i]) / double(accepted);
  return res;
}

/// Importance sampling with evidence nodes clamped and draws weighted by the
/// evidence likelihood; reports the effective sample size (sum w)^2 / sum w^2.
inline QueryResult likelihood_weighting(const BayesianNetwork& bn,
                                        const std::vector<std::string>& query, const Evidence& ev,
                                        long long n_samples, std::uint64_t seed) {
  if (!bn.discrete()) throw ArgumentError("likelihood weighting needs a discrete network");
  if (n_samples < 1) throw ArgumentError("sample count must be at least 1");
  const BayesianNetwork net = apply_soft_evidence(bn, ev.soft);
  const auto hard = detail::resolve_hard(net, ev);
  const auto qvars = detail::resolve_query(net, query);
  const auto lay = detail::sample_layout(net, qvars);

  const long long chunks = (n_samples + detail::kSampleChunk - 1) / detail::kSampleChunk;
  std::vector<std::vector<double>> wsums(static_cast<std::size_t>(chunks));
  std::vector<double> wtot(static_cast<std::size_t>(chunks), 0.0);
  std::vector<double> wtot2(static_cast<std::size_t>(chunks), 0.0);
  run_indexed(static_cast<std::size_t>(chunks), [&](std::size_t c) {
    Rng rng(derive_seed(seed, c));
    const long long take =
        std::min(detail::kSampleChunk, n_samples - static_cast<long long>(c) * detail::kSampleChunk);
    std::vector<double> local(static_cast<std::size_t>(lay.qsize), 0.0);
    std::vector<int> assignment(static_cast<std::size_t>(net.dag.size()), 0);
    for (long long s = 0; s < take; ++s) {
      double w = 1.0;
      for (int v : lay.topo) {
        const Cpt& cp = net.cpt(v);
        std::vector<int> pl;
        pl.reserve(cp.parents.size());
        for (const auto& pn : cp.parents)
          pl.push_back(assignment[static_cast<std::size_t>(net.index_of(pn))]);
        const long long row = cp.row_of(pl);
        auto it = hard.find(v);
        if (it != hard.end()) {
          assignment[static_cast<std::size_t>(v)] = it->second;
          w *= cp.at(row, it->second);
        } else {
          assignment[static_cast<std::size_t>(v)] = detail::sample_level(cp, row, rng);
        }
      }
      if (w <= 0.0) continue;
      local[static_cast<std::size_t>(lay.query_index(assignment))] += w;
      wtot[c] += w;
      wtot2[c] += w * w;
    }
    wsums[c] = std::move(local);
  });

  double sum_w = 0.0, sum_w2 = 0.0;
  std::vector<double> table(static_cast<std::size_t>(lay.qsize), 0.0);
  for (std::size_t c = 0; c < wsums.size(); ++c) {
    sum_w += wtot[c];
    sum_w2 += wtot2[c];
    for (std::size_t i = 0; i < table.size(); ++i) table[i] += wsums[c][i];
  }
  if (sum_w <= 0.0) throw EvidenceError("all sample weights are zero: evidence is inconsistent");
  QueryResult res;
  res.method = "likelihood-weighting";
  res.samples = n_samples;
  res.effective_sample_size = sum_w * sum_w / sum_w2;
  for (int v : qvars) {
    res.query.push_back(net.dag.name(v));
    res.cards.push_back(net.variables[static_cast<std::size_t>(v)].cardinality());
  }
  res.table.resize(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) res.table[i] = table[i] / sum_w;
  return res;
}

}  // namespace pgm
