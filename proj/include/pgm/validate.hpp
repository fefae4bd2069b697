#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pgm/common.hpp"
#include "pgm/infer.hpp"
#include "pgm/learn.hpp"
#include "pgm/parallel.hpp"
#include "pgm/params.hpp"
#include "pgm/rng.hpp"

namespace pgm {

// Which learner a resampling procedure runs.
struct LearnerSpec {
  Algo algo = Algo::hc;
  LearnConfig config;

  MixedGraph learn(const Dataset& d) const {
    switch (algo) {
      case Algo::gs:
        return gs_structure(d, config);
      case Algo::hc:
        return hill_climb(d, config);
      default:
        return hybrid_learn(d, config);
    }
  }

  /// A DAG for parameter fitting: hill-climbing output directly, otherwise a
  /// consistent extension of the learned pattern.
  Dag learn_dag(const Dataset& d) const {
    if (algo == Algo::gs) return pdag_extension(Pdag(gs_structure(d, config)));
    return algo == Algo::hc ? hill_climb(d, config) : hybrid_learn(d, config);
  }
};

struct EdgeConfidence {
  long long requested = 0;
  long long successful = 0;
  long long failed = 0;
  // Directed frequencies per ordered pair and adjacency frequencies per
  // unordered pair (first name < second); pairs never seen are absent.
  std::map<std::pair<std::string, std::string>, double> directed;
  std::map<std::pair<std::string, std::string>, double> skeleton;

  double directed_frequency(const std::string& a, const std::string& b) const {
    auto it = directed.find({a, b});
    return it == directed.end() ? 0.0 : it->second;
  }
  double skeleton_frequency(std::string a, std::string b) const {
    if (b < a) std::swap(a, b);
    auto it = skeleton.find({a, b});
    return it == skeleton.end() ? 0.0 : it->second;
  }
};

/// Structural confidence by nonparametric bootstrap: the learner runs on R
/// resamples (size n, with replacement, substream derive_seed(seed, r)) and
/// each arc / adjacency is scored by its empirical frequency.  Undirected
/// edges of a learned pattern count toward adjacency only.
inline EdgeConfidence bootstrap_confidence(const Dataset& d, const LearnerSpec& learner,
                                           long long replicates, std::uint64_t seed) {
  if (replicates < 10) throw ArgumentError("bootstrap needs at least 10 replicates");
  const long long n = d.n();
  std::vector<std::optional<std::vector<Edge>>> results(static_cast<std::size_t>(replicates));
  run_indexed(static_cast<std::size_t>(replicates), [&](std::size_t r) {
    Rng rng(derive_seed(seed, r));
    std::vector<long long> rows(static_cast<std::size_t>(n));
    for (auto& x : rows) x = static_cast<long long>(rng.next_below(static_cast<std::uint64_t>(n)));
    try {
      results[r] = learner.learn(d.rows_subset(rows)).edges();
    } catch (const Error&) {
      results[r] = std::nullopt;  // replicate skipped, counted below
    }
  });

  EdgeConfidence out;
  out.requested = replicates;
  std::map<std::pair<std::string, std::string>, long long> arc_counts, adj_counts;
  for (const auto& edges : results) {
    if (!edges) {
      ++out.failed;
      continue;
    }
    ++out.successful;
    for (const auto& e : *edges) {
      auto a = e.tail, b = e.head;
      if (b < a) std::swap(a, b);
      ++adj_counts[{a, b}];
      if (e.kind == EdgeKind::directed) ++arc_counts[{e.tail, e.head}];
    }
  }
  if (out.failed * 5 > replicates)
    throw Error("bootstrap aborted: " + std::to_string(out.failed) + " of " +
                std::to_string(replicates) + " replicates failed");
  for (const auto& [pair, c] : arc_counts) out.directed[pair] = double(c) / double(out.successful);
  for (const auto& [pair, c] : adj_counts) out.skeleton[pair] = double(c) / double(out.successful);
  return out;
}

enum class LossKind { misclassification, rss };

struct CvResult {
  int folds = 0;
  std::vector<double> per_fold;
  double mean = 0.0;
  LossKind loss = LossKind::misclassification;
  long long fallback_predictions = 0;  // rows predicted from the prior
};

namespace detail {

// Most probable level of the target given its Markov-blanket values in the
// row; zero-probability evidence falls back to the unconditional prior.
inline int predict_level(const BayesianNetwork& bn, const Dataset& test, long long row, int target_col,
                         long long* fallbacks) {
  const std::string& target = test.variable(target_col).name;
  Evidence ev;
  for (const auto& nm : markov_blanket(bn.dag, target)) {
    const int col = test.index_of(nm);
    ev.hard[nm] = test.variable(col).levels[static_cast<std::size_t>(test.level(row, col))];
  }
  QueryResult q;
  try {
    q = variable_elimination(bn, {target}, ev);
  } catch (const EvidenceError&) {
    ++*fallbacks;
    q = variable_elimination(bn, {target}, {});
  }
  int best = 0;
  for (std::size_t k = 1; k < q.table.size(); ++k)
    if (q.table[k] > q.table[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  return best;
}

}  // namespace detail

/// Seed-shuffled K-fold cross-validation of predictive loss on one target:
/// misclassification via the Markov-blanket posterior for discrete targets,
/// residual sum of squares via the local regression mean for continuous ones.
inline CvResult cross_validate(const Dataset& d, const LearnerSpec& learner,
                               const std::string& target, int folds, LossKind loss,
                               std::uint64_t seed) {
  const long long n = d.n();
  if (folds < 2) throw ArgumentError("cross-validation needs at least two folds");
  if (folds > n) throw ArgumentError("more folds than rows");
  const int target_col = d.index_of(target);
  if (loss == LossKind::misclassification && d.variable(target_col).kind != VarKind::discrete)
    throw ArgumentError("misclassification loss needs a discrete target");
  if (loss == LossKind::rss && d.variable(target_col).kind != VarKind::continuous)
    throw ArgumentError("rss loss needs a continuous target");

  std::vector<long long> order(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(derive_seed(seed, 0));
  rng.shuffle(order);

  CvResult res;
  res.folds = folds;
  res.loss = loss;
  std::size_t cursor = 0;
  for (int f = 0; f < folds; ++f) {
    const long long size = n / folds + (f < n % folds ? 1 : 0);
    std::vector<long long> test_rows(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                     order.begin() + static_cast<std::ptrdiff_t>(cursor + size));
    std::vector<long long> train_rows;
    train_rows.reserve(static_cast<std::size_t>(n - size));
    for (std::size_t i = 0; i < order.size(); ++i)
      if (i < cursor || i >= cursor + size) train_rows.push_back(order[i]);
    cursor += static_cast<std::size_t>(size);

    const Dataset train = d.rows_subset(train_rows);
    const Dataset test = d.rows_subset(test_rows);
    const Dag dag = learner.learn_dag(train);
    const BayesianNetwork bn = fit_network(train, dag, learner.config.iss);

    double fold_loss = 0.0;
    if (loss == LossKind::misclassification) {
      long long wrong = 0;
      for (long long r = 0; r < test.n(); ++r)
        if (detail::predict_level(bn, test, r, target_col, &res.fallback_predictions) !=
            test.level(r, target_col))
          ++wrong;
      fold_loss = double(wrong) / double(test.n());
    } else {
      const GaussianLocal& gl = bn.gaussian(bn.index_of(target));
      for (long long r = 0; r < test.n(); ++r) {
        std::vector<double> pv;
        pv.reserve(gl.parents.size());
        for (const auto& pn : gl.parents) pv.push_back(test.value(r, test.index_of(pn)));
        const double e = test.value(r, target_col) - gl.mean(pv);
        fold_loss += e * e;
      }
    }
    res.per_fold.push_back(fold_loss);
  }
  for (double x : res.per_fold) res.mean += x;
  res.mean /= double(res.per_fold.size());
  return res;
}

}  // namespace pgm
