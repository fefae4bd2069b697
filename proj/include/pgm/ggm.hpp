#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "pgm/common.hpp"
#include "pgm/data.hpp"
#include "pgm/graph.hpp"
#include "pgm/mathfn.hpp"
#include "pgm/matrix.hpp"

namespace pgm {

struct ShrinkageEstimate {
  std::vector<std::string> names;
  Matrix correlation;  // lambda * I + (1 - lambda) * R
  double lambda = 0.0;
};

/// Shrinkage correlation estimator with the identity target.  The intensity is
///   lambda = clamp( sum var(r_ij) / sum r_ij^2 , 0, 1 )   over i != j,
/// with var(r_ij) estimated from the spread of the standardised products
/// w_k = x*_ki x*_kj as n/(n-1)^3 * sum_k (w_k - mean(w))^2.  An all-zero
/// denominator yields lambda = 1 (full shrinkage).
inline ShrinkageEstimate shrink_correlation(const Dataset& d) {
  if (!d.all_continuous()) throw ArgumentError("shrink_correlation requires all-continuous data");
  const long long n = d.n();
  const int p = d.var_count();
  if (n < 3) throw ArgumentError("shrink_correlation requires at least three rows");
  if (p < 2) throw ArgumentError("shrink_correlation requires at least two variables");

  std::vector<std::vector<double>> std_cols(static_cast<std::size_t>(p));
  ShrinkageEstimate est;
  for (int v = 0; v < p; ++v) {
    est.names.push_back(d.variable(v).name);
    const auto& col = d.continuous_column(v);
    double mean = 0.0;
    for (double x : col) mean += x;
    mean /= double(n);
    double var = 0.0;
    for (double x : col) var += (x - mean) * (x - mean);
    var /= double(n - 1);
    if (var <= 0.0) throw NumericError("variable '" + d.variable(v).name + "' has zero variance");
    const double sd = std::sqrt(var);
    auto& sc = std_cols[static_cast<std::size_t>(v)];
    sc.resize(static_cast<std::size_t>(n));
    for (long long r = 0; r < n; ++r)
      sc[static_cast<std::size_t>(r)] = (col[static_cast<std::size_t>(r)] - mean) / sd;
  }

  Matrix raw(static_cast<std::size_t>(p), static_cast<std::size_t>(p));
  for (int v = 0; v < p; ++v) raw(static_cast<std::size_t>(v), static_cast<std::size_t>(v)) = 1.0;
  double var_sum = 0.0, sq_sum = 0.0;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      double wbar = 0.0;
      for (long long r = 0; r < n; ++r)
        wbar += std_cols[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)] *
                std_cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
      wbar /= double(n);
      const double rij = double(n) / double(n - 1) * wbar;
      double spread = 0.0;
      for (long long r = 0; r < n; ++r) {
        const double w = std_cols[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)] *
                         std_cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
        spread += (w - wbar) * (w - wbar);
      }
      var_sum += double(n) / (double(n - 1) * double(n - 1) * double(n - 1)) * spread;
      sq_sum += rij * rij;
      raw(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = rij;
      raw(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) = rij;
    }
  est.lambda = sq_sum == 0.0 ? 1.0 : std::clamp(var_sum / sq_sum, 0.0, 1.0);
  est.correlation = Matrix(static_cast<std::size_t>(p), static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      est.correlation(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          (i == j) ? 1.0
                   : (1.0 - est.lambda) * raw(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return est;
}

/// Partial correlations by inversion and standardisation of a positive
/// definite matrix: -w_ij / sqrt(w_ii w_jj), unit diagonal.  The
/// standardisation makes the result invariant under diagonal rescaling, so
/// covariance-shaped input gives the same answer as its correlation form.
inline Matrix partial_correlations(const Matrix& c) {
  const std::size_t p = c.rows();
  if (p != c.cols()) throw ArgumentError("partial_correlations: matrix not square");
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      if (std::fabs(c(i, j) - c(j, i)) > 1e-9)
        throw ArgumentError("partial_correlations: matrix not symmetric");
  const Matrix omega = spd_inverse(c);
  Matrix pc(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    pc(i, i) = 1.0;
    for (std::size_t j = i + 1; j < p; ++j) {
      const double v = -omega(i, j) / std::sqrt(omega(i, i) * omega(j, j));
      pc(i, j) = pc(j, i) = v;
    }
  }
  return pc;
}

/// Marginal-correlation graph: link i-j iff |c_ij| >= threshold.
inline UGraph relevance_network(const Matrix& c, const std::vector<std::string>& labels,
                                double threshold) {
  if (labels.size() != c.rows() || c.rows() != c.cols())
    throw ArgumentError("relevance_network: labels and matrix disagree");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ArgumentError("relevance_network: threshold must lie in (0,1)");
  std::vector<std::pair<std::string, std::string>> links;
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = i + 1; j < c.rows(); ++j)
      if (std::fabs(c(i, j)) >= threshold) links.emplace_back(labels[i], labels[j]);
  return UGraph(labels, links);
}

enum class GgmSelectMethod { threshold, fdr };

struct GgmResult {
  std::vector<std::string> names;
  Matrix pcor;
  std::vector<std::pair<std::string, std::string>> edges;  // lexicographic pairs
  std::map<std::pair<std::string, std::string>, double> p_values;  // fdr only
  std::map<std::pair<std::string, std::string>, double> q_values;  // fdr only
  bool approximate_transform = false;  // conditioning size clamped because n <= p
};

/// Edge selection on a partial-correlation matrix: a plain magnitude
/// threshold, or per-pair Fisher-Z tests with conditioning size p-2 followed
/// by Benjamini-Hochberg step-up at level q.
inline GgmResult ggm_select(const Matrix& pcor, long long n, GgmSelectMethod method, double level,
                            const std::vector<std::string>& labels) {
  const std::size_t p = pcor.rows();
  if (labels.size() != p || p != pcor.cols())
    throw ArgumentError("ggm_select: labels and matrix disagree");
  if (!(level > 0.0 && level <= 1.0)) throw ArgumentError("ggm_select: level must lie in (0,1]");
  GgmResult res;
  res.names = labels;
  res.pcor = pcor;

  if (method == GgmSelectMethod::threshold) {
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j)
        if (std::fabs(pcor(i, j)) >= level) res.edges.emplace_back(labels[i], labels[j]);
    std::sort(res.edges.begin(), res.edges.end());
    return res;
  }

  double dof = double(n) - (double(p) - 2.0) - 3.0;
  if (dof < 1.0) {
    dof = 1.0;
    res.approximate_transform = true;
  }
  struct Pair {
    std::size_t i, j;
    double p_value;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) {
      double r = pcor(i, j);
      double pv;
      if (std::fabs(r) >= 1.0 - 1e-15) {
        pv = 0.0;
      } else {
        pv = normal_two_sided_p(std::sqrt(dof) * std::atanh(r));
      }
      pairs.push_back({i, j, pv});
      res.p_values[{labels[i], labels[j]}] = pv;
    }
  // Benjamini-Hochberg step-up.
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pairs[a].p_value < pairs[b].p_value; });
  const double m = double(pairs.size());
  std::size_t reject_upto = 0;  // count of rejected hypotheses in sorted order
  for (std::size_t k = 0; k < order.size(); ++k)
    if (pairs[order[k]].p_value <= double(k + 1) / m * level) reject_upto = k + 1;
  // Adjusted q-values: running minimum of m * p_(k) / k from the tail.
  std::vector<double> q(order.size());
  double running = 1.0;
  for (std::size_t k = order.size(); k-- > 0;) {
    running = std::min(running, m * pairs[order[k]].p_value / double(k + 1));
    q[k] = running;
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& pr = pairs[order[k]];
    res.q_values[{labels[pr.i], labels[pr.j]}] = q[k];
    if (k < reject_upto) res.edges.emplace_back(labels[pr.i], labels[pr.j]);
  }
  std::sort(res.edges.begin(), res.edges.end());
  return res;
}

}  // namespace pgm
