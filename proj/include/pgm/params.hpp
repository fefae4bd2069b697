#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "pgm/common.hpp"
#include "pgm/data.hpp"
#include "pgm/graph.hpp"
#include "pgm/matrix.hpp"
#include "pgm/regress.hpp"

namespace pgm {

// Conditional probability table.  Rows are indexed by the mixed-radix parent
// configuration (first parent most significant, last parent fastest).
struct Cpt {
  std::string node;
  std::vector<std::string> parents;  // name-sorted
  std::vector<int> parent_cards;
  int cardinality = 0;
  std::vector<double> p;             // p[row * cardinality + level]
  std::vector<long long> uniform_rows;  // configurations never observed, filled uniformly

  long long rows() const {
    long long r = 1;
    for (int c : parent_cards) r *= c;
    return r;
  }

  double at(long long row, int level) const {
    return p[static_cast<std::size_t>(row) * cardinality + level];
  }

  long long row_of(const std::vector<int>& parent_levels) const {
    long long r = 0;
    for (std::size_t i = 0; i < parent_cards.size(); ++i)
      r = r * parent_cards[i] + parent_levels[i];
    return r;
  }
};

// Linear-Gaussian local distribution: node = intercept + coefficients . parents + noise.
struct GaussianLocal {
  std::string node;
  std::vector<std::string> parents;  // name-sorted
  double intercept = 0.0;
  std::vector<double> coefficients;
  double residual_variance = 0.0;

  double mean(const std::vector<double>& parent_values) const {
    double m = intercept;
    for (std::size_t i = 0; i < coefficients.size(); ++i) m += coefficients[i] * parent_values[i];
    return m;
  }
};

using LocalDistribution = std::variant<Cpt, GaussianLocal>;

// DAG plus one local distribution per node, all of the same family.
// Variables and locals are aligned with dag.nodes() (name order).
struct BayesianNetwork {
  std::vector<VariableMeta> variables;
  Dag dag;
  std::vector<LocalDistribution> locals;

  bool discrete() const {
    return !locals.empty() && std::holds_alternative<Cpt>(locals.front());
  }

  int index_of(const std::string& name) const { return dag.index_of(name); }

  const Cpt& cpt(int v) const { return std::get<Cpt>(locals[static_cast<std::size_t>(v)]); }
  const GaussianLocal& gaussian(int v) const {
    return std::get<GaussianLocal>(locals[static_cast<std::size_t>(v)]);
  }

  void validate() const {
    if (variables.size() != static_cast<std::size_t>(dag.size()) ||
        locals.size() != static_cast<std::size_t>(dag.size()))
      throw ArgumentError("network pieces out of alignment");
    bool any_cpt = false, any_gauss = false;
    for (int v = 0; v < dag.size(); ++v) {
      if (variables[static_cast<std::size_t>(v)].name != dag.name(v))
        throw ArgumentError("variable order does not match graph nodes");
      std::vector<std::string> want;
      for (int p : dag.parents(v)) want.push_back(dag.name(p));
      const auto& local = locals[static_cast<std::size_t>(v)];
      if (std::holds_alternative<Cpt>(local)) {
        any_cpt = true;
        const auto& c = std::get<Cpt>(local);
        if (c.node != dag.name(v) || c.parents != want)
          throw ArgumentError("local distribution for '" + dag.name(v) +
                              "' disagrees with its graph parents");
        if (c.cardinality != variables[static_cast<std::size_t>(v)].cardinality())
          throw ArgumentError("cardinality mismatch for '" + c.node + "'");
        for (long long r = 0; r < c.rows(); ++r) {
          double s = 0.0;
          for (int k = 0; k < c.cardinality; ++k) {
            double x = c.at(r, k);
            if (x < 0.0 || x > 1.0) throw ArgumentError("probability out of range in '" + c.node + "'");
            s += x;
          }
          if (std::fabs(s - 1.0) > 1e-12)
            throw ArgumentError("row " + std::to_string(r) + " of '" + c.node + "' does not sum to 1");
        }
      } else {
        any_gauss = true;
        const auto& gl = std::get<GaussianLocal>(local);
        if (gl.node != dag.name(v) || gl.parents != want)
          throw ArgumentError("local distribution for '" + dag.name(v) +
                              "' disagrees with its graph parents");
        if (gl.coefficients.size() != gl.parents.size())
          throw ArgumentError("coefficient count mismatch for '" + gl.node + "'");
        if (!(gl.residual_variance > 0.0))
          throw ArgumentError("non-positive residual variance for '" + gl.node + "'");
      }
    }
    if (any_cpt && any_gauss) throw ArgumentError("mixed local-distribution families");
  }
};

/// Relative-frequency or Dirichlet-posterior-mean CPT.  The imaginary sample
/// size iss is split uniformly over the row's cells; a configuration with no
/// observations and iss = 0 falls back to a uniform row and is flagged.
inline Cpt fit_cpt(const Dataset& d, const std::string& node,
                   const std::vector<std::string>& parents, double iss = 0.0) {
  if (iss < 0.0) throw ArgumentError("iss must be nonnegative");
  Cpt c;
  c.node = node;
  c.parents = parents;
  std::sort(c.parents.begin(), c.parents.end());
  const int xv = d.index_of(node);
  if (d.variable(xv).kind != VarKind::discrete)
    throw ArgumentError("variable '" + node + "' is not discrete");
  c.cardinality = d.variable(xv).cardinality();
  std::vector<int> pidx;
  for (const auto& pn : c.parents) {
    int v = d.index_of(pn);
    if (d.variable(v).kind != VarKind::discrete)
      throw ArgumentError("variable '" + pn + "' is not discrete");
    pidx.push_back(v);
    c.parent_cards.push_back(d.variable(v).cardinality());
  }
  const long long rows = c.rows();
  std::vector<long long> counts(static_cast<std::size_t>(rows) * c.cardinality, 0);
  for (long long r = 0; r < d.n(); ++r) {
    long long row = 0;
    for (std::size_t i = 0; i < pidx.size(); ++i) row = row * c.parent_cards[i] + d.level(r, pidx[i]);
    ++counts[static_cast<std::size_t>(row) * c.cardinality + d.level(r, xv)];
  }
  c.p.assign(static_cast<std::size_t>(rows) * c.cardinality, 0.0);
  const double q = static_cast<double>(rows);
  for (long long row = 0; row < rows; ++row) {
    long long nrow = 0;
    for (int k = 0; k < c.cardinality; ++k) nrow += counts[static_cast<std::size_t>(row) * c.cardinality + k];
    if (nrow == 0 && iss == 0.0) {
      for (int k = 0; k < c.cardinality; ++k)
        c.p[static_cast<std::size_t>(row) * c.cardinality + k] = 1.0 / c.cardinality;
      c.uniform_rows.push_back(row);
      continue;
    }
    const double alpha_cell = iss / (q * c.cardinality);
    const double denom = double(nrow) + iss / q;
    for (int k = 0; k < c.cardinality; ++k)
      c.p[static_cast<std::size_t>(row) * c.cardinality + k] =
          (double(counts[static_cast<std::size_t>(row) * c.cardinality + k]) + alpha_cell) / denom;
  }
  return c;
}

/// Least-squares regression of node on parents with unbiased residual variance.
inline GaussianLocal fit_gaussian_local(const Dataset& d, const std::string& node,
                                        const std::vector<std::string>& parents) {
  GaussianLocal gl;
  gl.node = node;
  gl.parents = parents;
  std::sort(gl.parents.begin(), gl.parents.end());
  const int yv = d.index_of(node);
  if (d.variable(yv).kind != VarKind::continuous)
    throw ArgumentError("variable '" + node + "' is not continuous");
  std::vector<int> pidx;
  for (const auto& pn : gl.parents) {
    int v = d.index_of(pn);
    if (d.variable(v).kind != VarKind::continuous)
      throw ArgumentError("variable '" + pn + "' is not continuous");
    pidx.push_back(v);
  }
  const long long n = d.n();
  const int k = static_cast<int>(pidx.size());
  if (n <= k + 1)
    throw ArgumentError("need more rows than parameters to fit '" + node + "'");
  detail::LeastSquares ls;
  try {
    ls = detail::least_squares(d, yv, pidx);
  } catch (const NumericError&) {
    throw NumericError("collinear design fitting '" + node + "'");
  }
  gl.intercept = ls.beta[0];
  gl.coefficients.assign(ls.beta.begin() + 1, ls.beta.end());
  const auto& y = d.continuous_column(yv);
  double ymean = 0.0, tss = 0.0;
  for (long long r = 0; r < n; ++r) ymean += y[static_cast<std::size_t>(r)];
  ymean /= double(n);
  for (long long r = 0; r < n; ++r) {
    const double c = y[static_cast<std::size_t>(r)] - ymean;
    tss += c * c;
  }
  gl.residual_variance = ls.rss / double(n - k - 1);
  if (!(gl.residual_variance > 0.0) || (tss > 0.0 && ls.rss <= 1e-12 * tss) || tss == 0.0)
    throw NumericError("degenerate residual variance fitting '" + node + "'");
  return gl;
}

/// Fits one local distribution per node of g from the data, using the graph parents.
inline BayesianNetwork fit_network(const Dataset& d, const Dag& g, double iss = 0.0) {
  BayesianNetwork bn;
  bn.dag = g;
  bool discrete = true, continuous = true;
  for (const auto& nm : g.nodes()) {
    const auto& meta = d.variable(d.index_of(nm));
    discrete = discrete && meta.kind == VarKind::discrete;
    continuous = continuous && meta.kind == VarKind::continuous;
    bn.variables.push_back(meta);
  }
  if (!discrete && !continuous)
    throw ArgumentError("network variables mix discrete and continuous kinds");
  for (int v = 0; v < g.size(); ++v) {
    std::vector<std::string> parents;
    for (int p : g.parents(v)) parents.push_back(g.name(p));
    if (discrete)
      bn.locals.emplace_back(fit_cpt(d, g.name(v), parents, iss));
    else
      bn.locals.emplace_back(fit_gaussian_local(d, g.name(v), parents));
  }
  bn.validate();
  return bn;
}

/// Probability of one full discrete assignment: the product of local
/// conditional probabilities taken in topological order.
inline double joint_probability(const BayesianNetwork& bn, const std::vector<int>& assignment) {
  if (!bn.discrete()) throw ArgumentError("joint_probability needs a discrete network");
  if (assignment.size() != static_cast<std::size_t>(bn.dag.size()))
    throw ArgumentError("assignment does not cover every node");
  for (int v = 0; v < bn.dag.size(); ++v)
    if (assignment[static_cast<std::size_t>(v)] < 0 ||
        assignment[static_cast<std::size_t>(v)] >= bn.variables[static_cast<std::size_t>(v)].cardinality())
      throw ArgumentError("level out of range for '" + bn.dag.name(v) + "'");
  double prob = 1.0;
  for (const auto& nm : topological_order(bn.dag)) {
    const int v = bn.dag.index_of(nm);
    const Cpt& c = bn.cpt(v);
    std::vector<int> pl;
    pl.reserve(c.parents.size());
    for (const auto& pn : c.parents) pl.push_back(assignment[static_cast<std::size_t>(bn.dag.index_of(pn))]);
    prob *= c.at(c.row_of(pl), assignment[static_cast<std::size_t>(v)]);
  }
  return prob;
}

struct LogLikelihood {
  double value = 0.0;
  bool minus_infinity = false;  // some row had probability zero
};

/// Natural-log likelihood of the data under the network.
inline LogLikelihood log_likelihood(const BayesianNetwork& bn, const Dataset& d) {
  LogLikelihood out;
  std::vector<int> col;  // dataset column per bn node
  for (const auto& nm : bn.dag.nodes()) col.push_back(d.index_of(nm));
  for (int v = 0; v < bn.dag.size(); ++v) {
    const auto& meta = bn.variables[static_cast<std::size_t>(v)];
    if (!(d.variable(col[static_cast<std::size_t>(v)]) == meta))
      throw ArgumentError("dataset variable '" + meta.name + "' does not match the network");
  }
  for (long long r = 0; r < d.n(); ++r) {
    for (int v = 0; v < bn.dag.size(); ++v) {
      const int dv = col[static_cast<std::size_t>(v)];
      if (bn.discrete()) {
        const Cpt& c = bn.cpt(v);
        std::vector<int> pl;
        pl.reserve(c.parents.size());
        for (const auto& pn : c.parents) pl.push_back(d.level(r, col[static_cast<std::size_t>(bn.dag.index_of(pn))]));
        const double p = c.at(c.row_of(pl), d.level(r, dv));
        if (p <= 0.0) {
          out.minus_infinity = true;
          out.value = -std::numeric_limits<double>::infinity();
          return out;
        }
        out.value += std::log(p);
      } else {
        const GaussianLocal& gl = bn.gaussian(v);
        std::vector<double> pv;
        pv.reserve(gl.parents.size());
        for (const auto& pn : gl.parents) pv.push_back(d.value(r, col[static_cast<std::size_t>(bn.dag.index_of(pn))]));
        const double e = d.value(r, dv) - gl.mean(pv);
        out.value += -0.5 * (std::log(2.0 * M_PI * gl.residual_variance) + e * e / gl.residual_variance);
      }
    }
  }
  return out;
}

// Clique/separator factorisation of a decomposable model, tables estimated by
// relative frequency.  The clique order carries the running-intersection
// property; separator i is the overlap of clique i with the cliques before it.
struct CliqueFactorization {
  struct Table {
    std::vector<std::string> vars;  // name-sorted
    std::vector<int> cards;
    std::vector<double> p;          // mixed radix over vars, first most significant

    double at(const std::vector<int>& levels) const {
      long long idx = 0;
      for (std::size_t i = 0; i < cards.size(); ++i) idx = idx * cards[i] + levels[i];
      return p[static_cast<std::size_t>(idx)];
    }
  };

  std::vector<std::string> nodes;  // name-sorted, matching the source graph
  std::vector<VariableMeta> variables;
  std::vector<Table> cliques;
  std::vector<Table> separators;  // separators[0] is the empty table

  /// Joint probability of a full assignment (levels aligned with nodes).
  double probability(const std::vector<int>& assignment) const {
    if (assignment.size() != nodes.size())
      throw ArgumentError("assignment does not cover every node");
    auto lookup = [&](const Table& t) {
      std::vector<int> lv;
      lv.reserve(t.vars.size());
      for (const auto& nm : t.vars) {
        auto it = std::lower_bound(nodes.begin(), nodes.end(), nm);
        lv.push_back(assignment[static_cast<std::size_t>(it - nodes.begin())]);
      }
      return t.at(lv);
    };
    double num = 1.0, den = 1.0;
    for (const auto& c : cliques) num *= lookup(c);
    for (const auto& s : separators)
      if (!s.vars.empty()) den *= lookup(s);
    if (num == 0.0) return 0.0;
    return num / den;
  }
};

inline CliqueFactorization clique_factorization(const Dataset& d, const UGraph& g) {
  auto check = is_chordal(g);
  if (!check.chordal)
    throw StructureError("graph is not decomposable: clique potentials would have no "
                         "direct statistical interpretation");
  if (!d.all_discrete()) throw ArgumentError("clique_factorization requires discrete data");
  CliqueFactorization f;
  f.nodes = g.nodes();
  for (const auto& nm : f.nodes) f.variables.push_back(d.variable(d.index_of(nm)));

  auto table_for = [&](const std::vector<std::string>& vars) {
    CliqueFactorization::Table t;
    t.vars = vars;
    long long size = 1;
    for (const auto& nm : vars) {
      t.cards.push_back(d.variable(d.index_of(nm)).cardinality());
      size *= t.cards.back();
    }
    t.p.assign(static_cast<std::size_t>(size), 0.0);
    for (long long r = 0; r < d.n(); ++r) {
      long long idx = 0;
      for (std::size_t i = 0; i < vars.size(); ++i)
        idx = idx * t.cards[i] + d.level(r, d.index_of(vars[i]));
      t.p[static_cast<std::size_t>(idx)] += 1.0;
    }
    for (auto& x : t.p) x /= double(d.n());
    return t;
  };

  const auto clique_list = cliques(g);
  std::set<std::string> covered;
  for (std::size_t i = 0; i < clique_list.size(); ++i) {
    f.cliques.push_back(table_for(clique_list[i]));
    std::vector<std::string> sep;
    for (const auto& nm : clique_list[i])
      if (covered.count(nm)) sep.push_back(nm);
    if (i > 0) {
      // Running intersection: the separator must sit inside one earlier clique.
      bool inside = sep.empty();
      for (std::size_t j = 0; j < i && !inside; ++j)
        inside = std::includes(clique_list[j].begin(), clique_list[j].end(), sep.begin(), sep.end());
      if (!inside) throw StructureError("running-intersection property violated");
    }
    if (i == 0 || sep.empty())
      f.separators.push_back(CliqueFactorization::Table{});
    else
      f.separators.push_back(table_for(sep));
    covered.insert(clique_list[i].begin(), clique_list[i].end());
  }
  return f;
}

}  // namespace pgm
