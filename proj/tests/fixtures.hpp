// Shared test fixtures: small hand-specified networks, random networks, and
// seeded forward sampling into datasets.
#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "pgm/data.hpp"
#include "pgm/graph.hpp"
#include "pgm/params.hpp"
#include "pgm/rng.hpp"

namespace fixture {

// Builds a discrete network from explicit tables.  Tables are flattened
// row-major (parents name-sorted, first most significant), keyed by node.
inline pgm::BayesianNetwork make_bn(const std::vector<pgm::VariableMeta>& variables,
                                    const std::vector<std::pair<std::string, std::string>>& arcs,
                                    const std::map<std::string, std::vector<double>>& tables) {
  pgm::BayesianNetwork bn;
  std::vector<std::string> names;
  for (const auto& v : variables) names.push_back(v.name);
  bn.dag = pgm::Dag(names, arcs);
  bn.variables = variables;
  std::sort(bn.variables.begin(), bn.variables.end(),
            [](const pgm::VariableMeta& a, const pgm::VariableMeta& b) { return a.name < b.name; });
  for (int v = 0; v < bn.dag.size(); ++v) {
    pgm::Cpt c;
    c.node = bn.dag.name(v);
    for (int p : bn.dag.parents(v)) c.parents.push_back(bn.dag.name(p));
    for (const auto& pn : c.parents) {
      const int pv = bn.dag.index_of(pn);
      c.parent_cards.push_back(bn.variables[static_cast<std::size_t>(pv)].cardinality());
    }
    c.cardinality = bn.variables[static_cast<std::size_t>(v)].cardinality();
    c.p = tables.at(c.node);
    bn.locals.emplace_back(std::move(c));
  }
  bn.validate();
  return bn;
}

inline pgm::VariableMeta binary(const std::string& name) {
  return {name, pgm::VarKind::discrete, {"no", "yes"}};
}

// A -> C <- B with strong dependence of C on both parents.
inline pgm::BayesianNetwork converging_bn() {
  return make_bn({binary("A"), binary("B"), binary("C")}, {{"A", "C"}, {"B", "C"}},
                 {{"A", {0.5, 0.5}},
                  {"B", {0.5, 0.5}},
                  // rows: (A,B) = (no,no), (no,yes), (yes,no), (yes,yes)
                  {"C", {0.9, 0.1, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9}}});
}

// A -> C -> B with strong links.
inline pgm::BayesianNetwork serial_bn() {
  return make_bn({binary("A"), binary("B"), binary("C")}, {{"A", "C"}, {"C", "B"}},
                 {{"A", {0.5, 0.5}},
                  {"C", {0.9, 0.1, 0.1, 0.9}},
                  {"B", {0.9, 0.1, 0.1, 0.9}}});
}

// Eight-node network with the classic chest-clinic shape and smooth,
// strictly positive tables.
inline pgm::BayesianNetwork chest_clinic_bn() {
  std::vector<pgm::VariableMeta> vars = {binary("asia"),  binary("tub"),   binary("smoke"),
                                         binary("lung"),  binary("bronc"), binary("either"),
                                         binary("xray"),  binary("dysp")};
  std::vector<std::pair<std::string, std::string>> arcs = {
      {"asia", "tub"},   {"smoke", "lung"},   {"smoke", "bronc"}, {"tub", "either"},
      {"lung", "either"}, {"either", "xray"}, {"either", "dysp"}, {"bronc", "dysp"}};
  std::map<std::string, std::vector<double>> tables;
  tables["asia"] = {0.99, 0.01};
  tables["smoke"] = {0.5, 0.5};
  tables["tub"] = {0.99, 0.01, 0.95, 0.05};          // by asia
  tables["lung"] = {0.99, 0.01, 0.9, 0.1};           // by smoke
  tables["bronc"] = {0.7, 0.3, 0.4, 0.6};            // by smoke
  // either by (lung, tub): close to an or-gate but strictly positive
  tables["either"] = {0.98, 0.02, 0.03, 0.97, 0.03, 0.97, 0.02, 0.98};
  tables["xray"] = {0.95, 0.05, 0.02, 0.98};         // by either
  // dysp by (bronc, either)
  tables["dysp"] = {0.9, 0.1, 0.3, 0.7, 0.2, 0.8, 0.1, 0.9};
  return make_bn(vars, arcs, tables);
}

// Random DAG with random strictly positive tables over binary nodes.
inline pgm::BayesianNetwork random_bn(const std::vector<std::string>& names, pgm::Rng& rng) {
  const int n = static_cast<int>(names.size());
  std::vector<std::pair<std::string, std::string>> arcs;
  // Random order, then each later node picks parents among earlier ones.
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  rng.shuffle(order);
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j)
      if (rng.next_unit() < 0.4)
        arcs.emplace_back(names[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])],
                          names[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
  std::vector<pgm::VariableMeta> vars;
  for (const auto& nm : names) vars.push_back(binary(nm));
  pgm::Dag dag(names, arcs);
  std::map<std::string, std::vector<double>> tables;
  for (int v = 0; v < dag.size(); ++v) {
    long long rows = 1;
    for (int p : dag.parents(v)) {
      (void)p;
      rows *= 2;
    }
    std::vector<double> t;
    for (long long r = 0; r < rows; ++r) {
      // Away from 0/1 so log terms stay finite.
      const double p = 0.05 + 0.9 * rng.next_unit();
      t.push_back(1.0 - p);
      t.push_back(p);
    }
    tables[dag.name(v)] = t;
  }
  return make_bn(vars, arcs, tables);
}

/// Forward-samples n rows from a discrete network into a Dataset.
inline pgm::Dataset sample_dataset(const pgm::BayesianNetwork& bn, long long n, std::uint64_t seed) {
  pgm::Rng rng(seed);
  const int p = bn.dag.size();
  std::vector<int> topo;
  for (const auto& nm : pgm::topological_order(bn.dag)) topo.push_back(bn.index_of(nm));
  std::vector<std::vector<int>> cols(static_cast<std::size_t>(p));
  std::vector<int> assignment(static_cast<std::size_t>(p), 0);
  for (long long r = 0; r < n; ++r) {
    for (int v : topo) {
      const pgm::Cpt& c = bn.cpt(v);
      std::vector<int> pl;
      for (const auto& pn : c.parents) pl.push_back(assignment[static_cast<std::size_t>(bn.index_of(pn))]);
      const double u = rng.next_unit();
      double acc = 0.0;
      int drawn = c.cardinality - 1;
      for (int k = 0; k < c.cardinality; ++k) {
        acc += c.at(c.row_of(pl), k);
        if (u < acc) {
          drawn = k;
          break;
        }
      }
      assignment[static_cast<std::size_t>(v)] = drawn;
    }
    for (int v = 0; v < p; ++v) cols[static_cast<std::size_t>(v)].push_back(assignment[static_cast<std::size_t>(v)]);
  }
  return pgm::Dataset(bn.variables, cols, std::vector<std::vector<double>>(static_cast<std::size_t>(p)));
}

/// Standard normal draw (Box-Muller on the pinned uniform stream).
inline double normal_draw(pgm::Rng& rng) {
  double u1 = rng.next_unit();
  while (u1 <= 0.0) u1 = rng.next_unit();
  const double u2 = rng.next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Continuous dataset: independent standard normal columns named x1..xp.
inline pgm::Dataset gaussian_noise_dataset(int p, long long n, std::uint64_t seed) {
  pgm::Rng rng(seed);
  std::vector<pgm::VariableMeta> vars;
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(p));
  for (int v = 0; v < p; ++v) {
    vars.push_back({"x" + std::to_string(v + 1), pgm::VarKind::continuous, {}});
    cols[static_cast<std::size_t>(v)].resize(static_cast<std::size_t>(n));
  }
  for (long long r = 0; r < n; ++r)
    for (int v = 0; v < p; ++v) cols[static_cast<std::size_t>(v)][static_cast<std::size_t>(r)] = normal_draw(rng);
  return pgm::Dataset(vars, std::vector<std::vector<int>>(static_cast<std::size_t>(p)), cols);
}

}  // namespace fixture
