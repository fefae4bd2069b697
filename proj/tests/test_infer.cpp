#include <doctest.h>

#include <cmath>

#include "pgm/infer.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace pgm;

namespace {

// Conditional table over the query from the enumerated joint: the oracle for
// every exact-inference check.
std::vector<double> joint_conditional(const BayesianNetwork& bn, const std::vector<std::string>& query,
                                      const std::map<std::string, std::string>& hard) {
  const auto joint = oracle::enumerate_joint(bn);
  const int n = bn.dag.size();
  std::vector<int> cards;
  for (int v = 0; v < n; ++v) cards.push_back(bn.variables[static_cast<std::size_t>(v)].cardinality());
  std::vector<int> qvars;
  for (const auto& nm : query) qvars.push_back(bn.index_of(nm));
  std::sort(qvars.begin(), qvars.end());
  std::map<int, int> ev;
  for (const auto& [nm, lvl] : hard)
    ev[bn.index_of(nm)] = bn.variables[static_cast<std::size_t>(bn.index_of(nm))].level_index(lvl);
  long long qsize = 1;
  for (int v : qvars) qsize *= cards[static_cast<std::size_t>(v)];
  std::vector<double> table(static_cast<std::size_t>(qsize), 0.0);
  std::vector<int> levels(static_cast<std::size_t>(n), 0);
  double total = 0.0;
  for (std::size_t idx = 0; idx < joint.size(); ++idx) {
    bool keep = true;
    for (const auto& [v, lvl] : ev)
      if (levels[static_cast<std::size_t>(v)] != lvl) keep = false;
    if (keep) {
      long long qidx = 0;
      for (int v : qvars) qidx = qidx * cards[static_cast<std::size_t>(v)] + levels[static_cast<std::size_t>(v)];
      table[static_cast<std::size_t>(qidx)] += joint[idx];
      total += joint[idx];
    }
    for (int v = n - 1; v >= 0; --v) {
      if (++levels[static_cast<std::size_t>(v)] < cards[static_cast<std::size_t>(v)]) break;
      levels[static_cast<std::size_t>(v)] = 0;
    }
  }
  for (auto& x : table) x /= total;
  return table;
}

}  // namespace

TEST_CASE("soft evidence replaces local distributions and changes downstream marginals") {
  auto bn = fixture::serial_bn();
  const auto before = variable_elimination(bn, {"B"});
  std::map<std::string, std::vector<double>> soft{{"A", {0.9, 0.1}}};
  const auto revised = apply_soft_evidence(bn, soft);
  const auto after = variable_elimination(revised, {"B"});
  CHECK(before.table[0] != doctest::Approx(after.table[0]).epsilon(1e-6));

  // Enumeration agrees with the revised network.
  const auto expect = joint_conditional(revised, {"B"}, {});
  CHECK(after.table[0] == doctest::Approx(expect[0]).epsilon(1e-12));

  // Identity replacement changes nothing.
  const auto same = apply_soft_evidence(bn, {{"A", {0.5, 0.5}}});
  CHECK(variable_elimination(same, {"B"}).table[1] == doctest::Approx(before.table[1]).epsilon(1e-15));
  CHECK(apply_soft_evidence(bn, {}).dag == bn.dag);

  // Querying the revised root returns exactly the replacement.
  const auto root = variable_elimination(revised, {"A"});
  CHECK(root.table[0] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(root.table[1] == doctest::Approx(0.1).epsilon(1e-12));

  CHECK_THROWS_AS(apply_soft_evidence(bn, {{"A", {0.7, 0.2}}}), ArgumentError);   // not normalised
  CHECK_THROWS_AS(apply_soft_evidence(bn, {{"A", {1.0}}}), ArgumentError);        // wrong length
}

TEST_CASE("soft evidence on a non-root node supplies one row per parent configuration") {
  auto bn = fixture::serial_bn();
  // C has one binary parent: two replacement rows.
  const auto revised = apply_soft_evidence(bn, {{"C", {0.6, 0.4, 0.2, 0.8}}});
  Evidence ev;
  ev.hard = {{"A", "no"}};
  const auto row0 = variable_elimination(revised, {"C"}, ev);
  CHECK(row0.table[0] == doctest::Approx(0.6).epsilon(1e-12));
  ev.hard = {{"A", "yes"}};
  const auto row1 = variable_elimination(revised, {"C"}, ev);
  CHECK(row1.table[1] == doctest::Approx(0.8).epsilon(1e-12));

  // A single row cannot stand in for a two-row table.
  CHECK_THROWS_AS(apply_soft_evidence(bn, {{"C", {0.6, 0.4}}}), ArgumentError);
}

TEST_CASE("variable elimination: roots, direct lookups, random-network exactness") {
  auto conv = fixture::converging_bn();
  const auto prior = variable_elimination(conv, {"A"});
  CHECK(prior.table[0] == doctest::Approx(0.5).epsilon(1e-12));

  // Query C given both parents: row lookup of C's table.
  Evidence ev;
  ev.hard = {{"A", "yes"}, {"B", "no"}};
  const auto row = variable_elimination(conv, {"C"}, ev);
  const Cpt& c = conv.cpt(conv.index_of("C"));
  CHECK(row.table[0] == doctest::Approx(c.at(c.row_of({1, 0}), 0)).epsilon(1e-12));
  CHECK(row.table[1] == doctest::Approx(c.at(c.row_of({1, 0}), 1)).epsilon(1e-12));

  Rng rng(70);
  for (int t = 0; t < 25; ++t) {
    auto bn = fixture::random_bn({"A", "B", "C", "D", "E", "F"}, rng);
    // Random query set and evidence.
    std::vector<std::string> query;
    std::map<std::string, std::string> hard;
    for (const auto& nm : bn.dag.nodes()) {
      const double u = rng.next_unit();
      if (u < 0.3) query.push_back(nm);
      else if (u < 0.5) hard[nm] = rng.next_unit() < 0.5 ? "no" : "yes";
    }
    if (query.empty()) query.push_back("A");
    Evidence evidence;
    evidence.hard = {hard.begin(), hard.end()};
    const auto got = variable_elimination(bn, query, evidence);
    const auto expect = joint_conditional(bn, query, hard);
    REQUIRE(got.table.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i)
      CHECK(got.table[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }
}

TEST_CASE("variable elimination is invariant across forced elimination orders") {
  Rng rng(71);
  auto bn = fixture::random_bn({"A", "B", "C", "D", "E", "F"}, rng);
  Evidence ev;
  ev.hard = {{"F", "yes"}};
  const auto reference = variable_elimination(bn, {"A", "C"}, ev);
  std::vector<std::string> eliminable = {"B", "D", "E"};
  std::sort(eliminable.begin(), eliminable.end());
  int tried = 0;
  do {
    const auto res = detail::variable_elimination_impl(bn, {"A", "C"}, ev, &eliminable);
    for (std::size_t i = 0; i < reference.table.size(); ++i)
      CHECK(res.table[i] == doctest::Approx(reference.table[i]).epsilon(1e-12));
  } while (std::next_permutation(eliminable.begin(), eliminable.end()) && ++tried < 6);
}

TEST_CASE("hard evidence on a queried node forces a point mass") {
  auto bn = fixture::chest_clinic_bn();
  Evidence ev;
  ev.hard = {{"smoke", "yes"}};
  const auto res = variable_elimination(bn, {"smoke", "lung"}, ev);
  // Query nodes sorted: lung, smoke; smoke=no entries must vanish.
  REQUIRE(res.query == std::vector<std::string>{"lung", "smoke"});
  CHECK(res.at({0, 0}) == 0.0);
  CHECK(res.at({1, 0}) == 0.0);
  double mass = 0.0;
  for (double x : res.table) mass += x;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("impossible evidence raises an inconsistency error") {
  auto bn = fixture::make_bn({fixture::binary("A"), fixture::binary("B")}, {{"A", "B"}},
                             {{"A", {1.0, 0.0}}, {"B", {0.5, 0.5, 0.5, 0.5}}});
  Evidence ev;
  ev.hard = {{"A", "yes"}};  // P(A=yes) = 0
  CHECK_THROWS_AS(variable_elimination(bn, {"B"}, ev), EvidenceError);
  CHECK_THROWS_AS(likelihood_weighting(bn, {"B"}, ev, 500, 1), EvidenceError);
  CHECK_THROWS_AS(logic_sampling(bn, {"B"}, ev, 500, 1), SamplingError);
}

TEST_CASE("logic sampling: no evidence accuracy, certain evidence, determinism") {
  auto bn = fixture::serial_bn();
  const auto exact = variable_elimination(bn, {"B"});
  const long long n = 20000;
  const auto est = logic_sampling(bn, {"B"}, {}, n, 99);
  CHECK(est.accepted == n);  // nothing to contradict
  const double p = exact.table[1];
  CHECK(std::fabs(est.table[1] - p) <= 3.0 * std::sqrt(p * (1 - p) / double(n)));

  const auto rerun = logic_sampling(bn, {"B"}, {}, n, 99);
  CHECK(est.table == rerun.table);

  // Evidence with probability one keeps every draw.
  auto sure = fixture::make_bn({fixture::binary("A"), fixture::binary("B")}, {{"A", "B"}},
                               {{"A", {0.0, 1.0}}, {"B", {0.2, 0.8, 0.8, 0.2}}});
  Evidence ev;
  ev.hard = {{"A", "yes"}};
  const auto full = logic_sampling(sure, {"B"}, ev, 5000, 3);
  CHECK(full.accepted == 5000);
}

TEST_CASE("likelihood weighting: no-evidence weights are one; rare evidence stays efficient") {
  auto bn = fixture::chest_clinic_bn();
  const auto lw = likelihood_weighting(bn, {"bronc"}, {}, 4000, 5);
  CHECK(lw.effective_sample_size == doctest::Approx(4000.0));

  // Rare evidence: logic sampling keeps few draws, weighting keeps them all.
  Evidence rare;
  rare.hard = {{"asia", "yes"}};  // P = 0.01
  const auto weighted = likelihood_weighting(bn, {"dysp"}, rare, 4000, 5);
  const auto rejection = logic_sampling(bn, {"dysp"}, rare, 4000, 5);
  CHECK(weighted.effective_sample_size == doctest::Approx(4000.0));  // root evidence: constant weights
  CHECK(rejection.accepted < 200);

  const auto exact = variable_elimination(bn, {"dysp"}, rare);
  CHECK(std::fabs(weighted.table[1] - exact.table[1]) < 0.05);
}

TEST_CASE("samplers are unbiased without evidence: seed-averaged marginals match exactness") {
  auto bn = fixture::converging_bn();
  const auto exact = variable_elimination(bn, {"C"});
  const double p = exact.table[1];
  const long long n = 2000;
  double ls_mean = 0.0, lw_mean = 0.0;
  const int runs = 50;
  for (int s = 0; s < runs; ++s) {
    ls_mean += logic_sampling(bn, {"C"}, {}, n, 1000 + s).table[1];
    lw_mean += likelihood_weighting(bn, {"C"}, {}, n, 2000 + s).table[1];
  }
  ls_mean /= runs;
  lw_mean /= runs;
  const double se = std::sqrt(p * (1 - p) / double(n * runs));
  CHECK(std::fabs(ls_mean - p) <= 3.0 * se);
  CHECK(std::fabs(lw_mean - p) <= 3.0 * se);
}

TEST_CASE("sampler results are identical across worker counts") {
  auto bn = fixture::chest_clinic_bn();
  Evidence ev;
  ev.hard = {{"xray", "yes"}};
  setenv("PGM_THREADS", "1", 1);
  const auto one = likelihood_weighting(bn, {"lung"}, ev, 30000, 11);
  const auto one_ls = logic_sampling(bn, {"lung"}, ev, 30000, 11);
  setenv("PGM_THREADS", "4", 1);
  const auto four = likelihood_weighting(bn, {"lung"}, ev, 30000, 11);
  const auto four_ls = logic_sampling(bn, {"lung"}, ev, 30000, 11);
  unsetenv("PGM_THREADS");
  CHECK(one.table == four.table);
  CHECK(one.effective_sample_size == four.effective_sample_size);
  CHECK(one_ls.table == four_ls.table);
  CHECK(one_ls.accepted == four_ls.accepted);
}
