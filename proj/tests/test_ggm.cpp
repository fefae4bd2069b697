#include <doctest.h>

#include <cmath>

#include "pgm/ggm.hpp"
#include "pgm/mathfn.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace pgm;

namespace {

// Correlated Gaussian columns: x2 tracks x1, x3 tracks x2.
Dataset correlated_gaussian(long long n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> cols(3);
  for (long long r = 0; r < n; ++r) {
    const double a = fixture::normal_draw(rng);
    const double b = 0.9 * a + 0.45 * fixture::normal_draw(rng);
    const double c = 0.9 * b + 0.45 * fixture::normal_draw(rng);
    cols[0].push_back(a);
    cols[1].push_back(b);
    cols[2].push_back(c);
  }
  std::vector<VariableMeta> vars = {{"x1", VarKind::continuous, {}},
                                    {"x2", VarKind::continuous, {}},
                                    {"x3", VarKind::continuous, {}}};
  return Dataset(vars, std::vector<std::vector<int>>(3), cols);
}

Matrix equicorrelated(std::size_t p, double rho) {
  Matrix m = Matrix::identity(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      if (i != j) m(i, j) = rho;
  return m;
}

}  // namespace

TEST_CASE("shrinkage: zero off-diagonals force full shrinkage to the identity") {
  // Two columns whose sample correlation is exactly zero by symmetry.
  std::vector<VariableMeta> vars = {{"a", VarKind::continuous, {}}, {"b", VarKind::continuous, {}}};
  std::vector<std::vector<double>> cols = {{1, 1, -1, -1}, {1, -1, 1, -1}};
  const Dataset d(vars, std::vector<std::vector<int>>(2), cols);
  const auto est = shrink_correlation(d);
  CHECK(est.lambda == 1.0);
  CHECK(est.correlation == Matrix::identity(2));
}

TEST_CASE("shrinkage: big sample with real structure keeps lambda tiny") {
  const auto est = shrink_correlation(correlated_gaussian(10000, 303));
  CHECK(est.lambda > 0.0);
  CHECK(est.lambda < 0.01);
  // Off-diagonals nearly the raw correlation.
  const auto raw = gauss_stats(correlated_gaussian(10000, 303)).correlation;
  CHECK(est.correlation(0, 1) == doctest::Approx(raw(0, 1)).epsilon(1e-2));
}

TEST_CASE("shrinkage: n = 20, p = 100 output is positive definite with lambda in (0,1]") {
  const Dataset wide = fixture::gaussian_noise_dataset(100, 20, 808);
  const auto est = shrink_correlation(wide);
  CHECK(est.lambda > 0.0);
  CHECK(est.lambda <= 1.0);
  CHECK_NOTHROW(cholesky_lower(est.correlation));  // Cholesky success as the oracle
  CHECK_THROWS_AS(cholesky_lower(gauss_stats(wide).correlation), NumericError);  // raw is singular
}

TEST_CASE("shrinkage guards degenerate inputs") {
  std::vector<VariableMeta> vars = {{"a", VarKind::continuous, {}}, {"b", VarKind::continuous, {}}};
  std::vector<std::vector<double>> cols = {{1, 2, 3}, {5, 5, 5}};
  const Dataset constant(vars, std::vector<std::vector<int>>(2), cols);
  CHECK_THROWS_AS(shrink_correlation(constant), NumericError);
}

TEST_CASE("partial correlations: identity, equicorrelation, 2x2 passthrough") {
  CHECK(partial_correlations(Matrix::identity(4)) == Matrix::identity(4));

  const Matrix pc = partial_correlations(equicorrelated(3, 0.5));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(pc(i, j) == doctest::Approx(i == j ? 1.0 : 1.0 / 3.0).epsilon(1e-12));

  Matrix two = Matrix::identity(2);
  two(0, 1) = two(1, 0) = 0.37;
  const Matrix pc2 = partial_correlations(two);
  CHECK(pc2(0, 1) == doctest::Approx(0.37).epsilon(1e-15));

  Matrix bad = equicorrelated(3, -0.9);  // not positive definite
  CHECK_THROWS_AS(partial_correlations(bad), NumericError);
  Matrix asym = Matrix::identity(2);
  asym(0, 1) = 0.2;
  CHECK_THROWS_AS(partial_correlations(asym), ArgumentError);
}

TEST_CASE("diagonal rescaling does not change partial correlations") {
  Rng rng(91);
  const Matrix corr = [&] {
    Matrix c = equicorrelated(4, 0.3);
    c(0, 1) = c(1, 0) = 0.55;
    c(2, 3) = c(3, 2) = -0.2;
    return c;
  }();
  const Matrix base = partial_correlations(corr);
  const double scales[] = {2.0, 0.5, 7.0, 1.3};
  Matrix cov(4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) cov(i, j) = scales[i] * scales[j] * corr(i, j);
  const Matrix rescaled = partial_correlations(cov);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(rescaled(i, j) == doctest::Approx(base(i, j)).epsilon(1e-12));
}

TEST_CASE("partial correlations stay within [-1,1] on random SPD correlation inputs") {
  Rng rng(17);
  for (int t = 0; t < 30; ++t) {
    // Random correlation matrix from normalised Gram matrices.
    const std::size_t p = 4;
    Matrix g(p, p);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) g(i, j) = 0.0;
    std::vector<std::vector<double>> rows(p, std::vector<double>(p + 2));
    for (auto& row : rows)
      for (auto& x : row) x = fixture::normal_draw(rng);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < p + 2; ++k) g(i, j) += rows[i][k] * rows[j][k];
    Matrix corr(p, p);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) corr(i, j) = g(i, j) / std::sqrt(g(i, i) * g(j, j));
    for (std::size_t i = 0; i < p; ++i) corr(i, i) = 1.0;
    const Matrix pc = partial_correlations(corr);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        CHECK(pc(i, j) <= 1.0 + 1e-10);
        CHECK(pc(i, j) >= -1.0 - 1e-10);
        CHECK(pc(i, j) == pc(j, i));
      }
  }
}

TEST_CASE("relevance networks: boundary convention and brute-force agreement") {
  Matrix c = Matrix::identity(3);
  c(0, 1) = c(1, 0) = 0.79;
  c(0, 2) = c(2, 0) = 0.80;
  c(1, 2) = c(2, 1) = -0.85;
  const UGraph g = relevance_network(c, {"a", "b", "c"}, 0.8);
  CHECK_FALSE(g.adjacent(g.index_of("a"), g.index_of("b")));  // 0.79 misses a closed threshold
  CHECK(g.adjacent(g.index_of("a"), g.index_of("c")));        // exactly 0.80 passes
  CHECK(g.adjacent(g.index_of("b"), g.index_of("c")));        // magnitude counts

  CHECK(relevance_network(Matrix::identity(4), {"a", "b", "c", "d"}, 0.8).edge_count() == 0);

  Rng rng(5);
  Matrix random_c = Matrix::identity(5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j)
      random_c(i, j) = random_c(j, i) = 2.0 * rng.next_unit() - 1.0;
  const std::vector<std::string> labels = {"a", "b", "c", "d", "e"};
  const UGraph rn = relevance_network(random_c, labels, 0.5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j)
      CHECK(rn.adjacent(rn.index_of(labels[i]), rn.index_of(labels[j])) ==
            (std::fabs(random_c(i, j)) >= 0.5));
}

TEST_CASE("relevance networks are monotone in the threshold") {
  Rng rng(6);
  Matrix c = Matrix::identity(6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i + 1; j < 6; ++j) c(i, j) = c(j, i) = 2.0 * rng.next_unit() - 1.0;
  const std::vector<std::string> labels = {"a", "b", "c", "d", "e", "f"};
  const UGraph loose = relevance_network(c, labels, 0.3);
  const UGraph tight = relevance_network(c, labels, 0.7);
  for (const auto& e : tight.edges())
    CHECK(loose.adjacent(loose.index_of(e.tail), loose.index_of(e.head)));
}

TEST_CASE("ggm selection: empty at zero signal, everything at q = 1") {
  const std::vector<std::string> labels = {"a", "b", "c"};
  const GgmResult none = ggm_select(Matrix::identity(3), 50, GgmSelectMethod::fdr, 0.05, labels);
  CHECK(none.edges.empty());
  const GgmResult none_t = ggm_select(Matrix::identity(3), 50, GgmSelectMethod::threshold, 0.2, labels);
  CHECK(none_t.edges.empty());

  const Matrix pc = partial_correlations(equicorrelated(3, 0.4));
  const GgmResult all = ggm_select(pc, 50, GgmSelectMethod::fdr, 1.0, labels);
  CHECK(all.edges.size() == 3);

  CHECK_THROWS_AS(ggm_select(pc, 50, GgmSelectMethod::fdr, 0.0, labels), ArgumentError);
  CHECK_THROWS_AS(ggm_select(pc, 50, GgmSelectMethod::threshold, 1.5, labels), ArgumentError);
}

TEST_CASE("fdr selection matches an independent Benjamini-Hochberg run on a 5-variable fixture") {
  // Partial correlations of mixed strength.
  Matrix pc = Matrix::identity(5);
  const double vals[] = {0.68, 0.05, 0.02, -0.55, 0.01, 0.4, -0.03, 0.02, 0.6, 0.04};
  std::size_t k = 0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) {
      pc(i, j) = pc(j, i) = vals[k++];
    }
  const long long n = 40;
  const std::vector<std::string> labels = {"a", "b", "c", "d", "e"};
  const GgmResult res = ggm_select(pc, n, GgmSelectMethod::fdr, 0.05, labels);

  // Hand-rolled p-values and step-up.
  std::vector<double> pvals;
  std::vector<std::pair<std::string, std::string>> pairs;
  const double dof = double(n) - 3.0 - 3.0;
  k = 0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) {
      pvals.push_back(std::erfc(std::fabs(std::sqrt(dof) * std::atanh(vals[k++])) / std::sqrt(2.0)));
      pairs.emplace_back(labels[i], labels[j]);
    }
  const auto rejected = oracle::bh_reject(pvals, 0.05);
  std::vector<std::pair<std::string, std::string>> expect;
  for (std::size_t idx : rejected) expect.push_back(pairs[idx]);
  std::sort(expect.begin(), expect.end());
  CHECK(res.edges == expect);
  for (std::size_t idx = 0; idx < pairs.size(); ++idx)
    CHECK(res.p_values.at(pairs[idx]) == doctest::Approx(pvals[idx]).epsilon(1e-12));
  // q-values bound the selection: every selected pair has q <= 0.05.
  for (const auto& e : res.edges) CHECK(res.q_values.at(e) <= 0.05 + 1e-12);
  CHECK_FALSE(res.approximate_transform);
}

TEST_CASE("fdr with n <= p flags the approximate transform") {
  const Dataset wide = fixture::gaussian_noise_dataset(30, 10, 11);
  const auto est = shrink_correlation(wide);
  const Matrix pc = partial_correlations(est.correlation);
  const GgmResult res = ggm_select(pc, wide.n(), GgmSelectMethod::fdr, 0.05, est.names);
  CHECK(res.approximate_transform);
}

TEST_CASE("shrinkage endpoints reproduce raw and identity correlations") {
  const Dataset d = correlated_gaussian(200, 55);
  const auto est = shrink_correlation(d);
  const Matrix raw = gauss_stats(d).correlation;
  // Reconstruct both endpoints of the convex combination from the estimate.
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      const double undone = est.correlation(i, j) / (1.0 - est.lambda);
      CHECK(undone == doctest::Approx(raw(i, j)).epsilon(1e-9));
    }
}
