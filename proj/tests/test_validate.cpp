#include <doctest.h>

#include <cmath>

#include "pgm/validate.hpp"
#include "fixtures.hpp"

using namespace pgm;

namespace {

// Binary column duplicated under two names.
Dataset duplicated_column(long long n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<int>> cols(2);
  for (long long r = 0; r < n; ++r) {
    const int v = rng.next_unit() < 0.5 ? 0 : 1;
    cols[0].push_back(v);
    cols[1].push_back(v);
  }
  return Dataset({fixture::binary("X"), fixture::binary("Y")}, cols,
                 std::vector<std::vector<double>>(2));
}

Dataset independent_columns(int vars, long long n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<VariableMeta> metas;
  std::vector<std::vector<int>> cols(static_cast<std::size_t>(vars));
  for (int v = 0; v < vars; ++v) {
    metas.push_back(fixture::binary("V" + std::to_string(v)));
    for (long long r = 0; r < n; ++r)
      cols[static_cast<std::size_t>(v)].push_back(rng.next_unit() < 0.5 ? 0 : 1);
  }
  return Dataset(metas, cols, std::vector<std::vector<double>>(static_cast<std::size_t>(vars)));
}

}  // namespace

TEST_CASE("bootstrap: duplicated column is near-certain, skeleton bounds directed") {
  const Dataset d = duplicated_column(400, 21);
  LearnerSpec spec;  // hill climbing, bic
  const auto conf = bootstrap_confidence(d, spec, 100, 7);
  CHECK(conf.successful == 100);
  CHECK(conf.skeleton_frequency("X", "Y") >= 0.95);
  CHECK(conf.skeleton_frequency("X", "Y") >=
        std::max(conf.directed_frequency("X", "Y"), conf.directed_frequency("Y", "X")));
}

TEST_CASE("bootstrap: independent columns stay rare") {
  const Dataset d = independent_columns(4, 1000, 49);
  LearnerSpec spec;
  spec.algo = Algo::gs;
  spec.config.alpha = 0.01;
  const auto conf = bootstrap_confidence(d, spec, 100, 11);
  for (const auto& [pair, freq] : conf.skeleton) CHECK(freq <= 0.2);
  for (const auto& [pair, freq] : conf.directed) CHECK(freq <= 0.2);
}

TEST_CASE("bootstrap frequencies are exact multiples of 1/successful and reproducible") {
  const Dataset d = fixture::sample_dataset(fixture::converging_bn(), 300, 3);
  LearnerSpec spec;
  const auto a = bootstrap_confidence(d, spec, 50, 19);
  const auto b = bootstrap_confidence(d, spec, 50, 19);
  CHECK(a.directed == b.directed);
  CHECK(a.skeleton == b.skeleton);
  for (const auto& [pair, freq] : a.skeleton) {
    const double scaled = freq * double(a.successful);
    CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(bootstrap_confidence(d, spec, 5, 1), ArgumentError);
}

TEST_CASE("bootstrap merges identically across worker counts") {
  const Dataset d = fixture::sample_dataset(fixture::serial_bn(), 300, 5);
  LearnerSpec spec;
  setenv("PGM_THREADS", "1", 1);
  const auto one = bootstrap_confidence(d, spec, 60, 23);
  setenv("PGM_THREADS", "4", 1);
  const auto four = bootstrap_confidence(d, spec, 60, 23);
  unsetenv("PGM_THREADS");
  CHECK(one.directed == four.directed);
  CHECK(one.skeleton == four.skeleton);
}

TEST_CASE("bootstrap aborts once too many replicates fail") {
  // Mixed variable kinds make every hill-climbing replicate fail.
  std::vector<std::vector<int>> dcols(2);
  std::vector<std::vector<double>> ccols(2);
  for (int r = 0; r < 50; ++r) {
    dcols[0].push_back(r % 2);
    ccols[1].push_back(double(r));
  }
  const Dataset mixed({fixture::binary("X"), {"y", VarKind::continuous, {}}}, dcols, ccols);
  LearnerSpec spec;
  CHECK_THROWS_AS(bootstrap_confidence(mixed, spec, 20, 1), Error);
}

TEST_CASE("bootstrap works with the constraint-based learner too") {
  const Dataset d = fixture::sample_dataset(fixture::converging_bn(), 500, 9);
  LearnerSpec spec;
  spec.algo = Algo::gs;
  const auto conf = bootstrap_confidence(d, spec, 30, 3);
  CHECK(conf.skeleton_frequency("A", "C") > 0.5);
  CHECK(conf.skeleton_frequency("B", "C") > 0.5);
}

TEST_CASE("cross validation: duplicated target is easy, noise target is even") {
  // Target duplicated from a feature: misclassification near zero.
  const Dataset easy = duplicated_column(300, 41);
  LearnerSpec spec;
  spec.config.iss = 1.0;
  const auto good = cross_validate(easy, spec, "Y", 5, LossKind::misclassification, 7);
  CHECK(good.mean <= 0.02);
  CHECK(good.per_fold.size() == 5);

  // Pure-noise binary target: around one half.
  const Dataset noise = independent_columns(3, 1000, 43);
  const auto coin = cross_validate(noise, spec, "V0", 5, LossKind::misclassification, 7);
  CHECK(coin.mean > 0.4);
  CHECK(coin.mean < 0.6);
}

TEST_CASE("cross validation bookkeeping: folds partition rows, mean averages folds") {
  const Dataset d = fixture::sample_dataset(fixture::serial_bn(), 103, 13);
  LearnerSpec spec;
  const auto res = cross_validate(d, spec, "B", 4, LossKind::misclassification, 3);
  REQUIRE(res.per_fold.size() == 4);
  double acc = 0.0;
  for (double x : res.per_fold) acc += x;
  CHECK(res.mean == doctest::Approx(acc / 4.0).epsilon(1e-12));

  // Fold sizes 26,26,26,25 partition 103 rows; reconstruct via the loss
  // denominators: every loss is a multiple of 1/fold-size.
  const auto rerun = cross_validate(d, spec, "B", 4, LossKind::misclassification, 3);
  CHECK(res.per_fold == rerun.per_fold);

  CHECK_THROWS_AS(cross_validate(d, spec, "B", 1, LossKind::misclassification, 3), ArgumentError);
  CHECK_THROWS_AS(cross_validate(d, spec, "B", 200, LossKind::misclassification, 3), ArgumentError);
  CHECK_THROWS_AS(cross_validate(d, spec, "B", 4, LossKind::rss, 3), ArgumentError);
}

TEST_CASE("leave-one-out on a tiny fixture matches hand-computed losses") {
  // Six rows, X==Y always; leave-one-out prediction from the other five
  // always matches (majority carries), so every fold loss is zero.
  const Dataset d = duplicated_column(6, 5);
  LearnerSpec spec;
  spec.config.iss = 1.0;
  const auto res = cross_validate(d, spec, "Y", 6, LossKind::misclassification, 2);
  REQUIRE(res.per_fold.size() == 6);
  for (double x : res.per_fold) CHECK(x == 0.0);
  CHECK(res.mean == 0.0);
}

TEST_CASE("cross validation with rss loss on a linear gaussian target") {
  Rng rng(8);
  std::vector<std::vector<double>> cols(2);
  for (int i = 0; i < 200; ++i) {
    const double x = fixture::normal_draw(rng);
    cols[0].push_back(x);
    cols[1].push_back(2.0 * x + 0.1 * fixture::normal_draw(rng));
  }
  const Dataset d({{"x", VarKind::continuous, {}}, {"y", VarKind::continuous, {}}},
                  std::vector<std::vector<int>>(2), cols);
  LearnerSpec spec;
  spec.config.test = CiKind::zf;
  const auto res = cross_validate(d, spec, "y", 5, LossKind::rss, 9);
  // Residual variance is about 0.01 per row; 40 rows per fold.
  CHECK(res.mean < 1.5);
  CHECK(res.mean > 0.0);
}
