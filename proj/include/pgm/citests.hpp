#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pgm/common.hpp"
#include "pgm/data.hpp"
#include "pgm/mathfn.hpp"
#include "pgm/matrix.hpp"
#include "pgm/parallel.hpp"
#include "pgm/regress.hpp"
#include "pgm/rng.hpp"

namespace pgm {

struct TestResult {
  double statistic = 0.0;
  std::optional<long long> df;  // absent for permutation tests
  double p_value = 1.0;
  std::string test_name;
  std::string note;  // set for degenerate cases (zero df, |r| = 1, ...)
};

enum class DiscreteTestKind { chi2, g2 };

namespace detail {

// Counts for X,Y within each configuration of Z: n[(z * xc + x) * yc + y].
struct XyzCounts {
  int xc = 0, yc = 0;
  long long zc = 1;
  std::vector<long long> n;
};

// Statistic summed over Z-slices, expected counts from slice margins.
// Slices with zero total contribute neither statistic nor degrees of freedom.
inline double xy_given_z_statistic(const XyzCounts& t, bool use_g2, long long* df_out) {
  double stat = 0.0;
  long long df = 0;
  std::vector<long long> rowm(static_cast<std::size_t>(t.xc));
  std::vector<long long> colm(static_cast<std::size_t>(t.yc));
  for (long long z = 0; z < t.zc; ++z) {
    std::fill(rowm.begin(), rowm.end(), 0);
    std::fill(colm.begin(), colm.end(), 0);
    long long nz = 0;
    for (int x = 0; x < t.xc; ++x)
      for (int y = 0; y < t.yc; ++y) {
        long long o = t.n[static_cast<std::size_t>((z * t.xc + x) * t.yc + y)];
        rowm[static_cast<std::size_t>(x)] += o;
        colm[static_cast<std::size_t>(y)] += o;
        nz += o;
      }
    if (nz == 0) continue;
    df += static_cast<long long>(t.xc - 1) * (t.yc - 1);
    for (int x = 0; x < t.xc; ++x)
      for (int y = 0; y < t.yc; ++y) {
        const double e = double(rowm[static_cast<std::size_t>(x)]) *
                         double(colm[static_cast<std::size_t>(y)]) / double(nz);
        const double o = double(t.n[static_cast<std::size_t>((z * t.xc + x) * t.yc + y)]);
        if (use_g2) {
          if (o > 0.0) stat += 2.0 * o * std::log(o / e);
        } else {
          if (e > 0.0) stat += (o - e) * (o - e) / e;
        }
      }
  }
  if (df_out) *df_out = df;
  return stat;
}

inline XyzCounts xyz_counts(const ContingencyTable& ct) {
  if (ct.target_names().size() != 2)
    throw ArgumentError("discrete test needs exactly two target variables");
  XyzCounts t;
  t.xc = ct.target_cards()[0];
  t.yc = ct.target_cards()[1];
  t.zc = ct.given_configs();
  t.n.resize(static_cast<std::size_t>(t.zc) * t.xc * t.yc);
  for (long long z = 0; z < t.zc; ++z)
    for (int x = 0; x < t.xc; ++x)
      for (int y = 0; y < t.yc; ++y)
        t.n[static_cast<std::size_t>((z * t.xc + x) * t.yc + y)] =
            ct.at(z, static_cast<long long>(x) * t.yc + y);
  return t;
}

}  // namespace detail

/// Pearson chi-squared or G-squared test of X independent of Y given Z,
/// evaluated on a contingency table for exactly two targets.
inline TestResult test_discrete(const ContingencyTable& ct, DiscreteTestKind kind) {
  const auto counts = detail::xyz_counts(ct);
  TestResult r;
  r.test_name = kind == DiscreteTestKind::g2 ? "g2" : "chi2";
  long long df = 0;
  r.statistic = detail::xy_given_z_statistic(counts, kind == DiscreteTestKind::g2, &df);
  r.df = df;
  if (df == 0) {
    r.p_value = 1.0;
    r.note = "no usable degrees of freedom";
  } else {
    r.p_value = chi_squared_sf(r.statistic, double(df));
  }
  return r;
}

/// Partial correlation of x and y given Z, from an inverse correlation
/// submatrix: -w_xy / sqrt(w_xx * w_yy).
inline double partial_correlation(const Matrix& correlation, int x, int y,
                                  const std::vector<int>& z) {
  std::vector<std::size_t> idx{static_cast<std::size_t>(x), static_cast<std::size_t>(y)};
  for (int v : z) idx.push_back(static_cast<std::size_t>(v));
  const Matrix sub = correlation.submatrix(idx);
  if (z.empty()) return sub(0, 1);
  Matrix omega;
  try {
    omega = spd_inverse(sub);
  } catch (const NumericError&) {
    throw NumericError("singular conditioning submatrix in partial correlation");
  }
  return -omega(0, 1) / std::sqrt(omega(0, 0) * omega(1, 1));
}

/// Fisher's Z test of zero partial correlation.
inline TestResult test_fisher_z(const GaussStats& s, const std::string& x, const std::string& y,
                                const std::vector<std::string>& z = {}) {
  const int xi = s.index_of(x), yi = s.index_of(y);
  std::vector<int> zi;
  for (const auto& nm : z) zi.push_back(s.index_of(nm));
  std::vector<int> all{xi, yi};
  all.insert(all.end(), zi.begin(), zi.end());
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end())
    throw ArgumentError("fisher z: variables must be distinct");
  const double dof = double(s.n) - double(zi.size()) - 3.0;
  if (dof < 1.0) throw ArgumentError("fisher z: sample too small for the conditioning set");
  double r = partial_correlation(s.correlation, xi, yi, zi);
  TestResult out;
  out.test_name = "fisher-z";
  if (std::fabs(r) >= 1.0 - 1e-15) {
    r = std::copysign(1.0 - 1e-15, r);
    out.statistic = std::sqrt(dof) * std::atanh(r);
    out.p_value = 0.0;
    out.note = "perfect correlation";
    return out;
  }
  out.statistic = std::sqrt(dof) * std::atanh(r);
  out.p_value = normal_two_sided_p(out.statistic);
  return out;
}

enum class PermutationKind { chi2, g2, zf };

namespace detail {

// Residuals of column y on columns z (with intercept); z empty centres on the mean.
inline std::vector<double> regression_residuals(const Dataset& d, int y, const std::vector<int>& z) {
  const long long n = d.n();
  const LeastSquares ls = least_squares(d, y, z);
  const auto& yc = d.continuous_column(y);
  std::vector<double> res(static_cast<std::size_t>(n));
  for (long long r = 0; r < n; ++r)
    res[static_cast<std::size_t>(r)] = yc[static_cast<std::size_t>(r)] - ls.fitted(d, r, z);
  return res;
}

// |sqrt(n-3) atanh(r)| of two residual vectors; 0 when either is constant.
inline double residual_z_statistic(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= double(n);
  mb /= double(n);
  double saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < n; ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  double r = sab / std::sqrt(saa * sbb);
  r = std::clamp(r, -(1.0 - 1e-15), 1.0 - 1e-15);
  return std::fabs(std::sqrt(double(n) - 3.0) * std::atanh(r));
}

}  // namespace detail

/// Permutation-calibrated p-value with the add-one rule
/// p = (1 + #{permuted >= observed}) / (B + 1).  Discrete kinds shuffle x
/// within each Z-configuration; the continuous kind permutes x-residuals
/// against y-residuals.  Replicate b draws from substream derive_seed(seed, b),
/// so the result is independent of the parallel schedule.
inline TestResult permutation_p(const Dataset& d, const std::string& x, const std::string& y,
                                const std::vector<std::string>& z, PermutationKind kind,
                                long long replicates, std::uint64_t seed) {
  if (replicates < 100) throw ArgumentError("permutation test needs at least 100 replicates");
  TestResult out;
  std::vector<int> exceed(static_cast<std::size_t>(replicates), 0);

  if (kind == PermutationKind::zf) {
    const int xi = d.index_of(x), yi = d.index_of(y);
    std::vector<int> zi;
    for (const auto& nm : z) zi.push_back(d.index_of(nm));
    const auto rx = detail::regression_residuals(d, xi, zi);
    const auto ry = detail::regression_residuals(d, yi, zi);
    const double observed = detail::residual_z_statistic(rx, ry);
    run_indexed(static_cast<std::size_t>(replicates), [&](std::size_t b) {
      Rng rng(derive_seed(seed, b));
      std::vector<double> perm(rx);
      rng.shuffle(perm);
      if (detail::residual_z_statistic(perm, ry) >= observed) exceed[b] = 1;
    });
    out.statistic = observed;
    out.test_name = "zf-permutation";
  } else {
    const int xi = d.index_of(x), yi = d.index_of(y);
    const auto& meta_x = d.variable(xi);
    const auto& meta_y = d.variable(yi);
    if (meta_x.kind != VarKind::discrete || meta_y.kind != VarKind::discrete)
      throw ArgumentError("discrete permutation test needs discrete x and y");
    std::vector<int> zi;
    std::vector<int> zcards;
    for (const auto& nm : z) {
      int v = d.index_of(nm);
      if (d.variable(v).kind != VarKind::discrete)
        throw ArgumentError("discrete permutation test needs discrete conditioning variables");
      zi.push_back(v);
      zcards.push_back(d.variable(v).cardinality());
    }
    long long zsize = 1;
    for (int c : zcards) zsize *= c;
    const long long n = d.n();
    std::vector<long long> zconfig(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<long long>> groups(static_cast<std::size_t>(zsize));
    for (long long r = 0; r < n; ++r) {
      long long zc = 0;
      for (std::size_t i = 0; i < zi.size(); ++i) zc = zc * zcards[i] + d.level(r, zi[i]);
      zconfig[static_cast<std::size_t>(r)] = zc;
      groups[static_cast<std::size_t>(zc)].push_back(r);
    }
    const bool use_g2 = kind == PermutationKind::g2;
    auto statistic_of = [&](const std::vector<int>& xcodes) {
      detail::XyzCounts t;
      t.xc = meta_x.cardinality();
      t.yc = meta_y.cardinality();
      t.zc = zsize;
      t.n.assign(static_cast<std::size_t>(zsize) * t.xc * t.yc, 0);
      for (long long r = 0; r < n; ++r)
        ++t.n[static_cast<std::size_t>(
            (zconfig[static_cast<std::size_t>(r)] * t.xc + xcodes[static_cast<std::size_t>(r)]) * t.yc +
            d.level(r, yi))];
      return detail::xy_given_z_statistic(t, use_g2, nullptr);
    };
    const std::vector<int>& xcol = d.discrete_column(xi);
    const double observed = statistic_of(xcol);
    run_indexed(static_cast<std::size_t>(replicates), [&](std::size_t b) {
      Rng rng(derive_seed(seed, b));
      std::vector<int> perm(xcol);
      for (const auto& rows : groups) {
        // Fisher-Yates within the rows of one conditioning configuration.
        for (std::size_t i = rows.size(); i > 1; --i) {
          std::size_t j = static_cast<std::size_t>(rng.next_below(i));
          std::swap(perm[static_cast<std::size_t>(rows[i - 1])], perm[static_cast<std::size_t>(rows[j])]);
        }
      }
      if (statistic_of(perm) >= observed) exceed[b] = 1;
    });
    out.statistic = observed;
    out.test_name = use_g2 ? "g2-permutation" : "chi2-permutation";
  }

  long long hits = 0;
  for (int e : exceed) hits += e;
  out.p_value = double(1 + hits) / double(replicates + 1);
  return out;
}

}  // namespace pgm
