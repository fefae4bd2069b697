#pragma once

#include <vector>

#include "pgm/common.hpp"
#include "pgm/data.hpp"
#include "pgm/matrix.hpp"

namespace pgm::detail {

struct LeastSquares {
  std::vector<double> beta;  // intercept first, then one slope per regressor
  double rss = 0.0;

  double fitted(const Dataset& d, long long row, const std::vector<int>& regressors) const {
    double m = beta[0];
    for (std::size_t j = 0; j < regressors.size(); ++j)
      m += beta[j + 1] * d.value(row, regressors[j]);
    return m;
  }
};

/// Ordinary least squares of column y on the given columns plus an intercept,
/// solved through the normal equations.  Throws NumericError when the design
/// is singular.
inline LeastSquares least_squares(const Dataset& d, int y, const std::vector<int>& regressors) {
  const long long n = d.n();
  const int k = static_cast<int>(regressors.size());
  Matrix xtx(static_cast<std::size_t>(k) + 1, static_cast<std::size_t>(k) + 1);
  std::vector<double> xty(static_cast<std::size_t>(k) + 1, 0.0);
  const auto& yc = d.continuous_column(y);
  std::vector<double> xr(static_cast<std::size_t>(k) + 1, 1.0);
  for (long long r = 0; r < n; ++r) {
    for (int j = 0; j < k; ++j)
      xr[static_cast<std::size_t>(j) + 1] = d.value(r, regressors[static_cast<std::size_t>(j)]);
    for (int a = 0; a <= k; ++a) {
      for (int b = a; b <= k; ++b)
        xtx(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) +=
            xr[static_cast<std::size_t>(a)] * xr[static_cast<std::size_t>(b)];
      xty[static_cast<std::size_t>(a)] += xr[static_cast<std::size_t>(a)] * yc[static_cast<std::size_t>(r)];
    }
  }
  for (int a = 0; a <= k; ++a)
    for (int b = 0; b < a; ++b)
      xtx(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) =
          xtx(static_cast<std::size_t>(b), static_cast<std::size_t>(a));
  LeastSquares ls;
  ls.beta = spd_solve(xtx, xty);
  for (long long r = 0; r < n; ++r) {
    const double e = yc[static_cast<std::size_t>(r)] - ls.fitted(d, r, regressors);
    ls.rss += e * e;
  }
  return ls;
}

}  // namespace pgm::detail
