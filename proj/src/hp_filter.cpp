#include "ewm/hp_filter.hpp"

#include <cmath>

namespace ewm {
namespace {

void check_finite(const Vector& y) {
  for (Index i = 0; i < y.size(); ++i)
    if (!std::isfinite(y[i]))
      throw DataError("HP filter input is not finite at position " + std::to_string(i));
}

// Symmetric pentadiagonal solve. d, e, f hold the main diagonal and the first
// and second super-diagonals; all three are overwritten by the factorization.
Vector solve_pentadiagonal(Vector d, Vector e, Vector f, Vector b) {
  const Index n = d.size();
  // LDL' with unit lower-triangular L of bandwidth 2: l1[i] = L(i+1,i), l2[i] = L(i+2,i).
  for (Index i = 0; i < n; ++i) {
    if (i >= 1) d[i] -= e[i - 1] * e[i - 1] * d[i - 1];
    if (i >= 2) d[i] -= f[i - 2] * f[i - 2] * d[i - 2];
    if (i + 1 < n) {
      double v = e[i];
      if (i >= 1) v -= e[i - 1] * d[i - 1] * f[i - 1];
      e[i] = v / d[i];
    }
    if (i + 2 < n) f[i] = f[i] / d[i];
  }
  for (Index i = 0; i < n; ++i) {
    if (i >= 1) b[i] -= e[i - 1] * b[i - 1];
    if (i >= 2) b[i] -= f[i - 2] * b[i - 2];
  }
  for (Index i = 0; i < n; ++i) b[i] /= d[i];
  for (Index i = n - 1; i >= 0; --i) {
    if (i + 1 < n) b[i] -= e[i] * b[i + 1];
    if (i + 2 < n) b[i] -= f[i] * b[i + 2];
  }
  return b;
}

}  // namespace

Vector hp_trend_two_sided(const Vector& y, double lambda) {
  if (!(lambda > 0)) throw ConfigError("HP lambda must be positive");
  check_finite(y);
  const Index n = y.size();
  if (n < 3) return y;
  Vector d = Vector::Ones(n), e = Vector::Zero(n), f = Vector::Zero(n);
  constexpr double c[3] = {1.0, -2.0, 1.0};
  for (Index r = 0; r + 2 < n; ++r) {
    for (int a = 0; a < 3; ++a) {
      d[r + a] += lambda * c[a] * c[a];
      if (a < 2) e[r + a] += lambda * c[a] * c[a + 1];
    }
    f[r] += lambda * c[0] * c[2];
  }
  return solve_pentadiagonal(std::move(d), std::move(e), std::move(f), y);
}

OneSidedTrend hp_trend_one_sided(const Vector& y, double lambda) {
  if (!(lambda > 0)) throw ConfigError("HP lambda must be positive");
  check_finite(y);
  OneSidedTrend out;
  const Index n = y.size();
  out.trend = y;
  out.warmup = std::min(n, kHpWarmup);
  for (Index t = kHpWarmup; t < n; ++t) {
    const Vector prefix_trend = hp_trend_two_sided(y.head(t + 1), lambda);
    out.trend[t] = prefix_trend[t];
  }
  return out;
}

}  // namespace ewm
