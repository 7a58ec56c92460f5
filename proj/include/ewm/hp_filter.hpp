#pragma once

#include "ewm/types.hpp"

namespace ewm {

/// Default smoothing parameter for quarterly financial cycles.
inline constexpr double kFinancialCycleLambda = 400000.0;

/// Number of leading points for which no recursive trend is computed.
inline constexpr Index kHpWarmup = 3;

/// Two-sided Hodrick-Prescott trend: solves (I + lambda D'D) x = y with D the
/// second-difference operator, using a banded LDL' factorization.
Vector hp_trend_two_sided(const Vector& y, double lambda);

struct OneSidedTrend {
  Vector trend;
  /// Leading points that carry the raw value because fewer than four
  /// observations were available; they are low-confidence.
  Index warmup = 0;
};

/// One-sided (real-time) HP trend: trend[t] is the endpoint of the two-sided
/// trend fitted on y[0..t]. Throws DataError naming the first non-finite
/// position.
OneSidedTrend hp_trend_one_sided(const Vector& y, double lambda);

}  // namespace ewm
