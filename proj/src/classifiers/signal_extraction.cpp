#include "ewm/models.hpp"

#include <algorithm>

namespace ewm {

std::vector<IndicatorRank> signal_extraction_rank(const Matrix& X, const Labels& y,
                                                  const Preference& pref) {
  if (X.cols() < 1) throw DataError("signal extraction needs at least one indicator");
  std::vector<IndicatorRank> out;
  for (Index j = 0; j < X.cols(); ++j) {
    IndicatorRank best;
    best.column = j;
    for (int direction : {1, -1}) {
      const Vector oriented = static_cast<double>(direction) * X.col(j);
      const ThresholdChoice c = optimize_cutoff(oriented, y, pref);
      if (direction == 1 || c.ur > best.ur) {
        best.direction = direction;
        best.cutoff = c.tau;
        best.ur = c.ur;
      }
    }
    out.push_back(best);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const IndicatorRank& a, const IndicatorRank& b) { return a.ur > b.ur; });
  return out;
}

SignalExtractionModel SignalExtractionModel::fit(const Matrix& X, const Labels& y,
                                                 const Preference& pref, int indicator) {
  if (indicator >= X.cols())
    throw ConfigError("signal extraction indicator " + std::to_string(indicator) +
                      " out of range");
  SignalExtractionModel m;
  if (indicator < 0) {
    m.rank_ = signal_extraction_rank(X, y, pref).front();
  } else {
    m.rank_ = signal_extraction_rank(X.col(indicator), y, pref).front();
    m.rank_.column = indicator;
  }
  m.sorted_oriented_ = static_cast<double>(m.rank_.direction) * X.col(m.rank_.column);
  std::sort(m.sorted_oriented_.data(), m.sorted_oriented_.data() + m.sorted_oriented_.size());
  return m;
}

Vector SignalExtractionModel::predict(const Matrix& X) const {
  const Vector oriented = static_cast<double>(rank_.direction) * X.col(rank_.column);
  return calibrate_ecdf(sorted_oriented_, oriented);
}

}  // namespace ewm
