#include "ewm/models.hpp"

#include <algorithm>
#include <cmath>

namespace ewm {

KnnModel KnnModel::fit(const Matrix& X, const Labels& y, int k, double order) {
  if (k < 1) throw ConfigError("knn requires k >= 1");
  if (!(order > 0)) throw ConfigError("knn distance order must be positive");
  KnnModel m;
  m.scaler_ = Standardizer::fit(X);
  m.train_ = m.scaler_.apply(X);
  m.labels_ = y;
  m.k_ = static_cast<int>(std::min<Index>(k, X.rows()));
  m.order_ = order;
  return m;
}

Vector KnnModel::predict(const Matrix& X) const {
  const Matrix Q = scaler_.apply(X);
  const Index n = train_.rows();
  Vector out(Q.rows());
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n));
  for (Index q = 0; q < Q.rows(); ++q) {
    for (Index i = 0; i < n; ++i) {
      const auto diff = (train_.row(i) - Q.row(q)).array().abs();
      double d;
      if (order_ == 1.0) d = diff.sum();
      else if (order_ == 2.0) d = diff.square().sum();
      else d = diff.pow(order_).sum();
      dist[static_cast<std::size_t>(i)] = {d, i};
    }
    // Lexicographic (distance, training index) order breaks ties by training order.
    std::nth_element(dist.begin(), dist.begin() + (k_ - 1), dist.end());
    int positives = 0;
    for (int j = 0; j < k_; ++j) positives += labels_[dist[static_cast<std::size_t>(j)].second] != 0;
    out[q] = static_cast<double>(positives) / static_cast<double>(k_);
  }
  return out;
}

}  // namespace ewm
