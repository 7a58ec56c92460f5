#include "ewm/models.hpp"

#include <cmath>

namespace ewm {

NaiveBayesModel NaiveBayesModel::fit(const Matrix& X, const Labels& y, double var_floor) {
  const Index g = X.cols();
  NaiveBayesModel m;
  m.mean_ = Matrix::Zero(2, g);
  m.var_ = Matrix::Zero(2, g);
  double count[2] = {0, 0};
  for (Index i = 0; i < X.rows(); ++i) {
    const int c = y[i] != 0 ? 1 : 0;
    m.mean_.row(c) += X.row(i);
    count[c] += 1;
  }
  for (int c = 0; c < 2; ++c) m.mean_.row(c) /= count[c];
  for (Index i = 0; i < X.rows(); ++i) {
    const int c = y[i] != 0 ? 1 : 0;
    m.var_.row(c).array() += (X.row(i) - m.mean_.row(c)).array().square();
  }
  for (int c = 0; c < 2; ++c) {
    m.var_.row(c) /= count[c];
    m.var_.row(c) = m.var_.row(c).cwiseMax(var_floor);
    m.log_prior_[c] = std::log(count[c] / static_cast<double>(X.rows()));
  }
  return m;
}

Vector NaiveBayesModel::predict(const Matrix& X) const {
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    double score[2];
    for (int c = 0; c < 2; ++c) {
      const auto d = (X.row(i) - mean_.row(c)).array();
      score[c] = log_prior_[c] -
                 0.5 * (d.square() / var_.row(c).array() + var_.row(c).array().log()).sum();
    }
    out[i] = sigmoid(score[1] - score[0]);
  }
  return out;
}

}  // namespace ewm
