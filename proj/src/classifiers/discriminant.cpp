#include "ewm/models.hpp"

#include <cmath>

namespace ewm {
namespace {

constexpr double kRcondFloor = 1e-12;

// Inverts a covariance matrix, adding eps * I (eps = 1e-6 * trace / G) when it
// is near-singular.
Matrix regularized_inverse(Matrix cov, double& log_det, FitLog& log, const char* what) {
  const Index g = cov.rows();
  Eigen::LDLT<Matrix> ldlt(cov);
  const Vector d = ldlt.vectorD();
  const bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < kRcondFloor ||
                        !(d.minCoeff() > kRcondFloor * d.cwiseAbs().maxCoeff());
  if (singular) {
    const double trace = cov.trace();
    const double eps = trace > 0 ? 1e-6 * trace / static_cast<double>(g) : 1e-6;
    cov.diagonal().array() += eps;
    ldlt.compute(cov);
    log.warnings.push_back(std::string(what) + ": near-singular covariance regularized");
  }
  log_det = ldlt.vectorD().array().log().sum();
  return ldlt.solve(Matrix::Identity(g, g));
}

}  // namespace

GaussianDiscriminant GaussianDiscriminant::fit(const Matrix& X, const Labels& y, bool pooled,
                                               FitLog& log) {
  const Index g = X.cols();
  GaussianDiscriminant m;
  m.pooled_ = pooled;
  Index count[2] = {0, 0};
  for (int c = 0; c < 2; ++c) m.mean_[c] = Vector::Zero(g);
  for (Index i = 0; i < X.rows(); ++i) {
    const int c = y[i] != 0 ? 1 : 0;
    m.mean_[c] += X.row(i).transpose();
    ++count[c];
  }
  if (!pooled) {
    for (int c = 0; c < 2; ++c)
      if (count[c] <= g)
        throw DataError("QDA needs more than " + std::to_string(g) +
                        " observations per class, class " + std::to_string(c) + " has " +
                        std::to_string(count[c]));
  }
  Matrix scatter[2] = {Matrix::Zero(g, g), Matrix::Zero(g, g)};
  for (int c = 0; c < 2; ++c) m.mean_[c] /= static_cast<double>(count[c]);
  for (Index i = 0; i < X.rows(); ++i) {
    const int c = y[i] != 0 ? 1 : 0;
    const Vector d = X.row(i).transpose() - m.mean_[c];
    scatter[c].noalias() += d * d.transpose();
  }
  const double n = static_cast<double>(X.rows());
  for (int c = 0; c < 2; ++c) m.prior_[c] = static_cast<double>(count[c]) / n;
  if (pooled) {
    const Matrix cov = (scatter[0] + scatter[1]) / n;
    m.cov_[0] = m.cov_[1] = cov;
    m.cov_inv_[0] = regularized_inverse(cov, m.log_det_[0], log, "lda");
    m.cov_inv_[1] = m.cov_inv_[0];
    m.log_det_[1] = m.log_det_[0];
  } else {
    for (int c = 0; c < 2; ++c) {
      m.cov_[c] = scatter[c] / static_cast<double>(count[c]);
      m.cov_inv_[c] = regularized_inverse(m.cov_[c], m.log_det_[c], log, "qda");
    }
  }
  return m;
}

Vector GaussianDiscriminant::predict(const Matrix& X) const {
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    double score[2];
    for (int c = 0; c < 2; ++c) {
      const Vector d = X.row(i).transpose() - mean_[c];
      score[c] = std::log(prior_[c]) - 0.5 * log_det_[c] - 0.5 * d.dot(cov_inv_[c] * d);
    }
    out[i] = sigmoid(score[1] - score[0]);
  }
  return out;
}

}  // namespace ewm
