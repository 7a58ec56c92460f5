#include "ewm/models.hpp"

#include <algorithm>
#include <cmath>

namespace ewm {
namespace {

Matrix with_intercept(const Matrix& X) {
  Matrix Z(X.rows(), X.cols() + 1);
  Z.col(0).setOnes();
  Z.rightCols(X.cols()) = X;
  return Z;
}

double deviance(const Vector& eta, const Labels& y) {
  double d = 0;
  for (Index i = 0; i < eta.size(); ++i) {
    // -log p = log(1 + e^-eta), -log(1-p) = log(1 + e^eta), computed stably.
    const double z = y[i] != 0 ? -eta[i] : eta[i];
    d += z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }
  return 2 * d;
}

Vector probabilities(const Vector& eta) {
  Vector p(eta.size());
  for (Index i = 0; i < eta.size(); ++i) p[i] = sigmoid(eta[i]);
  return p;
}

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

}  // namespace

LogitModel LogitModel::fit(const Matrix& X, const Labels& y, int max_iter, double tol,
                           FitLog& log) {
  const Matrix Z = with_intercept(X);
  const Index p = Z.cols();
  const Vector yd = y.cast<double>().cwiseMin(1.0);
  LogitModel m;
  m.beta_ = Vector::Zero(p);
  Vector eta = Z * m.beta_;
  double dev = deviance(eta, y);
  bool converged = false;
  int it = 0;
  for (; it < max_iter && !converged; ++it) {
    const Vector prob = probabilities(eta);
    const Vector w = (prob.array() * (1 - prob.array())).max(1e-10).matrix();
    const Matrix H = Z.transpose() * w.asDiagonal() * Z;
    const Vector score = Z.transpose() * (yd - prob);
    const Vector step = H.completeOrthogonalDecomposition().solve(score);
    double t = 1.0;
    Vector beta_new = m.beta_ + step;
    Vector eta_new = Z * beta_new;
    double dev_new = deviance(eta_new, y);
    for (int halving = 0; halving < 30 && !(dev_new <= dev); ++halving) {
      t /= 2;
      beta_new = m.beta_ + t * step;
      eta_new = Z * beta_new;
      dev_new = deviance(eta_new, y);
    }
    if (!(dev_new <= dev)) break;
    converged = std::abs(dev - dev_new) < tol * (std::abs(dev_new) + 0.1);
    m.beta_ = beta_new;
    eta = eta_new;
    dev = dev_new;
  }
  m.iterations_ = it;
  if (!converged) {
    log.converged = false;
    log.warnings.push_back("logit: IRLS did not converge in " + std::to_string(max_iter) +
                           " iterations");
  }
  return m;
}

Vector LogitModel::predict(const Matrix& X) const {
  return probabilities((X * beta_.tail(beta_.size() - 1)).array() + beta_[0]);
}

LassoLogitModel LassoLogitModel::fit(const Matrix& X, const Labels& y, double lambda, double tol,
                                     int max_iter, FitLog& log) {
  LassoLogitModel m;
  m.scaler_ = Standardizer::fit(X);
  const Matrix Xs = m.scaler_.apply(X);
  const Index n = Xs.rows(), g = Xs.cols();
  const double nd = static_cast<double>(n);
  const Vector yd = y.cast<double>().cwiseMin(1.0);

  // Penalized objective to maximize: mean log-likelihood - lambda * |beta|_1.
  const auto objective = [&](const Vector& b) {
    const Vector eta = (Xs * b.tail(g)).array() + b[0];
    return -deviance(eta, y) / (2 * nd) - lambda * b.tail(g).lpNorm<1>();
  };

  Vector beta = Vector::Zero(g + 1);
  const double ybar = yd.mean();
  beta[0] = std::log(ybar / (1 - ybar));
  double obj = objective(beta);
  bool converged = false;
  for (int outer = 0; outer < max_iter && !converged; ++outer) {
    const Vector eta = (Xs * beta.tail(g)).array() + beta[0];
    const Vector prob = probabilities(eta);
    const Vector w = (prob.array() * (1 - prob.array())).max(1e-5).matrix();
    const Vector z = eta.array() + (yd - prob).array() / w.array();

    // Coordinate descent on the weighted least-squares surrogate.
    Vector b = beta;
    Vector resid = z - ((Xs * b.tail(g)).array() + b[0]).matrix();
    const double wsum = w.sum();
    for (int sweep = 0; sweep < 1000; ++sweep) {
      double max_change = 0;
      const double d0 = w.dot(resid) / wsum;
      b[0] += d0;
      resid.array() -= d0;
      max_change = std::max(max_change, std::abs(d0));
      for (Index j = 0; j < g; ++j) {
        const auto xj = Xs.col(j);
        const double denom = w.cwiseProduct(xj).dot(xj) / nd;
        if (denom <= 0) continue;
        const double old = b[j + 1];
        const double rho = w.cwiseProduct(xj).dot(resid) / nd + denom * old;
        const double fresh = soft_threshold(rho, lambda) / denom;
        if (fresh != old) {
          resid.noalias() -= (fresh - old) * xj;
          b[j + 1] = fresh;
          max_change = std::max(max_change, std::abs(fresh - old) * std::sqrt(denom));
        }
      }
      if (max_change < tol) break;
    }

    // Step halving keeps the penalized likelihood monotone.
    Vector candidate = b;
    double cand_obj = objective(candidate);
    for (int halving = 0; halving < 30 && !(cand_obj >= obj); ++halving) {
      candidate = (candidate + beta) / 2;
      cand_obj = objective(candidate);
    }
    if (!(cand_obj >= obj)) {
      converged = true;
      break;
    }
    const double change = (candidate - beta).cwiseAbs().maxCoeff();
    beta = candidate;
    obj = cand_obj;
    converged = change < tol;
  }
  if (!converged) {
    log.converged = false;
    log.warnings.push_back("logit_lasso: coordinate descent did not converge");
  }
  m.beta_ = beta;
  return m;
}

Vector LassoLogitModel::coefficients() const {
  const Index g = beta_.size() - 1;
  Vector out(g + 1);
  out.tail(g) = beta_.tail(g).cwiseQuotient(scaler_.scale);
  out[0] = beta_[0] - out.tail(g).dot(scaler_.mean);
  return out;
}

Vector LassoLogitModel::predict(const Matrix& X) const {
  const Index g = beta_.size() - 1;
  return probabilities((scaler_.apply(X) * beta_.tail(g)).array() + beta_[0]);
}

}  // namespace ewm
