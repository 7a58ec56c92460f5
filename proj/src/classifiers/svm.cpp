#include "ewm/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ewm {
namespace {

constexpr double kTau = 1e-12;

Matrix rbf_kernel(const Matrix& A, const Matrix& B, double gamma) {
  const Vector na = A.rowwise().squaredNorm();
  const Vector nb = B.rowwise().squaredNorm();
  Matrix K = -2.0 * (A * B.transpose());
  K.colwise() += na;
  K.rowwise() += nb.transpose();
  return (-gamma * K.array().max(0.0)).exp().matrix();
}

struct SmoResult {
  Vector alpha;
  double rho = 0;
  bool converged = true;
};

// Dual C-SVM on the rows `idx` of a precomputed kernel, with second-order
// working-set selection.
SmoResult smo(const Matrix& K, const Vector& sign, const std::vector<Index>& idx, double cost,
              double tol) {
  const Index l = static_cast<Index>(idx.size());
  auto y = [&](Index t) { return sign[idx[static_cast<std::size_t>(t)]]; };
  auto k = [&](Index a, Index b) {
    return K(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  };
  Vector alpha = Vector::Zero(l);
  Vector G = Vector::Constant(l, -1.0);
  auto upper = [&](Index t) { return alpha[t] >= cost; };
  auto lower = [&](Index t) { return alpha[t] <= 0; };

  const long max_iter = std::max<long>(10000000L, 100L * l);
  SmoResult out;
  long iter = 0;
  for (; iter < max_iter; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity(), gmax2 = gmax;
    Index i = -1;
    for (Index t = 0; t < l; ++t) {
      if (y(t) > 0) {
        if (!upper(t) && -G[t] >= gmax) gmax = -G[t], i = t;
      } else if (!lower(t) && G[t] >= gmax) {
        gmax = G[t], i = t;
      }
    }
    Index j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index t = 0; t < l; ++t) {
      double diff;
      if (y(t) > 0) {
        if (lower(t)) continue;
        diff = gmax + G[t];
        gmax2 = std::max(gmax2, G[t]);
      } else {
        if (upper(t)) continue;
        diff = gmax - G[t];
        gmax2 = std::max(gmax2, -G[t]);
      }
      if (i >= 0 && diff > 0) {
        double quad = k(i, i) + k(t, t) - 2.0 * k(i, t);
        if (quad <= 0) quad = kTau;
        const double obj = -diff * diff / quad;
        if (obj <= best) best = obj, j = t;
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < tol) break;

    const double ai = alpha[i], aj = alpha[j];
    const double qij = y(i) * y(j) * k(i, j);
    if (y(i) != y(j)) {
      double quad = k(i, i) + k(j, j) + 2 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) alpha[j] = 0, alpha[i] = diff;
      } else if (alpha[i] < 0) {
        alpha[i] = 0, alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > cost) alpha[i] = cost, alpha[j] = cost - diff;
      } else if (alpha[j] > cost) {
        alpha[j] = cost, alpha[i] = cost + diff;
      }
    } else {
      double quad = k(i, i) + k(j, j) - 2 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > cost) {
        if (alpha[i] > cost) alpha[i] = cost, alpha[j] = sum - cost;
      } else if (alpha[j] < 0) {
        alpha[j] = 0, alpha[i] = sum;
      }
      if (sum > cost) {
        if (alpha[j] > cost) alpha[j] = cost, alpha[i] = sum - cost;
      } else if (alpha[i] < 0) {
        alpha[i] = 0, alpha[j] = sum;
      }
    }
    const double di = alpha[i] - ai, dj = alpha[j] - aj;
    for (Index t = 0; t < l; ++t)
      G[t] += y(t) * (y(i) * k(t, i) * di + y(j) * k(t, j) * dj);
  }
  out.converged = iter < max_iter;

  double ub = std::numeric_limits<double>::infinity(), lb = -ub, free_sum = 0;
  Index free_count = 0;
  for (Index t = 0; t < l; ++t) {
    const double yg = y(t) * G[t];
    if (upper(t)) {
      if (y(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  out.rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2;
  out.alpha = std::move(alpha);
  return out;
}

// Decision values of a model trained on `train` rows, evaluated at `test` rows.
Vector decision_on(const Matrix& K, const Vector& sign, const std::vector<Index>& train,
                   const std::vector<Index>& test, const SmoResult& r) {
  Vector out(static_cast<Index>(test.size()));
  for (std::size_t q = 0; q < test.size(); ++q) {
    double s = -r.rho;
    for (std::size_t t = 0; t < train.size(); ++t)
      if (r.alpha[static_cast<Index>(t)] > 0)
        s += r.alpha[static_cast<Index>(t)] * sign[train[t]] * K(test[q], train[t]);
    out[static_cast<Index>(q)] = s;
  }
  return out;
}

// Sigmoid 1 / (1 + exp(a f + b)) fitted by Newton's method with backtracking
// on regularized targets.
std::pair<double, double> platt_fit(const Vector& dec, const Vector& sign) {
  double prior1 = 0, prior0 = 0;
  for (Index i = 0; i < sign.size(); ++i) (sign[i] > 0 ? prior1 : prior0) += 1;
  const double hi = (prior1 + 1) / (prior1 + 2), lo = 1 / (prior0 + 2);
  Vector t(sign.size());
  for (Index i = 0; i < sign.size(); ++i) t[i] = sign[i] > 0 ? hi : lo;
  auto objective = [&](double a, double b) {
    double f = 0;
    for (Index i = 0; i < dec.size(); ++i) {
      const double z = dec[i] * a + b;
      f += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1) * z + std::log1p(std::exp(z));
    }
    return f;
  };
  double a = 0, b = std::log((prior0 + 1) / (prior1 + 1));
  double fval = objective(a, b);
  for (int it = 0; it < 100; ++it) {
    double h11 = 1e-12, h22 = 1e-12, h21 = 0, g1 = 0, g2 = 0;
    for (Index i = 0; i < dec.size(); ++i) {
      const double z = dec[i] * a + b;
      double p, q;
      if (z >= 0) {
        p = std::exp(-z) / (1 + std::exp(-z));
        q = 1 / (1 + std::exp(-z));
      } else {
        p = 1 / (1 + std::exp(z));
        q = std::exp(z) / (1 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += dec[i] * dec[i] * d2;
      h22 += d2;
      h21 += dec[i] * d2;
      const double d1 = t[i] - p;
      g1 += dec[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1;
    while (step >= 1e-10) {
      const double na = a + step * da, nb = b + step * db;
      const double nf = objective(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        a = na, b = nb, fval = nf;
        break;
      }
      step /= 2;
    }
    if (step < 1e-10) break;
  }
  return {a, b};
}

}  // namespace

SvmModel SvmModel::fit(const Matrix& X, const Labels& y, double gamma, double cost, double tol,
                       int platt_folds, std::uint64_t seed, FitLog& log) {
  if (!(gamma > 0) || !(cost > 0) || !(tol > 0)) throw ConfigError("svm gamma, cost and tol must be positive");
  SvmModel m;
  m.gamma_ = gamma;
  m.scaler_ = Standardizer::fit(X);
  const Matrix Xs = m.scaler_.apply(X);
  const Index n = X.rows();
  const Matrix K = rbf_kernel(Xs, Xs, gamma);
  Vector sign(n);
  for (Index i = 0; i < n; ++i) sign[i] = y[i] != 0 ? 1.0 : -1.0;

  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  const SmoResult full = smo(K, sign, all, cost, tol);
  if (!full.converged) {
    log.converged = false;
    log.warnings.push_back("svm: SMO iteration limit reached");
  }
  Index sv = 0;
  for (Index i = 0; i < n; ++i) sv += full.alpha[i] > 0;
  m.support_.resize(sv, X.cols());
  m.coef_.resize(sv);
  for (Index i = 0, r = 0; i < n; ++i)
    if (full.alpha[i] > 0) {
      m.support_.row(r) = Xs.row(i);
      m.coef_[r++] = full.alpha[i] * sign[i];
    }
  m.rho_ = full.rho;

  // Out-of-fold decision values for the probability sigmoid.
  Vector dec(n);
  const int folds = static_cast<int>(std::min<Index>(std::max(platt_folds, 2), n));
  std::vector<Index> perm = all;
  std::mt19937_64 rng(mix_seed(seed, 0x706c6174ULL));
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int f = 0; f < folds; ++f) {
    std::vector<Index> train, test;
    for (Index p = 0; p < n; ++p)
      (p % folds == f ? test : train).push_back(perm[static_cast<std::size_t>(p)]);
    std::sort(train.begin(), train.end());
    bool pos = false, neg = false;
    for (Index i : train) (sign[i] > 0 ? pos : neg) = true;
    if (pos && neg) {
      const SmoResult r = smo(K, sign, train, cost, tol);
      const Vector d = decision_on(K, sign, train, test, r);
      for (std::size_t q = 0; q < test.size(); ++q) dec[test[q]] = d[static_cast<Index>(q)];
    } else {
      for (Index i : test) dec[i] = pos ? 1.0 : (neg ? -1.0 : 0.0);
    }
  }
  std::tie(m.platt_a_, m.platt_b_) = platt_fit(dec, sign);
  return m;
}

Vector SvmModel::decision_function(const Matrix& X) const {
  const Matrix K = rbf_kernel(scaler_.apply(X), support_, gamma_);
  return (K * coef_).array() - rho_;
}

Vector SvmModel::predict(const Matrix& X) const {
  const Vector f = decision_function(X);
  return f.unaryExpr([&](double v) { return sigmoid(-(platt_a_ * v + platt_b_)); });
}

}  // namespace ewm
