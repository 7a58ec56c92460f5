#include "ewm/models.hpp"

#include <cmath>

namespace ewm {
namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

Matrix logistic(const Matrix& Z) {
  return Z.unaryExpr([](double z) { return sigmoid(z); });
}

// Output-layer inputs and hidden activations for packed weights.
Vector forward(const Vector& w, const Matrix& Xs, int hidden, Matrix& A) {
  const Index g = Xs.cols();
  const RowMajorMap W(w.data(), hidden, g + 1);
  A = logistic((Xs * W.rightCols(g).transpose()).rowwise() + W.col(0).transpose());
  const auto v = w.segment(hidden * (g + 1), hidden + 1);
  return (A * v.tail(hidden)).array() + v[0];
}

}  // namespace

double AnnModel::objective(const Vector& weights, const Matrix& Xs, const Labels& y, int hidden,
                           double decay, Vector* grad) {
  const Index g = Xs.cols();
  if (weights.size() != weight_count(g, hidden)) throw DataError("ann weight vector has wrong size");
  Matrix A;
  const Vector o = forward(weights, Xs, hidden, A);
  double f = decay * weights.squaredNorm();
  Vector d(o.size());
  for (Index i = 0; i < o.size(); ++i) {
    const double t = y[i] != 0 ? 1.0 : 0.0;
    f += softplus(o[i]) - t * o[i];
    d[i] = sigmoid(o[i]) - t;
  }
  if (grad != nullptr) {
    grad->resize(weights.size());
    const Index in = hidden * (g + 1);
    const auto v = weights.segment(in, hidden + 1);
    (*grad)[in] = d.sum();
    grad->segment(in + 1, hidden) = A.transpose() * d;
    const Matrix dZ = ((d * v.tail(hidden).transpose()).array() * A.array() * (1 - A.array())).matrix();
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> gW(hidden, g + 1);
    gW.col(0) = dZ.colwise().sum().transpose();
    gW.rightCols(g) = dZ.transpose() * Xs;
    grad->head(in) = Eigen::Map<const Vector>(gW.data(), in);
    *grad += 2 * decay * weights;
  }
  return f;
}

AnnModel AnnModel::fit(const Matrix& X, const Labels& y, int hidden, int max_iter, double decay,
                       std::uint64_t seed, FitLog& log) {
  if (hidden < 1) throw ConfigError("ann needs at least one hidden unit");
  AnnModel m;
  m.hidden_ = hidden;
  m.scaler_ = Standardizer::fit(X);
  const Matrix Xs = m.scaler_.apply(X);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> init(-0.5, 0.5);
  Vector w(weight_count(X.cols(), hidden));
  for (Index i = 0; i < w.size(); ++i) w[i] = init(rng);

  // Full-batch descent with a bold-driver step: grow after an improving
  // step, halve and retry after a worsening one.
  Vector grad, trial_grad;
  double f = objective(w, Xs, y, hidden, decay, &grad);
  double step = 0.5 / static_cast<double>(X.rows());
  bool converged = false;
  for (int it = 0; it < max_iter; ++it) {
    const Vector trial = w - step * grad;
    const double ft = objective(trial, Xs, y, hidden, decay, &trial_grad);
    if (std::isfinite(ft) && ft <= f) {
      const double gain = f - ft;
      w = trial;
      grad.swap(trial_grad);
      f = ft;
      step *= 1.1;
      if (gain <= 1e-8 * (std::abs(f) + 1e-8)) {
        converged = true;
        break;
      }
    } else {
      step *= 0.5;
    }
  }
  if (!converged) {
    log.converged = false;
    log.warnings.push_back("ann: iteration limit reached before convergence");
  }
  m.weights_ = w;
  return m;
}

Vector AnnModel::predict(const Matrix& X) const {
  Matrix A;
  const Vector o = forward(weights_, scaler_.apply(X), hidden_, A);
  return o.unaryExpr([](double z) { return sigmoid(z); });
}

ElmModel ElmModel::fit(const Matrix& X, const Labels& y, int hidden, int activation, double ridge,
                       std::uint64_t seed) {
  if (hidden < 1) throw ConfigError("elm needs at least one hidden unit");
  if (activation != 0 && activation != 1) throw ConfigError("elm activation must be 0 or 1");
  if (ridge < 0) throw ConfigError("elm ridge must be non-negative");
  ElmModel m;
  m.activation_ = activation;
  m.scaler_ = Standardizer::fit(X);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> init(-1.0, 1.0);
  m.input_weights_.resize(hidden, X.cols());
  for (Index h = 0; h < hidden; ++h)
    for (Index j = 0; j < X.cols(); ++j) m.input_weights_(h, j) = init(rng);
  m.bias_.resize(hidden);
  for (Index h = 0; h < hidden; ++h) m.bias_[h] = init(rng);

  const Matrix H = m.hidden_activations(X);
  const Vector t = y.cast<double>();
  // Ridge least squares as an augmented ordinary least-squares problem.
  Matrix aug(H.rows() + hidden, hidden);
  aug.topRows(H.rows()) = H;
  aug.bottomRows(hidden) = std::sqrt(ridge) * Matrix::Identity(hidden, hidden);
  Vector rhs = Vector::Zero(aug.rows());
  rhs.head(H.rows()) = t;
  m.beta_ = aug.colPivHouseholderQr().solve(rhs);
  return m;
}

Matrix ElmModel::hidden_activations(const Matrix& X) const {
  const Matrix Z = (scaler_.apply(X) * input_weights_.transpose()).rowwise() + bias_.transpose();
  if (activation_ == 0) return Z.array().tanh().matrix();
  return logistic(Z);
}

Vector ElmModel::predict(const Matrix& X) const {
  return (hidden_activations(X) * beta_).cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace ewm
