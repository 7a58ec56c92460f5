#pragma once

// Concrete classifier families behind ewm::fit(). Exposed so that tests can
// reach learned parameters and internal objectives.

#include "ewm/classifiers.hpp"

#include <cmath>
#include <random>

namespace ewm {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Column-wise standardization with training means and standard deviations;
/// constant columns keep scale 1.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Matrix& X);
  Matrix apply(const Matrix& X) const;
};

struct FitLog {
  bool converged = true;
  std::vector<std::string> warnings;
};

class SignalExtractionModel : public Model {
 public:
  /// indicator < 0 selects the column with the best in-sample Usefulness.
  static SignalExtractionModel fit(const Matrix& X, const Labels& y, const Preference& pref,
                                   int indicator);
  Vector predict(const Matrix& X) const override;

  Index column() const { return rank_.column; }
  const IndicatorRank& rank() const { return rank_; }

 private:
  IndicatorRank rank_;
  Vector sorted_oriented_;
};

/// Gaussian class-conditional model: LDA when covariances are pooled, QDA otherwise.
class GaussianDiscriminant : public Model {
 public:
  static GaussianDiscriminant fit(const Matrix& X, const Labels& y, bool pooled, FitLog& log);
  Vector predict(const Matrix& X) const override;

  const Vector& mean(int cls) const { return mean_[cls]; }
  const Matrix& covariance(int cls) const { return cov_[cls]; }
  double prior(int cls) const { return prior_[cls]; }

 private:
  bool pooled_ = true;
  Vector mean_[2];
  Matrix cov_[2];
  Matrix cov_inv_[2];
  double log_det_[2] = {0, 0};
  double prior_[2] = {0, 0};
};

class LogitModel : public Model {
 public:
  /// Iteratively reweighted least squares with step halving.
  static LogitModel fit(const Matrix& X, const Labels& y, int max_iter, double tol, FitLog& log);
  Vector predict(const Matrix& X) const override;

  /// Intercept first.
  const Vector& coefficients() const { return beta_; }
  int iterations() const { return iterations_; }

 private:
  Vector beta_;
  int iterations_ = 0;
};

class LassoLogitModel : public Model {
 public:
  /// Maximizes mean log-likelihood - lambda * sum |beta_j| on standardized
  /// features by cyclic coordinate descent inside a Newton outer loop.
  static LassoLogitModel fit(const Matrix& X, const Labels& y, double lambda, double tol,
                             int max_iter, FitLog& log);
  Vector predict(const Matrix& X) const override;

  /// Coefficients on the original feature scale, intercept first.
  Vector coefficients() const;
  const Vector& standardized_coefficients() const { return beta_; }

 private:
  Standardizer scaler_;
  Vector beta_;  // intercept first, standardized features
};

class NaiveBayesModel : public Model {
 public:
  static NaiveBayesModel fit(const Matrix& X, const Labels& y, double var_floor);
  Vector predict(const Matrix& X) const override;

 private:
  Matrix mean_;  // 2 x G
  Matrix var_;   // 2 x G
  double log_prior_[2] = {0, 0};
};

class KnnModel : public Model {
 public:
  static KnnModel fit(const Matrix& X, const Labels& y, int k, double order);
  Vector predict(const Matrix& X) const override;

 private:
  Standardizer scaler_;
  Matrix train_;
  Labels labels_;
  int k_ = 1;
  double order_ = 2;
};

struct TreeOptions {
  int min_leaf = 5;
  /// Predictors sampled per split; 0 or >= G means all, in column order.
  int mtry = 0;
};

struct TreeNode {
  int feature = -1;
  double threshold = 0;
  int left = -1;
  int right = -1;
  double prob = 0;
  Index count = 0;
  /// Squared-error risk of the node as a leaf, divided by the training size.
  double risk = 0;

  bool leaf() const { return feature < 0; }
};

/// CART classification tree grown by Gini impurity; leaves predict the
/// training share of class 1.
class ClassificationTree : public Model {
 public:
  /// `rng` is consulted only when options.mtry samples a strict subset.
  static ClassificationTree grow(const Matrix& X, const Labels& y, const std::vector<Index>& rows,
                                 const TreeOptions& options, std::mt19937_64* rng = nullptr);

  /// Grows a full tree and prunes it at the cost-complexity level with the
  /// lowest `folds`-fold cross-validated squared error.
  static ClassificationTree fit_pruned(const Matrix& X, const Labels& y, int min_leaf, int folds,
                                       std::uint64_t seed);

  Vector predict(const Matrix& X) const override;
  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  /// Weakest-link complexity levels, ascending, starting at 0.
  std::vector<double> pruning_sequence() const;
  /// Smallest subtree minimizing risk + alpha * leaves.
  ClassificationTree pruned(double alpha) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  Index leaf_count() const;

 private:
  std::vector<TreeNode> nodes_;
};

class RandomForestModel : public Model {
 public:
  static RandomForestModel fit(const Matrix& X, const Labels& y, int trees, int mtry, int min_leaf,
                               std::uint64_t seed);
  Vector predict(const Matrix& X) const override;

  /// Generator used for tree t: draws its bootstrap rows, then its split predictors.
  static std::mt19937_64 tree_rng(std::uint64_t seed, int t);
  const std::vector<ClassificationTree>& trees() const { return trees_; }

 private:
  std::vector<ClassificationTree> trees_;
};

/// n draws with replacement from 0..n-1.
std::vector<Index> bootstrap_rows(std::mt19937_64& rng, Index n);

/// Single-hidden-layer network with logistic units.
class AnnModel : public Model {
 public:
  static AnnModel fit(const Matrix& X, const Labels& y, int hidden, int max_iter, double decay,
                      std::uint64_t seed, FitLog& log);
  Vector predict(const Matrix& X) const override;

  /// Cross-entropy plus decay * squared weights, for weights packed as
  /// [hidden x (G+1) input layer, row-major | (hidden+1) output layer].
  /// Fills `grad` when non-null.
  static double objective(const Vector& weights, const Matrix& Xs, const Labels& y, int hidden,
                          double decay, Vector* grad);
  static Index weight_count(Index features, int hidden) { return hidden * (features + 1) + hidden + 1; }

 private:
  Standardizer scaler_;
  Vector weights_;
  int hidden_ = 0;
};

class ElmModel : public Model {
 public:
  /// activation 0 = tan-sigmoid, 1 = logistic.
  static ElmModel fit(const Matrix& X, const Labels& y, int hidden, int activation, double ridge,
                      std::uint64_t seed);
  Vector predict(const Matrix& X) const override;

  Matrix hidden_activations(const Matrix& X) const;
  const Vector& output_weights() const { return beta_; }

 private:
  Standardizer scaler_;
  Matrix input_weights_;  // hidden x G
  Vector bias_;
  Vector beta_;
  int activation_ = 0;
};

/// C-SVM with an RBF kernel trained by SMO, with Platt-scaled probabilities.
class SvmModel : public Model {
 public:
  static SvmModel fit(const Matrix& X, const Labels& y, double gamma, double cost, double tol,
                      int platt_folds, std::uint64_t seed, FitLog& log);
  Vector predict(const Matrix& X) const override;
  Vector decision_function(const Matrix& X) const;

  double platt_a() const { return platt_a_; }
  double platt_b() const { return platt_b_; }
  Index support_vector_count() const { return support_.rows(); }

 private:
  Standardizer scaler_;
  Matrix support_;
  Vector coef_;  // alpha_i * y_i
  double rho_ = 0;
  double gamma_ = 0;
  double platt_a_ = -1;
  double platt_b_ = 0;
};

}  // namespace ewm
