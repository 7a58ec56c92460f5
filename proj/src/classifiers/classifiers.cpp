#include "ewm/classifiers.hpp"

#include "ewm/models.hpp"

#include <algorithm>

namespace ewm {

Standardizer Standardizer::fit(const Matrix& X) {
  Standardizer s;
  const double n = static_cast<double>(std::max<Index>(1, X.rows()));
  s.mean = X.colwise().mean().transpose();
  s.scale.resize(X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.mean[j]).square().sum() / std::max(1.0, n - 1.0);
    const double sd = std::sqrt(var);
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& X) const {
  return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

namespace {

std::shared_ptr<const Model> train(const MethodSpec& spec, const Matrix& X, const Labels& y,
                                   const Preference& pref, FitLog& log) {
  switch (spec.family()) {
    case Family::signal_extraction:
      return std::make_shared<SignalExtractionModel>(
          SignalExtractionModel::fit(X, y, pref, spec.get_int("indicator")));
    case Family::lda:
      return std::make_shared<GaussianDiscriminant>(GaussianDiscriminant::fit(X, y, true, log));
    case Family::qda:
      return std::make_shared<GaussianDiscriminant>(GaussianDiscriminant::fit(X, y, false, log));
    case Family::logit:
      return std::make_shared<LogitModel>(
          LogitModel::fit(X, y, spec.get_int("max_iter"), spec.get("tol"), log));
    case Family::logit_lasso:
      return std::make_shared<LassoLogitModel>(LassoLogitModel::fit(
          X, y, spec.get("lambda"), spec.get("tol"), spec.get_int("max_iter"), log));
    case Family::naive_bayes:
      return std::make_shared<NaiveBayesModel>(NaiveBayesModel::fit(X, y, spec.get("var_floor")));
    case Family::knn:
      return std::make_shared<KnnModel>(KnnModel::fit(X, y, spec.get_int("k"), spec.get("distance")));
    case Family::tree:
      if (spec.get_int("prune") == 0) {
        std::vector<Index> rows(static_cast<std::size_t>(X.rows()));
        for (Index i = 0; i < X.rows(); ++i) rows[static_cast<std::size_t>(i)] = i;
        return std::make_shared<ClassificationTree>(
            ClassificationTree::grow(X, y, rows, TreeOptions{spec.get_int("min_leaf"), 0}));
      }
      return std::make_shared<ClassificationTree>(ClassificationTree::fit_pruned(
          X, y, spec.get_int("min_leaf"), spec.get_int("cv_folds"), spec.seed()));
    case Family::random_forest:
      return std::make_shared<RandomForestModel>(RandomForestModel::fit(
          X, y, spec.get_int("trees"), spec.get_int("mtry"), spec.get_int("min_leaf"), spec.seed()));
    case Family::ann:
      return std::make_shared<AnnModel>(AnnModel::fit(X, y, spec.get_int("hidden"),
                                                      spec.get_int("max_iter"), spec.get("decay"),
                                                      spec.seed(), log));
    case Family::elm:
      return std::make_shared<ElmModel>(ElmModel::fit(X, y, spec.get_int("hidden"),
                                                      spec.get_int("activation"), spec.get("ridge"),
                                                      spec.seed()));
    case Family::svm:
      return std::make_shared<SvmModel>(SvmModel::fit(X, y, spec.get("gamma"), spec.get("cost"),
                                                      spec.get("tol"), spec.get_int("platt_folds"),
                                                      spec.seed(), log));
  }
  throw ConfigError("unhandled family");
}

}  // namespace

FittedModel fit(const MethodSpec& spec, const Matrix& X, const Labels& y, const Preference& pref) {
  if (X.rows() == 0 || X.rows() != y.size()) throw DataError("training data empty or misaligned");
  if (!X.allFinite()) throw DataError("training features contain missing values");
  if (!has_both_classes(y)) throw DataError("training data must contain both classes");
  FitLog log;
  FittedModel out;
  out.spec = spec;
  out.features = X.cols();
  out.model = train(spec, X, y, pref, log);
  out.train_probs = out.model->predict(X);
  out.in_sample_probs = out.train_probs;
  std::sort(out.in_sample_probs.data(), out.in_sample_probs.data() + out.in_sample_probs.size());
  out.converged = log.converged;
  out.warnings = std::move(log.warnings);
  return out;
}

FittedModel fit(const MethodSpec& spec, const std::vector<PanelObservation>& train,
                const Preference& pref) {
  const Dataset d = estimation_sample(train);
  return fit(spec, d.X, d.y, pref);
}

Vector predict_proba(const FittedModel& model, const Matrix& X) {
  if (X.cols() != model.features)
    throw DataError("feature dimension " + std::to_string(X.cols()) + " does not match model (" +
                    std::to_string(model.features) + ")");
  return model.model->predict(X);
}

double predict_proba(const FittedModel& model, const Vector& x) {
  return predict_proba(model, Matrix(x.transpose()))[0];
}

double calibrate_ecdf(const Vector& in_sample, double p) {
  if (in_sample.size() == 0) throw DataError("empty ECDF reference sample");
  const double* begin = in_sample.data();
  const double* end = begin + in_sample.size();
  return static_cast<double>(std::upper_bound(begin, end, p) - begin) /
         static_cast<double>(in_sample.size());
}

Vector calibrate_ecdf(const Vector& in_sample, const Vector& p) {
  Vector out(p.size());
  for (Index i = 0; i < p.size(); ++i) out[i] = calibrate_ecdf(in_sample, p[i]);
  return out;
}

Vector calibrated_train_probs(const FittedModel& model) {
  return calibrate_ecdf(model.in_sample_probs, model.train_probs);
}

Vector predict_calibrated(const FittedModel& model, const Matrix& X) {
  return calibrate_ecdf(model.in_sample_probs, predict_proba(model, X));
}

}  // namespace ewm
