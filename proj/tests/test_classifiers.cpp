#include "ewm/classifiers.hpp"
#include "ewm/models.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace ewm;
using namespace ewm::testing;

namespace {

std::vector<Index> all_rows(Index n) {
  std::vector<Index> r(static_cast<std::size_t>(n));
  std::iota(r.begin(), r.end(), Index{0});
  return r;
}

}  // namespace

TEST_CASE("every family has a benchmark spec that validates") {
  for (Family f : all_families()) {
    const MethodSpec s = MethodSpec::benchmark(f, 7);
    CHECK(parse_family(to_string(f)) == f);
    CHECK(s.family() == f);
    for (const ParamInfo& p : param_schema(f)) CHECK(s.params().count(p.name) == 1);
  }
  MethodSpec knn(Family::knn, {{"k", 2}, {"distance", 1}});
  CHECK(knn.get_int("k") == 2);
  CHECK(knn.get("distance") == 1.0);
  CHECK_THROWS_AS(MethodSpec(Family::knn, {{"k", 0}}), ConfigError);
  CHECK_THROWS_AS(MethodSpec(Family::knn, {{"neighbours", 3}}), ConfigError);
  CHECK_THROWS_AS(parse_family("boosting"), ConfigError);
  CHECK(MethodSpec::benchmark(Family::random_forest).get_int("trees") == 180);
  CHECK(MethodSpec::benchmark(Family::random_forest).get_int("mtry") == 5);
  CHECK(MethodSpec::benchmark(Family::ann).get_int("hidden") == 8);
  CHECK(MethodSpec::benchmark(Family::elm).get_int("hidden") == 300);
  CHECK(MethodSpec::benchmark(Family::svm).get("gamma") == 0.4);
  CHECK(MethodSpec::benchmark(Family::logit_lasso).get("lambda") == 0.0012);
}

TEST_CASE("ECDF calibration counts in-sample values at or below p") {
  const Vector in = vector_of({0.1, 0.2, 0.2, 0.9});
  CHECK(calibrate_ecdf(in, 0.2) == 0.75);
  CHECK(calibrate_ecdf(in, 0.9) == 1.0);
  CHECK(calibrate_ecdf(in, 0.05) == 0.0);
  CHECK(calibrate_ecdf(in, 0.5) == 0.75);
}

TEST_CASE("logit without information predicts the class frequency") {
  Matrix X = Matrix::Zero(40, 2);
  Labels y(40);
  for (Index i = 0; i < 40; ++i) y[i] = i % 2;
  const FittedModel m = fit(MethodSpec::benchmark(Family::logit), X, y);
  CHECK(predict_proba(m, Vector(Vector::Zero(2))) == doctest::Approx(0.5).epsilon(1e-12));
  const auto& lm = dynamic_cast<const LogitModel&>(*m.model);
  CHECK(std::abs(lm.coefficients()[0]) < 1e-12);
}

TEST_CASE("logit matches an independent likelihood maximizer") {
  std::mt19937_64 rng(21);
  Matrix X;
  Labels y;
  logistic_sample(rng, 200, X, y);
  FitLog log;
  const LogitModel m = LogitModel::fit(X, y, 100, 1e-10, log);
  const Vector oracle = likelihood_oracle(X, y);
  CHECK(log.converged);
  CHECK((m.coefficients() - oracle).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("lasso logit with zero penalty matches logit") {
  std::mt19937_64 rng(22);
  Matrix X;
  Labels y;
  gaussian_classes(rng, 300, 3, 0.8, X, y);
  FitLog a, b;
  const LogitModel plain = LogitModel::fit(X, y, 100, 1e-10, a);
  const LassoLogitModel lasso = LassoLogitModel::fit(X, y, 0.0, 1e-10, 1000, b);
  CHECK((plain.coefficients() - lasso.coefficients()).cwiseAbs().maxCoeff() < 1e-3);
  const LassoLogitModel heavy = LassoLogitModel::fit(X, y, 10.0, 1e-10, 1000, b);
  CHECK(heavy.standardized_coefficients().tail(3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("LDA posterior equals the Gaussian density ratio") {
  std::mt19937_64 rng(23);
  Matrix X;
  Labels y;
  gaussian_classes(rng, 120, 3, 1.0, X, y);
  FitLog log;
  const GaussianDiscriminant m = GaussianDiscriminant::fit(X, y, true, log);
  CHECK(log.warnings.empty());

  Vector mean[2] = {Vector::Zero(3), Vector::Zero(3)};
  double count[2] = {0, 0};
  for (Index i = 0; i < X.rows(); ++i) {
    mean[y[i]] += X.row(i).transpose();
    count[y[i]] += 1;
  }
  for (int c = 0; c < 2; ++c) mean[c] /= count[c];
  Matrix cov = Matrix::Zero(3, 3);
  for (Index i = 0; i < X.rows(); ++i) {
    const Vector d = X.row(i).transpose() - mean[y[i]];
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(X.rows());
  const double prior1 = count[1] / static_cast<double>(X.rows());

  std::normal_distribution<double> z;
  for (int k = 0; k < 25; ++k) {
    Vector x(3);
    for (Index j = 0; j < 3; ++j) x[j] = z(rng);
    const double f1 = prior1 * gauss_density(x, mean[1], cov);
    const double f0 = (1 - prior1) * gauss_density(x, mean[0], cov);
    CHECK(std::abs(m.predict(x.transpose())[0] - f1 / (f0 + f1)) < 1e-8);
  }
}

TEST_CASE("singular covariance is regularized with a warning") {
  Matrix X(20, 2);
  Labels y(20);
  for (Index i = 0; i < 20; ++i) {
    X(i, 0) = static_cast<double>(i % 5);
    X(i, 1) = 2 * X(i, 0);
    y[i] = i < 10;
  }
  const FittedModel m = fit(MethodSpec::benchmark(Family::lda), X, y);
  CHECK_FALSE(m.warnings.empty());
  CHECK(m.train_probs.allFinite());
}

TEST_CASE("QDA refuses classes not larger than the feature count") {
  std::mt19937_64 rng(24);
  Matrix X;
  Labels y;
  gaussian_classes(rng, 60, 4, 1.0, X, y);
  Labels few = y;
  Index kept = 0;
  for (Index i = 0; i < few.size(); ++i)
    if (few[i] == 1 && ++kept > 4) few[i] = 0;
  CHECK_THROWS_AS(fit(MethodSpec::benchmark(Family::qda), X, few), DataError);
  for (Index i = 0; i < few.size(); ++i)
    if (few[i] == 0 && y[i] == 1) {
      few[i] = 1;
      break;
    }
  CHECK_NOTHROW(fit(MethodSpec::benchmark(Family::qda), X, few));
}

TEST_CASE("naive Bayes with identical classes and equal priors gives one half") {
  Matrix X(8, 2);
  X << 1, 2, 3, 4, 1, 2, 3, 4, 0, 1, 0, 1, 0, 1, 0, 1;
  Labels y = labels_of({1, 1, 0, 0, 1, 1, 0, 0});
  X.row(2) = X.row(0);
  X.row(3) = X.row(1);
  X.row(6) = X.row(4);
  X.row(7) = X.row(5);
  const FittedModel m = fit(MethodSpec::benchmark(Family::naive_bayes), X, y);
  CHECK(predict_proba(m, vector_of({0.3, -2})) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("KNN with unanimous neighbours returns certainty") {
  Matrix X(6, 1);
  X << 0, 0.1, 0.2, 5, 5.1, 5.2;
  const Labels y = labels_of({1, 1, 1, 0, 0, 0});
  const FittedModel m = fit(MethodSpec(Family::knn, {{"k", 2}, {"distance", 1}}), X, y);
  CHECK(predict_proba(m, vector_of({0.05})) == 1.0);
  CHECK(predict_proba(m, vector_of({5.05})) == 0.0);
  CHECK_THROWS_AS(predict_proba(m, vector_of({1, 2})), DataError);
}

TEST_CASE("signal extraction finds perfect and flipped indicators") {
  const Labels y = labels_of({1, 0, 1, 0, 0, 1, 0, 0});
  Matrix X(8, 3);
  for (Index i = 0; i < 8; ++i) {
    X(i, 0) = 3.0;
    X(i, 1) = static_cast<double>(y[i]) + 0.01 * static_cast<double>(i);
    X(i, 2) = -X(i, 1);
  }
  const Preference pref(0.8);
  const auto ranks = signal_extraction_rank(X, y, pref);
  REQUIRE(ranks.size() == 3);
  CHECK(ranks[0].column == 1);
  CHECK(ranks[0].direction == 1);
  CHECK(ranks[0].ur == 1.0);
  CHECK(ranks[1].column == 2);
  CHECK(ranks[1].direction == -1);
  CHECK(ranks[1].ur == 1.0);
  CHECK(ranks[2].column == 0);
  CHECK(ranks[2].ur <= 0.0);
}

TEST_CASE("ELM output weights leave residuals orthogonal to the hidden layer") {
  std::mt19937_64 rng(25);
  Matrix X;
  Labels y;
  gaussian_classes(rng, 400, 5, 0.8, X, y);
  const Vector t = y.cast<double>();
  auto residual = [&](const ElmModel& m) { return Vector(t - m.hidden_activations(X) * m.output_weights()); };

  const ElmModel bench = ElmModel::fit(X, y, 300, 0, 1e-8, 3);
  CHECK((bench.hidden_activations(X).transpose() * residual(bench)).cwiseAbs().maxCoeff() < 1e-6);
  for (int activation : {0, 1}) {
    const ElmModel plain = ElmModel::fit(X, y, 300, activation, 0.0, 3);
    CHECK((plain.hidden_activations(X).transpose() * residual(plain)).cwiseAbs().maxCoeff() < 1e-6);
    // With a ridge term the normal equations read H'r = ridge * beta.
    const ElmModel ridge = ElmModel::fit(X, y, 300, activation, 1e-8, 3);
    const Vector normal = ridge.hidden_activations(X).transpose() * residual(ridge) - 1e-8 * ridge.output_weights();
    CHECK(normal.cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("ANN analytic gradient matches central differences") {
  std::mt19937_64 rng(26);
  Matrix X;
  Labels y;
  gaussian_classes(rng, 80, 4, 0.7, X, y);
  const Matrix xs = Standardizer::fit(X).apply(X);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const int hidden = 5;
  for (int rep = 0; rep < 10; ++rep) {
    Vector w(AnnModel::weight_count(4, hidden));
    for (Index i = 0; i < w.size(); ++i) w[i] = u(rng) * (1 + rep);
    Vector grad;
    AnnModel::objective(w, xs, y, hidden, 0.005, &grad);
    Vector fd(w.size());
    for (Index i = 0; i < w.size(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(w[i]));
      Vector a = w, b = w;
      a[i] += h;
      b[i] -= h;
      fd[i] = (AnnModel::objective(a, xs, y, hidden, 0.005, nullptr) -
               AnnModel::objective(b, xs, y, hidden, 0.005, nullptr)) /
              (2 * h);
    }
    CHECK((grad - fd).norm() / std::max(fd.norm(), 1e-12) < 1e-5);
  }
}

TEST_CASE("forest of one tree with every predictor equals a tree on a bootstrap") {
  std::mt19937_64 rng(27);
  Matrix X;
  Labels y;
  gaussian_classes(rng, 150, 4, 0.9, X, y);
  const RandomForestModel forest = RandomForestModel::fit(X, y, 1, 4, 3, 99);
  std::mt19937_64 tree_rng = RandomForestModel::tree_rng(99, 0);
  const std::vector<Index> rows = bootstrap_rows(tree_rng, X.rows());
  const ClassificationTree tree = ClassificationTree::grow(X, y, rows, TreeOptions{3, 0});
  CHECK(forest.predict(X) == tree.predict(X));
}

TEST_CASE("tree pruning runs from the full tree to the root") {
  std::mt19937_64 rng(28);
  Matrix X;
  Labels y;
  gaussian_classes(rng, 200, 3, 0.7, X, y);
  const ClassificationTree full = ClassificationTree::grow(X, y, all_rows(200), TreeOptions{5, 0});
  const auto seq = full.pruning_sequence();
  REQUIRE(!seq.empty());
  CHECK(seq.front() == 0.0);
  CHECK(std::is_sorted(seq.begin(), seq.end()));
  CHECK(full.pruned(0.0).leaf_count() == full.leaf_count());
  const ClassificationTree root = full.pruned(seq.back() * 2 + 1);
  CHECK(root.leaf_count() == 1);
  CHECK(root.predict(X).isConstant(static_cast<double>(y.sum()) / 200.0));
  Index last = full.leaf_count();
  for (double a : seq) {
    const Index leaves = full.pruned(a).leaf_count();
    CHECK(leaves <= last);
    last = leaves;
  }
  for (const TreeNode& n : full.nodes())
    if (n.leaf()) CHECK(n.count >= 5);
}

TEST_CASE("SVM separates a linearly separable set at large cost") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix X(60, 2);
  Labels y(60);
  for (Index i = 0; i < 60; ++i) {
    y[i] = i % 2;
    X(i, 0) = u(rng) + (y[i] ? 1.6 : -1.6);
    X(i, 1) = u(rng);
  }
  FitLog log;
  const SvmModel m = SvmModel::fit(X, y, 0.4, 1000, 1e-3, 3, 5, log);
  const Vector d = m.decision_function(X);
  for (Index i = 0; i < 60; ++i) CHECK((d[i] > 0) == (y[i] == 1));
  const Vector p = m.predict(X);
  CHECK(p.minCoeff() >= 0.0);
  CHECK(p.maxCoeff() <= 1.0);
}

TEST_CASE("calibration keeps AUC and optimal usefulness for every family") {
  SynthOptions opt;
  opt.seed = 31;
  opt.countries = 8;
  opt.events = 10;
  const Dataset d = estimation_sample(synth_observations(opt));
  const Preference pref(0.8);
  for (Family f : all_families()) {
    CAPTURE(to_string(f));
    const FittedModel m = fit(MethodSpec::benchmark(f, 4), d.X, d.y, pref);
    const Vector raw = m.train_probs;
    const Vector cal = calibrated_train_probs(m);
    CHECK(std::abs(roc_auc(raw, d.y) - roc_auc(cal, d.y)) <= 1e-12);
    CHECK(optimize_threshold(raw, d.y, pref).ur == optimize_threshold(cal, d.y, pref).ur);
  }
}

TEST_CASE("refitting with the same seed reproduces probabilities bit for bit") {
  SynthOptions opt;
  opt.seed = 32;
  opt.countries = 6;
  opt.events = 8;
  const Dataset d = estimation_sample(synth_observations(opt));
  for (Family f : all_families()) {
    CAPTURE(to_string(f));
    const FittedModel a = fit(MethodSpec::benchmark(f, 11), d.X, d.y);
    const FittedModel b = fit(MethodSpec::benchmark(f, 11), d.X, d.y);
    CHECK(a.train_probs == b.train_probs);
    CHECK(predict_calibrated(a, d.X.topRows(20)) == predict_calibrated(b, d.X.topRows(20)));
    CHECK(a.train_probs.minCoeff() >= 0.0);
    CHECK(a.train_probs.maxCoeff() <= 1.0);
  }
}

TEST_CASE("fitting requires both classes") {
  Matrix X = Matrix::Random(10, 2);
  Labels y = Labels::Zero(10);
  for (Family f : all_families()) CHECK_THROWS_AS(fit(MethodSpec::benchmark(f), X, y), DataError);
}
