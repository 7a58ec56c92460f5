#pragma once

#include "ewm/evaluation.hpp"
#include "ewm/method_spec.hpp"
#include "ewm/panel.hpp"
#include "ewm/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace ewm {

/// A trained classifier. Implementations are immutable after construction and
/// safe to share across threads.
class Model {
 public:
  virtual ~Model() = default;
  /// Raw crisis probabilities in [0, 1], one per row of X.
  virtual Vector predict(const Matrix& X) const = 0;
};

struct FittedModel {
  MethodSpec spec{Family::logit};
  std::shared_ptr<const Model> model;
  Index features = 0;
  /// Raw in-sample probabilities in training order.
  Vector train_probs;
  /// The same values sorted ascending; the reference distribution of the ECDF.
  Vector in_sample_probs;
  bool converged = true;
  std::vector<std::string> warnings;
};

/// Trains `spec` on (X, y). Both classes must be present. `pref` is used only
/// by signal extraction, which picks its indicator and direction by Usefulness.
FittedModel fit(const MethodSpec& spec, const Matrix& X, const Labels& y,
                const Preference& pref = Preference());
FittedModel fit(const MethodSpec& spec, const std::vector<PanelObservation>& train,
                const Preference& pref = Preference());

/// Raw probability for one feature vector. Throws DataError on a dimension mismatch.
double predict_proba(const FittedModel& model, const Vector& x);
Vector predict_proba(const FittedModel& model, const Matrix& X);

/// Share of in-sample values <= p. `in_sample` must be sorted ascending.
double calibrate_ecdf(const Vector& in_sample, double p);
Vector calibrate_ecdf(const Vector& in_sample, const Vector& p);

/// ECDF-calibrated probabilities of the training rows and of new rows.
Vector calibrated_train_probs(const FittedModel& model);
Vector predict_calibrated(const FittedModel& model, const Matrix& X);

/// One indicator's best single-threshold rule.
struct IndicatorRank {
  Index column = 0;
  /// +1 signals when the value exceeds the cutoff, -1 when it falls below.
  int direction = 1;
  /// Cutoff on the oriented value (direction * x).
  double cutoff = 0;
  double ur = 0;
};

/// Optimal cutoff and Usefulness for every column, both directions tried,
/// sorted by Ur descending (column order breaks ties).
std::vector<IndicatorRank> signal_extraction_rank(const Matrix& X, const Labels& y,
                                                  const Preference& pref);

}  // namespace ewm
