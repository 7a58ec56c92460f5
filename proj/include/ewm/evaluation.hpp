#pragma once

#include "ewm/types.hpp"

#include <cstdint>
#include <vector>

namespace ewm {

/// Policymaker's relative preference for avoiding missed crises (mu) versus
/// false alarms (1 - mu).
///
/// mu is held as an exact decimal with nine places, so that losses computed
/// from integer contingency counts are exact rationals and equal losses compare
/// equal. Worked examples such as mu = 0.8 then give exact zeros.
class Preference {
 public:
  static constexpr std::int64_t kUnits = 1'000'000'000;

  explicit Preference(double mu = 0.8);

  double mu() const { return static_cast<double>(units_) / static_cast<double>(kUnits); }
  std::int64_t units() const { return units_; }

 private:
  std::int64_t units_;
};

struct ContingencyCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
  std::int64_t positives() const { return tp + fn; }
  std::int64_t negatives() const { return fp + tn; }

  ContingencyCounts& operator+=(const ContingencyCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  bool operator==(const ContingencyCounts&) const = default;
};

/// Tallies signal/label pairs. Any nonzero entry counts as 1.
ContingencyCounts contingency(const Labels& signals, const Labels& labels);

/// mu * T1 * P1 + (1 - mu) * T2 * P2, with class shares taken from the counts.
/// Throws DataError("degenerate class sizes") unless both classes are present.
double loss(const ContingencyCounts& counts, const Preference& pref);

struct Usefulness {
  double ua = 0;
  double ur = 0;
};

/// Absolute and relative Usefulness against the best of always/never signaling.
Usefulness usefulness(const ContingencyCounts& counts, const Preference& pref);

struct EvaluationResult {
  ContingencyCounts counts;
  double t1 = 0;
  double t2 = 0;
  double loss = 0;
  double ua = 0;
  double ur = 0;
  double auc = 0;
  double tau_star = 0;
};

/// All count-based measures; auc and tau_star are left at NaN.
EvaluationResult evaluate(const ContingencyCounts& counts, const Preference& pref);

/// Signals are p > tau.
Labels apply_threshold(const Vector& probs, double tau);

struct ThresholdChoice {
  double tau = 0;
  double ur = 0;
  double ua = 0;
  double loss = 0;
  ContingencyCounts counts;
};

/// Candidate thresholds for probabilities: 1, midpoints of adjacent distinct
/// values (descending), 0.
std::vector<double> candidate_thresholds(const Vector& probs);

/// Loss-minimizing threshold over candidate_thresholds(probs); ties go to the
/// largest threshold. probs must lie in [0, 1].
ThresholdChoice optimize_threshold(const Vector& probs, const Labels& labels,
                                   const Preference& pref);

/// Same scan for unbounded scores (raw indicator values). The end candidates
/// are max(score) (never signal) and min(score) - 1 (always signal).
ThresholdChoice optimize_cutoff(const Vector& scores, const Labels& labels,
                                const Preference& pref);

/// Trapezoidal area under the ROC curve; tied scores across classes earn 1/2.
double roc_auc(const Vector& scores, const Labels& labels);

struct RocPoint {
  double fpr;
  double tpr;
};

/// ROC vertices from (0,0) to (1,1), one per distinct score.
std::vector<RocPoint> roc_curve(const Vector& scores, const Labels& labels);

}  // namespace ewm
