#pragma once

// Horse-race protocols: stratified K-fold cross-validation and recursive
// real-time estimation, run under identical sampling for every method.

#include "ewm/classifiers.hpp"
#include "ewm/ensembles.hpp"
#include "ewm/evaluation.hpp"
#include "ewm/panel.hpp"

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace ewm {

struct FoldAssignment {
  int folds = 0;
  std::uint64_t seed = 0;
  /// Fold id of every row.
  std::vector<int> fold;

  std::vector<Index> test_rows(int k) const;
  std::vector<Index> train_rows(int k) const;
};

/// Stratified assignment: each class is shuffled and dealt round-robin, so
/// fold sizes differ by at most one per class. A function of (labels, K, seed)
/// only. Every training complement must contain both classes, and so must
/// every fold whenever each class has at least K members.
FoldAssignment stratified_folds(const Labels& y, int folds, std::uint64_t seed);

/// One emitted out-of-sample prediction.
struct Prediction {
  /// Index into the observation list (or dataset row for matrix input).
  std::size_t obs = 0;
  /// Fold id (cross-validation) or quarter index (recursive).
  int slot = 0;
  /// Calibrated probability (vote share for votes).
  double prob = 0;
  double tau = 0;
  int signal = 0;
  int label = 0;
  /// Counted in the pooled evaluation.
  bool usable = true;
};

struct MethodOutcome {
  std::string name;
  bool aggregate = false;
  bool failed = false;
  std::string error;
  /// Pooled out-of-sample evaluation; tau_star is the mean threshold.
  EvaluationResult result;
  /// Mean in-sample Ur over folds or quarters.
  double in_sample_ur = 0;
  std::vector<Prediction> predictions;
  std::vector<std::string> warnings;
};

struct RaceResult {
  /// Methods in input order, then aggregates in input order.
  std::vector<MethodOutcome> outcomes;
  std::optional<FoldAssignment> folds;
  std::vector<std::string> warnings;

  const MethodOutcome& find(const std::string& name) const;
};

/// Methods get distinct labels: duplicates of a family name get a "#n" suffix.
std::vector<MethodSpec> labeled(std::vector<MethodSpec> methods);

/// K-fold race. Every method is trained on the same K-1 folds, its threshold is
/// optimized on calibrated in-sample probabilities and applied to the held-out
/// fold; contingency cells are summed over folds. Rows of `data` map to
/// predictions through data.source.
RaceResult kfold_race(const std::vector<MethodSpec>& methods,
                      const std::vector<AggregateSpec>& aggregates, const Dataset& data,
                      const Preference& pref, int folds, std::uint64_t seed, int workers = 1);

struct GridAxis {
  std::string param;
  std::vector<double> values;
};

struct GridPoint {
  MethodSpec spec;
  double ur = 0;
  bool failed = false;
  std::string error;
};

struct GridSearchResult {
  MethodSpec best;
  std::vector<GridPoint> points;
};

/// Cartesian grid in row-major order (last axis varies fastest).
std::vector<MethodSpec> expand_grid(const MethodSpec& base, const std::vector<GridAxis>& grid);

/// Point with the highest cross-validated Ur; the first point wins ties.
GridSearchResult grid_search(const MethodSpec& base, const std::vector<GridAxis>& grid,
                             const Dataset& data, const Preference& pref, int folds,
                             std::uint64_t seed, int workers = 1);

struct RecursiveConfig {
  Quarter start = Quarter(2005, 2);
  /// Last quarter evaluated; defaults to the last quarter in the data.
  std::optional<Quarter> end;
  /// Extra quarters before QDA starts.
  int qda_delay = 4;
};

/// Observations available for training at quarter q: usable, complete and
/// strictly earlier than q.
std::vector<std::size_t> recursive_training_rows(const std::vector<PanelObservation>& obs, Quarter q);

/// Recursive race. At each quarter every method is refitted on the data
/// available before it, its in-sample threshold is re-optimized, and a
/// prediction is emitted for every complete observation at that quarter.
/// Pooled evaluation uses the usable predictions.
RaceResult recursive_race(const std::vector<MethodSpec>& methods,
                          const std::vector<AggregateSpec>& aggregates,
                          const std::vector<PanelObservation>& obs, const Preference& pref,
                          const RecursiveConfig& cfg, int workers = 1);

/// Same protocol with each quarter's training rows replaced by a bootstrap
/// resample drawn from (seed, quarter); used for recursive resampling.
RaceResult recursive_race_bootstrap(const std::vector<MethodSpec>& methods,
                                    const std::vector<AggregateSpec>& aggregates,
                                    const std::vector<PanelObservation>& obs,
                                    const Preference& pref, const RecursiveConfig& cfg,
                                    std::uint64_t seed);

/// Bootstrap row draw that retries (up to 100 times) until both classes appear.
std::vector<Index> bootstrap_with_both_classes(const Labels& y, std::mt19937_64& rng);

}  // namespace ewm
