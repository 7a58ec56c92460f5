#pragma once

// Resampling-based inference on performance measures and on individual
// probability-versus-threshold comparisons.

#include "ewm/experiments.hpp"

#include <string>
#include <vector>

namespace ewm {

struct ResampleSummary {
  double mean = 0;
  double se = 0;
  double ci_lo = 0;
  double ci_hi = 0;
  double t_star = 0;
  Index replicates = 0;
  double alpha = 0.1;
};

/// Position (1-based) of the lower percentile bound: S*alpha/2 rounded half
/// up and clamped to [1, S]. The upper bound sits at S + 1 - lower.
Index percentile_lower_index(Index replicates, double alpha);

/// Mean, standard error (S-1 divisor), percentile interval at level 1-alpha,
/// and the resampled-t critical value computed with the overall standard error.
ResampleSummary resample_summary(const std::vector<double>& replicates, double alpha);

struct TCritical {
  double t_star = 0;
  /// Replicates skipped because their standard error was zero.
  Index dropped = 0;
};

/// |t| at ordered position S*(1-alpha) (rounded half up) of
/// t_s = (replicate_s - theta_hat) / se_s.
TCritical resampled_t_critical(const std::vector<double>& replicates, const std::vector<double>& ses,
                               double theta_hat, double alpha);

enum class Verdict { greater, less, not_significant };

std::string to_symbol(Verdict v);

/// Significant when |mean_i - mean_j| exceeds the averaged critical value
/// times the combined standard error; the sign gives the direction of i.
Verdict mean_comparison(const ResampleSummary& i, const ResampleSummary& j);

struct SignificanceMatrix {
  std::vector<std::string> names;
  std::string measure;
  double alpha = 0.1;
  /// cells[i][j] compares row method i with column method j.
  std::vector<std::vector<Verdict>> cells;
};

SignificanceMatrix significance_matrix(const std::vector<std::string>& names,
                                       const std::vector<ResampleSummary>& summaries,
                                       const std::string& measure, double alpha);

/// For each method, the first method ranked below it (by mean, descending)
/// that it significantly beats; empty when there is none.
std::vector<std::string> first_lower_significant(const std::vector<std::string>& names,
                                                 const std::vector<ResampleSummary>& summaries);

/// Replicate distribution of one observation's probability and threshold.
struct BandPoint {
  std::size_t obs = 0;
  int label = 0;
  bool usable = true;
  ResampleSummary prob;
  ResampleSummary tau;
  /// Probability compared with threshold.
  Verdict flag = Verdict::not_significant;
};

struct MethodRobustness {
  std::string name;
  bool aggregate = false;
  bool failed = false;
  std::string error;
  ResampleSummary ur;
  ResampleSummary auc;
  std::vector<double> ur_replicates;
  std::vector<double> auc_replicates;
  Index failed_replicates = 0;
  std::string first_lower_ur;
  std::string first_lower_auc;
  /// Empty unless bands were requested; votes never get bands.
  std::vector<BandPoint> bands;
};

struct RobustResult {
  std::vector<MethodRobustness> methods;
  SignificanceMatrix ur_matrix;
  SignificanceMatrix auc_matrix;
  Index replicates = 0;
  double alpha = 0.1;
};

struct ResampleOptions {
  Index replicates = 500;
  double alpha = 0.1;
  std::uint64_t seed = 1;
  int workers = 1;
  bool bands = false;
};

/// Replicate s reruns the K-fold race with fold seed seed + s.
RobustResult repeated_cv_performance(const std::vector<MethodSpec>& methods,
                                     const std::vector<AggregateSpec>& aggregates,
                                     const Dataset& data, const Preference& pref, int folds,
                                     const ResampleOptions& opt);

/// Replicate s reruns the recursive race with every quarter's training set
/// bootstrapped from seed + s. Bands are always collected.
RobustResult bootstrap_recursive(const std::vector<MethodSpec>& methods,
                                 const std::vector<AggregateSpec>& aggregates,
                                 const std::vector<PanelObservation>& obs, const Preference& pref,
                                 const RecursiveConfig& cfg, const ResampleOptions& opt);

/// Evaluation of the averaged classifier (signal when mean probability exceeds
/// mean threshold) over the usable band points.
EvaluationResult band_evaluation(const std::vector<BandPoint>& bands, const Preference& pref);

/// Same, restricted to points whose probability differs significantly from
/// the threshold. Throws DataError when no point is significant.
EvaluationResult significant_only_evaluation(const std::vector<BandPoint>& bands,
                                             const Preference& pref);

}  // namespace ewm
