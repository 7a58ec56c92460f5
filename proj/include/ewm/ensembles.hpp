#pragma once

// Aggregation of several methods' outputs into one early-warning signal.

#include "ewm/types.hpp"

#include <string>
#include <vector>

namespace ewm {

enum class AggregateKind { best_of, vote, mean, weighted_mean };
enum class WeightMeasure { ur, auc };

AggregateKind parse_aggregate_kind(const std::string& name);
std::string to_string(AggregateKind kind);
WeightMeasure parse_weight_measure(const std::string& name);
std::string to_string(WeightMeasure measure);

struct AggregateSpec {
  AggregateKind kind = AggregateKind::mean;
  WeightMeasure weight_measure = WeightMeasure::ur;

  std::string name() const;
  bool operator==(const AggregateSpec&) const = default;
};

/// Index of the method with the best in-sample performance; the first wins ties.
std::size_t best_of_index(const std::vector<double>& in_sample_ur);

/// Out-of-sample signals of the method with the best in-sample Ur.
Labels best_of(const std::vector<double>& in_sample_ur, const std::vector<Labels>& out_signals);

/// 1 where strictly more than half of the methods signal.
Labels vote(const std::vector<Labels>& signals);

/// Share of methods signaling, per observation.
Vector vote_share(const std::vector<Labels>& signals);

/// Normalized weights: methods with negative performance get weight 0; when
/// every method is negative (or all are zero) the weights are equal.
std::vector<double> aggregate_weights(const std::vector<double>& performance);

/// Weighted mean of per-method probability series. Negative weights are
/// dropped; empty or all-negative weights give the plain arithmetic mean.
Vector aggregate_probs(const std::vector<Vector>& probs, const std::vector<double>& weights = {});

}  // namespace ewm
