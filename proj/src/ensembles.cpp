#include "ewm/ensembles.hpp"

#include <algorithm>

namespace ewm {

AggregateKind parse_aggregate_kind(const std::string& name) {
  if (name == "best_of") return AggregateKind::best_of;
  if (name == "vote") return AggregateKind::vote;
  if (name == "mean") return AggregateKind::mean;
  if (name == "weighted_mean") return AggregateKind::weighted_mean;
  throw ConfigError("unknown aggregate kind '" + name + "'");
}

std::string to_string(AggregateKind kind) {
  switch (kind) {
    case AggregateKind::best_of: return "best_of";
    case AggregateKind::vote: return "vote";
    case AggregateKind::mean: return "mean";
    case AggregateKind::weighted_mean: return "weighted_mean";
  }
  return "?";
}

WeightMeasure parse_weight_measure(const std::string& name) {
  if (name == "ur") return WeightMeasure::ur;
  if (name == "auc") return WeightMeasure::auc;
  throw ConfigError("unknown weight measure '" + name + "'");
}

std::string to_string(WeightMeasure measure) { return measure == WeightMeasure::ur ? "ur" : "auc"; }

std::string AggregateSpec::name() const {
  std::string n = to_string(kind);
  if (kind == AggregateKind::weighted_mean && weight_measure == WeightMeasure::auc) n += "_auc";
  return n;
}

std::size_t best_of_index(const std::vector<double>& in_sample_ur) {
  if (in_sample_ur.empty()) throw DataError("best_of needs at least one method");
  std::size_t best = 0;
  for (std::size_t m = 1; m < in_sample_ur.size(); ++m)
    if (in_sample_ur[m] > in_sample_ur[best]) best = m;
  return best;
}

Labels best_of(const std::vector<double>& in_sample_ur, const std::vector<Labels>& out_signals) {
  if (in_sample_ur.size() != out_signals.size())
    throw DataError("best_of: performance and signal lists differ in length");
  return out_signals[best_of_index(in_sample_ur)];
}

Vector vote_share(const std::vector<Labels>& signals) {
  if (signals.empty()) throw DataError("vote needs at least one method");
  Vector share = Vector::Zero(signals.front().size());
  for (const auto& s : signals) {
    if (s.size() != share.size()) throw DataError("vote: signal series differ in length");
    share += s.cast<double>();
  }
  return share / static_cast<double>(signals.size());
}

Labels vote(const std::vector<Labels>& signals) {
  if (signals.empty()) throw DataError("vote needs at least one method");
  const Index m = static_cast<Index>(signals.size());
  Labels out = Labels::Zero(signals.front().size());
  for (Index n = 0; n < out.size(); ++n) {
    Index ones = 0;
    for (const auto& s : signals) ones += s[n] != 0;
    out[n] = 2 * ones > m ? 1 : 0;
  }
  return out;
}

std::vector<double> aggregate_weights(const std::vector<double>& performance) {
  std::vector<double> w(performance.size(), 0.0);
  double total = 0;
  for (std::size_t m = 0; m < performance.size(); ++m)
    if (performance[m] >= 0) {
      w[m] = performance[m];
      total += w[m];
    }
  if (!(total > 0)) return std::vector<double>(performance.size(), 1.0 / static_cast<double>(performance.size()));
  for (double& v : w) v /= total;
  return w;
}

Vector aggregate_probs(const std::vector<Vector>& probs, const std::vector<double>& weights) {
  if (probs.empty()) throw DataError("aggregate needs at least one method");
  if (!weights.empty() && weights.size() != probs.size())
    throw DataError("aggregate: weight and method counts differ");
  for (const auto& p : probs)
    if (p.size() != probs.front().size()) throw DataError("aggregate: probability series differ in length");
  double total = 0;
  for (double w : weights)
    if (w > 0) total += w;
  Vector out = Vector::Zero(probs.front().size());
  if (!(total > 0)) {
    for (const auto& p : probs) out += p;
    out /= static_cast<double>(probs.size());
  } else {
    for (std::size_t m = 0; m < probs.size(); ++m)
      if (weights[m] > 0) out += weights[m] * probs[m];
    out /= total;
  }
  return out.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace ewm
