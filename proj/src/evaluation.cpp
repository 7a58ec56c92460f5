#include "ewm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ewm {
namespace {

void require_both_classes(const ContingencyCounts& c) {
  if (c.positives() <= 0 || c.negatives() <= 0) throw DataError("degenerate class sizes");
}

void require_same_length(Index a, Index b) {
  if (a != b) throw DataError("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  if (a < 1) throw DataError("empty input");
}

// Loss and benchmark loss scaled by N * kUnits; exact in 64-bit integers.
struct ScaledLoss {
  std::int64_t loss;
  std::int64_t benchmark;
};

ScaledLoss scaled_loss(const ContingencyCounts& c, const Preference& pref) {
  const std::int64_t mu = pref.units();
  const std::int64_t nu = Preference::kUnits - mu;
  return {mu * c.fn + nu * c.fp, std::min(mu * c.positives(), nu * c.negatives())};
}

Usefulness usefulness_from(const ScaledLoss& s, std::int64_t n) {
  Usefulness u;
  const double scale = static_cast<double>(n) * static_cast<double>(Preference::kUnits);
  u.ua = static_cast<double>(s.benchmark - s.loss) / scale;
  if (s.benchmark > 0)
    u.ur = static_cast<double>(s.benchmark - s.loss) / static_cast<double>(s.benchmark);
  else
    u.ur = s.loss == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return u;
}

// Scan over thresholds in descending order, first minimum wins.
ThresholdChoice scan(const Vector& scores, const Labels& labels, const Preference& pref,
                     double top, double bottom) {
  const Index n = scores.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return scores[a] > scores[b]; });

  ContingencyCounts c;
  for (Index i = 0; i < n; ++i) (labels[i] != 0 ? c.fn : c.tn) += 1;
  require_both_classes(c);

  // Signals for the top threshold: scores strictly above it.
  std::size_t pos = 0;
  auto admit_while = [&](auto pred) {
    while (pos < order.size() && pred(scores[order[pos]])) {
      if (labels[order[pos]] != 0) {
        --c.fn;
        ++c.tp;
      } else {
        --c.tn;
        ++c.fp;
      }
      ++pos;
    }
  };

  ThresholdChoice best;
  std::int64_t best_loss = std::numeric_limits<std::int64_t>::max();
  auto consider = [&](double tau) {
    const ScaledLoss s = scaled_loss(c, pref);
    if (s.loss < best_loss) {
      best_loss = s.loss;
      best.tau = tau;
      best.counts = c;
    }
  };

  admit_while([&](double v) { return v > top; });
  consider(top);
  while (pos < order.size()) {
    const double v = scores[order[pos]];
    admit_while([&](double w) { return w == v; });
    if (pos < order.size()) {
      const double next = scores[order[pos]];
      consider(next + (v - next) / 2);
    }
  }
  // Every score is admitted now; that matches the bottom candidate only when
  // all scores exceed it, otherwise the last midpoint already covers it.
  if (scores.minCoeff() > bottom) consider(bottom);

  const ScaledLoss s = scaled_loss(best.counts, pref);
  const Usefulness u = usefulness_from(s, best.counts.total());
  best.ua = u.ua;
  best.ur = u.ur;
  best.loss = static_cast<double>(s.loss) /
              (static_cast<double>(best.counts.total()) * static_cast<double>(Preference::kUnits));
  return best;
}

}  // namespace

Preference::Preference(double mu) {
  if (!(mu >= 0.0 && mu <= 1.0)) throw ConfigError("preference mu must lie in [0, 1]");
  units_ = static_cast<std::int64_t>(std::llround(mu * static_cast<double>(kUnits)));
}

ContingencyCounts contingency(const Labels& signals, const Labels& labels) {
  require_same_length(signals.size(), labels.size());
  ContingencyCounts c;
  for (Index i = 0; i < signals.size(); ++i) {
    const bool s = signals[i] != 0, l = labels[i] != 0;
    if (s && l) ++c.tp;
    else if (s) ++c.fp;
    else if (l) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double loss(const ContingencyCounts& counts, const Preference& pref) {
  require_both_classes(counts);
  const ScaledLoss s = scaled_loss(counts, pref);
  return static_cast<double>(s.loss) /
         (static_cast<double>(counts.total()) * static_cast<double>(Preference::kUnits));
}

Usefulness usefulness(const ContingencyCounts& counts, const Preference& pref) {
  require_both_classes(counts);
  return usefulness_from(scaled_loss(counts, pref), counts.total());
}

EvaluationResult evaluate(const ContingencyCounts& counts, const Preference& pref) {
  EvaluationResult r;
  r.counts = counts;
  r.t1 = static_cast<double>(counts.fn) / static_cast<double>(std::max<std::int64_t>(1, counts.positives()));
  r.t2 = static_cast<double>(counts.fp) / static_cast<double>(std::max<std::int64_t>(1, counts.negatives()));
  r.loss = loss(counts, pref);
  const Usefulness u = usefulness(counts, pref);
  r.ua = u.ua;
  r.ur = u.ur;
  r.auc = std::numeric_limits<double>::quiet_NaN();
  r.tau_star = std::numeric_limits<double>::quiet_NaN();
  return r;
}

Labels apply_threshold(const Vector& probs, double tau) {
  Labels s(probs.size());
  for (Index i = 0; i < probs.size(); ++i) s[i] = probs[i] > tau ? 1 : 0;
  return s;
}

std::vector<double> candidate_thresholds(const Vector& probs) {
  std::vector<double> v(probs.data(), probs.data() + probs.size());
  std::sort(v.begin(), v.end(), std::greater<>());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  std::vector<double> out{1.0};
  for (std::size_t i = 0; i + 1 < v.size(); ++i) out.push_back(v[i + 1] + (v[i] - v[i + 1]) / 2);
  out.push_back(0.0);
  return out;
}

ThresholdChoice optimize_threshold(const Vector& probs, const Labels& labels,
                                   const Preference& pref) {
  require_same_length(probs.size(), labels.size());
  for (Index i = 0; i < probs.size(); ++i)
    if (!(probs[i] >= 0.0 && probs[i] <= 1.0))
      throw DataError("probabilities must lie in [0, 1]");
  return scan(probs, labels, pref, 1.0, 0.0);
}

ThresholdChoice optimize_cutoff(const Vector& scores, const Labels& labels,
                                const Preference& pref) {
  require_same_length(scores.size(), labels.size());
  if (!scores.allFinite()) throw DataError("scores must be finite");
  return scan(scores, labels, pref, scores.maxCoeff(), scores.minCoeff() - 1.0);
}

double roc_auc(const Vector& scores, const Labels& labels) {
  require_same_length(scores.size(), labels.size());
  const auto curve_counts = [&] {
    std::vector<Index> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return scores[a] > scores[b]; });
    return order;
  }();
  std::int64_t n1 = 0, n0 = 0;
  for (Index i = 0; i < labels.size(); ++i) (labels[i] != 0 ? n1 : n0) += 1;
  if (n1 == 0 || n0 == 0) throw DataError("degenerate class sizes");

  // Twice the trapezoidal area in count units, accumulated exactly.
  std::int64_t area2 = 0, tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < curve_counts.size()) {
    const double v = scores[curve_counts[i]];
    std::int64_t dtp = 0, dfp = 0;
    while (i < curve_counts.size() && scores[curve_counts[i]] == v) {
      (labels[curve_counts[i]] != 0 ? dtp : dfp) += 1;
      ++i;
    }
    area2 += dfp * (2 * tp + dtp);
    tp += dtp;
    fp += dfp;
  }
  return static_cast<double>(area2) / (2.0 * static_cast<double>(n1) * static_cast<double>(n0));
}

std::vector<RocPoint> roc_curve(const Vector& scores, const Labels& labels) {
  require_same_length(scores.size(), labels.size());
  std::vector<Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return scores[a] > scores[b]; });
  std::int64_t n1 = 0, n0 = 0;
  for (Index i = 0; i < labels.size(); ++i) (labels[i] != 0 ? n1 : n0) += 1;
  if (n1 == 0 || n0 == 0) throw DataError("degenerate class sizes");
  std::vector<RocPoint> pts{{0.0, 0.0}};
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double v = scores[order[i]];
    while (i < order.size() && scores[order[i]] == v) {
      (labels[order[i]] != 0 ? tp : fp) += 1;
      ++i;
    }
    pts.push_back({static_cast<double>(fp) / static_cast<double>(n0),
                   static_cast<double>(tp) / static_cast<double>(n1)});
  }
  return pts;
}

}  // namespace ewm
