#include "ewm/experiments.hpp"

#include "ewm/models.hpp"
#include "ewm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace ewm {

std::vector<Index> FoldAssignment::test_rows(int k) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] == k) rows.push_back(static_cast<Index>(i));
  return rows;
}

std::vector<Index> FoldAssignment::train_rows(int k) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] != k) rows.push_back(static_cast<Index>(i));
  return rows;
}

FoldAssignment stratified_folds(const Labels& y, int folds, std::uint64_t seed) {
  const Index n = y.size();
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (folds > n) throw ConfigError("more folds (" + std::to_string(folds) + ") than observations");
  std::vector<Index> members[2];
  for (Index i = 0; i < n; ++i) members[y[i] != 0 ? 1 : 0].push_back(i);
  const Index pos = static_cast<Index>(members[1].size()), neg = static_cast<Index>(members[0].size());
  if (pos < 2 || neg < 2) throw DataError("cross-validation needs at least two observations per class");

  for (int attempt = 0; attempt < 100; ++attempt) {
    FoldAssignment a;
    a.folds = folds;
    a.seed = seed;
    a.fold.assign(static_cast<std::size_t>(n), 0);
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::size_t next = 0;
    for (int cls : {1, 0}) {
      std::vector<Index> order = members[cls];
      std::shuffle(order.begin(), order.end(), rng);
      for (Index i : order) a.fold[static_cast<std::size_t>(i)] = static_cast<int>(next++ % static_cast<std::size_t>(folds));
    }
    std::vector<Index> fold_pos(static_cast<std::size_t>(folds), 0), fold_neg(static_cast<std::size_t>(folds), 0);
    for (Index i = 0; i < n; ++i)
      ++(y[i] != 0 ? fold_pos : fold_neg)[static_cast<std::size_t>(a.fold[static_cast<std::size_t>(i)])];
    bool ok = true;
    for (int k = 0; k < folds; ++k) {
      const Index fp = fold_pos[static_cast<std::size_t>(k)], fn = fold_neg[static_cast<std::size_t>(k)];
      if (fp == pos || fn == neg) ok = false;
      if (pos >= folds && neg >= folds && (fp == 0 || fn == 0)) ok = false;
    }
    if (ok) return a;
  }
  throw DataError("could not build folds with both classes after 100 attempts");
}

const MethodOutcome& RaceResult::find(const std::string& name) const {
  for (const auto& o : outcomes)
    if (o.name == name) return o;
  throw ConfigError("no method or aggregate named '" + name + "'");
}

std::vector<MethodSpec> labeled(std::vector<MethodSpec> methods) {
  std::map<std::string, int> seen;
  for (auto& m : methods) {
    const int count = ++seen[m.label()];
    if (count > 1) m.set_label(m.label() + "#" + std::to_string(count));
  }
  return methods;
}

namespace {

// Output of one method (or aggregate) on one train/test split.
struct SplitOutput {
  bool ok = false;
  std::string error;
  std::vector<std::string> warnings;
  Vector in_probs;
  ThresholdChoice in_choice;
  double in_auc = 0;
  Vector out_probs;
  Labels out_signals;
};

Matrix gather(const Matrix& X, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), X.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = X.row(rows[r]);
  return out;
}

Labels gather(const Labels& y, const std::vector<Index>& rows) {
  Labels out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<Index>(r)] = y[rows[r]];
  return out;
}

SplitOutput run_split(const MethodSpec& spec, const Matrix& Xtr, const Labels& ytr,
                      const Matrix& Xte, const Preference& pref) {
  SplitOutput out;
  try {
    const FittedModel model = fit(spec, Xtr, ytr, pref);
    out.warnings = model.warnings;
    out.in_probs = calibrated_train_probs(model);
    out.in_choice = optimize_threshold(out.in_probs, ytr, pref);
    out.in_auc = roc_auc(out.in_probs, ytr);
    out.out_probs = predict_calibrated(model, Xte);
    out.out_signals = apply_threshold(out.out_probs, out.in_choice.tau);
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

SplitOutput aggregate_split(const AggregateSpec& agg, const std::vector<const SplitOutput*>& parts,
                            const Labels& ytr, const Preference& pref) {
  SplitOutput out;
  if (parts.empty()) {
    out.error = "no successful method to aggregate";
    return out;
  }
  try {
    std::vector<double> ur, perf;
    std::vector<Vector> in_probs, out_probs;
    std::vector<Labels> in_signals, out_signals;
    for (const SplitOutput* p : parts) {
      ur.push_back(p->in_choice.ur);
      perf.push_back(agg.weight_measure == WeightMeasure::ur ? p->in_choice.ur : p->in_auc);
      in_probs.push_back(p->in_probs);
      out_probs.push_back(p->out_probs);
      in_signals.push_back(apply_threshold(p->in_probs, p->in_choice.tau));
      out_signals.push_back(p->out_signals);
    }
    switch (agg.kind) {
      case AggregateKind::best_of: {
        out = *parts[best_of_index(ur)];
        out.warnings.clear();
        break;
      }
      case AggregateKind::vote: {
        out.in_probs = vote_share(in_signals);
        const Labels in_vote = vote(in_signals);
        out.in_choice.tau = 0.5;
        out.in_choice.counts = contingency(in_vote, ytr);
        const Usefulness u = usefulness(out.in_choice.counts, pref);
        out.in_choice.ur = u.ur;
        out.in_choice.ua = u.ua;
        out.in_choice.loss = loss(out.in_choice.counts, pref);
        out.in_auc = roc_auc(out.in_probs, ytr);
        out.out_probs = vote_share(out_signals);
        out.out_signals = vote(out_signals);
        break;
      }
      case AggregateKind::mean:
      case AggregateKind::weighted_mean: {
        const std::vector<double> w =
            agg.kind == AggregateKind::mean ? std::vector<double>{} : perf;
        out.in_probs = aggregate_probs(in_probs, w);
        out.in_choice = optimize_threshold(out.in_probs, ytr, pref);
        out.in_auc = roc_auc(out.in_probs, ytr);
        out.out_probs = aggregate_probs(out_probs, w);
        out.out_signals = apply_threshold(out.out_probs, out.in_choice.tau);
        break;
      }
    }
    out.ok = true;
  } catch (const Error& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

// Pools the emitted predictions of one outcome into its evaluation.
void finalize(MethodOutcome& o, const Preference& pref, const std::vector<double>& taus,
              const std::vector<double>& in_urs) {
  if (o.failed) return;
  ContingencyCounts counts;
  std::vector<double> probs;
  std::vector<int> labels;
  for (const Prediction& p : o.predictions) {
    if (!p.usable) continue;
    if (p.signal) (p.label ? counts.tp : counts.fp) += 1;
    else (p.label ? counts.fn : counts.tn) += 1;
    probs.push_back(p.prob);
    labels.push_back(p.label);
  }
  try {
    o.result = evaluate(counts, pref);
    o.result.auc = roc_auc(Eigen::Map<const Vector>(probs.data(), static_cast<Index>(probs.size())),
                           Eigen::Map<const Labels>(labels.data(), static_cast<Index>(labels.size())));
  } catch (const Error& e) {
    o.failed = true;
    o.error = std::string("pooled evaluation: ") + e.what();
    return;
  }
  o.result.tau_star = taus.empty() ? std::numeric_limits<double>::quiet_NaN()
                                   : std::accumulate(taus.begin(), taus.end(), 0.0) / static_cast<double>(taus.size());
  o.in_sample_ur = in_urs.empty() ? std::numeric_limits<double>::quiet_NaN()
                                  : std::accumulate(in_urs.begin(), in_urs.end(), 0.0) / static_cast<double>(in_urs.size());
}

}  // namespace

RaceResult kfold_race(const std::vector<MethodSpec>& methods_in,
                      const std::vector<AggregateSpec>& aggregates, const Dataset& data,
                      const Preference& pref, int folds, std::uint64_t seed, int workers) {
  if (methods_in.empty()) throw ConfigError("race needs at least one method");
  const std::vector<MethodSpec> methods = labeled(methods_in);
  RaceResult race;
  race.folds = stratified_folds(data.y, folds, seed);
  const FoldAssignment& fa = *race.folds;
  const std::size_t M = methods.size(), K = static_cast<std::size_t>(folds);

  std::vector<std::vector<Index>> train(K), test(K);
  for (int k = 0; k < folds; ++k) {
    train[static_cast<std::size_t>(k)] = fa.train_rows(k);
    test[static_cast<std::size_t>(k)] = fa.test_rows(k);
  }
  std::vector<Labels> ytr(K);
  for (std::size_t k = 0; k < K; ++k) ytr[k] = gather(data.y, train[k]);

  std::vector<SplitOutput> out(M * K);
  parallel_for(M * K, workers, [&](std::size_t t) {
    const std::size_t m = t / K, k = t % K;
    out[t] = run_split(methods[m], gather(data.X, train[k]), ytr[k], gather(data.X, test[k]), pref);
  });

  auto obs_of = [&](Index row) {
    return data.source.empty() ? static_cast<std::size_t>(row) : data.source[static_cast<std::size_t>(row)];
  };
  auto emit = [&](MethodOutcome& o, const std::vector<const SplitOutput*>& per_fold) {
    std::vector<double> taus, urs;
    for (std::size_t k = 0; k < K; ++k) {
      const SplitOutput& s = *per_fold[k];
      taus.push_back(s.in_choice.tau);
      urs.push_back(s.in_choice.ur);
      for (std::size_t r = 0; r < test[k].size(); ++r) {
        const Index row = test[k][r];
        o.predictions.push_back({obs_of(row), static_cast<int>(k), s.out_probs[static_cast<Index>(r)],
                                 s.in_choice.tau, s.out_signals[static_cast<Index>(r)], data.y[row], true});
      }
    }
    std::sort(o.predictions.begin(), o.predictions.end(),
              [](const Prediction& a, const Prediction& b) { return a.obs < b.obs; });
    finalize(o, pref, taus, urs);
  };

  std::vector<bool> usable(M, true);
  for (std::size_t m = 0; m < M; ++m) {
    MethodOutcome o;
    o.name = methods[m].label();
    std::vector<const SplitOutput*> per_fold;
    for (std::size_t k = 0; k < K; ++k) {
      const SplitOutput& s = out[m * K + k];
      per_fold.push_back(&s);
      for (const auto& w : s.warnings) o.warnings.push_back("fold " + std::to_string(k) + ": " + w);
      if (!s.ok && !o.failed) {
        o.failed = true;
        o.error = "fold " + std::to_string(k) + ": " + s.error;
      }
    }
    if (!o.failed) emit(o, per_fold);
    usable[m] = !o.failed;
    if (o.failed) race.warnings.push_back(o.name + " failed: " + o.error);
    race.outcomes.push_back(std::move(o));
  }

  for (const AggregateSpec& agg : aggregates) {
    MethodOutcome o;
    o.name = agg.name();
    o.aggregate = true;
    std::vector<SplitOutput> per_fold(K);
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<const SplitOutput*> parts;
      for (std::size_t m = 0; m < M; ++m)
        if (usable[m]) parts.push_back(&out[m * K + k]);
      per_fold[k] = aggregate_split(agg, parts, ytr[k], pref);
      if (!per_fold[k].ok && !o.failed) {
        o.failed = true;
        o.error = "fold " + std::to_string(k) + ": " + per_fold[k].error;
      }
    }
    if (!o.failed) {
      std::vector<const SplitOutput*> ptrs;
      for (const auto& s : per_fold) ptrs.push_back(&s);
      emit(o, ptrs);
    }
    if (o.failed) race.warnings.push_back(o.name + " failed: " + o.error);
    race.outcomes.push_back(std::move(o));
  }
  return race;
}

std::vector<MethodSpec> expand_grid(const MethodSpec& base, const std::vector<GridAxis>& grid) {
  std::vector<MethodSpec> points{base};
  for (const GridAxis& axis : grid) {
    if (axis.values.empty()) throw ConfigError("grid axis '" + axis.param + "' has no values");
    std::vector<MethodSpec> next;
    for (const MethodSpec& p : points)
      for (double v : axis.values) {
        MethodSpec s = p;
        s.set(axis.param, v);
        next.push_back(std::move(s));
      }
    points = std::move(next);
  }
  return points;
}

GridSearchResult grid_search(const MethodSpec& base, const std::vector<GridAxis>& grid,
                             const Dataset& data, const Preference& pref, int folds,
                             std::uint64_t seed, int workers) {
  const std::vector<MethodSpec> specs = expand_grid(base, grid);
  GridSearchResult result{base, {}};
  std::ptrdiff_t best = -1;
  std::ostringstream failures;
  for (const MethodSpec& spec : specs) {
    GridPoint point{spec, -std::numeric_limits<double>::infinity(), false, ""};
    const RaceResult race = kfold_race({spec}, {}, data, pref, folds, seed, workers);
    const MethodOutcome& o = race.outcomes.front();
    if (o.failed) {
      point.failed = true;
      point.error = o.error;
      failures << "\n  " << spec.describe() << ": " << o.error;
    } else {
      point.ur = o.result.ur;
      if (best < 0 || point.ur > result.points[static_cast<std::size_t>(best)].ur)
        best = static_cast<std::ptrdiff_t>(result.points.size());
    }
    result.points.push_back(std::move(point));
  }
  if (best < 0) throw NumericError("every grid point failed:" + failures.str());
  result.best = result.points[static_cast<std::size_t>(best)].spec;
  return result;
}

std::vector<std::size_t> recursive_training_rows(const std::vector<PanelObservation>& obs, Quarter q) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < obs.size(); ++i)
    if (obs[i].quarter < q && obs[i].usable && obs[i].complete()) rows.push_back(i);
  return rows;
}

std::vector<Index> bootstrap_with_both_classes(const Labels& y, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<Index> rows = bootstrap_rows(rng, y.size());
    bool pos = false, neg = false;
    for (Index r : rows) (y[r] != 0 ? pos : neg) = true;
    if (pos && neg) return rows;
  }
  throw DataError("bootstrap sample missing a class after 100 attempts");
}

namespace {

struct QuarterOutput {
  bool trained = false;
  std::string skip_reason;
  std::vector<std::size_t> test_obs;
  /// Per method then per aggregate; `ok` false when absent or failed.
  std::vector<SplitOutput> outputs;
  std::vector<bool> active;
};

RaceResult recursive_core(const std::vector<MethodSpec>& methods_in,
                          const std::vector<AggregateSpec>& aggregates,
                          const std::vector<PanelObservation>& obs, const Preference& pref,
                          const RecursiveConfig& cfg, int workers,
                          std::optional<std::uint64_t> bootstrap_seed) {
  if (methods_in.empty()) throw ConfigError("race needs at least one method");
  if (obs.empty()) throw DataError("no observations");
  const std::vector<MethodSpec> methods = labeled(methods_in);
  const std::size_t M = methods.size(), A = aggregates.size();

  Quarter last = obs.front().quarter;
  for (const auto& o : obs) last = std::max(last, o.quarter);
  const Quarter end = cfg.end.value_or(last);
  if (end < cfg.start) throw ConfigError("recursive end quarter precedes start quarter");
  const int Q = end - cfg.start + 1;

  std::vector<QuarterOutput> quarters(static_cast<std::size_t>(Q));
  parallel_for(static_cast<std::size_t>(Q), workers, [&](std::size_t qi) {
    const Quarter q = cfg.start + static_cast<int>(qi);
    QuarterOutput& qo = quarters[qi];
    qo.outputs.resize(M + A);
    qo.active.assign(M + A, false);
    for (std::size_t i = 0; i < obs.size(); ++i)
      if (obs[i].quarter == q && obs[i].complete()) qo.test_obs.push_back(i);
    if (qo.test_obs.empty()) {
      qo.skip_reason = "no complete observations";
      return;
    }
    const Dataset pool = estimation_sample(obs, recursive_training_rows(obs, q));
    if (!has_both_classes(pool.y)) {
      qo.skip_reason = "training data lacks a class";
      return;
    }
    Matrix Xtr = pool.X;
    Labels ytr = pool.y;
    if (bootstrap_seed) {
      std::mt19937_64 rng(mix_seed(*bootstrap_seed, static_cast<std::uint64_t>(q.index())));
      const std::vector<Index> rows = bootstrap_with_both_classes(pool.y, rng);
      Xtr = gather(pool.X, rows);
      ytr = gather(pool.y, rows);
    }
    Matrix Xte(static_cast<Index>(qo.test_obs.size()), Xtr.cols());
    for (std::size_t r = 0; r < qo.test_obs.size(); ++r) Xte.row(static_cast<Index>(r)) = obs[qo.test_obs[r]].x.transpose();
    qo.trained = true;

    std::vector<const SplitOutput*> parts;
    for (std::size_t m = 0; m < M; ++m) {
      const Quarter start = cfg.start + (methods[m].family() == Family::qda ? cfg.qda_delay : 0);
      if (q < start) continue;
      qo.active[m] = true;
      qo.outputs[m] = run_split(methods[m], Xtr, ytr, Xte, pref);
      if (qo.outputs[m].ok) parts.push_back(&qo.outputs[m]);
    }
    for (std::size_t a = 0; a < A; ++a) {
      qo.active[M + a] = true;
      qo.outputs[M + a] = aggregate_split(aggregates[a], parts, ytr, pref);
    }
  });

  RaceResult race;
  for (std::size_t k = 0; k < M + A; ++k) {
    MethodOutcome o;
    o.aggregate = k >= M;
    o.name = o.aggregate ? aggregates[k - M].name() : methods[k].label();
    std::vector<double> taus, urs;
    for (int qi = 0; qi < Q; ++qi) {
      const QuarterOutput& qo = quarters[static_cast<std::size_t>(qi)];
      const Quarter q = cfg.start + qi;
      if (!qo.trained || !qo.active[k]) continue;
      const SplitOutput& s = qo.outputs[k];
      for (const auto& w : s.warnings) o.warnings.push_back(q.str() + ": " + w);
      if (!s.ok) {
        o.warnings.push_back(q.str() + ": skipped, " + s.error);
        continue;
      }
      taus.push_back(s.in_choice.tau);
      urs.push_back(s.in_choice.ur);
      for (std::size_t r = 0; r < qo.test_obs.size(); ++r) {
        const PanelObservation& ob = obs[qo.test_obs[r]];
        o.predictions.push_back({qo.test_obs[r], q.index(), s.out_probs[static_cast<Index>(r)],
                                 s.in_choice.tau, s.out_signals[static_cast<Index>(r)], ob.label,
                                 ob.usable});
      }
    }
    if (o.predictions.empty()) {
      o.failed = true;
      o.error = "no quarter produced a prediction";
    }
    finalize(o, pref, taus, urs);
    if (o.failed) race.warnings.push_back(o.name + " failed: " + o.error);
    race.outcomes.push_back(std::move(o));
  }
  for (int qi = 0; qi < Q; ++qi) {
    const QuarterOutput& qo = quarters[static_cast<std::size_t>(qi)];
    if (!qo.trained && qo.skip_reason != "no complete observations")
      race.warnings.push_back((cfg.start + qi).str() + " skipped: " + qo.skip_reason);
  }
  return race;
}

}  // namespace

RaceResult recursive_race(const std::vector<MethodSpec>& methods,
                          const std::vector<AggregateSpec>& aggregates,
                          const std::vector<PanelObservation>& obs, const Preference& pref,
                          const RecursiveConfig& cfg, int workers) {
  return recursive_core(methods, aggregates, obs, pref, cfg, workers, std::nullopt);
}

RaceResult recursive_race_bootstrap(const std::vector<MethodSpec>& methods,
                                    const std::vector<AggregateSpec>& aggregates,
                                    const std::vector<PanelObservation>& obs,
                                    const Preference& pref, const RecursiveConfig& cfg,
                                    std::uint64_t seed) {
  return recursive_core(methods, aggregates, obs, pref, cfg, 1, seed);
}

}  // namespace ewm
