#include "ewm/uncertainty.hpp"

#include "ewm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace ewm {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Index round_half_up(double v) { return static_cast<Index>(std::floor(v + 0.5)); }

}  // namespace

Index percentile_lower_index(Index replicates, double alpha) {
  const Index lo = round_half_up(static_cast<double>(replicates) * alpha / 2);
  return std::clamp<Index>(lo, 1, replicates);
}

TCritical resampled_t_critical(const std::vector<double>& replicates, const std::vector<double>& ses,
                               double theta_hat, double alpha) {
  if (replicates.size() != ses.size()) throw DataError("replicate and standard-error counts differ");
  if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must lie in (0, 1)");
  TCritical out;
  std::vector<double> t;
  for (std::size_t s = 0; s < replicates.size(); ++s) {
    if (!(ses[s] > 0)) {
      ++out.dropped;
      continue;
    }
    t.push_back(std::abs((replicates[s] - theta_hat) / ses[s]));
  }
  if (t.empty()) return out;
  std::sort(t.begin(), t.end());
  const Index n = static_cast<Index>(t.size());
  const Index pos = std::clamp<Index>(round_half_up(static_cast<double>(n) * (1 - alpha)), 1, n);
  out.t_star = t[static_cast<std::size_t>(pos - 1)];
  return out;
}

ResampleSummary resample_summary(const std::vector<double>& replicates, double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must lie in (0, 1)");
  const Index S = static_cast<Index>(replicates.size());
  if (S < 2) throw DataError("at least two replicates are required");
  ResampleSummary r;
  r.replicates = S;
  r.alpha = alpha;
  std::vector<double> sorted = replicates;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    r.mean = r.ci_lo = r.ci_hi = sorted.front();
    return r;
  }
  r.mean = std::accumulate(replicates.begin(), replicates.end(), 0.0) / static_cast<double>(S);
  double ss = 0;
  for (double v : replicates) ss += (v - r.mean) * (v - r.mean);
  r.se = std::sqrt(ss / static_cast<double>(S - 1));
  const Index lo = percentile_lower_index(S, alpha);
  r.ci_lo = sorted[static_cast<std::size_t>(lo - 1)];
  r.ci_hi = sorted[static_cast<std::size_t>(S - lo)];
  if (r.se > 0)
    r.t_star = resampled_t_critical(replicates, std::vector<double>(replicates.size(), r.se), r.mean, alpha).t_star;
  return r;
}

std::string to_symbol(Verdict v) {
  switch (v) {
    case Verdict::greater: return ">";
    case Verdict::less: return "<";
    case Verdict::not_significant: return "·";
  }
  return "?";
}

Verdict mean_comparison(const ResampleSummary& i, const ResampleSummary& j) {
  const double diff = i.mean - j.mean;
  const double margin = std::abs(diff) - (i.t_star + j.t_star) / 2 * std::sqrt(i.se * i.se + j.se * j.se);
  if (!(margin > 0)) return Verdict::not_significant;
  return diff > 0 ? Verdict::greater : Verdict::less;
}

SignificanceMatrix significance_matrix(const std::vector<std::string>& names,
                                       const std::vector<ResampleSummary>& summaries,
                                       const std::string& measure, double alpha) {
  if (names.size() != summaries.size()) throw DataError("names and summaries differ in length");
  SignificanceMatrix m;
  m.names = names;
  m.measure = measure;
  m.alpha = alpha;
  const std::size_t n = names.size();
  m.cells.assign(n, std::vector<Verdict>(n, Verdict::not_significant));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) m.cells[i][j] = mean_comparison(summaries[i], summaries[j]);
  return m;
}

std::vector<std::string> first_lower_significant(const std::vector<std::string>& names,
                                                 const std::vector<ResampleSummary>& summaries) {
  std::vector<std::size_t> rank(names.size());
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  std::stable_sort(rank.begin(), rank.end(),
                   [&](std::size_t a, std::size_t b) { return summaries[a].mean > summaries[b].mean; });
  std::vector<std::string> out(names.size());
  for (std::size_t r = 0; r < rank.size(); ++r)
    for (std::size_t s = r + 1; s < rank.size(); ++s)
      if (mean_comparison(summaries[rank[r]], summaries[rank[s]]) == Verdict::greater) {
        out[rank[r]] = names[rank[s]];
        break;
      }
  return out;
}

namespace {

struct Target {
  std::size_t count = 0;
  std::vector<int> label;
  std::vector<char> usable;
};

// Runs S replicate races and reduces them into per-outcome summaries and bands.
RobustResult run_replicates(const std::vector<std::string>& names, const std::vector<bool>& is_aggregate,
                            const std::vector<bool>& band_eligible, const Target& target,
                            const ResampleOptions& opt,
                            const std::function<RaceResult(std::uint64_t)>& replicate) {
  if (opt.replicates < 2) throw ConfigError("at least two replicates are required");
  if (!(opt.alpha > 0 && opt.alpha < 1)) throw ConfigError("alpha must lie in (0, 1)");
  const std::size_t K = names.size(), S = static_cast<std::size_t>(opt.replicates);
  std::vector<std::vector<double>> ur(K, std::vector<double>(S, kNaN)), auc = ur;
  std::vector<std::vector<std::string>> errors(K, std::vector<std::string>(S));
  std::vector<std::vector<double>> prob_store, tau_store;
  if (opt.bands) {
    prob_store.assign(K, std::vector<double>());
    tau_store.assign(K, std::vector<double>());
    for (std::size_t k = 0; k < K; ++k)
      if (band_eligible[k]) {
        prob_store[k].assign(target.count * S, kNaN);
        tau_store[k].assign(target.count * S, kNaN);
      }
  }

  parallel_for(S, opt.workers, [&](std::size_t s) {
    const RaceResult race = replicate(opt.seed + s);
    for (std::size_t k = 0; k < K; ++k) {
      const MethodOutcome& o = race.outcomes[k];
      if (o.failed) {
        errors[k][s] = o.error;
        continue;
      }
      ur[k][s] = o.result.ur;
      auc[k][s] = o.result.auc;
      if (opt.bands && band_eligible[k])
        for (const Prediction& p : o.predictions) {
          prob_store[k][p.obs * S + s] = p.prob;
          tau_store[k][p.obs * S + s] = p.tau;
        }
    }
  });

  RobustResult result;
  result.replicates = opt.replicates;
  result.alpha = opt.alpha;
  std::vector<std::string> ok_names;
  std::vector<ResampleSummary> ur_sum, auc_sum;
  std::vector<std::size_t> ok_index;
  for (std::size_t k = 0; k < K; ++k) {
    MethodRobustness m;
    m.name = names[k];
    m.aggregate = is_aggregate[k];
    for (std::size_t s = 0; s < S; ++s) {
      if (std::isnan(ur[k][s])) {
        ++m.failed_replicates;
        if (m.error.empty()) m.error = errors[k][s];
        continue;
      }
      m.ur_replicates.push_back(ur[k][s]);
      m.auc_replicates.push_back(auc[k][s]);
    }
    if (m.ur_replicates.size() < 2) {
      m.failed = true;
      if (m.error.empty()) m.error = "fewer than two successful replicates";
    } else {
      m.ur = resample_summary(m.ur_replicates, opt.alpha);
      m.auc = resample_summary(m.auc_replicates, opt.alpha);
      ok_names.push_back(m.name);
      ur_sum.push_back(m.ur);
      auc_sum.push_back(m.auc);
      ok_index.push_back(k);
    }
    if (opt.bands && band_eligible[k] && !m.failed) {
      std::vector<double> p, t;
      for (std::size_t i = 0; i < target.count; ++i) {
        p.clear();
        t.clear();
        for (std::size_t s = 0; s < S; ++s) {
          const double pv = prob_store[k][i * S + s];
          if (std::isnan(pv)) continue;
          p.push_back(pv);
          t.push_back(tau_store[k][i * S + s]);
        }
        if (p.size() < 2) continue;
        BandPoint b;
        b.obs = i;
        b.label = target.label[i];
        b.usable = target.usable[i] != 0;
        b.prob = resample_summary(p, opt.alpha);
        b.tau = resample_summary(t, opt.alpha);
        b.flag = mean_comparison(b.prob, b.tau);
        m.bands.push_back(b);
      }
      std::vector<double>().swap(prob_store[k]);
      std::vector<double>().swap(tau_store[k]);
    }
    result.methods.push_back(std::move(m));
  }
  result.ur_matrix = significance_matrix(ok_names, ur_sum, "ur", opt.alpha);
  result.auc_matrix = significance_matrix(ok_names, auc_sum, "auc", opt.alpha);
  const std::vector<std::string> lower_ur = first_lower_significant(ok_names, ur_sum);
  const std::vector<std::string> lower_auc = first_lower_significant(ok_names, auc_sum);
  for (std::size_t i = 0; i < ok_index.size(); ++i) {
    result.methods[ok_index[i]].first_lower_ur = lower_ur[i];
    result.methods[ok_index[i]].first_lower_auc = lower_auc[i];
  }
  return result;
}

void outcome_names(const std::vector<MethodSpec>& methods, const std::vector<AggregateSpec>& aggregates,
                   std::vector<std::string>& names, std::vector<bool>& is_aggregate,
                   std::vector<bool>& band_eligible) {
  for (const MethodSpec& m : labeled(methods)) {
    names.push_back(m.label());
    is_aggregate.push_back(false);
    band_eligible.push_back(true);
  }
  for (const AggregateSpec& a : aggregates) {
    names.push_back(a.name());
    is_aggregate.push_back(true);
    band_eligible.push_back(a.kind != AggregateKind::vote);
  }
}

}  // namespace

RobustResult repeated_cv_performance(const std::vector<MethodSpec>& methods,
                                     const std::vector<AggregateSpec>& aggregates,
                                     const Dataset& data, const Preference& pref, int folds,
                                     const ResampleOptions& opt) {
  std::vector<std::string> names;
  std::vector<bool> is_aggregate, band_eligible;
  outcome_names(methods, aggregates, names, is_aggregate, band_eligible);
  Target target;
  for (Index r = 0; r < data.size(); ++r) {
    const std::size_t obs = data.source.empty() ? static_cast<std::size_t>(r) : data.source[static_cast<std::size_t>(r)];
    target.count = std::max(target.count, obs + 1);
  }
  target.label.assign(target.count, 0);
  target.usable.assign(target.count, 0);
  for (Index r = 0; r < data.size(); ++r) {
    const std::size_t obs = data.source.empty() ? static_cast<std::size_t>(r) : data.source[static_cast<std::size_t>(r)];
    target.label[obs] = data.y[r];
    target.usable[obs] = 1;
  }
  return run_replicates(names, is_aggregate, band_eligible, target, opt, [&](std::uint64_t seed) {
    return kfold_race(methods, aggregates, data, pref, folds, seed, 1);
  });
}

RobustResult bootstrap_recursive(const std::vector<MethodSpec>& methods,
                                 const std::vector<AggregateSpec>& aggregates,
                                 const std::vector<PanelObservation>& obs, const Preference& pref,
                                 const RecursiveConfig& cfg, const ResampleOptions& opt_in) {
  std::vector<std::string> names;
  std::vector<bool> is_aggregate, band_eligible;
  outcome_names(methods, aggregates, names, is_aggregate, band_eligible);
  Target target;
  target.count = obs.size();
  for (const auto& o : obs) {
    target.label.push_back(o.label);
    target.usable.push_back(o.usable ? 1 : 0);
  }
  ResampleOptions opt = opt_in;
  opt.bands = true;
  return run_replicates(names, is_aggregate, band_eligible, target, opt, [&](std::uint64_t seed) {
    return recursive_race_bootstrap(methods, aggregates, obs, pref, cfg, seed);
  });
}

namespace {

EvaluationResult band_eval(const std::vector<BandPoint>& bands, const Preference& pref,
                           bool significant_only) {
  ContingencyCounts counts;
  std::vector<double> probs;
  std::vector<int> labels;
  double tau_sum = 0;
  for (const BandPoint& b : bands) {
    if (!b.usable) continue;
    if (significant_only && b.flag == Verdict::not_significant) continue;
    const bool signal = b.prob.mean > b.tau.mean;
    if (signal) (b.label ? counts.tp : counts.fp) += 1;
    else (b.label ? counts.fn : counts.tn) += 1;
    probs.push_back(b.prob.mean);
    labels.push_back(b.label);
    tau_sum += b.tau.mean;
  }
  if (probs.empty())
    throw DataError(significant_only ? "no significant observations" : "no usable observations");
  EvaluationResult r = evaluate(counts, pref);
  r.auc = roc_auc(Eigen::Map<const Vector>(probs.data(), static_cast<Index>(probs.size())),
                  Eigen::Map<const Labels>(labels.data(), static_cast<Index>(labels.size())));
  r.tau_star = tau_sum / static_cast<double>(probs.size());
  return r;
}

}  // namespace

EvaluationResult band_evaluation(const std::vector<BandPoint>& bands, const Preference& pref) {
  return band_eval(bands, pref, false);
}

EvaluationResult significant_only_evaluation(const std::vector<BandPoint>& bands,
                                             const Preference& pref) {
  return band_eval(bands, pref, true);
}

}  // namespace ewm
