#include "ewm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace ewm {

SynthPanel synth_panel(const SynthOptions& o) {
  if (o.events < 1) throw ConfigError("synthetic panel needs at least one event");
  if (o.countries < 1 || o.quarters < 1 || o.indicators < 1)
    throw ConfigError("synthetic panel needs countries, quarters and indicators");
  if (!(std::abs(o.persistence) < 1)) throw ConfigError("persistence must lie in (-1, 1)");
  if (o.crisis_length_min < 1 || o.crisis_length_max < o.crisis_length_min)
    throw ConfigError("invalid crisis length range");
  o.horizon.validate();

  // An event occupies its pre-crisis window, the crisis and the post-crisis
  // exclusion; consecutive events of a country must not share any of it.
  const int lead = o.horizon.hi;
  const int span = lead + o.crisis_length_max + kPostCrisisQuarters;
  // Crisis starts lie inside the panel; a crisis may run past its end.
  const int per_country = o.quarters - lead - 1 < 0 ? 0 : (o.quarters - lead - 1) / span + 1;
  if (static_cast<long>(per_country) * o.countries < o.events)
    throw DataError("infeasible event spacing: " + std::to_string(o.events) + " events need " +
                    std::to_string(span) + " quarters each");

  std::mt19937_64 rng(o.seed);
  SynthPanel out;
  const int g = o.indicators;
  out.loadings.assign(static_cast<std::size_t>(g), 0.0);
  const double base[3] = {1.0, -0.75, 0.5};
  for (int j = 0; j < std::min(3, g); ++j) out.loadings[static_cast<std::size_t>(j)] = base[j];
  for (int j = 0; j < g; ++j) {
    out.panel.indicators.push_back("ind" + std::to_string(j + 1));
    out.panel.kinds.push_back(j % 2 == 0 ? IndicatorKind::market : IndicatorKind::accounting);
  }

  // Distribute events over countries. Within a country the starts are sorted
  // uniform draws pushed apart by `span`, so the chance that a quarter is
  // pre-crisis does not drift over the sample.
  std::vector<int> count(static_cast<std::size_t>(o.countries), 0);
  for (int e = 0; e < o.events; ++e) {
    std::vector<int> open;
    for (int c = 0; c < o.countries; ++c)
      if (count[static_cast<std::size_t>(c)] < per_country) open.push_back(c);
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    ++count[static_cast<std::size_t>(open[pick(rng)])];
  }

  std::normal_distribution<double> normal;
  const double innov_sd = std::sqrt(1 - o.persistence * o.persistence);
  for (int c = 0; c < o.countries; ++c) {
    CountrySeries s;
    s.country = "C" + std::string(c < 9 ? "0" : "") + std::to_string(c + 1);
    for (int t = 0; t < o.quarters; ++t) s.quarters.push_back(o.first + t);

    const int n = count[static_cast<std::size_t>(c)];
    std::vector<double> shift(static_cast<std::size_t>(o.quarters), 0.0);
    if (n > 0) {
      const int free = o.quarters - 1 - lead - (n - 1) * span;
      std::vector<int> draws(static_cast<std::size_t>(n));
      for (int& d : draws) d = std::uniform_int_distribution<int>(0, free)(rng);
      std::sort(draws.begin(), draws.end());
      for (int k = 0; k < n; ++k) {
        const int length = std::uniform_int_distribution<int>(o.crisis_length_min, o.crisis_length_max)(rng);
        const int start = lead + draws[static_cast<std::size_t>(k)] + k * span;
        out.events.push_back({s.country, s.quarters[static_cast<std::size_t>(start)],
                              s.quarters[static_cast<std::size_t>(start)] + (length - 1)});
        for (int t = start - o.horizon.hi; t < start + length; ++t)
          if (t >= 0 && t < o.quarters) shift[static_cast<std::size_t>(t)] = 1.0;
      }
    }

    s.values.resize(o.quarters, g);
    for (int j = 0; j < g; ++j) {
      double z = normal(rng);
      for (int t = 0; t < o.quarters; ++t) {
        if (t > 0) z = o.persistence * z + innov_sd * normal(rng);
        s.values(t, j) = z + o.signal_strength * out.loadings[static_cast<std::size_t>(j)] *
                                 shift[static_cast<std::size_t>(t)];
      }
    }
    out.panel.series.push_back(std::move(s));
  }
  out.events = merge_events(std::move(out.events));
  out.panel.validate();
  return out;
}

}  // namespace ewm
