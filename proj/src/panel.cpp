#include "ewm/panel.hpp"

#include "ewm/hp_filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace ewm {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(cell);
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t");
    const auto e = c.find_last_not_of(" \t");
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return cells;
}

double parse_cell(const std::string& cell, long line) {
  if (cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan" ||
      cell == ".")
    return kNaN;
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw DataError("malformed number '" + cell + "'", line);
  }
  if (used != cell.size()) throw DataError("malformed number '" + cell + "'", line);
  return v;
}

std::string format_value(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Maximal runs of consecutive quarters with finite values.
template <typename F>
void for_each_finite_run(const Vector& x, const std::vector<Quarter>& quarters, F&& f) {
  Index i = 0;
  const Index n = x.size();
  while (i < n) {
    if (!std::isfinite(x[i])) {
      ++i;
      continue;
    }
    Index j = i + 1;
    while (j < n && std::isfinite(x[j]) && quarters[j] - quarters[j - 1] == 1) ++j;
    f(i, j - i);
    i = j;
  }
}

}  // namespace

IndicatorKind parse_indicator_kind(const std::string& name) {
  if (name == "accounting") return IndicatorKind::accounting;
  if (name == "market") return IndicatorKind::market;
  throw ConfigError("unknown indicator kind '" + name + "' (accounting|market)");
}

std::string to_string(IndicatorKind kind) {
  return kind == IndicatorKind::accounting ? "accounting" : "market";
}

TransformKind parse_transform_kind(const std::string& name) {
  if (name == "level") return TransformKind::level;
  if (name == "ratio") return TransformKind::ratio;
  if (name == "annual_growth") return TransformKind::annual_growth;
  if (name == "abs_trend_dev") return TransformKind::abs_trend_dev;
  if (name == "rel_trend_dev") return TransformKind::rel_trend_dev;
  throw ConfigError("unknown transform '" + name + "'");
}

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::level: return "level";
    case TransformKind::ratio: return "ratio";
    case TransformKind::annual_growth: return "annual_growth";
    case TransformKind::abs_trend_dev: return "abs_trend_dev";
    case TransformKind::rel_trend_dev: return "rel_trend_dev";
  }
  return "?";
}

std::optional<Index> CountrySeries::row_of(Quarter q) const {
  const auto it = std::lower_bound(quarters.begin(), quarters.end(), q);
  if (it == quarters.end() || *it != q) return std::nullopt;
  return static_cast<Index>(it - quarters.begin());
}

Index RawPanel::indicator_index(const std::string& name) const {
  const auto it = std::find(indicators.begin(), indicators.end(), name);
  if (it == indicators.end()) throw ConfigError("unknown indicator column '" + name + "'");
  return static_cast<Index>(it - indicators.begin());
}

std::size_t RawPanel::observation_count() const {
  std::size_t n = 0;
  for (const auto& s : series) n += s.quarters.size();
  return n;
}

void RawPanel::validate() const {
  if (kinds.size() != indicators.size())
    throw DataError("indicator kinds do not match indicator columns");
  for (const auto& s : series) {
    if (s.values.rows() != static_cast<Index>(s.quarters.size()) ||
        s.values.cols() != indicator_count())
      throw DataError("series shape mismatch for country " + s.country);
    for (std::size_t i = 1; i < s.quarters.size(); ++i)
      if (!(s.quarters[i - 1] < s.quarters[i]))
        throw DataError("quarters not strictly increasing for country " + s.country + " at " +
                        s.quarters[i].str());
  }
}

std::vector<CrisisEvent> merge_events(std::vector<CrisisEvent> events) {
  for (const auto& e : events)
    if (e.end < e.start)
      throw DataError("crisis event for " + e.country + " ends before it starts");
  std::sort(events.begin(), events.end(), [](const CrisisEvent& a, const CrisisEvent& b) {
    return a.country != b.country ? a.country < b.country : a.start < b.start;
  });
  std::vector<CrisisEvent> merged;
  for (const auto& e : events) {
    if (!merged.empty() && merged.back().country == e.country &&
        e.start.index() <= merged.back().end.index() + 1) {
      merged.back().end = std::max(merged.back().end, e.end);
    } else {
      merged.push_back(e);
    }
  }
  return merged;
}

void Horizon::validate() const {
  if (lo < 1 || hi < lo) throw ConfigError("horizon requires 1 <= lo <= hi");
}

Vector transform(const Vector& source, const std::vector<Quarter>& quarters,
                 const TransformSpec& spec, const Vector* denominator) {
  const Index n = source.size();
  if (static_cast<Index>(quarters.size()) != n)
    throw DataError("transform: quarters and values differ in length");
  Vector out = Vector::Constant(n, kNaN);
  switch (spec.kind) {
    case TransformKind::level:
      out = source;
      break;
    case TransformKind::ratio:
      if (denominator == nullptr || denominator->size() != n)
        throw ConfigError("ratio transform requires a denominator column");
      for (Index i = 0; i < n; ++i)
        if ((*denominator)[i] != 0.0) out[i] = source[i] / (*denominator)[i];
      break;
    case TransformKind::annual_growth:
      for (Index i = 0; i < n; ++i) {
        const auto it = std::lower_bound(quarters.begin(), quarters.end(), quarters[i] - 4);
        if (it == quarters.end() || *it != quarters[i] - 4) continue;
        const double base = source[it - quarters.begin()];
        if (base != 0.0) out[i] = source[i] / base - 1.0;
      }
      break;
    case TransformKind::abs_trend_dev:
    case TransformKind::rel_trend_dev:
      if (!(spec.hp_lambda > 0)) throw ConfigError("HP lambda must be positive");
      for_each_finite_run(source, quarters, [&](Index start, Index len) {
        const OneSidedTrend trend = hp_trend_one_sided(source.segment(start, len), spec.hp_lambda);
        for (Index k = trend.warmup; k < len; ++k) {
          const double x = source[start + k];
          const double tau = trend.trend[k];
          if (spec.kind == TransformKind::abs_trend_dev)
            out[start + k] = x - tau;
          else if (tau != 0.0)
            out[start + k] = (x - tau) / tau;
        }
      });
      break;
  }
  for (Index i = 0; i < n; ++i)
    if (!std::isfinite(out[i])) out[i] = kNaN;
  return out;
}

RawPanel apply_pipeline(const RawPanel& raw, const std::vector<TransformStep>& steps) {
  raw.validate();
  RawPanel out;
  out.lags_applied = raw.lags_applied;
  for (const auto& step : steps) {
    out.indicators.push_back(step.output);
    out.kinds.push_back(step.lag_kind);
  }
  const auto lookup = [&](const CountrySeries& in, const CountrySeries& done, Index produced,
                          const std::string& name) -> Vector {
    for (Index j = 0; j < produced; ++j)
      if (out.indicators[j] == name) return done.values.col(j);
    return in.values.col(raw.indicator_index(name));
  };
  for (const auto& s : raw.series) {
    CountrySeries cs{s.country, s.quarters, Matrix(s.values.rows(), static_cast<Index>(steps.size()))};
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const auto& step = steps[k];
      const Vector src = lookup(s, cs, static_cast<Index>(k), step.source);
      if (step.spec.kind == TransformKind::ratio) {
        const Vector den = lookup(s, cs, static_cast<Index>(k), step.denominator);
        cs.values.col(k) = transform(src, s.quarters, step.spec, &den);
      } else {
        cs.values.col(k) = transform(src, s.quarters, step.spec);
      }
    }
    out.series.push_back(std::move(cs));
  }
  return out;
}

RawPanel apply_publication_lags(const RawPanel& panel, int accounting_lag, int market_lag) {
  if (panel.lags_applied) throw ConfigError("publication lags already applied to this panel");
  if (accounting_lag < 0 || market_lag < 0) throw ConfigError("publication lags must be >= 0");
  panel.validate();
  RawPanel out = panel;
  out.lags_applied = true;
  for (std::size_t c = 0; c < panel.series.size(); ++c) {
    const auto& in = panel.series[c];
    auto& dst = out.series[c];
    for (Index j = 0; j < panel.indicator_count(); ++j) {
      const int lag = panel.kinds[j] == IndicatorKind::accounting ? accounting_lag : market_lag;
      for (std::size_t r = 0; r < in.quarters.size(); ++r) {
        const auto src = in.row_of(in.quarters[r] - lag);
        dst.values(static_cast<Index>(r), j) = src ? in.values(*src, j) : kNaN;
      }
    }
  }
  return out;
}

std::vector<PanelObservation> label_and_filter(const RawPanel& panel,
                                               const std::vector<CrisisEvent>& events,
                                               const Horizon& horizon, int post_crisis_quarters) {
  horizon.validate();
  if (post_crisis_quarters < 0) throw ConfigError("post_crisis_quarters must be >= 0");
  panel.validate();
  std::map<std::string, std::vector<CrisisEvent>> by_country;
  for (const auto& e : merge_events(events)) by_country[e.country].push_back(e);

  std::vector<PanelObservation> out;
  out.reserve(panel.observation_count());
  for (const auto& s : panel.series) {
    const auto it = by_country.find(s.country);
    for (std::size_t r = 0; r < s.quarters.size(); ++r) {
      const Quarter q = s.quarters[r];
      bool excluded = false, pre_crisis = false;
      if (it != by_country.end()) {
        for (const auto& e : it->second) {
          const int before_start = e.start - q;  // > 0 when q precedes the start
          if (q >= e.start && q <= e.end + post_crisis_quarters) excluded = true;
          if (before_start >= 1 && before_start < horizon.lo) excluded = true;
          if (before_start >= horizon.lo && before_start <= horizon.hi) pre_crisis = true;
        }
      }
      PanelObservation obs;
      obs.country = s.country;
      obs.quarter = q;
      obs.x = s.values.row(static_cast<Index>(r)).transpose();
      obs.usable = !excluded;
      obs.label = (!excluded && pre_crisis) ? 1 : 0;
      out.push_back(std::move(obs));
    }
  }
  return out;
}

Dataset estimation_sample(const std::vector<PanelObservation>& obs) {
  std::vector<std::size_t> all(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) all[i] = i;
  return estimation_sample(obs, all);
}

Dataset estimation_sample(const std::vector<PanelObservation>& obs,
                          const std::vector<std::size_t>& subset) {
  Dataset d;
  for (std::size_t i : subset)
    if (obs[i].usable && obs[i].complete()) d.source.push_back(i);
  const Index g = obs.empty() ? 0 : obs.front().x.size();
  d.X.resize(static_cast<Index>(d.source.size()), g);
  d.y.resize(static_cast<Index>(d.source.size()));
  for (std::size_t r = 0; r < d.source.size(); ++r) {
    const auto& o = obs[d.source[r]];
    if (o.x.size() != g) throw DataError("feature vector length differs across the panel");
    d.X.row(static_cast<Index>(r)) = o.x.transpose();
    d.y[static_cast<Index>(r)] = o.label;
  }
  return d;
}

namespace {

// Blank lines and '#' comment lines carry no data.
bool skippable(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

}  // namespace

RawPanel read_panel_csv(std::istream& in) {
  RawPanel panel;
  std::string line;
  long line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    header = split_csv_line(line);
    break;
  }
  if (header.size() < 3) throw DataError("panel CSV needs country, quarter and >= 1 indicator", line_no);
  panel.indicators.assign(header.begin() + 2, header.end());
  panel.kinds.assign(panel.indicators.size(), IndicatorKind::accounting);
  const Index g = panel.indicator_count();

  std::map<std::string, std::size_t> index_of;
  std::vector<std::vector<std::pair<Quarter, Vector>>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const auto cells = split_csv_line(line);
    if (static_cast<Index>(cells.size()) != g + 2)
      throw DataError("expected " + std::to_string(g + 2) + " cells, found " +
                          std::to_string(cells.size()),
                      line_no);
    if (cells[0].empty()) throw DataError("empty country code", line_no);
    Quarter q;
    try {
      q = Quarter::parse(cells[1]);
    } catch (const DataError& e) {
      throw DataError(e.what(), line_no);
    }
    Vector v(g);
    for (Index j = 0; j < g; ++j) v[j] = parse_cell(cells[j + 2], line_no);
    auto [it, inserted] = index_of.try_emplace(cells[0], panel.series.size());
    if (inserted) {
      panel.series.push_back(CountrySeries{cells[0], {}, {}});
      rows.emplace_back();
    }
    auto& dst = rows[it->second];
    if (!dst.empty() && !(dst.back().first < q))
      throw DataError("quarters not strictly increasing for " + cells[0], line_no);
    dst.emplace_back(q, std::move(v));
  }
  for (std::size_t c = 0; c < panel.series.size(); ++c) {
    auto& s = panel.series[c];
    s.values.resize(static_cast<Index>(rows[c].size()), g);
    for (std::size_t r = 0; r < rows[c].size(); ++r) {
      s.quarters.push_back(rows[c][r].first);
      s.values.row(static_cast<Index>(r)) = rows[c][r].second.transpose();
    }
  }
  return panel;
}

RawPanel read_panel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open panel file " + path);
  return read_panel_csv(in);
}

std::vector<CrisisEvent> read_events_csv(std::istream& in) {
  std::vector<CrisisEvent> events;
  std::string line;
  long line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const auto cells = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (cells.size() >= 2 && cells[1].find_first_of("Qq") == std::string::npos) continue;
    }
    if (cells.size() != 3) throw DataError("event rows need country,start,end", line_no);
    try {
      CrisisEvent e{cells[0], Quarter::parse(cells[1]), Quarter::parse(cells[2])};
      if (e.end < e.start) throw DataError("event ends before it starts");
      events.push_back(e);
    } catch (const DataError& e) {
      throw DataError(e.what(), line_no);
    }
  }
  return events;
}

std::vector<CrisisEvent> read_events_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open events file " + path);
  return read_events_csv(in);
}

void write_panel_csv(std::ostream& out, const RawPanel& panel) {
  out << "country,quarter";
  for (const auto& name : panel.indicators) out << ',' << name;
  out << '\n';
  for (const auto& s : panel.series)
    for (std::size_t r = 0; r < s.quarters.size(); ++r) {
      out << s.country << ',' << s.quarters[r].str();
      for (Index j = 0; j < panel.indicator_count(); ++j)
        out << ',' << format_value(s.values(static_cast<Index>(r), j));
      out << '\n';
    }
}

void write_events_csv(std::ostream& out, const std::vector<CrisisEvent>& events) {
  out << "country,start,end\n";
  for (const auto& e : events) out << e.country << ',' << e.start.str() << ',' << e.end.str() << '\n';
}

void write_observations_csv(std::ostream& out, const std::vector<PanelObservation>& obs,
                            const std::vector<std::string>& indicator_names) {
  out << "country,quarter,label,usable";
  for (const auto& name : indicator_names) out << ',' << name;
  out << '\n';
  for (const auto& o : obs) {
    out << o.country << ',' << o.quarter.str() << ',' << o.label << ',' << (o.usable ? 1 : 0);
    for (Index j = 0; j < o.x.size(); ++j) out << ',' << format_value(o.x[j]);
    out << '\n';
  }
}

}  // namespace ewm
