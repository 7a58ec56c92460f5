#pragma once

#include "ewm/quarter.hpp"
#include "ewm/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ewm {

/// Publication-lag class of an indicator column.
enum class IndicatorKind { accounting, market };

IndicatorKind parse_indicator_kind(const std::string& name);
std::string to_string(IndicatorKind kind);

/// Quarterly observations of one country; rows follow `quarters`, columns the
/// panel's indicators. Missing values are NaN.
struct CountrySeries {
  std::string country;
  std::vector<Quarter> quarters;
  Matrix values;

  /// Row holding quarter q, if present.
  std::optional<Index> row_of(Quarter q) const;
};

struct RawPanel {
  std::vector<std::string> indicators;
  std::vector<IndicatorKind> kinds;
  std::vector<CountrySeries> series;
  /// Set once publication lags have been applied; guards against double lagging.
  bool lags_applied = false;

  Index indicator_count() const { return static_cast<Index>(indicators.size()); }
  Index indicator_index(const std::string& name) const;
  std::size_t observation_count() const;
  /// Throws DataError when quarters are not strictly increasing or shapes disagree.
  void validate() const;
};

struct CrisisEvent {
  std::string country;
  Quarter start;
  Quarter end;
};

/// Sorts events and merges overlapping or adjacent events of the same country.
std::vector<CrisisEvent> merge_events(std::vector<CrisisEvent> events);

/// Pre-crisis window, in quarters before the crisis start.
struct Horizon {
  int lo = 5;
  int hi = 12;
  void validate() const;
};

inline constexpr int kPostCrisisQuarters = 8;

enum class TransformKind { level, ratio, annual_growth, abs_trend_dev, rel_trend_dev };

TransformKind parse_transform_kind(const std::string& name);
std::string to_string(TransformKind kind);

struct TransformSpec {
  TransformKind kind = TransformKind::level;
  double hp_lambda = 400000.0;
};

/// One column of a transform pipeline. `source` (and `denominator` for
/// ratios) may name raw columns or outputs of earlier steps.
struct TransformStep {
  std::string output;
  std::string source;
  std::string denominator;
  TransformSpec spec;
  IndicatorKind lag_kind = IndicatorKind::accounting;
};

/// Transforms one country's column. `quarters` is needed for the four-quarter
/// growth lookback; `denominator` only for ratios. Undefined points are NaN.
Vector transform(const Vector& source, const std::vector<Quarter>& quarters,
                 const TransformSpec& spec, const Vector* denominator = nullptr);

/// Runs a pipeline over every country. The result holds only the step outputs,
/// in step order, with each output's lag kind; keys are never reordered.
RawPanel apply_pipeline(const RawPanel& raw, const std::vector<TransformStep>& steps);

/// Shifts accounting columns by `accounting_lag` and market columns by
/// `market_lag` quarters. Throws ConfigError when applied twice.
RawPanel apply_publication_lags(const RawPanel& panel, int accounting_lag = 2, int market_lag = 1);

struct PanelObservation {
  std::string country;
  Quarter quarter;
  Vector x;
  /// 1 = pre-crisis, 0 = tranquil; meaningful only when usable.
  int label = 0;
  bool usable = true;

  bool complete() const { return x.allFinite(); }
};

/// Labels pre-crisis quarters [start-hi, start-lo] and marks the crisis, the
/// `post_crisis_quarters` after its end and the 1..lo-1 quarters before its
/// start as unusable. Exclusion wins over labeling across events.
std::vector<PanelObservation> label_and_filter(const RawPanel& panel,
                                               const std::vector<CrisisEvent>& events,
                                               const Horizon& horizon,
                                               int post_crisis_quarters = kPostCrisisQuarters);

/// Estimation sample: usable observations with no missing feature.
struct Dataset {
  Matrix X;
  Labels y;
  /// Position of each row in the originating observation list.
  std::vector<std::size_t> source;

  Index size() const { return X.rows(); }
};

Dataset estimation_sample(const std::vector<PanelObservation>& obs);
Dataset estimation_sample(const std::vector<PanelObservation>& obs,
                          const std::vector<std::size_t>& subset);

// CSV input/output. Panel rows: country,quarter,<indicators...>; empty, NA and
// nan cells are missing. Event rows: country,start,end.
RawPanel read_panel_csv(std::istream& in);
RawPanel read_panel_csv(const std::string& path);
std::vector<CrisisEvent> read_events_csv(std::istream& in);
std::vector<CrisisEvent> read_events_csv(const std::string& path);
void write_panel_csv(std::ostream& out, const RawPanel& panel);
void write_events_csv(std::ostream& out, const std::vector<CrisisEvent>& events);
void write_observations_csv(std::ostream& out, const std::vector<PanelObservation>& obs,
                            const std::vector<std::string>& indicator_names);

}  // namespace ewm
