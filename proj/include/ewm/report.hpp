#pragma once

// Tables, matrices and band plots written by the command-line driver.

#include "ewm/uncertainty.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace ewm {

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Comma-separated, one header line. `stamp` (if non-empty) is written first
/// as a "# ..." comment line.
void write_csv(std::ostream& out, const Table& table, const std::string& stamp = "");
/// Reads a table written by write_csv, skipping comment lines.
Table read_csv_table(std::istream& in);
/// Fixed-width text rendering; numeric cells are shown with `digits` decimals.
std::string render_text(const Table& table, int digits = 4);

/// Methods ranked by pooled out-of-sample Ur (failed ones last).
Table ranking_table(const RaceResult& race);
/// Every emitted prediction, with observation keys.
Table predictions_table(const RaceResult& race, const std::vector<PanelObservation>* obs);
/// Ranking by mean replicate Ur with standard errors, intervals and critical values.
Table robust_table(const RobustResult& robust);
Table significance_table(const SignificanceMatrix& m);
/// Replicate values, one column per method.
Table replicate_table(const RobustResult& robust, bool auc);
/// Full-sample versus significant-only evaluation of the averaged classifiers.
Table significance_filter_table(const RobustResult& robust, const Preference& pref);

/// Rebuilds significance matrices from a stored robust table.
SignificanceMatrix significance_from_table(const Table& robust, const std::string& measure, double alpha);

struct CountryBand {
  std::string country;
  std::vector<Quarter> quarters;
  std::vector<const BandPoint*> points;
};

/// Groups band points by country, in quarter order.
std::vector<CountryBand> group_bands(const std::vector<BandPoint>& bands,
                                     const std::vector<PanelObservation>& obs);
Table band_table(const CountryBand& band);
/// Probability line with its interval tube, threshold line with its tube,
/// open circles on observations not significantly different from the threshold.
std::string band_svg(const CountryBand& band, const std::string& method, const std::string& stamp);

}  // namespace ewm
