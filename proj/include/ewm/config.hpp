#pragma once

// Run configuration: JSON in, validated before any computation.

#include "ewm/experiments.hpp"
#include "ewm/synth.hpp"
#include "ewm/uncertainty.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ewm {

struct MethodEntry {
  MethodSpec spec;
  std::vector<GridAxis> grid;
};

struct RunConfig {
  std::string panel_path;
  std::string events_path;
  /// Indicator kinds for raw columns when no transform pipeline is given.
  std::map<std::string, IndicatorKind> indicator_kinds;
  std::vector<TransformStep> transforms;
  bool apply_lags = true;
  int accounting_lag = 2;
  int market_lag = 1;
  Horizon horizon;
  int post_crisis = kPostCrisisQuarters;
  double mu = 0.8;
  int folds = 10;
  Index replicates = 500;
  double alpha = 0.1;
  RecursiveConfig recursive;
  std::vector<MethodEntry> methods;
  std::vector<AggregateSpec> aggregates;
  /// Method or aggregate whose output bands are plotted.
  std::string band_method = "weighted_mean";
  std::uint64_t seed = 1;
  int workers = 0;
  std::string output = "out";
  SynthOptions synth;

  /// Throws ConfigError on any invalid field.
  void validate() const;
  std::vector<MethodSpec> method_specs() const;
};

/// Parses and validates. Missing keys take their defaults; unknown keys are errors.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// Canonical JSON form (sorted keys, every field present).
nlohmann::json to_json(const RunConfig& cfg);

/// FNV-1a 64 of the canonical JSON text, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace ewm
