#pragma once

#include "ewm/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace ewm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// Prepared inputs: filtered observations and their estimation sample.
struct PreparedData {
  RawPanel panel;
  std::vector<CrisisEvent> events;
  std::vector<PanelObservation> observations;
  Dataset sample;
};

/// Reads (or synthesizes, when no panel path is configured) the panel and
/// events, then applies the transform pipeline, publication lags and labeling.
PreparedData prepare_data(const RunConfig& cfg);

/// Directory receiving the artifacts of `command` for this configuration.
std::string artifact_dir(const RunConfig& cfg, const std::string& command);

/// Entry point of the ewm executable. Errors are reported on `err` as a
/// one-line JSON record and mapped to the exit codes above.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ewm
