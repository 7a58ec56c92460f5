#pragma once

// Synthetic country panels with planted pre-crisis shifts, for tests and demos.

#include "ewm/panel.hpp"

#include <cstdint>
#include <vector>

namespace ewm {

struct SynthOptions {
  std::uint64_t seed = 1;
  int countries = 15;
  int quarters = 100;
  Quarter first = Quarter(1988, 1);
  int events = 20;
  /// Shift, in noise standard deviations, of the informative indicators
  /// inside pre-crisis windows.
  double signal_strength = 1.5;
  int indicators = 8;
  /// Persistence of the AR(1) noise; innovations are scaled to unit variance.
  double persistence = 0.5;
  int crisis_length_min = 4;
  int crisis_length_max = 8;
  Horizon horizon;
};

struct SynthPanel {
  RawPanel panel;
  std::vector<CrisisEvent> events;
  /// Per-indicator shift direction times weight: +1, -1 or fractional for
  /// informative indicators, 0 for pure noise.
  std::vector<double> loadings;
};

/// Data-generating process: every indicator is stationary AR(1) noise with unit
/// variance; the first min(3, G) indicators carry loadings (1, -0.75, 0.5) and
/// shift by signal_strength * loading from start - hi until the crisis ends.
/// Crisis starts are placed uniformly at random inside the panel with enough
/// spacing that the pre-crisis, crisis and post-crisis spans of one country
/// never overlap (a crisis may run past the last quarter); an infeasible
/// spacing throws DataError. Odd-numbered indicators are market
/// data, the rest accounting data.
SynthPanel synth_panel(const SynthOptions& options);

}  // namespace ewm
