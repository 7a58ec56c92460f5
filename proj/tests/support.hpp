#pragma once

#include "ewm/panel.hpp"
#include "ewm/synth.hpp"

#include <random>
#include <vector>

namespace ewm::testing {

inline Labels labels_of(std::initializer_list<int> v) {
  Labels y(static_cast<Index>(v.size()));
  Index i = 0;
  for (int x : v) y[i++] = x;
  return y;
}

inline Vector vector_of(std::initializer_list<double> v) {
  Vector x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

/// Random labels with at least one member of each class.
inline Labels random_labels(std::mt19937_64& rng, Index n, double share = 0.3) {
  std::bernoulli_distribution b(share);
  Labels y(n);
  do {
    for (Index i = 0; i < n; ++i) y[i] = b(rng) ? 1 : 0;
  } while (!has_both_classes(y));
  return y;
}

/// Two Gaussian classes in G dimensions separated by `shift` along every axis.
inline void gaussian_classes(std::mt19937_64& rng, Index n, Index g, double shift, Matrix& X, Labels& y,
                             double share = 0.3) {
  std::normal_distribution<double> z;
  y = random_labels(rng, n, share);
  X.resize(n, g);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < g; ++j) X(i, j) = z(rng) + (y[i] ? shift : 0.0);
}

/// Default synthetic panel labeled with the default horizon.
inline std::vector<PanelObservation> synth_observations(const SynthOptions& opt) {
  const SynthPanel sp = synth_panel(opt);
  return label_and_filter(apply_publication_lags(sp.panel), sp.events, opt.horizon);
}

}  // namespace ewm::testing
