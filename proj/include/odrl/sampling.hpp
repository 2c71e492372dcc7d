#pragma once

#include <random>

namespace odrl {

/// Inverse-CDF draw from an unnormalized-safe probability vector (span or Eigen row).
/// Falls back to the last index with positive mass when rounding leaves u above the total.
template <typename Weights, typename Rng>
int sample_index(const Weights& weights, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  const auto n = static_cast<int>(weights.size());
  double acc = 0.0;
  int last_positive = 0;
  for (int i = 0; i < n; ++i) {
    const double w = weights[i];
    if (w > 0.0) {
      acc += w;
      last_positive = i;
      if (u < acc) return i;
    }
  }
  return last_positive;
}

}  // namespace odrl
