#pragma once

#include <span>
#include <vector>

#include "otafl/edge.hpp"
#include "otafl/rng.hpp"

namespace otafl {

/// What the recovery sees: the rescaled observation y = A x + n with
/// n ~ N(0, sigma2 I), where x is the weight-averaged sparsified update.
struct MacObservation {
  std::vector<double> y;
  double sigma2 = 0.0;
};

/// Superimposes the device symbol blocks and adds channel noise with standard
/// deviation sigma_e per channel use.
std::vector<double> transmit(const std::vector<std::vector<double>>& signals, double sigma_e,
                             SeededRng& rng);

/// Undoes the common transmit scaling: y = raw * K / (M sum_m sqrt(alpha) K_m)
/// and reports the effective noise variance
/// sigma2 = (K sigma_e / (M sum_m sqrt(alpha) K_m))^2.
MacObservation rescale(std::span<const double> raw, const PowerScaling& scaling,
                       std::span<const double> device_counts, double sigma_e);

}  // namespace otafl
