#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "otafl/sensing.hpp"

namespace otafl {

/// Full-batch gradient callback: grad_out = grad L_m(theta). Both spans have
/// the model dimension.
using GradFn = std::function<void(std::span<const double> theta, std::span<double> grad_out)>;

/// Mutable per-device state across rounds: the error-feedback accumulator and
/// the sample weight (local dataset size).
struct DeviceState {
  std::vector<double> error;  ///< unsent residual Delta_m, model dimension
  double weight = 1.0;        ///< K_m (sample count)
};

/// Runs e_local full-batch gradient steps with rate eta starting from theta
/// and returns the resulting model *delta* (final minus initial iterate).
std::vector<double> local_update(const GradFn& grad, std::span<const double> theta, double eta,
                                 int e_local);

/// Error feedback + top-k: adds the accumulated residual to `update`, keeps
/// the k entries of largest magnitude (ties keep the lower index), stores the
/// rest back into dev.error, and returns the sparsified vector. Exactly
/// update + error_before == sparsified + error_after.
std::vector<double> accumulate_and_sparsify(DeviceState& dev, std::span<const double> update,
                                            std::size_t k);

/// Shared transmit power scale (every device uses the same alpha so the
/// superposition stays an unbiased weighted sum).
struct PowerScaling {
  double alpha = 1.0;
};

/// Largest common alpha meeting the per-round budget p_bar for every device:
/// alpha = min_m p_bar / (weight_m^2 ||compressed_m||^2), where weight_m is
/// the aggregation weight M*K_m/K the device pre-applies. Devices with an
/// all-zero signal impose no constraint; if all are zero, alpha = 1.
PowerScaling choose_alpha(const std::vector<std::vector<double>>& compressed,
                          std::span<const double> weights, double p_bar);

/// A * g_sp scaled by sqrt(alpha) * weight — the analog symbol block a device
/// feeds to the channel.
std::vector<double> compress_and_scale(std::span<const double> g_sp, const SensingOperator& op,
                                       const PowerScaling& scaling, double weight);

}  // namespace otafl
