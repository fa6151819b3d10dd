#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "otafl/channel.hpp"
#include "otafl/messages.hpp"
#include "otafl/sensing.hpp"

namespace otafl {

/// Knobs for the within-round turbo loop. Variance clamps are relative to
/// `clamp_ref` (the prior amplitude variance scale).
struct RecoveryOptions {
  int i_max = 25;
  double tol = 1e-4;                 ///< relative change in denoiser variance
  double damping = 1.0;              ///< 1 = no damping
  double clamp_ref = 1.0;            ///< reference scale for variance clamps
  std::optional<double> init_var;    ///< initial linear-side prior variance
                                     ///< (default: mean of PriorMessage.var)
  double clamp_rel_min = 1e-12;
  double clamp_rel_max = 1e6;
};

/// Posterior mean/variance under the current linear-side Gaussian prior.
struct LinearEstimate {
  std::vector<double> mean;
  double var = 0.0;
};

LinearEstimate linear_estimate(const MacObservation& obs, const SensingOperator& op,
                               const ExtrinsicGaussian& prior);

/// Elementwise spike-and-slab denoising of a pseudo-observation.
struct DenoiserResult {
  std::vector<double> post_mean;
  std::vector<double> post_var;
  std::vector<double> support;
  double var = 0.0;  ///< average posterior variance (the scalar message)
};

DenoiserResult denoiser_pass(const ExtrinsicGaussian& input, const PriorMessage& prior);

/// Per-iteration record of the scalar variances, for trace comparisons.
struct IterationStat {
  double tau = 0.0;     ///< linear extrinsic variance fed to the denoiser
  double v_post = 0.0;  ///< average denoiser posterior variance
};

struct RecoveryResult {
  std::vector<double> x_hat;
  std::vector<double> support;       ///< posterior activity per coefficient
  double v_post = 0.0;
  int iterations = 0;
  bool diverged = false;
  int clamped = 0;                   ///< extrinsic variance clamps triggered
  std::vector<IterationStat> trace;
  ExtrinsicGaussian linear_ext;      ///< converged (z, tau) feeding the chains
};

/// One full turbo recovery: alternates the linear estimator and the denoiser
/// until the denoiser variance stabilizes (relative change < tol), the
/// iteration cap is hit, or the variance grows three times in a row
/// (divergence: the best iterate so far is returned and flagged).
RecoveryResult run_round(const MacObservation& obs, const SensingOperator& op,
                         const PriorMessage& prior, const RecoveryOptions& options);

}  // namespace otafl
