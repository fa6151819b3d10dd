#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "otafl/chain.hpp"
#include "otafl/channel.hpp"
#include "otafl/edge.hpp"
#include "otafl/em.hpp"
#include "otafl/messages.hpp"
#include "otafl/recovery.hpp"
#include "otafl/rng.hpp"

namespace otafl {

/// Static configuration of the communication/recovery pipeline, independent
/// of what the devices are optimizing.
struct PipelineConfig {
  std::size_t n = 0;   ///< model dimension
  std::size_t s = 0;   ///< channel uses per round
  std::size_t k = 0;   ///< per-device sparsity
  double p_bar = 500.0;
  double sigma_e = 1.0;
  double eta = 0.01;
  int e_local = 1;
  int i_max = 25;
  double tol = 1e-4;
  double damping = 1.0;
  RecoveryVariant variant = RecoveryVariant::kTsaGa;

  bool em_enabled = true;
  std::size_t t0_window = 5;
  std::size_t warmup = 10;

  /// Chain initialization. lambda defaults to k/n; gamma is estimated from
  /// the first observation unless given explicitly.
  std::optional<double> lambda0;
  double p01_0 = 0.005;
  double beta0 = 0.005;
  std::optional<double> gamma0;
  double epsilon = 1e-7;

  void validate() const;
};

/// Everything worth logging about one round.
struct RoundOutcome {
  std::size_t round = 0;
  double nmse = 0.0;          ///< recovery error vs the true aggregate
  double alpha = 1.0;
  double sigma2 = 0.0;
  double v_post = 0.0;
  int iterations = 0;
  bool diverged = false;
  int clamped = 0;
  ChainParams params;         ///< chain parameters after any EM step
  std::vector<double> x_hat;  ///< applied model delta
  std::vector<double> x_true; ///< exact weighted sparsified aggregate
};

/// The full per-round loop: local updates -> error feedback/top-k ->
/// compression -> analog superposition -> rescaling -> turbo recovery ->
/// chain message advance -> (scheduled) EM -> model update. Owns the model
/// iterate and all cross-round state.
class FeelPipeline {
 public:
  FeelPipeline(PipelineConfig config, std::vector<GradFn> device_grads,
               std::vector<double> device_counts, SeededRng root);

  RoundOutcome step();

  std::span<const double> theta() const noexcept { return theta_; }
  const ChainParams& params() const noexcept { return params_; }
  std::size_t round() const noexcept { return t_; }

 private:
  PipelineConfig cfg_;
  std::vector<GradFn> grads_;
  std::vector<double> counts_;
  std::vector<double> weights_;  ///< M * K_m / K, pre-applied at the devices
  std::vector<DeviceState> devices_;
  std::vector<double> theta_;
  ChainParams params_;
  bool gamma_initialized_ = false;
  ForwardState fwd_;
  bool have_fwd_ = false;
  WindowArchive archive_;
  SeededRng root_;
  std::size_t t_ = 0;
};

}  // namespace otafl
