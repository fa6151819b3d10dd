#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "otafl/chain.hpp"
#include "otafl/messages.hpp"
#include "otafl/rng.hpp"

namespace otafl {

/// Deterministic map from the denoiser-side variance v to the variance tau of
/// the linear module's extrinsic output, for a row-orthonormal operator with
/// undersampling s/n and noise sigma2:
///   tau = (n/s - 1) v + (n/s) sigma2.
double se_f(double v, std::size_t n, std::size_t s, double sigma2);

struct MmseEstimate {
  double value = 0.0;
  double std_err = 0.0;
};

/// Monte Carlo scalar MMSE of the spike-and-slab prior pi N(m, phi) + (1-pi)
/// delta under observation noise tau, averaged over `samples` draws
/// (Rao-Blackwellized: the mean of the posterior variance).
MmseEstimate mmse_mc(double tau, double pi, double m, double phi, std::size_t samples,
                     SeededRng& rng);

/// The N -> infinity decoupled world the state evolution runs on: a
/// population of independent coefficient chains, each carrying its own
/// forward messages. Uses the very same message updates as the recovery code.
class ScalarChainPopulation {
 public:
  ScalarChainPopulation(std::size_t samples, const ChainParams& params, SeededRng rng);

  std::size_t size() const noexcept { return x_.size(); }
  const std::vector<double>& x() const noexcept { return x_; }
  const PriorMessage& prior() const noexcept { return prior_; }

  /// Average initial variance the recovery would use (mean forward variance).
  double init_var() const;

  /// Population MMSE at pseudo-noise level tau with the given fixed standard
  /// normal noise draws (common random numbers across tau evaluations).
  MmseEstimate mmse(double tau, std::span<const double> noise) const;

  /// Absorbs the converged round observation z = x + sqrt(tau_star) * noise
  /// into the forward messages and composes the next round's effective prior
  /// per the variant.
  void absorb_observation(double tau_star, std::span<const double> noise,
                          const ChainParams& params, RecoveryVariant variant);

  /// Advances every chain one round: support transition + AR amplitude step.
  void advance(const ChainParams& params, SeededRng& rng);

 private:
  std::vector<double> r_;
  std::vector<std::uint8_t> s_;
  std::vector<double> x_;
  PriorMessage prior_;  ///< effective per-sample prior for the current round
};

/// Scalar variance recursion of one round: tau_i = f(v_i), v_{i+1} =
/// (1/mmse(tau_i) - 1/tau_i)^{-1}, iterated to a fixed point.
struct SeRoundTrace {
  std::vector<double> tau;
  std::vector<double> v;
  std::vector<double> mmse_se;  ///< MC standard error of each mmse evaluation
  double tau_star = 0.0;
  double v_star = 0.0;
  int iterations = 0;
};

struct SeTrace {
  std::vector<SeRoundTrace> rounds;
};

struct SeConfig {
  std::size_t n = 0;
  std::size_t s = 0;
  double sigma2 = 0.0;
  std::size_t rounds = 3;
  std::size_t samples = 100000;
  int i_max = 25;
  double tol = 1e-4;
  RecoveryVariant variant = RecoveryVariant::kTsaGa;
  /// Starting variance of each round's recursion. Default: the population's
  /// mean forward variance (what the recovery loop assumes). Set it to the
  /// marginal signal variance for trajectory comparisons against a recovery
  /// run started the same way.
  std::optional<double> init_var;
};

/// Runs the multi-round state evolution on a fresh population. Each round
/// starts from v_0 = mean forward variance, iterates to the fixed point with
/// common random numbers, then feeds the converged observation into the
/// population's chains.
SeTrace se_recursion(const SeConfig& config, const ChainParams& params, SeededRng rng);

struct MonotonicityCheck {
  bool ok = true;
  std::vector<std::string> violations;
};

/// Within-round monotonicity: tau_i and v_i non-increasing in i, up to 3
/// combined MC standard errors; tau_i bounded below by the noise floor.
MonotonicityCheck check_iteration_monotonicity(const SeRoundTrace& round, std::size_t n, std::size_t s,
                            double sigma2);

/// Across-round monotonicity of the fixed points, up to 3 combined MC
/// standard errors.
MonotonicityCheck check_round_monotonicity(const SeTrace& trace);

}  // namespace otafl
