#pragma once

#include <cstddef>
#include <stdexcept>

namespace otafl {

/// Parameters of the temporal prior on each aggregate-update coefficient:
/// a two-state support Markov chain s_t (P(0->1) = p10, P(1->0) = p01,
/// marginal activity lambda) paired with a mean-reverting AR(1) amplitude
/// r_t = (1-beta) r_{t-1} + w_t, w_t ~ N(0, beta^2 * xi). The coefficient is
/// x_t = s_t * r_t. Stationarity ties p10 = lambda p01 / (1-lambda) and
/// xi = (2-beta) gamma / beta, where gamma is the stationary amplitude
/// variance.
struct ChainParams {
  double lambda = 0.1;   ///< stationary P(s = 1)
  double p01 = 0.005;    ///< P(s_t = 0 | s_{t-1} = 1)
  double p10 = 0.0;      ///< P(s_t = 1 | s_{t-1} = 0)
  double beta = 0.005;   ///< amplitude innovation rate, in (0, 1]
  double gamma = 1.0;    ///< stationary amplitude variance
  double xi = 0.0;       ///< innovation variance scale, Var[w] = beta^2 xi
  double epsilon = 1e-7; ///< support relaxation used by the amplitude messages

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("ChainParams: lambda outside [0,1]");
    if (!(p01 >= 0.0 && p01 <= 1.0)) throw std::invalid_argument("ChainParams: p01 outside [0,1]");
    if (!(p10 >= 0.0 && p10 <= 1.0)) throw std::invalid_argument("ChainParams: p10 outside [0,1]");
    if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("ChainParams: beta outside (0,1]");
    if (!(gamma > 0.0)) throw std::invalid_argument("ChainParams: gamma must be positive");
    if (!(xi >= 0.0)) throw std::invalid_argument("ChainParams: xi must be nonnegative");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("ChainParams: epsilon outside (0,1)");
  }

  /// p10 that keeps the support marginal at lambda.
  static double stationary_p10(double lambda, double p01) {
    if (!(lambda < 1.0)) throw std::invalid_argument("stationary_p10: lambda must be < 1");
    return lambda * p01 / (1.0 - lambda);
  }

  /// xi that keeps the amplitude variance at gamma.
  static double stationary_xi(double beta, double gamma) {
    if (!(beta > 0.0)) throw std::invalid_argument("stationary_xi: beta must be > 0");
    return (2.0 - beta) * gamma / beta;
  }

  /// Convenience constructor for a stationary chain.
  static ChainParams stationary(double lambda, double p01, double beta, double gamma,
                                double epsilon = 1e-7) {
    ChainParams p;
    p.lambda = lambda;
    p.p01 = p01;
    p.p10 = stationary_p10(lambda, p01);
    p.beta = beta;
    p.gamma = gamma;
    p.xi = stationary_xi(beta, gamma);
    p.epsilon = epsilon;
    p.validate();
    return p;
  }
};

/// Static description of one transmission round's dimensions and channel.
struct RoundConfig {
  std::size_t n = 0;        ///< model dimension (coefficients per update)
  std::size_t s = 0;        ///< channel uses (compressed length), 0 < s <= n
  std::size_t k = 0;        ///< sparsity kept by each device, 0 < k <= n
  double sigma2 = 0.0;      ///< effective post-rescaling noise variance
  int i_max = 25;           ///< turbo iteration cap
  double tol = 1e-4;        ///< relative variance change stopping threshold
  double damping = 1.0;     ///< extrinsic damping factor (1 = no damping)

  void validate() const {
    if (n == 0) throw std::invalid_argument("RoundConfig: n must be > 0");
    if (s == 0 || s > n) throw std::invalid_argument("RoundConfig: need 0 < s <= n");
    if (k == 0 || k > n) throw std::invalid_argument("RoundConfig: need 0 < k <= n");
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("RoundConfig: sigma2 must be >= 0");
    if (i_max <= 0) throw std::invalid_argument("RoundConfig: i_max must be > 0");
    if (!(tol > 0.0)) throw std::invalid_argument("RoundConfig: tol must be > 0");
    if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("RoundConfig: damping outside (0,1]");
  }
};

}  // namespace otafl
