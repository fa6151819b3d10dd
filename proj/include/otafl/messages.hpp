#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "otafl/chain.hpp"

namespace otafl {

/// Gaussian message with elementwise means and a shared scalar variance, the
/// currency exchanged between the linear estimator and the denoiser.
struct ExtrinsicGaussian {
  std::vector<double> mean;
  double var = 0.0;
};

/// Per-coefficient spike-and-slab prior for one round: activity probability
/// pi_n, and slab N(mean_n, var_n).
struct PriorMessage {
  std::vector<double> pi;
  std::vector<double> mean;
  std::vector<double> var;

  std::size_t size() const noexcept { return pi.size(); }
  void validate() const;
};

/// Forward (time-direction) chain messages carried across rounds.
struct ForwardState {
  std::vector<double> lambda_s;  ///< support message into the next round
  std::vector<double> mu_r;      ///< amplitude message mean into the next round
  std::vector<double> v_r;       ///< amplitude message variance into the next round
};

/// Posterior mean/variance of x under prior
/// pi N(x; m, phi) + (1-pi) delta(x), observed z = x + N(0, tau).
struct BgPosterior {
  double mean = 0.0;
  double var = 0.0;
  double support = 0.0;  ///< posterior P(x != 0)
};

BgPosterior denoise_bg(double z, double tau, double pi, double m, double phi);

/// Support evidence extracted from the converged linear extrinsic (z, tau) and
/// the round's amplitude message (r_mean, r_var): the Bernoulli weight
/// lambda_n of the message from the coefficient node to its support node.
std::vector<double> message_delta_to_s(std::span<const double> z, double tau,
                                       std::span<const double> r_mean,
                                       std::span<const double> r_var);

/// Amplitude evidence from the coefficient node to its amplitude node: a
/// single-Gaussian approximation N(mu_bar_n, v_bar_n) of the exact two-part
/// message, obtained from a second-order log-expansion of the epsilon-relaxed
/// mixture around the dominant location. Falls back to the dominant mixture
/// component where the expansion is not concave; `fallbacks`, if non-null,
/// counts those coefficients.
void message_delta_to_r(std::span<const double> z, double tau, std::span<const double> s_fwd_pi,
                        double epsilon, std::span<double> mu_bar_out, std::span<double> v_bar_out,
                        std::size_t* fallbacks = nullptr);

/// One support-chain step: combines last round's incoming message
/// lambda_prev with the round's evidence lambda_delta and pushes through the
/// Markov transition, yielding the message into the next round's support.
std::vector<double> forward_support(std::span<const double> lambda_delta,
                                    std::span<const double> lambda_prev, const ChainParams& params);

/// One amplitude-chain step: combines the Gaussian evidence (mu_bar, v_bar)
/// with the incoming message (mu_prev, v_prev) and pushes through the AR(1)
/// transition.
void forward_amplitude(std::span<const double> mu_bar, std::span<const double> v_bar,
                       std::span<const double> mu_prev, std::span<const double> v_prev,
                       const ChainParams& params, std::span<double> mu_out,
                       std::span<double> v_out);

/// How the next round's prior is assembled from the forward state.
enum class RecoveryVariant {
  kTsaGa,        ///< support chain + amplitude chain
  kNoSupport,    ///< amplitude chain only; support resets to lambda
  kNoAmplitude,  ///< support chain only; amplitude resets to N(0, gamma)
  kMemoryless,   ///< both reset every round
  kErrorFree,    ///< channel bypassed entirely (no prior needed)
};

RecoveryVariant parse_variant(const std::string& name);
std::string variant_name(RecoveryVariant v);

/// Prior for round t+1 given the forward state produced by round t.
PriorMessage next_prior(const ForwardState& fwd, const ChainParams& params,
                        RecoveryVariant variant);

/// Stationary prior used at the first round (and by memoryless resets).
PriorMessage stationary_prior(std::size_t n, const ChainParams& params);

/// Everything one round contributes to the chains: the evidence messages
/// extracted from the converged linear extrinsic plus the prior actually used
/// (the incoming chain messages). Archived for the parameter-learning window.
struct RoundMessages {
  std::vector<double> lambda_delta;  ///< evidence into the support node
  std::vector<double> mu_bar;        ///< Gaussianized evidence into the amplitude node
  std::vector<double> v_bar;
  std::vector<double> pi_in;         ///< incoming support message (prior used)
  std::vector<double> mu_in;         ///< incoming amplitude message
  std::vector<double> v_in;
};

RoundMessages extract_round_messages(std::span<const double> z, double tau,
                                     const PriorMessage& prior, double epsilon,
                                     std::size_t* fallbacks = nullptr);

/// Pushes a round's messages through both chain transitions, producing the
/// forward state consumed by next_prior.
ForwardState advance_forward_state(const RoundMessages& msgs, const ChainParams& params);

}  // namespace otafl
