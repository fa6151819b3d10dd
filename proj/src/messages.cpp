#include "otafl/messages.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "otafl/math.hpp"

namespace otafl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double logsumexp2(double a, double b) {
  const double m = std::max(a, b);
  if (m == -kInf) return -kInf;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

void PriorMessage::validate() const {
  if (pi.size() != mean.size() || pi.size() != var.size() || pi.empty()) {
    throw std::invalid_argument("PriorMessage: size mismatch");
  }
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (!(pi[i] >= 0.0 && pi[i] <= 1.0)) throw std::invalid_argument("PriorMessage: pi outside [0,1]");
    if (!(var[i] > 0.0) || !std::isfinite(var[i])) {
      throw std::invalid_argument("PriorMessage: var must be positive and finite");
    }
    if (!std::isfinite(mean[i])) throw std::invalid_argument("PriorMessage: mean must be finite");
  }
}

BgPosterior denoise_bg(double z, double tau, double pi, double m, double phi) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("denoise_bg: tau must be positive");
  if (!(phi >= 0.0) || !std::isfinite(phi)) throw std::invalid_argument("denoise_bg: phi must be >= 0");
  if (!(pi >= 0.0 && pi <= 1.0)) throw std::invalid_argument("denoise_bg: pi outside [0,1]");

  // Slab-and-observation Gaussian product, written without dividing by phi so
  // a point-mass slab (phi = 0) stays exact.
  const double phi_tilde = phi * tau / (phi + tau);
  const double m_tilde = (tau * m + phi * z) / (phi + tau);

  BgPosterior out;
  if (pi <= 0.0) {
    out.mean = 0.0;
    out.var = 0.0;
    out.support = 0.0;
    return out;
  }
  if (pi >= 1.0) {
    out.mean = m_tilde;
    out.var = phi_tilde;
    out.support = 1.0;
    return out;
  }
  const double log_odds = std::log(pi) - std::log1p(-pi) + log_gauss_pdf(z, m, phi + tau) -
                          log_gauss_pdf(z, 0.0, tau);
  const double r = sigmoid(log_odds);
  out.support = r;
  out.mean = r * m_tilde;
  out.var = r * phi_tilde + r * (1.0 - r) * m_tilde * m_tilde;
  return out;
}

std::vector<double> message_delta_to_s(std::span<const double> z, double tau,
                                       std::span<const double> r_mean,
                                       std::span<const double> r_var) {
  if (z.size() != r_mean.size() || z.size() != r_var.size()) {
    throw std::invalid_argument("message_delta_to_s: size mismatch");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("message_delta_to_s: tau must be positive");
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    // P(evidence | s=1) integrates the amplitude message against the
    // observation; P(evidence | s=0) is the observation at zero.
    const double on = log_gauss_pdf(0.0, r_mean[i] - z[i], r_var[i] + tau);
    const double off = log_gauss_pdf(0.0, z[i], tau);
    out[i] = sigmoid(on - off);
  }
  return out;
}

void message_delta_to_r(std::span<const double> z, double tau, std::span<const double> s_fwd_pi,
                        double epsilon, std::span<double> mu_bar_out, std::span<double> v_bar_out,
                        std::size_t* fallbacks) {
  const std::size_t n = z.size();
  if (s_fwd_pi.size() != n || mu_bar_out.size() != n || v_bar_out.size() != n) {
    throw std::invalid_argument("message_delta_to_r: size mismatch");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("message_delta_to_r: tau must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("message_delta_to_r: epsilon outside (0,1)");
  }
  if (fallbacks) *fallbacks = 0;

  const double log_half_2pi_tau = 0.5 * (kLogTwoPi + std::log(tau));
  for (std::size_t i = 0; i < n; ++i) {
    const double lambda = s_fwd_pi[i];
    const double mu = z[i];
    // Exact message: (1-lambda) N(mu; eps*r, tau) + lambda N(mu; r, tau),
    // a mixture of a broad component centred at mu/eps and a sharp one at mu.
    // Second-order log expansion around r0 = mu.
    const double l1 = (lambda >= 1.0 ? -kInf
                                     : std::log1p(-lambda) - log_half_2pi_tau -
                                           sq(mu * (1.0 - epsilon)) / (2.0 * tau));
    const double l2 = (lambda <= 0.0 ? -kInf : std::log(lambda) - log_half_2pi_tau);
    const double w = logsumexp2(l1, l2);
    const double p1 = (l1 == -kInf) ? 0.0 : std::exp(l1 - w);
    const double p2 = (l2 == -kInf) ? 0.0 : std::exp(l2 - w);
    const double s1 = epsilon * mu * (1.0 - epsilon) / tau;  // dlog of broad comp at r0
    const double q1 = -epsilon * epsilon / tau;              // d2log of broad comp
    const double q2 = -1.0 / tau;                            // d2log of sharp comp
    const double d1 = p1 * s1;                               // sharp comp has zero slope at r0
    const double d2 = p1 * (s1 * s1 + q1) + p2 * q2 - d1 * d1;
    if (d2 < 0.0 && std::isfinite(d2)) {
      const double v = -1.0 / d2;
      mu_bar_out[i] = mu + v * d1;
      v_bar_out[i] = v;
    } else {
      // Log-mixture not concave at the expansion point: keep the dominant
      // component exactly.
      if (fallbacks) ++*fallbacks;
      if (l2 >= l1) {
        mu_bar_out[i] = mu;
        v_bar_out[i] = tau;
      } else {
        mu_bar_out[i] = mu / epsilon;
        v_bar_out[i] = tau / (epsilon * epsilon);
      }
    }
  }
}

std::vector<double> forward_support(std::span<const double> lambda_delta,
                                    std::span<const double> lambda_prev,
                                    const ChainParams& params) {
  if (lambda_delta.size() != lambda_prev.size()) {
    throw std::invalid_argument("forward_support: size mismatch");
  }
  params.validate();
  std::vector<double> out(lambda_delta.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double q1 = lambda_prev[i] * lambda_delta[i];
    const double q0 = (1.0 - lambda_prev[i]) * (1.0 - lambda_delta[i]);
    const double mass = q0 + q1;
    if (mass <= std::numeric_limits<double>::min()) {
      // Contradictory hard messages: ignore the evidence and push the
      // incoming belief through the transition alone.
      out[i] = (1.0 - lambda_prev[i]) * params.p10 + lambda_prev[i] * (1.0 - params.p01);
    } else {
      out[i] = (q0 * params.p10 + q1 * (1.0 - params.p01)) / mass;
    }
  }
  return out;
}

void forward_amplitude(std::span<const double> mu_bar, std::span<const double> v_bar,
                       std::span<const double> mu_prev, std::span<const double> v_prev,
                       const ChainParams& params, std::span<double> mu_out,
                       std::span<double> v_out) {
  const std::size_t n = mu_bar.size();
  if (v_bar.size() != n || mu_prev.size() != n || v_prev.size() != n || mu_out.size() != n ||
      v_out.size() != n) {
    throw std::invalid_argument("forward_amplitude: size mismatch");
  }
  params.validate();
  const double c = 1.0 - params.beta;
  const double innovation = params.beta * params.beta * params.xi;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(v_bar[i] > 0.0) || !(v_prev[i] > 0.0)) {
      throw std::invalid_argument("forward_amplitude: variances must be positive");
    }
    // Combine incoming belief with evidence in precision form (either may be
    // +inf = flat), then push through r' = (1-beta) r + N(0, beta^2 xi).
    const double prec = 1.0 / v_prev[i] + 1.0 / v_bar[i];
    double vp, mp;
    if (prec <= 0.0) {
      vp = kInf;
      mp = 0.0;
    } else {
      vp = 1.0 / prec;
      const double h = (std::isfinite(v_prev[i]) ? mu_prev[i] / v_prev[i] : 0.0) +
                       (std::isfinite(v_bar[i]) ? mu_bar[i] / v_bar[i] : 0.0);
      mp = vp * h;
    }
    mu_out[i] = c * mp;
    v_out[i] = c * c * vp + innovation;
  }
}

RecoveryVariant parse_variant(const std::string& name) {
  if (name == "tsa-ga") return RecoveryVariant::kTsaGa;
  if (name == "no-support") return RecoveryVariant::kNoSupport;
  if (name == "no-amplitude") return RecoveryVariant::kNoAmplitude;
  if (name == "memoryless") return RecoveryVariant::kMemoryless;
  if (name == "error-free") return RecoveryVariant::kErrorFree;
  throw std::invalid_argument("unknown variant: " + name);
}

std::string variant_name(RecoveryVariant v) {
  switch (v) {
    case RecoveryVariant::kTsaGa: return "tsa-ga";
    case RecoveryVariant::kNoSupport: return "no-support";
    case RecoveryVariant::kNoAmplitude: return "no-amplitude";
    case RecoveryVariant::kMemoryless: return "memoryless";
    case RecoveryVariant::kErrorFree: return "error-free";
  }
  throw std::logic_error("variant_name: unreachable");
}

PriorMessage stationary_prior(std::size_t n, const ChainParams& params) {
  params.validate();
  PriorMessage p;
  p.pi.assign(n, params.lambda);
  p.mean.assign(n, 0.0);
  p.var.assign(n, params.gamma);
  return p;
}

PriorMessage next_prior(const ForwardState& fwd, const ChainParams& params,
                        RecoveryVariant variant) {
  params.validate();
  const std::size_t n = fwd.lambda_s.size();
  if (fwd.mu_r.size() != n || fwd.v_r.size() != n || n == 0) {
    throw std::invalid_argument("next_prior: inconsistent forward state");
  }
  PriorMessage p;
  switch (variant) {
    case RecoveryVariant::kTsaGa:
      p.pi = fwd.lambda_s;
      p.mean = fwd.mu_r;
      p.var = fwd.v_r;
      break;
    case RecoveryVariant::kNoSupport:
      p.pi.assign(n, params.lambda);
      p.mean = fwd.mu_r;
      p.var = fwd.v_r;
      break;
    case RecoveryVariant::kNoAmplitude:
      p.pi = fwd.lambda_s;
      p.mean.assign(n, 0.0);
      p.var.assign(n, params.gamma);
      break;
    case RecoveryVariant::kMemoryless:
      return stationary_prior(n, params);
    case RecoveryVariant::kErrorFree:
      throw std::invalid_argument("next_prior: error-free variant has no recovery prior");
  }
  // Flat amplitude messages can survive as +inf variances; cap them at the
  // stationary scale so the prior stays a valid density.
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(p.var[i])) {
      p.var[i] = params.gamma;
      p.mean[i] = 0.0;
    }
  }
  p.validate();
  return p;
}

RoundMessages extract_round_messages(std::span<const double> z, double tau,
                                     const PriorMessage& prior, double epsilon,
                                     std::size_t* fallbacks) {
  prior.validate();
  if (z.size() != prior.size()) throw std::invalid_argument("extract_round_messages: size mismatch");
  RoundMessages msgs;
  msgs.lambda_delta = message_delta_to_s(z, tau, prior.mean, prior.var);
  msgs.mu_bar.resize(z.size());
  msgs.v_bar.resize(z.size());
  message_delta_to_r(z, tau, prior.pi, epsilon, msgs.mu_bar, msgs.v_bar, fallbacks);
  msgs.pi_in.assign(prior.pi.begin(), prior.pi.end());
  msgs.mu_in.assign(prior.mean.begin(), prior.mean.end());
  msgs.v_in.assign(prior.var.begin(), prior.var.end());
  return msgs;
}

ForwardState advance_forward_state(const RoundMessages& msgs, const ChainParams& params) {
  ForwardState fwd;
  fwd.lambda_s = forward_support(msgs.lambda_delta, msgs.pi_in, params);
  fwd.mu_r.resize(msgs.mu_bar.size());
  fwd.v_r.resize(msgs.v_bar.size());
  forward_amplitude(msgs.mu_bar, msgs.v_bar, msgs.mu_in, msgs.v_in, params, fwd.mu_r, fwd.v_r);
  return fwd;
}

}  // namespace otafl
