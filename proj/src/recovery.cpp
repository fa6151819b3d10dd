#include "otafl/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "otafl/math.hpp"

namespace otafl {
namespace {

/// Gaussian message division with variance clamping: returns the extrinsic
/// (posterior / prior) with variance in [vmin, vmax]. A nonpositive precision
/// difference degenerates to the posterior mean with a flat variance.
ExtrinsicGaussian divide_messages(std::span<const double> post_mean, double post_var,
                                  std::span<const double> prior_mean, double prior_var,
                                  double vmin, double vmax, int* clamped) {
  ExtrinsicGaussian out;
  out.mean.resize(post_mean.size());
  if (post_var <= vmin) {
    // Posterior is (numerically) exact; the extrinsic is the posterior itself.
    out.var = vmin;
    std::copy(post_mean.begin(), post_mean.end(), out.mean.begin());
    if (post_var < vmin && clamped) ++*clamped;
    return out;
  }
  const double prec = 1.0 / post_var - 1.0 / prior_var;
  if (!(prec > 1.0 / vmax)) {
    if (clamped) ++*clamped;
    out.var = vmax;
  } else {
    out.var = 1.0 / prec;
    if (out.var < vmin) {
      if (clamped) ++*clamped;
      out.var = vmin;
    }
  }
  for (std::size_t i = 0; i < post_mean.size(); ++i) {
    out.mean[i] = out.var * (post_mean[i] / post_var - prior_mean[i] / prior_var);
  }
  return out;
}

}  // namespace

LinearEstimate linear_estimate(const MacObservation& obs, const SensingOperator& op,
                               const ExtrinsicGaussian& prior) {
  const std::size_t n = op.n();
  const std::size_t s = op.s();
  if (obs.y.size() != s) throw std::invalid_argument("linear_estimate: observation length != s");
  if (prior.mean.size() != n) throw std::invalid_argument("linear_estimate: prior length != n");
  if (!(prior.var > 0.0)) throw std::invalid_argument("linear_estimate: prior variance must be positive");
  if (!(obs.sigma2 >= 0.0)) throw std::invalid_argument("linear_estimate: sigma2 must be >= 0");

  const double v = prior.var;
  std::vector<double> residual = op.forward(prior.mean);
  for (std::size_t i = 0; i < s; ++i) residual[i] = obs.y[i] - residual[i];
  std::vector<double> back = op.adjoint(residual);

  LinearEstimate out;
  out.mean.resize(n);
  const double gain = v / (v + obs.sigma2);
  for (std::size_t i = 0; i < n; ++i) out.mean[i] = prior.mean[i] + gain * back[i];
  // Average posterior variance with orthonormal rows: tr(A^T A) = s.
  const double frac = static_cast<double>(s) / static_cast<double>(n);
  out.var = v - frac * v * v / (v + obs.sigma2);
  require_finite(out.mean, "linear_estimate mean");
  return out;
}

DenoiserResult denoiser_pass(const ExtrinsicGaussian& input, const PriorMessage& prior) {
  prior.validate();
  const std::size_t n = prior.size();
  if (input.mean.size() != n) throw std::invalid_argument("denoiser_pass: size mismatch");
  if (!(input.var > 0.0)) throw std::invalid_argument("denoiser_pass: input variance must be positive");
  DenoiserResult out;
  out.post_mean.resize(n);
  out.post_var.resize(n);
  out.support.resize(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const BgPosterior p = denoise_bg(input.mean[i], input.var, prior.pi[i], prior.mean[i],
                                     prior.var[i]);
    out.post_mean[i] = p.mean;
    out.post_var[i] = p.var;
    out.support[i] = p.support;
    acc += p.var;
  }
  out.var = acc / static_cast<double>(n);
  require_finite(out.post_mean, "denoiser_pass mean");
  return out;
}

RecoveryResult run_round(const MacObservation& obs, const SensingOperator& op,
                         const PriorMessage& prior, const RecoveryOptions& options) {
  prior.validate();
  if (prior.size() != op.n()) throw std::invalid_argument("run_round: prior/operator size mismatch");
  if (options.i_max <= 0) throw std::invalid_argument("run_round: i_max must be > 0");
  if (!(options.tol > 0.0)) throw std::invalid_argument("run_round: tol must be > 0");
  if (!(options.damping > 0.0 && options.damping <= 1.0)) {
    throw std::invalid_argument("run_round: damping outside (0,1]");
  }
  if (!(options.clamp_ref > 0.0)) throw std::invalid_argument("run_round: clamp_ref must be > 0");

  const std::size_t n = op.n();
  const double vmin = options.clamp_rel_min * options.clamp_ref;
  const double vmax = options.clamp_rel_max * options.clamp_ref;

  ExtrinsicGaussian to_linear;
  to_linear.mean.assign(n, 0.0);
  to_linear.var = options.init_var.value_or(mean_of(prior.var));
  to_linear.var = std::clamp(to_linear.var, vmin, vmax);

  RecoveryResult res;
  double prev_v = std::numeric_limits<double>::infinity();
  double best_v = std::numeric_limits<double>::infinity();
  int rising = 0;

  for (int it = 1; it <= options.i_max; ++it) {
    const LinearEstimate lin = linear_estimate(obs, op, to_linear);
    ExtrinsicGaussian to_denoiser = divide_messages(lin.mean, lin.var, to_linear.mean,
                                                    to_linear.var, vmin, vmax, &res.clamped);
    DenoiserResult den = denoiser_pass(to_denoiser, prior);
    ExtrinsicGaussian back = divide_messages(den.post_mean, std::max(den.var, vmin),
                                             to_denoiser.mean, to_denoiser.var, vmin, vmax,
                                             &res.clamped);
    if (options.damping < 1.0 && it > 1) {
      const double d = options.damping;
      for (std::size_t i = 0; i < n; ++i) {
        back.mean[i] = d * back.mean[i] + (1.0 - d) * to_linear.mean[i];
      }
      back.var = d * back.var + (1.0 - d) * to_linear.var;
    }
    to_linear = std::move(back);

    res.trace.push_back({to_denoiser.var, den.var});
    res.iterations = it;

    if (den.var < best_v) {
      best_v = den.var;
      res.x_hat = den.post_mean;
      res.support = den.support;
      res.v_post = den.var;
      res.linear_ext = to_denoiser;
    }
    rising = (den.var > prev_v) ? rising + 1 : 0;
    if (rising >= 3) {
      res.diverged = true;
      break;
    }
    if (std::isfinite(prev_v) &&
        std::fabs(den.var - prev_v) <= options.tol * std::max(prev_v, 1e-300)) {
      break;
    }
    prev_v = den.var;
  }
  require_finite(res.x_hat, "run_round estimate");
  return res;
}

}  // namespace otafl
