#include "otafl/pipeline.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "otafl/math.hpp"

namespace otafl {

void PipelineConfig::validate() const {
  if (n == 0) throw std::invalid_argument("PipelineConfig: n must be > 0");
  if (k == 0 || k > n) throw std::invalid_argument("PipelineConfig: need 0 < k <= n");
  if (variant != RecoveryVariant::kErrorFree && (s == 0 || s > n)) {
    throw std::invalid_argument("PipelineConfig: need 0 < s <= n");
  }
  if (!(p_bar > 0.0)) throw std::invalid_argument("PipelineConfig: p_bar must be > 0");
  if (!(sigma_e >= 0.0)) throw std::invalid_argument("PipelineConfig: sigma_e must be >= 0");
  if (!(eta > 0.0)) throw std::invalid_argument("PipelineConfig: eta must be > 0");
  if (e_local <= 0) throw std::invalid_argument("PipelineConfig: e_local must be > 0");
  if (t0_window < 2) throw std::invalid_argument("PipelineConfig: t0_window must be >= 2");
  if (lambda0 && !(*lambda0 > 0.0 && *lambda0 < 1.0)) {
    throw std::invalid_argument("PipelineConfig: lambda0 outside (0,1)");
  }
  if (gamma0 && !(*gamma0 > 0.0)) throw std::invalid_argument("PipelineConfig: gamma0 must be > 0");
}

FeelPipeline::FeelPipeline(PipelineConfig config, std::vector<GradFn> device_grads,
                           std::vector<double> device_counts, SeededRng root)
    : cfg_(std::move(config)),
      grads_(std::move(device_grads)),
      counts_(std::move(device_counts)),
      archive_(std::max<std::size_t>(cfg_.t0_window, 2)),
      root_(root) {
  cfg_.validate();
  if (grads_.empty() || grads_.size() != counts_.size()) {
    throw std::invalid_argument("FeelPipeline: device grads/counts mismatch");
  }
  double total = 0.0;
  for (double c : counts_) {
    if (!(c > 0.0)) throw std::invalid_argument("FeelPipeline: device counts must be positive");
    total += c;
  }
  const double m = static_cast<double>(counts_.size());
  weights_.resize(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i) weights_[i] = m * counts_[i] / total;
  devices_.resize(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    devices_[i].error.assign(cfg_.n, 0.0);
    devices_[i].weight = counts_[i];
  }
  theta_.assign(cfg_.n, 0.0);

  const double lambda = cfg_.lambda0.value_or(static_cast<double>(cfg_.k) /
                                              static_cast<double>(cfg_.n));
  const double gamma = cfg_.gamma0.value_or(1.0);
  params_ = ChainParams::stationary(lambda, cfg_.p01_0, cfg_.beta0, gamma, cfg_.epsilon);
  gamma_initialized_ = cfg_.gamma0.has_value();
}

RoundOutcome FeelPipeline::step() {
  ++t_;
  RoundOutcome out;
  out.round = t_;

  // Device side: local gradient steps, error feedback, top-k.
  const std::size_t m = grads_.size();
  std::vector<std::vector<double>> sparse(m);
  for (std::size_t dev = 0; dev < m; ++dev) {
    const std::vector<double> delta = local_update(grads_[dev], theta_, cfg_.eta, cfg_.e_local);
    sparse[dev] = accumulate_and_sparsify(devices_[dev], delta, cfg_.k);
  }

  // The quantity the server wants: the weighted average of the sparsified
  // deltas.
  double total = 0.0;
  for (double c : counts_) total += c;
  out.x_true.assign(cfg_.n, 0.0);
  for (std::size_t dev = 0; dev < m; ++dev) {
    const double w = counts_[dev] / total;
    for (std::size_t j = 0; j < cfg_.n; ++j) out.x_true[j] += w * sparse[dev][j];
  }

  if (cfg_.variant == RecoveryVariant::kErrorFree) {
    out.x_hat = out.x_true;
    out.nmse = 0.0;
    out.params = params_;
    for (std::size_t j = 0; j < cfg_.n; ++j) theta_[j] += out.x_hat[j];
    return out;
  }

  // Air interface.
  const SensingOperator op(cfg_.n, cfg_.s, root_.spawn("op").spawn(std::to_string(t_)));
  std::vector<std::vector<double>> compressed(m);
  for (std::size_t dev = 0; dev < m; ++dev) compressed[dev] = op.forward(sparse[dev]);
  const PowerScaling scaling = choose_alpha(compressed, weights_, cfg_.p_bar);
  std::vector<std::vector<double>> signals(m);
  for (std::size_t dev = 0; dev < m; ++dev) {
    signals[dev] = compressed[dev];
    const double scale = std::sqrt(scaling.alpha) * weights_[dev];
    for (double& v : signals[dev]) v *= scale;
  }
  SeededRng noise_rng = root_.spawn("noise").spawn(std::to_string(t_));
  const std::vector<double> raw = transmit(signals, cfg_.sigma_e, noise_rng);
  const MacObservation obs = rescale(raw, scaling, counts_, cfg_.sigma_e);
  out.alpha = scaling.alpha;
  out.sigma2 = obs.sigma2;

  // First-round amplitude-scale estimate from the observation energy.
  if (!gamma_initialized_) {
    const double g = sqnorm(obs.y) / (static_cast<double>(cfg_.n) * params_.lambda);
    if (g > 0.0) {
      params_.gamma = g;
      params_.xi = ChainParams::stationary_xi(params_.beta, params_.gamma);
    }
    gamma_initialized_ = true;
  }

  // Recovery under the variant's prior.
  const PriorMessage prior = have_fwd_ ? next_prior(fwd_, params_, cfg_.variant)
                                       : stationary_prior(cfg_.n, params_);
  RecoveryOptions opts;
  opts.i_max = cfg_.i_max;
  opts.tol = cfg_.tol;
  opts.damping = cfg_.damping;
  opts.clamp_ref = params_.gamma;
  const RecoveryResult rec = run_round(obs, op, prior, opts);
  out.x_hat = rec.x_hat;
  out.v_post = rec.v_post;
  out.iterations = rec.iterations;
  out.diverged = rec.diverged;
  out.clamped = rec.clamped;
  out.nmse = nmse(rec.x_hat, out.x_true);

  // Chain bookkeeping for the next round and the EM window.
  RoundMessages msgs = extract_round_messages(rec.linear_ext.mean, rec.linear_ext.var, prior,
                                              params_.epsilon);
  fwd_ = advance_forward_state(msgs, params_);
  have_fwd_ = true;
  archive_.push(std::move(msgs));

  if (cfg_.em_enabled && em_schedule(t_, cfg_.t0_window, cfg_.warmup) && archive_.size() >= 2) {
    params_ = em_update(posterior_moments(archive_, params_), params_);
  }
  out.params = params_;

  for (std::size_t j = 0; j < cfg_.n; ++j) theta_[j] += out.x_hat[j];
  require_finite(theta_, "FeelPipeline model iterate");
  return out;
}

}  // namespace otafl
