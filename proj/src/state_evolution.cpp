#include "otafl/state_evolution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "otafl/math.hpp"

namespace otafl {

double se_f(double v, std::size_t n, std::size_t s, double sigma2) {
  if (s == 0 || s > n) throw std::invalid_argument("se_f: need 0 < s <= n");
  if (!(v >= 0.0) || !(sigma2 >= 0.0)) throw std::invalid_argument("se_f: negative variance");
  const double ratio = static_cast<double>(n) / static_cast<double>(s);
  return (ratio - 1.0) * v + ratio * sigma2;
}

MmseEstimate mmse_mc(double tau, double pi, double m, double phi, std::size_t samples,
                     SeededRng& rng) {
  if (samples == 0) throw std::invalid_argument("mmse_mc: samples must be > 0");
  const double sd_noise = std::sqrt(tau);
  const double sd_slab = std::sqrt(phi);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = (rng.uniform() < pi) ? m + sd_slab * rng.gaussian() : 0.0;
    const double z = x + sd_noise * rng.gaussian();
    const double pv = denoise_bg(z, tau, pi, m, phi).var;
    sum += pv;
    sum_sq += pv * pv;
  }
  const double n = static_cast<double>(samples);
  MmseEstimate est;
  est.value = sum / n;
  const double var = std::max(0.0, sum_sq / n - est.value * est.value);
  est.std_err = std::sqrt(var / n);
  return est;
}

ScalarChainPopulation::ScalarChainPopulation(std::size_t samples, const ChainParams& params,
                                             SeededRng rng) {
  params.validate();
  if (samples == 0) throw std::invalid_argument("ScalarChainPopulation: samples must be > 0");
  r_.resize(samples);
  s_.resize(samples);
  x_.resize(samples);
  const double sd = std::sqrt(params.gamma);
  for (std::size_t i = 0; i < samples; ++i) {
    s_[i] = rng.uniform() < params.lambda ? 1 : 0;
    r_[i] = sd * rng.gaussian();
    x_[i] = s_[i] ? r_[i] : 0.0;
  }
  prior_ = stationary_prior(samples, params);
}

double ScalarChainPopulation::init_var() const { return mean_of(prior_.var); }

MmseEstimate ScalarChainPopulation::mmse(double tau, std::span<const double> noise) const {
  if (noise.size() != size()) throw std::invalid_argument("mmse: noise length mismatch");
  if (!(tau > 0.0)) throw std::invalid_argument("mmse: tau must be positive");
  const double sd = std::sqrt(tau);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const double z = x_[i] + sd * noise[i];
    const double pv = denoise_bg(z, tau, prior_.pi[i], prior_.mean[i], prior_.var[i]).var;
    sum += pv;
    sum_sq += pv * pv;
  }
  const double n = static_cast<double>(size());
  MmseEstimate est;
  est.value = sum / n;
  est.std_err = std::sqrt(std::max(0.0, sum_sq / n - est.value * est.value) / n);
  return est;
}

void ScalarChainPopulation::absorb_observation(double tau_star, std::span<const double> noise,
                                               const ChainParams& params,
                                               RecoveryVariant variant) {
  if (noise.size() != size()) {
    throw std::invalid_argument("absorb_observation: noise length mismatch");
  }
  const double sd = std::sqrt(tau_star);
  std::vector<double> z(size());
  for (std::size_t i = 0; i < size(); ++i) z[i] = x_[i] + sd * noise[i];
  const RoundMessages msgs = extract_round_messages(z, tau_star, prior_, params.epsilon);
  const ForwardState fwd = advance_forward_state(msgs, params);
  prior_ = next_prior(fwd, params, variant);
}

void ScalarChainPopulation::advance(const ChainParams& params, SeededRng& rng) {
  params.validate();
  const double innovation_sd = params.beta * std::sqrt(params.xi);
  const double keep = 1.0 - params.beta;
  for (std::size_t i = 0; i < size(); ++i) {
    const double u = rng.uniform();
    s_[i] = s_[i] ? (u < params.p01 ? 0 : 1) : (u < params.p10 ? 1 : 0);
    r_[i] = keep * r_[i] + innovation_sd * rng.gaussian();
    x_[i] = s_[i] ? r_[i] : 0.0;
  }
}

SeTrace se_recursion(const SeConfig& config, const ChainParams& params, SeededRng rng) {
  if (config.rounds == 0) throw std::invalid_argument("se_recursion: rounds must be > 0");
  if (config.i_max <= 0 || !(config.tol > 0.0)) {
    throw std::invalid_argument("se_recursion: bad iteration controls");
  }
  if (config.init_var && !(*config.init_var > 0.0)) {
    throw std::invalid_argument("se_recursion: init_var must be positive");
  }
  ChainParams p = params;
  p.validate();
  ScalarChainPopulation pop(config.samples, p, rng.spawn("population"));
  SeededRng adv_rng = rng.spawn("transitions");

  SeTrace trace;
  for (std::size_t t = 1; t <= config.rounds; ++t) {
    SeededRng noise_rng = rng.spawn("noise").spawn(std::to_string(t));
    std::vector<double> noise(config.samples);
    for (auto& w : noise) w = noise_rng.gaussian();

    SeRoundTrace round;
    double v = config.init_var.value_or(pop.init_var());
    double prev_v = v;
    for (int i = 1; i <= config.i_max; ++i) {
      const double tau = se_f(v, config.n, config.s, config.sigma2);
      if (!(tau > 0.0)) {
        // Noiseless full sampling: the fixed point is exact recovery.
        round.tau.push_back(0.0);
        round.v.push_back(0.0);
        round.mmse_se.push_back(0.0);
        v = 0.0;
        round.iterations = i;
        break;
      }
      const MmseEstimate phi = pop.mmse(tau, noise);
      double v_next;
      if (phi.value <= 0.0) {
        v_next = 0.0;
      } else {
        const double prec = 1.0 / phi.value - 1.0 / tau;
        v_next = prec > 0.0 ? 1.0 / prec : tau * 1e12;
      }
      round.tau.push_back(tau);
      round.v.push_back(v_next);
      // d v / d phi = v^2 / phi^2 propagates the MC error of phi.
      round.mmse_se.push_back(phi.value > 0.0 ? phi.std_err * sq(v_next / phi.value) : 0.0);
      round.iterations = i;
      v = v_next;
      if (std::fabs(v - prev_v) <= config.tol * std::max(prev_v, 1e-300)) break;
      prev_v = v;
    }
    round.v_star = round.v.back();
    round.tau_star = round.tau.back();
    trace.rounds.push_back(round);

    const double tau_star = std::max(round.tau_star, 1e-300);
    pop.absorb_observation(tau_star, noise, p, config.variant);
    if (t < config.rounds) pop.advance(p, adv_rng);
  }
  return trace;
}

MonotonicityCheck check_iteration_monotonicity(const SeRoundTrace& round, std::size_t n, std::size_t s,
                            double sigma2) {
  MonotonicityCheck check;
  const double floor = static_cast<double>(n) / static_cast<double>(s) * sigma2;
  for (std::size_t i = 0; i < round.tau.size(); ++i) {
    if (round.tau[i] < floor - 1e-12 * std::max(1.0, floor)) {
      check.ok = false;
      check.violations.push_back("tau below noise floor at iteration " + std::to_string(i + 1));
    }
    if (i == 0) continue;
    const double tol_tau = 3.0 * std::hypot(round.mmse_se[i], round.mmse_se[i - 1]) *
                               (static_cast<double>(n) / static_cast<double>(s) - 1.0) +
                           1e-12;
    if (round.tau[i] > round.tau[i - 1] + tol_tau) {
      check.ok = false;
      check.violations.push_back("tau increased at iteration " + std::to_string(i + 1));
    }
    const double tol_v = 3.0 * std::hypot(round.mmse_se[i], round.mmse_se[i - 1]) + 1e-12;
    if (round.v[i] > round.v[i - 1] + tol_v) {
      check.ok = false;
      check.violations.push_back("v increased at iteration " + std::to_string(i + 1));
    }
  }
  return check;
}

MonotonicityCheck check_round_monotonicity(const SeTrace& trace) {
  MonotonicityCheck check;
  for (std::size_t t = 1; t < trace.rounds.size(); ++t) {
    const auto& prev = trace.rounds[t - 1];
    const auto& cur = trace.rounds[t];
    const double tol =
        3.0 * std::hypot(prev.mmse_se.back(), cur.mmse_se.back()) + 1e-12;
    if (cur.v_star > prev.v_star + tol) {
      check.ok = false;
      check.violations.push_back("fixed point increased at round " + std::to_string(t + 1));
    }
  }
  return check;
}

}  // namespace otafl
