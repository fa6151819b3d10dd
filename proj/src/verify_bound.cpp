#include "otafl/verify_bound.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "otafl/math.hpp"
#include "otafl/objective.hpp"
#include "otafl/pipeline.hpp"

namespace otafl {

BoundVerification verify_bound_empirically(const BoundTaskConfig& task, std::uint64_t seed) {
  if (task.checkpoints.empty() || task.n_seeds == 0) {
    throw std::invalid_argument("verify_bound_empirically: empty checkpoints or seeds");
  }
  for (std::size_t cp : task.checkpoints) {
    if (cp == 0 || cp > task.t_rounds) {
      throw std::invalid_argument("verify_bound_empirically: checkpoint outside [1, t_rounds]");
    }
  }

  const std::size_t n = task.dim;
  const std::size_t s = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                     std::lround(task.s_fraction * n)));
  const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                     std::lround(task.k_fraction * n)));

  ConvexityConstants constants;
  constants.c = task.c;
  constants.l = task.l;
  constants.rho = std::sqrt(static_cast<double>(n - k) / static_cast<double>(n));

  std::vector<double> gap_sum(task.t_rounds, 0.0);
  std::vector<double> mse_sum(task.t_rounds, 0.0);
  double initial_gap_sum = 0.0;
  double g_max = 0.0;

  for (std::size_t rep = 0; rep < task.n_seeds; ++rep) {
    SeededRng root(seed);
    SeededRng task_rng = root.spawn("quad-task").spawn(std::to_string(rep));

    // Shared curvature spectrum covering [c, l] exactly.
    std::vector<double> h(n);
    h[0] = task.c;
    if (n > 1) h[1] = task.l;
    for (std::size_t j = 2; j < n; ++j) {
      h[j] = task.c + (task.l - task.c) * task_rng.uniform();
    }
    // Per-device targets and the exact minimizer of the average objective.
    std::vector<std::vector<double>> targets(task.m_devices, std::vector<double>(n));
    std::vector<double> theta_star(n, 0.0);
    for (auto& a : targets) {
      for (std::size_t j = 0; j < n; ++j) {
        a[j] = task.target_scale * task_rng.gaussian();
        theta_star[j] += a[j] / static_cast<double>(task.m_devices);
      }
    }

    std::vector<std::shared_ptr<QuadraticObjective>> devices;
    std::vector<GradFn> grads;
    for (std::size_t dev = 0; dev < task.m_devices; ++dev) {
      devices.push_back(std::make_shared<QuadraticObjective>(h, targets[dev]));
      auto obj = devices.back();
      grads.push_back([obj](std::span<const double> theta, std::span<double> g) {
        obj->gradient(theta, g);
      });
    }
    auto global_loss = [&](std::span<const double> theta) {
      double acc = 0.0;
      for (const auto& d : devices) acc += d->loss(theta);
      return acc / static_cast<double>(task.m_devices);
    };
    const double loss_star = global_loss(theta_star);

    PipelineConfig pc;
    pc.n = n;
    pc.s = s;
    pc.k = k;
    pc.p_bar = task.p_bar;
    pc.sigma_e = task.sigma_e;
    pc.eta = 1.0 / task.l;
    pc.e_local = 1;
    pc.variant = RecoveryVariant::kTsaGa;
    FeelPipeline pipe(pc, grads, std::vector<double>(task.m_devices, 1.0),
                      root.spawn("bound-run").spawn(std::to_string(rep)));

    initial_gap_sum += global_loss(pipe.theta()) - loss_star;
    std::vector<double> grad_buf(n);
    for (std::size_t t = 1; t <= task.t_rounds; ++t) {
      // Gradient norms observed along the trajectory (before the update).
      double global_sq = 0.0;
      std::vector<double> gsum(n, 0.0);
      for (std::size_t dev = 0; dev < task.m_devices; ++dev) {
        devices[dev]->gradient(pipe.theta(), grad_buf);
        g_max = std::max(g_max, l2_norm(grad_buf));
        for (std::size_t j = 0; j < n; ++j) gsum[j] += grad_buf[j];
      }
      for (std::size_t j = 0; j < n; ++j) global_sq += sq(gsum[j] / task.m_devices);
      g_max = std::max(g_max, std::sqrt(global_sq));

      const RoundOutcome outcome = pipe.step();
      double err = 0.0;
      for (std::size_t j = 0; j < n; ++j) err += sq(outcome.x_hat[j] - outcome.x_true[j]);
      mse_sum[t - 1] += err;
      gap_sum[t - 1] += global_loss(pipe.theta()) - loss_star;
    }
  }

  constants.g_bound = g_max;
  const double seeds = static_cast<double>(task.n_seeds);
  std::vector<double> recovery_mse(task.t_rounds);
  for (std::size_t t = 0; t < task.t_rounds; ++t) recovery_mse[t] = mse_sum[t] / seeds;

  BoundVerification result;
  result.constants = constants;
  result.kappa = kappa_series(constants, recovery_mse);
  result.initial_gap = initial_gap_sum / seeds;
  result.checkpoints = task.checkpoints;
  const std::vector<double> zero_kappa(task.t_rounds, 0.0);
  result.bound_holds = true;
  for (std::size_t cp : task.checkpoints) {
    const double measured = gap_sum[cp - 1] / seeds;
    const double certified = loss_bound(constants, result.kappa, result.initial_gap, cp);
    const double control = loss_bound(constants, zero_kappa, result.initial_gap, cp);
    result.measured_gap.push_back(measured);
    result.bound.push_back(certified);
    result.control.push_back(control);
    if (measured > certified) result.bound_holds = false;
  }
  result.control_violated_final = result.measured_gap.back() > result.control.back();
  return result;
}

}  // namespace otafl
