#include "otafl/edge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "otafl/math.hpp"

namespace otafl {

std::vector<double> local_update(const GradFn& grad, std::span<const double> theta, double eta,
                                 int e_local) {
  if (!(eta > 0.0)) throw std::invalid_argument("local_update: eta must be > 0");
  if (e_local <= 0) throw std::invalid_argument("local_update: e_local must be > 0");
  std::vector<double> cur(theta.begin(), theta.end());
  std::vector<double> g(theta.size());
  for (int step = 0; step < e_local; ++step) {
    grad(cur, g);
    for (std::size_t j = 0; j < cur.size(); ++j) cur[j] -= eta * g[j];
  }
  for (std::size_t j = 0; j < cur.size(); ++j) cur[j] -= theta[j];
  require_finite(cur, "local_update delta");
  return cur;
}

std::vector<double> accumulate_and_sparsify(DeviceState& dev, std::span<const double> update,
                                            std::size_t k) {
  const std::size_t n = update.size();
  if (k == 0 || k > n) throw std::invalid_argument("accumulate_and_sparsify: need 0 < k <= n");
  if (dev.error.empty()) dev.error.assign(n, 0.0);
  if (dev.error.size() != n) {
    throw std::invalid_argument("accumulate_and_sparsify: error buffer dimension mismatch");
  }

  std::vector<double> combined(n);
  for (std::size_t j = 0; j < n; ++j) combined[j] = update[j] + dev.error[j];

  // k largest magnitudes; ties keep the lower index. The comparator is a
  // strict total order, so nth_element selects a deterministic set.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto larger = [&](std::size_t a, std::size_t b) {
    const double ma = std::fabs(combined[a]);
    const double mb = std::fabs(combined[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  };
  if (k < n) {
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(),
                     larger);
  }

  std::vector<double> sparse(n, 0.0);
  for (std::size_t i = 0; i < k; ++i) sparse[idx[i]] = combined[idx[i]];
  for (std::size_t j = 0; j < n; ++j) dev.error[j] = combined[j] - sparse[j];
  return sparse;
}

PowerScaling choose_alpha(const std::vector<std::vector<double>>& compressed,
                          std::span<const double> weights, double p_bar) {
  if (compressed.size() != weights.size()) {
    throw std::invalid_argument("choose_alpha: signal/weight count mismatch");
  }
  if (!(p_bar > 0.0)) throw std::invalid_argument("choose_alpha: p_bar must be > 0");
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < compressed.size(); ++m) {
    const double energy = sqnorm(compressed[m]) * sq(weights[m]);
    if (energy > 0.0) alpha = std::min(alpha, p_bar / energy);
  }
  if (!std::isfinite(alpha)) alpha = 1.0;  // nothing to send this round
  return PowerScaling{alpha};
}

std::vector<double> compress_and_scale(std::span<const double> g_sp, const SensingOperator& op,
                                       const PowerScaling& scaling, double weight) {
  if (!(scaling.alpha > 0.0)) throw std::invalid_argument("compress_and_scale: alpha must be > 0");
  std::vector<double> y = op.forward(g_sp);
  const double scale = std::sqrt(scaling.alpha) * weight;
  for (double& v : y) v *= scale;
  return y;
}

}  // namespace otafl
