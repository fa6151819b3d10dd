#include "otafl/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "otafl/math.hpp"

namespace otafl {

std::vector<double> transmit(const std::vector<std::vector<double>>& signals, double sigma_e,
                             SeededRng& rng) {
  if (signals.empty()) throw std::invalid_argument("transmit: no signals");
  if (!(sigma_e >= 0.0)) throw std::invalid_argument("transmit: sigma_e must be >= 0");
  const std::size_t s = signals.front().size();
  std::vector<double> out(s, 0.0);
  for (const auto& sig : signals) {
    if (sig.size() != s) throw std::invalid_argument("transmit: signal length mismatch");
    for (std::size_t i = 0; i < s; ++i) out[i] += sig[i];
  }
  if (sigma_e > 0.0) {
    for (std::size_t i = 0; i < s; ++i) out[i] += sigma_e * rng.gaussian();
  }
  require_finite(out, "transmit output");
  return out;
}

MacObservation rescale(std::span<const double> raw, const PowerScaling& scaling,
                       std::span<const double> device_counts, double sigma_e) {
  if (device_counts.empty()) throw std::invalid_argument("rescale: no devices");
  if (!(scaling.alpha > 0.0)) throw std::invalid_argument("rescale: alpha must be > 0");
  double total = 0.0;
  double scaled_total = 0.0;
  for (double k_m : device_counts) {
    if (!(k_m > 0.0)) throw std::invalid_argument("rescale: device counts must be positive");
    total += k_m;
    scaled_total += std::sqrt(scaling.alpha) * k_m;
  }
  const double m = static_cast<double>(device_counts.size());
  const double factor = total / (m * scaled_total);
  MacObservation obs;
  obs.y.assign(raw.begin(), raw.end());
  for (double& v : obs.y) v *= factor;
  obs.sigma2 = sq(total * sigma_e / (m * scaled_total));
  require_finite(obs.y, "rescale output");
  return obs;
}

}  // namespace otafl
