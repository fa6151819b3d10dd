#include "otafl/loss_bound.hpp"

#include <cmath>
#include <stdexcept>

#include "otafl/math.hpp"

namespace otafl {

void ConvexityConstants::validate() const {
  if (!(c > 0.0)) throw std::invalid_argument("ConvexityConstants: c must be positive");
  if (!(l >= c)) throw std::invalid_argument("ConvexityConstants: need l >= c");
  if (!(g_bound >= 0.0)) throw std::invalid_argument("ConvexityConstants: g_bound must be >= 0");
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::invalid_argument("ConvexityConstants: rho must lie in [0,1)");
  }
}

double sparsification_error_term(const ConvexityConstants& k, int t) {
  k.validate();
  if (t < 1) throw std::invalid_argument("sparsification_error_term: t must be >= 1");
  if (k.rho == 0.0) return 0.0;
  const double geo = (1.0 + k.rho) * (1.0 - std::pow(k.rho, t)) / (1.0 - k.rho);
  return sq(k.g_bound * k.rho * (geo + 1.0));
}

std::vector<double> kappa_series(const ConvexityConstants& k,
                                 std::span<const double> recovery_mse) {
  k.validate();
  std::vector<double> kappa(recovery_mse.size());
  for (std::size_t t = 0; t < recovery_mse.size(); ++t) {
    if (!(recovery_mse[t] >= 0.0)) throw std::invalid_argument("kappa_series: negative mse");
    kappa[t] = k.l * k.l * recovery_mse[t] +
               sparsification_error_term(k, static_cast<int>(t) + 1);
  }
  return kappa;
}

double loss_bound(const ConvexityConstants& k, std::span<const double> kappa,
                  double initial_gap, std::size_t t_rounds) {
  k.validate();
  if (!(initial_gap >= 0.0)) throw std::invalid_argument("loss_bound: negative initial gap");
  if (t_rounds == 0) return initial_gap;
  if (kappa.size() < t_rounds) throw std::invalid_argument("loss_bound: kappa series too short");
  const double contraction = 1.0 - k.c / k.l;
  double bound = initial_gap * std::pow(contraction, static_cast<double>(t_rounds));
  for (std::size_t t = 1; t <= t_rounds; ++t) {
    bound += std::pow(contraction, static_cast<double>(t_rounds - t)) * kappa[t - 1] / k.l;
  }
  return bound;
}

double loss_bound_asymptote(const ConvexityConstants& k, double kappa_inf) {
  k.validate();
  if (!(kappa_inf >= 0.0)) throw std::invalid_argument("loss_bound_asymptote: negative kappa");
  return kappa_inf / k.c;
}

}  // namespace otafl
