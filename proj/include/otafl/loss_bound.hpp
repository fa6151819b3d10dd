#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace otafl {

/// Strong-convexity/smoothness description of the global objective plus the
/// gradient-norm bound and sparsification ratio entering the error terms.
struct ConvexityConstants {
  double c = 0.0;        ///< strong convexity modulus
  double l = 0.0;        ///< gradient Lipschitz constant
  double g_bound = 0.0;  ///< uniform bound on local/global gradient norms
  double rho = 0.0;      ///< sqrt((n-k)/n), the energy kept by dropping to k

  void validate() const;
};

/// Squared accumulated-sparsification-error term at round t (1-based):
/// [G rho ((1+rho)(1-rho^t)/(1-rho) + 1)]^2. Zero when rho = 0.
double sparsification_error_term(const ConvexityConstants& k, int t);

/// Per-round error magnitude kappa_t = l^2 * recovery_mse_t +
/// sparsification_error_term(t).
std::vector<double> kappa_series(const ConvexityConstants& k,
                                 std::span<const double> recovery_mse);

/// Expected-loss-gap bound after t_rounds of inexact gradient descent with
/// step 1/l:
///   gap_1 (1 - c/l)^T + (1/l) sum_{t=1..T} (1 - c/l)^{T-t} kappa_t.
double loss_bound(const ConvexityConstants& k, std::span<const double> kappa,
                  double initial_gap, std::size_t t_rounds);

/// Limit of the bound as T grows when kappa_t -> kappa_inf: kappa_inf / c.
double loss_bound_asymptote(const ConvexityConstants& k, double kappa_inf);

}  // namespace otafl
