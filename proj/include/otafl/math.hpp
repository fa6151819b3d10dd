#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace otafl {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

/// Density of N(mean, var) at x. var must be strictly positive and finite.
inline double gauss_pdf(double x, double mean, double var) {
  if (!(var > 0.0) || !std::isfinite(var)) {
    throw std::invalid_argument("gauss_pdf: variance must be positive and finite");
  }
  const double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// log N(x; mean, var); stable for tiny densities.
inline double log_gauss_pdf(double x, double mean, double var) {
  if (!(var > 0.0) || !std::isfinite(var)) {
    throw std::invalid_argument("log_gauss_pdf: variance must be positive and finite");
  }
  const double d = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
}

inline double sq(double x) { return x * x; }

inline double sqnorm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline double l2_norm(std::span<const double> v) { return std::sqrt(sqnorm(v)); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double mean_of(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean_of: empty");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// ||a - b||^2 / ||b||^2 with the 0/0 convention nmse(0,0) = 0.
inline double nmse(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("nmse: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    num += sq(estimate[i] - truth[i]);
    den += sq(truth[i]);
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void require_finite(std::span<const double> v, const char* what) {
  if (!all_finite(v)) {
    throw std::runtime_error(std::string("non-finite values in ") + what);
  }
}

/// Numerically stable logistic sigmoid.
inline double sigmoid(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace otafl
