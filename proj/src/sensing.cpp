#include "otafl/sensing.hpp"

#include <numeric>
#include <stdexcept>

#include "otafl/dct.hpp"
#include "otafl/math.hpp"

namespace otafl {

SensingOperator::SensingOperator(std::size_t n, std::size_t s, SeededRng rng)
    : n_(n), s_(s) {
  if (n == 0) throw std::invalid_argument("SensingOperator: n must be > 0");
  if (s == 0 || s > n) throw std::invalid_argument("SensingOperator: need 0 < s <= n");

  signs_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    signs_[i] = (rng.next_u32() & 1u) ? 1.0 : -1.0;
  }

  // Partial Fisher-Yates: the first s entries are a uniform draw of s
  // distinct row indices.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(n - i));
    std::swap(idx[i], idx[j]);
  }
  rows_.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(s));
}

std::vector<double> SensingOperator::forward(std::span<const double> x) const {
  if (x.size() != n_) throw std::invalid_argument("SensingOperator::forward: length != n");
  std::vector<double> t(n_);
  for (std::size_t i = 0; i < n_; ++i) t[i] = signs_[i] * x[i];
  std::vector<double> u(n_);
  dct2_orthonormal(t, u);
  std::vector<double> y(s_);
  for (std::size_t i = 0; i < s_; ++i) y[i] = u[rows_[i]];
  require_finite(y, "SensingOperator::forward output");
  return y;
}

std::vector<double> SensingOperator::adjoint(std::span<const double> y) const {
  if (y.size() != s_) throw std::invalid_argument("SensingOperator::adjoint: length != s");
  std::vector<double> u(n_, 0.0);
  for (std::size_t i = 0; i < s_; ++i) u[rows_[i]] = y[i];
  std::vector<double> t(n_);
  dct3_orthonormal(u, t);
  for (std::size_t i = 0; i < n_; ++i) t[i] *= signs_[i];
  require_finite(t, "SensingOperator::adjoint output");
  return t;
}

}  // namespace otafl
