#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "otafl/rng.hpp"

namespace otafl {

/// Compression operator A = R F D: a random +-1 sign diagonal D, the
/// orthonormal DCT-II F, and a row selector R keeping s of the n rows.
/// By construction A A^T = I_s, which the recovery loop relies on.
/// Instances are immutable; forward/adjoint are pure and safe to call
/// concurrently.
class SensingOperator {
 public:
  /// Draws the sign diagonal and row subset from `rng` (consumed by value so
  /// the same seed always builds the same operator).
  SensingOperator(std::size_t n, std::size_t s, SeededRng rng);

  std::size_t n() const noexcept { return n_; }
  std::size_t s() const noexcept { return s_; }
  std::span<const std::size_t> row_subset() const noexcept { return rows_; }
  std::span<const double> signs() const noexcept { return signs_; }

  /// y = A x, length-s output from length-n input.
  std::vector<double> forward(std::span<const double> x) const;

  /// x = A^T y, length-n output from length-s input.
  std::vector<double> adjoint(std::span<const double> y) const;

 private:
  std::size_t n_ = 0;
  std::size_t s_ = 0;
  std::vector<std::size_t> rows_;
  std::vector<double> signs_;
};

}  // namespace otafl
