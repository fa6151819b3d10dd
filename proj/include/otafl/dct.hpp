#pragma once

#include <cstddef>
#include <span>

namespace otafl {

/// Orthonormal DCT-II of `in` into `out` (same length n >= 1).
/// The transform matrix F has rows F[k][j] = c_k cos(pi (2j+1) k / (2n)),
/// c_0 = sqrt(1/n), c_k = sqrt(2/n) for k >= 1, so F F^T = I.
void dct2_orthonormal(std::span<const double> in, std::span<double> out);

/// Orthonormal DCT-III (the inverse and transpose of dct2_orthonormal).
void dct3_orthonormal(std::span<const double> in, std::span<double> out);

}  // namespace otafl
