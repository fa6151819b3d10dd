#include "otafl/dct.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace otafl {
namespace {

// FFTW plans are created once per (length, kind) with FFTW_UNALIGNED so they
// can execute on arbitrary caller buffers; plan creation is serialized (the
// FFTW planner is not thread-safe), execution is.
class PlanCache {
 public:
  fftw_plan get(int n, fftw_r2r_kind kind) {
    std::scoped_lock lock(mu_);
    const auto key = std::make_pair(n, static_cast<int>(kind));
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<double> scratch_in(static_cast<std::size_t>(n));
    std::vector<double> scratch_out(static_cast<std::size_t>(n));
    fftw_plan p = fftw_plan_r2r_1d(n, scratch_in.data(), scratch_out.data(), kind,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw std::runtime_error("fftw_plan_r2r_1d failed");
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void check_sizes(std::span<const double> in, std::span<double> out) {
  if (in.empty()) throw std::invalid_argument("dct: empty input");
  if (in.size() != out.size()) throw std::invalid_argument("dct: size mismatch");
}

}  // namespace

void dct2_orthonormal(std::span<const double> in, std::span<double> out) {
  check_sizes(in, out);
  const std::size_t n = in.size();
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  std::vector<double> tmp(in.begin(), in.end());
  fftw_plan p = cache().get(static_cast<int>(n), FFTW_REDFT10);
  fftw_execute_r2r(p, tmp.data(), out.data());
  // REDFT10 yields 2 sum_j x_j cos(pi (2j+1) k / (2n)); rescale to orthonormal.
  const double nd = static_cast<double>(n);
  out[0] *= std::sqrt(1.0 / (4.0 * nd));
  const double ck = std::sqrt(1.0 / (2.0 * nd));
  for (std::size_t k = 1; k < n; ++k) out[k] *= ck;
}

void dct3_orthonormal(std::span<const double> in, std::span<double> out) {
  check_sizes(in, out);
  const std::size_t n = in.size();
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  // REDFT01 computes y_j = x_0 + 2 sum_{k>=1} x_k cos(pi (2j+1) k / (2n)).
  // Pre-scaling the input makes the composite map the transpose of
  // dct2_orthonormal.
  const double nd = static_cast<double>(n);
  std::vector<double> tmp(n);
  tmp[0] = in[0] / std::sqrt(nd);
  const double ck = std::sqrt(1.0 / (2.0 * nd));
  for (std::size_t k = 1; k < n; ++k) tmp[k] = in[k] * ck;
  fftw_plan p = cache().get(static_cast<int>(n), FFTW_REDFT01);
  fftw_execute_r2r(p, tmp.data(), out.data());
}

}  // namespace otafl
