#pragma once

// Independent reference implementations used by the tests: numeric quadrature
// over explicit densities, finite differences, and dense linear algebra. By
// design these avoid the closed forms used in the library.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

inline long double gauss_density(long double x, long double mean, long double var) {
  const long double d = x - mean;
  return std::exp(-0.5L * d * d / var) / std::sqrt(2.0L * 3.141592653589793238462643383279503L * var);
}

/// Adaptive Simpson quadrature on [a, b].
inline long double adaptive_simpson(const std::function<long double(long double)>& f,
                                    long double a, long double b, long double tol = 1e-14L,
                                    int depth = 60) {
  struct Impl {
    const std::function<long double(long double)>& f;
    long double run(long double a, long double m, long double b, long double fa, long double fm,
                    long double fb, long double whole, long double tol, int depth) {
      const long double lm = 0.5L * (a + m);
      const long double rm = 0.5L * (m + b);
      const long double flm = f(lm);
      const long double frm = f(rm);
      const long double left = (m - a) / 6.0L * (fa + 4.0L * flm + fm);
      const long double right = (b - m) / 6.0L * (fm + 4.0L * frm + fb);
      const long double delta = left + right - whole;
      if (depth <= 0 || std::fabs(delta) <= 15.0L * tol) {
        return left + right + delta / 15.0L;
      }
      return run(a, lm, m, fa, flm, fm, left, tol / 2.0L, depth - 1) +
             run(m, rm, b, fm, frm, fb, right, tol / 2.0L, depth - 1);
    }
  };
  const long double m = 0.5L * (a + b);
  const long double fa = f(a);
  const long double fm = f(m);
  const long double fb = f(b);
  const long double whole = (b - a) / 6.0L * (fa + 4.0L * fm + fb);
  Impl impl{f};
  return impl.run(a, m, b, fa, fm, fb, whole, tol, depth);
}

/// Mean and variance of an unnormalized density by quadrature on [a, b].
struct Moments {
  long double mass = 0.0L;
  long double mean = 0.0L;
  long double var = 0.0L;
};

inline Moments density_moments(const std::function<long double(long double)>& density,
                               long double a, long double b) {
  Moments m;
  m.mass = adaptive_simpson(density, a, b);
  if (!(m.mass > 0.0L)) throw std::runtime_error("density_moments: zero mass");
  const long double m1 =
      adaptive_simpson([&](long double x) { return x * density(x); }, a, b) / m.mass;
  const long double m2 =
      adaptive_simpson([&](long double x) { return x * x * density(x); }, a, b) / m.mass;
  m.mean = m1;
  m.var = m2 - m1 * m1;
  return m;
}

/// Central finite difference of a scalar function.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Gradient of a multivariate function by central differences.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace oracle
