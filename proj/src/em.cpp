#include "otafl/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "otafl/math.hpp"

namespace otafl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double prec_of(double var) { return std::isfinite(var) ? 1.0 / var : 0.0; }

/// Product of two Gaussian messages in precision form; either may be flat.
inline void gauss_product(double m1, double v1, double m2, double v2, double& m_out,
                          double& v_out) {
  const double p = prec_of(v1) + prec_of(v2);
  if (p <= 0.0) {
    m_out = 0.0;
    v_out = kInf;
    return;
  }
  v_out = 1.0 / p;
  m_out = v_out * ((std::isfinite(v1) ? m1 / v1 : 0.0) + (std::isfinite(v2) ? m2 / v2 : 0.0));
}

}  // namespace

std::vector<std::vector<double>> backward_support(const WindowArchive& win,
                                                  const ChainParams& params) {
  params.validate();
  const std::size_t w_count = win.size();
  if (w_count == 0) throw std::invalid_argument("backward_support: empty window");
  const std::size_t n = win[0].lambda_delta.size();
  std::vector<std::vector<double>> back(w_count, std::vector<double>(n, 0.5));
  for (std::size_t w = w_count; w-- > 1;) {
    const auto& evid = win[w].lambda_delta;
    const auto& into_w = back[w];
    auto& out = back[w - 1];
    for (std::size_t i = 0; i < n; ++i) {
      const double w1 = evid[i] * into_w[i];
      const double w0 = (1.0 - evid[i]) * (1.0 - into_w[i]);
      const double m0 = (1.0 - params.p10) * w0 + params.p10 * w1;
      const double m1 = params.p01 * w0 + (1.0 - params.p01) * w1;
      const double z = m0 + m1;
      out[i] = (z <= std::numeric_limits<double>::min()) ? 0.5 : m1 / z;
    }
  }
  return back;
}

void backward_amplitude(const WindowArchive& win, const ChainParams& params,
                        std::vector<std::vector<double>>& mu_back,
                        std::vector<std::vector<double>>& v_back) {
  params.validate();
  const std::size_t w_count = win.size();
  if (w_count == 0) throw std::invalid_argument("backward_amplitude: empty window");
  const std::size_t n = win[0].mu_bar.size();
  mu_back.assign(w_count, std::vector<double>(n, 0.0));
  v_back.assign(w_count, std::vector<double>(n, kInf));
  const double c = 1.0 - params.beta;
  const double innovation = params.beta * params.beta * params.xi;
  for (std::size_t w = w_count; w-- > 1;) {
    const auto& evm = win[w].mu_bar;
    const auto& evv = win[w].v_bar;
    for (std::size_t i = 0; i < n; ++i) {
      double mc, vc;
      gauss_product(evm[i], evv[i], mu_back[w][i], v_back[w][i], mc, vc);
      if (!std::isfinite(vc)) continue;  // flat stays flat
      if (c <= 0.0) continue;            // beta = 1: transition forgets the past
      // nu(r_{w-1}) = integral of the AR kernel against N(mc, vc):
      // Gaussian in r_{w-1} with mean mc/c and variance (vc + beta^2 xi)/c^2.
      mu_back[w - 1][i] = mc / c;
      v_back[w - 1][i] = (vc + innovation) / (c * c);
    }
  }
}

PosteriorMoments posterior_moments(const WindowArchive& win, const ChainParams& params) {
  params.validate();
  const std::size_t w_count = win.size();
  if (w_count < 2) throw std::invalid_argument("posterior_moments: need at least 2 rounds");
  const std::size_t n = win[0].lambda_delta.size();

  const auto s_back = backward_support(win, params);
  std::vector<std::vector<double>> mu_back, v_back;
  backward_amplitude(win, params, mu_back, v_back);

  PosteriorMoments out;
  out.e_s.assign(w_count, std::vector<double>(n));
  out.e_r.assign(w_count, std::vector<double>(n));
  out.var_r.assign(w_count, std::vector<double>(n));
  out.e_ss.assign(w_count - 1, std::vector<double>(n));
  out.e_rr.assign(w_count - 1, std::vector<double>(n));

  for (std::size_t w = 0; w < w_count; ++w) {
    const auto& rm = win[w];
    for (std::size_t i = 0; i < n; ++i) {
      // Support marginal: forward-into x evidence x backward-into.
      const double a1 = rm.pi_in[i] * rm.lambda_delta[i] * s_back[w][i];
      const double a0 = (1.0 - rm.pi_in[i]) * (1.0 - rm.lambda_delta[i]) * (1.0 - s_back[w][i]);
      out.e_s[w][i] = (a0 + a1 <= std::numeric_limits<double>::min()) ? 0.5 : a1 / (a0 + a1);
      // Amplitude marginal: product of three Gaussians.
      double m_fe, v_fe;
      gauss_product(rm.mu_in[i], rm.v_in[i], rm.mu_bar[i], rm.v_bar[i], m_fe, v_fe);
      double m_all, v_all;
      gauss_product(m_fe, v_fe, mu_back[w][i], v_back[w][i], m_all, v_all);
      if (!std::isfinite(v_all)) {
        throw std::runtime_error("posterior_moments: improper amplitude marginal");
      }
      out.e_r[w][i] = m_all;
      out.var_r[w][i] = v_all;
    }
  }

  const double c = 1.0 - params.beta;
  const double innovation = params.beta * params.beta * params.xi;
  for (std::size_t w = 0; w + 1 < w_count; ++w) {
    const auto& up = win[w];        // round w: forward-into x evidence
    const auto& down = win[w + 1];  // round w+1: evidence x backward-into
    for (std::size_t i = 0; i < n; ++i) {
      // Pairwise support table over (s_w, s_{w+1}).
      const double f1 = up.pi_in[i] * up.lambda_delta[i];
      const double f0 = (1.0 - up.pi_in[i]) * (1.0 - up.lambda_delta[i]);
      const double g1 = down.lambda_delta[i] * s_back[w + 1][i];
      const double g0 = (1.0 - down.lambda_delta[i]) * (1.0 - s_back[w + 1][i]);
      const double p00 = f0 * (1.0 - params.p10) * g0;
      const double p01v = f0 * params.p10 * g1;
      const double p10v = f1 * params.p01 * g0;
      const double p11 = f1 * (1.0 - params.p01) * g1;
      const double z = p00 + p01v + p10v + p11;
      out.e_ss[w][i] = (z <= std::numeric_limits<double>::min()) ? 0.25 : p11 / z;

      // Pairwise amplitude cross moment via the bivariate Gaussian joining
      // upstream N(a, A), the AR kernel, and downstream N(d, D).
      double a, av, d, dv;
      gauss_product(up.mu_in[i], up.v_in[i], up.mu_bar[i], up.v_bar[i], a, av);
      gauss_product(down.mu_bar[i], down.v_bar[i], mu_back[w + 1][i], v_back[w + 1][i], d, dv);
      const double pa = prec_of(av);
      const double pd = prec_of(dv);
      if (innovation <= 1e-300) {
        // Degenerate kernel: r_{w+1} = c r_w exactly.
        const double prec = pa + c * c * pd;
        if (prec <= 0.0) throw std::runtime_error("posterior_moments: improper pair");
        const double mean = (pa * a + c * pd * d) / prec;
        out.e_rr[w][i] = c * (1.0 / prec + mean * mean);
      } else {
        const double j00 = pa + c * c / innovation;
        const double j01 = -c / innovation;
        const double j11 = 1.0 / innovation + pd;
        const double det = j00 * j11 - j01 * j01;
        if (!(det > 0.0)) throw std::runtime_error("posterior_moments: improper pair");
        const double s00 = j11 / det;
        const double s01 = -j01 / det;
        const double s11 = j00 / det;
        const double h0 = pa * a;
        const double h1 = pd * d;
        const double m0 = s00 * h0 + s01 * h1;
        const double m1 = s01 * h0 + s11 * h1;
        out.e_rr[w][i] = s01 + m0 * m1;
      }
    }
  }
  return out;
}

ChainParams em_update(const PosteriorMoments& moments, const ChainParams& current,
                      EmFlags* flags) {
  current.validate();
  const std::size_t w_count = moments.rounds();
  if (w_count < 2 || moments.e_ss.size() != w_count - 1 || moments.e_rr.size() != w_count - 1) {
    throw std::invalid_argument("em_update: inconsistent moments");
  }
  const std::size_t n = moments.e_s[0].size();
  EmFlags local;
  ChainParams next = current;

  // Activity level: sample mean of the smoothed support marginals.
  double s_sum = 0.0;
  for (const auto& row : moments.e_s) {
    for (double v : row) s_sum += v;
  }
  next.lambda = s_sum / static_cast<double>(w_count * n);

  // Transition: P(off | was on) from adjacent pairs.
  double ss_sum = 0.0;
  double s_prev_sum = 0.0;
  for (std::size_t w = 0; w + 1 < w_count; ++w) {
    for (std::size_t i = 0; i < n; ++i) {
      ss_sum += moments.e_ss[w][i];
      s_prev_sum += moments.e_s[w][i];
    }
  }
  if (s_prev_sum < 1e-9) {
    local.support_denominator_degenerate = true;  // keep previous p01
  } else {
    next.p01 = std::clamp(1.0 - ss_sum / s_prev_sum, 0.0, 1.0);
  }
  if (next.lambda >= 1.0 - 1e-12) {
    local.lambda_saturated = true;
    next.lambda = 1.0 - 1e-12;
  }
  next.p10 = std::min(ChainParams::stationary_p10(next.lambda, next.p01), 1.0);

  // Amplitude variance: mean smoothed second moment.
  double r2_sum = 0.0;
  for (std::size_t w = 0; w < w_count; ++w) {
    for (std::size_t i = 0; i < n; ++i) {
      r2_sum += moments.var_r[w][i] + sq(moments.e_r[w][i]);
    }
  }
  const double gamma_new = r2_sum / static_cast<double>(w_count * n);
  if (gamma_new > 0.0) next.gamma = gamma_new;

  // Innovation rate: smaller root of the stationarity-coupled quadratic
  // 2 n_c beta^2 + (b - 4 n_c) beta + c = 0, with
  // b = (2/gamma) sum(E[r_i r_{i-1}] - E[r_{i-1}^2]),
  // c = (2/gamma) sum E[(r_i - r_{i-1})^2].
  double b = 0.0;
  double cq = 0.0;
  for (std::size_t w = 0; w + 1 < w_count; ++w) {
    for (std::size_t i = 0; i < n; ++i) {
      const double r2_prev = moments.var_r[w][i] + sq(moments.e_r[w][i]);
      const double r2_next = moments.var_r[w + 1][i] + sq(moments.e_r[w + 1][i]);
      const double cross = moments.e_rr[w][i];
      b += cross - r2_prev;
      cq += r2_next - 2.0 * cross + r2_prev;
    }
  }
  b *= 2.0 / next.gamma;
  cq *= 2.0 / next.gamma;
  const double n_c = static_cast<double>(n * (w_count - 1));
  const double disc = sq(b - 4.0 * n_c) - 8.0 * n_c * cq;
  if (disc < 0.0) {
    local.beta_no_root = true;  // keep previous beta
  } else {
    double beta = ((4.0 * n_c - b) - std::sqrt(disc)) / (4.0 * n_c);
    if (!(beta > 0.0 && beta <= 1.0)) {
      local.beta_clamped = true;
      beta = std::clamp(beta, 1e-4, 1.0);
    }
    next.beta = beta;
  }
  next.xi = ChainParams::stationary_xi(next.beta, next.gamma);
  next.epsilon = current.epsilon;
  next.validate();
  if (flags) *flags = local;
  return next;
}

}  // namespace otafl
