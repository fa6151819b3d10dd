#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracle_utils.hpp"
#include "otafl/chain.hpp"
#include "otafl/channel.hpp"
#include "otafl/loss_bound.hpp"
#include "otafl/math.hpp"
#include "otafl/messages.hpp"
#include "otafl/recovery.hpp"
#include "otafl/rng.hpp"
#include "otafl/sensing.hpp"
#include "otafl/state_evolution.hpp"

using namespace otafl;

namespace {

// Marginal density of the pseudo-observation z = x + sqrt(tau) * noise under
// the spike-and-slab prior.
double z_density(double z, double tau, double pi, double m, double phi) {
  return pi * gauss_pdf(z, m, phi + tau) + (1.0 - pi) * gauss_pdf(z, 0.0, tau);
}

// Quadrature oracle for the scalar MMSE: E_z[posterior variance], integrating
// the z-marginal against the (already oracle-verified) posterior variance.
// Peak-normalized so the absolute-tolerance quadrature stays meaningful.
double mmse_quadrature(double tau, double pi, double m, double phi) {
  auto integrand = [&](long double zl) {
    const double z = static_cast<double>(zl);
    return static_cast<long double>(z_density(z, tau, pi, m, phi) *
                                    denoise_bg(z, tau, pi, m, phi).var);
  };
  const double spread = std::sqrt(phi + tau);
  const double lo = std::min(0.0, m) - 12.0 * spread;
  const double hi = std::max(0.0, m) + 12.0 * spread;
  long double peak = 0.0L;
  for (int i = 0; i <= 512; ++i) {
    const long double z = lo + (hi - lo) * i / 512.0L;
    peak = std::max(peak, integrand(z));
  }
  REQUIRE(peak > 0.0L);
  auto scaled = [&](long double z) { return integrand(z) / peak; };
  const std::vector<double> knots = {lo, std::min(0.0, m), std::max(0.0, m), hi};
  long double total = 0.0L;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    if (knots[k + 1] > knots[k]) {
      total += oracle::adaptive_simpson(scaled, knots[k], knots[k + 1]);
    }
  }
  return static_cast<double>(peak * total);
}

}  // namespace

TEST_CASE("se_f: variance map values and guards") {
  // Half-rate: tau = v + 2 sigma2.
  CHECK(se_f(0.3, 1024, 512, 0.01) == doctest::Approx(0.3 + 0.02).epsilon(1e-15));
  // Full sampling: tau = sigma2 regardless of v.
  CHECK(se_f(5.0, 256, 256, 0.07) == doctest::Approx(0.07).epsilon(1e-15));
  CHECK(se_f(0.0, 256, 256, 0.0) == 0.0);
  // Quarter rate.
  CHECK(se_f(1.0, 4096, 1024, 0.25) == doctest::Approx(3.0 + 4.0 * 0.25).epsilon(1e-15));
  CHECK_THROWS(se_f(1.0, 16, 0, 0.0));
  CHECK_THROWS(se_f(1.0, 16, 17, 0.0));
  CHECK_THROWS(se_f(-1.0, 16, 8, 0.0));
  CHECK_THROWS(se_f(1.0, 16, 8, -0.1));
}

TEST_CASE("mmse_mc: pure Gaussian prior hits the closed form with zero spread") {
  SeededRng rng(301);
  const double phi = 1.7, tau = 0.4, m = -0.9;
  const MmseEstimate est = mmse_mc(tau, 1.0, m, phi, 5000, rng);
  CHECK(est.value == doctest::Approx(phi * tau / (phi + tau)).epsilon(1e-12));
  CHECK(est.std_err < 1e-12);  // posterior variance is constant in z
}

TEST_CASE("mmse_mc: all-spike prior is exactly zero") {
  SeededRng rng(302);
  const MmseEstimate est = mmse_mc(0.3, 0.0, 1.0, 2.0, 2000, rng);
  CHECK(est.value == 0.0);
  CHECK(est.std_err == 0.0);
}

TEST_CASE("mmse_mc: agrees with the quadrature oracle") {
  struct Tuple {
    double tau, pi, m, phi;
  };
  const std::vector<Tuple> tuples = {
      {0.05, 0.3, 0.7, 1.3}, {0.5, 0.3, 0.7, 1.3}, {2.0, 0.3, 0.7, 1.3},
      {0.1, 0.9, -1.0, 0.4}, {0.02, 0.1, 0.0, 1.0},
  };
  for (const auto& tup : tuples) {
    SeededRng rng(303);
    const MmseEstimate est = mmse_mc(tup.tau, tup.pi, tup.m, tup.phi, 200000, rng);
    const double truth = mmse_quadrature(tup.tau, tup.pi, tup.m, tup.phi);
    CHECK(est.std_err > 0.0);
    CHECK(std::fabs(est.value - truth) < std::max(4.0 * est.std_err, 1e-6));
  }
}

TEST_CASE("mmse_mc: deterministic per seed and guards") {
  SeededRng a(304), b(304);
  const MmseEstimate ea = mmse_mc(0.3, 0.4, 0.2, 1.0, 3000, a);
  const MmseEstimate eb = mmse_mc(0.3, 0.4, 0.2, 1.0, 3000, b);
  CHECK(ea.value == eb.value);
  CHECK(ea.std_err == eb.std_err);
  SeededRng c(305);
  CHECK_THROWS(mmse_mc(0.3, 0.4, 0.2, 1.0, 0, c));
}

TEST_CASE("scalar chain population: construction matches the stationary law") {
  const ChainParams params = ChainParams::stationary(0.25, 0.05, 0.2, 1.5);
  ScalarChainPopulation pop(60000, params, SeededRng(310));
  CHECK(pop.size() == 60000);
  CHECK(pop.init_var() == doctest::Approx(params.gamma).epsilon(1e-12));
  CHECK(pop.prior().pi[0] == doctest::Approx(params.lambda));
  CHECK(pop.prior().mean[12345] == 0.0);

  double active = 0.0, second = 0.0;
  for (double x : pop.x()) {
    if (x != 0.0) {
      active += 1.0;
      second += x * x;
    }
  }
  const double n = static_cast<double>(pop.size());
  // Activity within 4 binomial sigmas, active second moment within 5%.
  CHECK(std::fabs(active / n - params.lambda) <
        4.0 * std::sqrt(params.lambda * (1.0 - params.lambda) / n));
  CHECK(second / active == doctest::Approx(params.gamma).epsilon(0.05));

  CHECK_THROWS(ScalarChainPopulation(0, params, SeededRng(1)));
}

TEST_CASE("scalar chain population: all-active population reproduces the Gaussian mmse") {
  ChainParams params;  // lambda = 1 cannot use the stationary helper
  params.lambda = 1.0;
  params.p01 = 0.0;
  params.p10 = 0.0;
  params.beta = 0.3;
  params.gamma = 2.0;
  params.xi = ChainParams::stationary_xi(params.beta, params.gamma);
  params.validate();
  ScalarChainPopulation pop(5000, params, SeededRng(311));
  std::vector<double> noise(pop.size());
  SeededRng nrng(312);
  for (double& w : noise) w = nrng.gaussian();
  const double tau = 0.6;
  const MmseEstimate est = pop.mmse(tau, noise);
  CHECK(est.value ==
        doctest::Approx(params.gamma * tau / (params.gamma + tau)).epsilon(1e-12));
  CHECK(est.std_err < 1e-12);

  std::vector<double> short_noise(10);
  CHECK_THROWS(pop.mmse(tau, short_noise));
  CHECK_THROWS(pop.mmse(0.0, noise));
}

TEST_CASE("scalar chain population: memoryless absorption resets the prior") {
  const ChainParams params = ChainParams::stationary(0.2, 0.05, 0.2, 1.0);
  ScalarChainPopulation pop(2000, params, SeededRng(313));
  std::vector<double> noise(pop.size());
  SeededRng nrng(314);
  for (double& w : noise) w = nrng.gaussian();
  pop.absorb_observation(0.05, noise, params, RecoveryVariant::kMemoryless);
  const PriorMessage fresh = stationary_prior(pop.size(), params);
  for (std::size_t i = 0; i < pop.size(); i += 97) {
    CHECK(pop.prior().pi[i] == fresh.pi[i]);
    CHECK(pop.prior().mean[i] == fresh.mean[i]);
    CHECK(pop.prior().var[i] == fresh.var[i]);
  }
  std::vector<double> short_noise(7);
  CHECK_THROWS(pop.absorb_observation(0.05, short_noise, params, RecoveryVariant::kTsaGa));
}

TEST_CASE("scalar chain population: chain-aware absorption sharpens the prior") {
  const ChainParams params = ChainParams::stationary(0.2, 0.05, 0.2, 1.0);
  ScalarChainPopulation pop(20000, params, SeededRng(315));
  std::vector<double> noise(pop.size());
  SeededRng nrng(316);
  for (double& w : noise) w = nrng.gaussian();
  pop.absorb_observation(1e-6, noise, params, RecoveryVariant::kTsaGa);
  // After a near-noiseless observation the effective prior shouldassign the
  // truly active coefficients much higher activity than the inactive ones.
  double pi_active = 0.0, pi_inactive = 0.0, n_active = 0.0, n_inactive = 0.0;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    if (pop.x()[i] != 0.0) {
      pi_active += pop.prior().pi[i];
      n_active += 1.0;
    } else {
      pi_inactive += pop.prior().pi[i];
      n_inactive += 1.0;
    }
  }
  CHECK(pi_active / n_active > 0.8);
  CHECK(pi_inactive / n_inactive < 0.1);
  CHECK(pop.init_var() < params.gamma);
}

TEST_CASE("scalar chain population: advance preserves the stationary law") {
  const ChainParams params = ChainParams::stationary(0.3, 0.1, 0.25, 2.0);
  ScalarChainPopulation pop(50000, params, SeededRng(317));
  SeededRng step(318);
  for (int t = 0; t < 5; ++t) pop.advance(params, step);
  double active = 0.0, second = 0.0;
  for (double x : pop.x()) {
    if (x != 0.0) {
      active += 1.0;
      second += x * x;
    }
  }
  const double n = static_cast<double>(pop.size());
  CHECK(std::fabs(active / n - params.lambda) <
        4.0 * std::sqrt(params.lambda * (1.0 - params.lambda) / n));
  CHECK(second / active == doctest::Approx(params.gamma).epsilon(0.06));
}

TEST_CASE("se_recursion: full sampling with no noise collapses to zero") {
  SeConfig config;
  config.n = 1024;
  config.s = 1024;
  config.sigma2 = 0.0;
  config.rounds = 2;
  config.samples = 2000;
  const ChainParams params = ChainParams::stationary(0.2, 0.05, 0.2, 1.0);
  const SeTrace trace = se_recursion(config, params, SeededRng(320));
  REQUIRE(trace.rounds.size() == 2);
  for (const auto& round : trace.rounds) {
    CHECK(round.v_star == 0.0);
    CHECK(round.tau_star == 0.0);
    CHECK(round.iterations == 1);
  }
}

TEST_CASE("se_recursion: full sampling with noise fixes tau at sigma2") {
  SeConfig config;
  config.n = 512;
  config.s = 512;
  config.sigma2 = 0.04;
  config.rounds = 1;
  config.samples = 20000;
  const ChainParams params = ChainParams::stationary(0.2, 0.05, 0.2, 1.0);
  const SeTrace trace = se_recursion(config, params, SeededRng(321));
  const auto& round = trace.rounds.at(0);
  for (double tau : round.tau) CHECK(tau == doctest::Approx(config.sigma2).epsilon(1e-15));
  // tau never moves, so the variance settles immediately.
  CHECK(round.iterations <= 3);
  CHECK(round.v_star > 0.0);
  CHECK(round.v_star < params.gamma);
}

TEST_CASE("se_recursion: deterministic per seed, and guards") {
  SeConfig config;
  config.n = 2048;
  config.s = 1024;
  config.sigma2 = 1e-3;
  config.rounds = 2;
  config.samples = 5000;
  const ChainParams params = ChainParams::stationary(0.2, 0.05, 0.2, 1.0);
  const SeTrace a = se_recursion(config, params, SeededRng(322));
  const SeTrace b = se_recursion(config, params, SeededRng(322));
  REQUIRE(a.rounds.size() == b.rounds.size());
  for (std::size_t t = 0; t < a.rounds.size(); ++t) {
    CHECK(a.rounds[t].v == b.rounds[t].v);
    CHECK(a.rounds[t].tau == b.rounds[t].tau);
  }

  SeConfig bad = config;
  bad.rounds = 0;
  CHECK_THROWS(se_recursion(bad, params, SeededRng(1)));
  bad = config;
  bad.i_max = 0;
  CHECK_THROWS(se_recursion(bad, params, SeededRng(1)));
  bad = config;
  bad.tol = 0.0;
  CHECK_THROWS(se_recursion(bad, params, SeededRng(1)));
}

TEST_CASE("se_recursion: monotone within rounds and across rounds") {
  SeConfig config;
  config.n = 4096;
  config.s = 2048;
  config.sigma2 = 1e-3;
  config.rounds = 3;
  config.samples = 20000;
  const ChainParams params = ChainParams::stationary(0.2, 0.05, 0.1, 1.0);
  const SeTrace trace = se_recursion(config, params, SeededRng(323));
  for (const auto& round : trace.rounds) {
    const MonotonicityCheck t1 = check_iteration_monotonicity(round, config.n, config.s, config.sigma2);
    CHECK(t1.ok);
    for (const auto& v : t1.violations) CAPTURE(v);
  }
  const MonotonicityCheck t2 = check_round_monotonicity(trace);
  CHECK(t2.ok);
}

TEST_CASE("se_recursion: temporal structure improves the next round's fixed point") {
  SeConfig config;
  config.n = 4096;
  config.s = 2048;
  config.sigma2 = 1e-3;
  config.rounds = 2;
  config.samples = 30000;
  const ChainParams params = ChainParams::stationary(0.2, 0.05, 0.1, 1.0);

  SeConfig chained = config;
  chained.variant = RecoveryVariant::kTsaGa;
  SeConfig memoryless = config;
  memoryless.variant = RecoveryVariant::kMemoryless;

  const SeTrace with_chain = se_recursion(chained, params, SeededRng(324));
  const SeTrace without = se_recursion(memoryless, params, SeededRng(324));

  // Round 1 is identical: the variant only matters from the second round on.
  CHECK(with_chain.rounds[0].v_star == without.rounds[0].v_star);
  // Round 2 must improve decisively when the chain messages carry over.
  CHECK(with_chain.rounds[1].v_star < 0.9 * without.rounds[1].v_star);
  // Memoryless round 2 is statistically the same problem as round 1.
  const double se2 = 4.0 * std::hypot(without.rounds[0].mmse_se.back(),
                                      without.rounds[1].mmse_se.back());
  CHECK(std::fabs(without.rounds[1].v_star - without.rounds[0].v_star) <=
        se2 + 0.05 * without.rounds[0].v_star);
}

TEST_CASE("monotonicity checks: negative controls trip the detectors") {
  SeRoundTrace bad;
  bad.tau = {0.5, 0.6, 0.1};        // rises at i=2, below floor at i=3
  bad.v = {1.0, 0.4, 0.45};         // rises at i=3
  bad.mmse_se = {0.0, 0.0, 0.0};
  bad.tau_star = 0.1;
  bad.v_star = 0.45;
  const MonotonicityCheck t1 = check_iteration_monotonicity(bad, 2, 1, 0.1);  // floor = 0.2
  CHECK(!t1.ok);
  REQUIRE(t1.violations.size() == 3);
  CHECK(t1.violations[0].find("tau increased") != std::string::npos);
  CHECK(t1.violations[1].find("below noise floor") != std::string::npos);
  CHECK(t1.violations[2].find("v increased") != std::string::npos);

  SeRoundTrace good;
  good.tau = {0.5, 0.4, 0.3};
  good.v = {1.0, 0.4, 0.2};
  good.mmse_se = {0.0, 0.0, 0.0};
  CHECK(check_iteration_monotonicity(good, 2, 1, 0.1).ok);

  SeTrace trace;
  SeRoundTrace r1 = good;
  r1.v_star = 0.2;
  SeRoundTrace r2 = good;
  r2.v_star = 0.35;  // got worse
  trace.rounds = {r1, r2};
  const MonotonicityCheck t2 = check_round_monotonicity(trace);
  CHECK(!t2.ok);
  REQUIRE(t2.violations.size() == 1);
  CHECK(t2.violations[0].find("round 2") != std::string::npos);
  trace.rounds = {r2, r1};
  CHECK(check_round_monotonicity(trace).ok);
}

TEST_CASE("state evolution predicts the simulated turbo trajectory") {
  // Round-1 cross-validation: signals drawn from the stationary prior, pushed
  // through the real operator/turbo loop, against the scalar recursion.
  const std::size_t n = 4096, s = 2048;
  const double sigma2 = 1e-3;
  const ChainParams params = ChainParams::stationary(0.15, 0.05, 0.2, 1.0);

  // Both sides start from the marginal signal variance so the assumed and the
  // actual extrinsic error variances agree from the very first iteration.
  const double signal_var = params.lambda * params.gamma;

  SeConfig config;
  config.n = n;
  config.s = s;
  config.sigma2 = sigma2;
  config.rounds = 1;
  config.samples = 50000;
  config.i_max = 30;
  config.tol = 1e-5;
  config.init_var = signal_var;
  const SeTrace se = se_recursion(config, params, SeededRng(330));
  const auto& se_round = se.rounds.at(0);

  const int trials = 5;
  std::vector<double> mean_tau, mean_mmse;
  std::vector<int> counts;
  SeededRng root(331);
  for (int trial = 0; trial < trials; ++trial) {
    SeededRng trng = root.spawn(std::to_string(trial));
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (trng.uniform() < params.lambda) x[i] = std::sqrt(params.gamma) * trng.gaussian();
    }
    SensingOperator op(n, s, trng.spawn("op"));
    MacObservation obs;
    obs.sigma2 = sigma2;
    obs.y = op.forward(x);
    SeededRng wrng = trng.spawn("w");
    for (double& y : obs.y) y += std::sqrt(sigma2) * wrng.gaussian();

    RecoveryOptions options;
    options.i_max = 30;
    options.tol = 1e-5;
    options.clamp_ref = params.gamma;
    options.init_var = signal_var;
    const RecoveryResult res =
        run_round(obs, op, stationary_prior(n, params), options);
    for (std::size_t i = 0; i < res.trace.size(); ++i) {
      if (mean_tau.size() <= i) {
        mean_tau.push_back(0.0);
        mean_mmse.push_back(0.0);
        counts.push_back(0);
      }
      mean_tau[i] += res.trace[i].tau;
      mean_mmse[i] += res.trace[i].v_post;
      counts[i] += 1;
    }
  }

  // Compare iterations every trial reached against the scalar recursion.
  std::size_t depth = 0;
  while (depth < counts.size() && counts[depth] == trials) ++depth;
  depth = std::min(depth, se_round.tau.size());
  REQUIRE(depth >= 4);
  for (std::size_t i = 0; i < depth; ++i) {
    const double tau_pred = se_round.tau[i];
    const double mmse_pred = 1.0 / (1.0 / se_round.v[i] + 1.0 / se_round.tau[i]);
    const double tau_emp = mean_tau[i] / trials;
    const double mmse_emp = mean_mmse[i] / trials;
    CHECK(std::fabs(tau_emp - tau_pred) <= 0.08 * tau_pred);
    CHECK(std::fabs(mmse_emp - mmse_pred) <= 0.08 * mmse_pred);
  }
}

TEST_CASE("loss bound: constants validation") {
  ConvexityConstants k;
  k.c = 1.0;
  k.l = 4.0;
  k.g_bound = 2.0;
  k.rho = 0.5;
  CHECK_NOTHROW(k.validate());
  ConvexityConstants bad = k;
  bad.c = 0.0;
  CHECK_THROWS(bad.validate());
  bad = k;
  bad.l = 0.5;  // l < c
  CHECK_THROWS(bad.validate());
  bad = k;
  bad.rho = 1.0;
  CHECK_THROWS(bad.validate());
  bad = k;
  bad.rho = -0.1;
  CHECK_THROWS(bad.validate());
  bad = k;
  bad.g_bound = -1.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("loss bound: sparsification error term") {
  ConvexityConstants k;
  k.c = 1.0;
  k.l = 2.0;
  k.g_bound = 3.0;
  k.rho = 0.5;
  // t = 1: geometric part is (1+rho)(1-rho)/(1-rho) = 1+rho.
  CHECK(sparsification_error_term(k, 1) ==
        doctest::Approx(sq(3.0 * 0.5 * (1.5 + 1.0))).epsilon(1e-15));
  // t = 2: (1.5)(0.75)/(0.5) = 2.25.
  CHECK(sparsification_error_term(k, 2) ==
        doctest::Approx(sq(3.0 * 0.5 * (2.25 + 1.0))).epsilon(1e-15));
  // Large t approaches the geometric limit (1+rho)/(1-rho) = 3.
  CHECK(sparsification_error_term(k, 400) ==
        doctest::Approx(sq(3.0 * 0.5 * 4.0)).epsilon(1e-12));
  // Keeping everything: no error at any horizon.
  ConvexityConstants dense = k;
  dense.rho = 0.0;
  CHECK(sparsification_error_term(dense, 1) == 0.0);
  CHECK(sparsification_error_term(dense, 100) == 0.0);
  CHECK_THROWS(sparsification_error_term(k, 0));
}

TEST_CASE("loss bound: kappa series composition") {
  ConvexityConstants k;
  k.c = 1.0;
  k.l = 2.0;
  k.g_bound = 0.5;
  k.rho = 0.3;
  const std::vector<double> mse = {0.1, 0.02, 0.0};
  const std::vector<double> kappa = kappa_series(k, mse);
  REQUIRE(kappa.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(kappa[t] == doctest::Approx(4.0 * mse[t] +
                                      sparsification_error_term(k, static_cast<int>(t) + 1))
                          .epsilon(1e-15));
  }
  const std::vector<double> neg = {-0.1};
  CHECK_THROWS(kappa_series(k, neg));
}

TEST_CASE("loss bound: matches the direct recurrence") {
  ConvexityConstants k;
  k.c = 0.7;
  k.l = 5.0;
  k.g_bound = 1.0;
  k.rho = 0.4;
  SeededRng rng(340);
  std::vector<double> kappa(20);
  for (double& v : kappa) v = rng.uniform();
  const double gap0 = 2.5;
  double rec = gap0;
  const double contraction = 1.0 - k.c / k.l;
  for (std::size_t t = 1; t <= kappa.size(); ++t) {
    rec = contraction * rec + kappa[t - 1] / k.l;
    CHECK(loss_bound(k, kappa, gap0, t) == doctest::Approx(rec).epsilon(1e-12));
  }
  CHECK(loss_bound(k, kappa, gap0, 0) == gap0);
  CHECK_THROWS(loss_bound(k, kappa, gap0, kappa.size() + 1));
  CHECK_THROWS(loss_bound(k, kappa, -1.0, 1));
}

TEST_CASE("loss bound: exact gradients decay geometrically; constant errors approach kappa/c") {
  ConvexityConstants k;
  k.c = 1.0;
  k.l = 10.0;
  k.g_bound = 0.0;
  k.rho = 0.0;
  const std::vector<double> zero(50, 0.0);
  CHECK(loss_bound(k, zero, 3.0, 50) ==
        doctest::Approx(3.0 * std::pow(0.9, 50)).epsilon(1e-12));

  const double kappa_inf = 0.8;
  const std::vector<double> flat(2000, kappa_inf);
  const double asym = loss_bound_asymptote(k, kappa_inf);
  CHECK(asym == doctest::Approx(kappa_inf / k.c).epsilon(1e-15));
  CHECK(loss_bound(k, flat, 3.0, 2000) == doctest::Approx(asym).epsilon(1e-10));
  CHECK_THROWS(loss_bound_asymptote(k, -0.1));
}
