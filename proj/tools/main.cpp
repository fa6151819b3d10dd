// Command-line front end: `run` executes a federated learning experiment,
// `se` prints the variance evolution predicted for the configured prior, and
// `bound` validates the convergence bound on the synthetic quadratic task.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "otafl/experiment.hpp"
#include "otafl/state_evolution.hpp"
#include "otafl/verify_bound.hpp"

namespace {

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::string> variant, std::optional<std::size_t> rounds,
            std::optional<std::string> out_dir) {
  otafl::ExperimentConfig cfg = otafl::parse_config_file(config_path);
  if (seed) cfg.seed = *seed;
  if (variant) cfg.variant = *variant;
  if (rounds) cfg.t_rounds = *rounds;
  if (out_dir) cfg.out_dir = *out_dir;
  cfg.validate();

  const otafl::ExperimentResult result = otafl::run_experiment(cfg);
  for (const auto& r : result.rounds) {
    std::fprintf(stderr,
                 "round %zu  acc %.4f  test_loss %.4f  nmse %.1f dB  iters %d  "
                 "lambda %.4f  beta %.4g  wall %.1f ms%s\n",
                 r.round, r.accuracy, r.test_loss, r.nmse_db, r.iterations, r.lambda, r.beta,
                 r.wall_ms, r.diverged ? "  [diverged]" : "");
  }
  std::printf("final_accuracy %.6f\nfinal_test_loss %.6f\n", result.final_accuracy,
              result.final_test_loss);
  return 0;
}

int cmd_se(const std::string& config_path, std::optional<std::string> out_dir) {
  const otafl::ExperimentConfig cfg = otafl::parse_config_file(config_path);

  // The analyzer works on the aggregate-update prior, so it only needs the
  // channel geometry and chain parameters from the config.
  otafl::SoftmaxRegression model(cfg.n_features, cfg.n_classes);
  otafl::SeConfig se;
  se.n = model.dim();
  se.s = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.s_fraction *
                                                           static_cast<double>(se.n)));
  const double lambda = cfg.lambda0.value_or(cfg.k_fraction);
  const double gamma = cfg.gamma0.value_or(1.0);
  se.sigma2 = cfg.sigma_e * cfg.sigma_e;
  se.rounds = std::min<std::size_t>(cfg.t_rounds, 10);
  se.i_max = cfg.i_max;
  se.tol = cfg.tol;
  se.variant = otafl::parse_variant(cfg.variant == "error-free" ? "tsa-ga" : cfg.variant);
  const otafl::ChainParams params =
      otafl::ChainParams::stationary(lambda, cfg.p01_0, cfg.beta0, gamma, cfg.epsilon);

  const otafl::SeTrace trace = otafl::se_recursion(se, params, otafl::SeededRng(cfg.seed));
  std::printf("round,iteration,tau,v\n");
  for (std::size_t t = 0; t < trace.rounds.size(); ++t) {
    const auto& round = trace.rounds[t];
    for (std::size_t i = 0; i < round.v.size(); ++i) {
      std::printf("%zu,%zu,%.10g,%.10g\n", t + 1, i + 1, round.tau[i], round.v[i]);
    }
  }
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    std::ofstream out(*out_dir + "/se.csv", std::ios::trunc);
    out << "round,iteration,tau,v\n";
    for (std::size_t t = 0; t < trace.rounds.size(); ++t) {
      const auto& round = trace.rounds[t];
      for (std::size_t i = 0; i < round.v.size(); ++i) {
        out << t + 1 << ',' << i + 1 << ',' << round.tau[i] << ',' << round.v[i] << '\n';
      }
    }
  }
  return 0;
}

int cmd_bound(const std::string& config_path) {
  const otafl::ExperimentConfig cfg = otafl::parse_config_file(config_path);
  otafl::BoundTaskConfig task;
  task.sigma_e = cfg.sigma_e;
  task.s_fraction = cfg.s_fraction;
  task.k_fraction = cfg.k_fraction;
  task.t_rounds = cfg.t_rounds;
  for (std::size_t cp : task.checkpoints) {
    if (cp > task.t_rounds) {
      task.checkpoints = {task.t_rounds};
      break;
    }
  }
  const otafl::BoundVerification v = otafl::verify_bound_empirically(task, cfg.seed);
  std::printf("checkpoint,measured_gap,bound,control\n");
  for (std::size_t i = 0; i < v.checkpoints.size(); ++i) {
    std::printf("%zu,%.10g,%.10g,%.10g\n", v.checkpoints[i], v.measured_gap[i], v.bound[i],
                v.control[i]);
  }
  std::printf("bound_holds %d\ncontrol_violated_final %d\n", v.bound_holds ? 1 : 0,
              v.control_violated_final ? 1 : 0);
  return v.bound_holds ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Over-the-air federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<std::size_t> rounds;
  std::optional<std::string> out_dir;

  CLI::App* run = app.add_subcommand("run", "run a learning experiment");
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--seed", seed, "override config seed");
  run->add_option("--variant", variant,
                  "tsa-ga | no-support | no-amplitude | memoryless | error-free");
  run->add_option("--rounds", rounds, "override round count");
  run->add_option("--out", out_dir, "output directory");

  CLI::App* se = app.add_subcommand("se", "variance evolution for the configured prior");
  se->add_option("--config", config_path, "config file")->required();
  se->add_option("--out", out_dir, "output directory");

  CLI::App* bound = app.add_subcommand("bound", "validate the convergence bound");
  bound->add_option("--config", config_path, "config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, variant, rounds, out_dir);
    if (se->parsed()) return cmd_se(config_path, out_dir);
    if (bound->parsed()) return cmd_bound(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
