#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "otafl/dataset.hpp"
#include "otafl/objective.hpp"
#include "otafl/pipeline.hpp"

namespace otafl {

/// Full description of a learning experiment. Parsed from a flat key = value
/// config file; every field has a config key of the same name.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string variant = "tsa-ga";
  std::size_t t_rounds = 100;

  // task
  std::string dataset = "synthetic";  ///< "synthetic" or "idx"
  std::string idx_images;             ///< for dataset = idx (relative paths are
  std::string idx_labels;             ///< resolved against $OTAFL_DATA_ROOT)
  std::string idx_test_images;
  std::string idx_test_labels;
  std::size_t n_features = 196;
  std::size_t n_classes = 10;
  std::size_t train_samples = 6000;
  std::size_t test_samples = 2000;
  double blob_radius = 2.5;
  double blob_noise = 2.0;

  // federation
  std::size_t m_devices = 25;
  std::size_t k_m = 200;               ///< samples per device
  std::optional<int> chi;              ///< classes per device (unset = IID)

  // optimization + channel
  double eta = 0.01;
  int e_local = 1;
  double s_fraction = 0.1;
  double k_fraction = 0.2;
  double p_bar = 500.0;
  double sigma_e = 1.0;
  int i_max = 25;
  double tol = 1e-4;
  double damping = 1.0;

  // parameter learning
  bool em_enabled = true;
  std::size_t t0_window = 5;
  std::size_t warmup = 10;
  double p01_0 = 0.005;
  double beta0 = 0.005;
  std::optional<double> lambda0;
  std::optional<double> gamma0;
  double epsilon = 1e-7;

  std::size_t metric_cadence = 1;
  std::string out_dir;

  void validate() const;
};

/// Parses `key = value` lines ('#' comments, blank lines ignored). Unknown
/// keys are an error.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

/// One row of the per-round log.
struct RoundLog {
  std::size_t round = 0;
  double accuracy = 0.0;
  double test_loss = 0.0;
  double train_loss = 0.0;
  double nmse_db = 0.0;
  double alpha = 0.0;
  double sigma2 = 0.0;
  double v_post = 0.0;
  int iterations = 0;
  bool diverged = false;
  double lambda = 0.0;
  double p01 = 0.0;
  double p10 = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double xi = 0.0;
  double wall_ms = 0.0;  ///< diagnostic only; never written to rounds.csv
};

struct ExperimentResult {
  std::vector<RoundLog> rounds;
  double final_accuracy = 0.0;
  double final_test_loss = 0.0;
};

struct EvalMetrics {
  double accuracy = 0.0;
  double cross_entropy = 0.0;
};

EvalMetrics evaluate(const SoftmaxRegression& model, std::span<const double> theta,
                     const DatasetShard& test);

/// Runs the configured experiment. If out_dir is non-empty, writes
/// rounds.csv, params.csv and config.json there.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes the three output files for an already-computed run.
void emit_outputs(const ExperimentConfig& cfg, const std::vector<RoundLog>& rounds,
                  const std::string& out_dir);

}  // namespace otafl
