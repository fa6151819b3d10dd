#include "otafl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "otafl/math.hpp"
#include "otafl/objective.hpp"

namespace otafl {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
}

/// Deterministic shortest-roundtrip formatting for CSV cells.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string resolve_data_path(const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  const char* root = std::getenv("OTAFL_DATA_ROOT");
  if (root == nullptr || *root == '\0') return path;
  return std::string(root) + "/" + path;
}

double nmse_to_db(double nmse_value) {
  if (!(nmse_value > 0.0)) return -999.0;  // exact recovery sentinel
  return 10.0 * std::log10(nmse_value);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (t_rounds == 0) throw std::invalid_argument("ExperimentConfig: t_rounds must be > 0");
  if (dataset != "synthetic" && dataset != "idx") {
    throw std::invalid_argument("ExperimentConfig: dataset must be synthetic or idx");
  }
  if (dataset == "idx" && (idx_images.empty() || idx_labels.empty() || idx_test_images.empty() ||
                           idx_test_labels.empty())) {
    throw std::invalid_argument("ExperimentConfig: idx dataset needs all four idx_* paths");
  }
  if (n_features == 0 || n_classes < 2) throw std::invalid_argument("ExperimentConfig: bad task shape");
  if (m_devices == 0 || k_m == 0) throw std::invalid_argument("ExperimentConfig: bad federation shape");
  if (!(s_fraction > 0.0 && s_fraction <= 1.0)) {
    throw std::invalid_argument("ExperimentConfig: s_fraction outside (0,1]");
  }
  if (!(k_fraction > 0.0 && k_fraction <= 1.0)) {
    throw std::invalid_argument("ExperimentConfig: k_fraction outside (0,1]");
  }
  if (metric_cadence == 0) throw std::invalid_argument("ExperimentConfig: metric_cadence must be > 0");
  parse_variant(variant);
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) {
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty key or value");
    }
    try {
      if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "variant") cfg.variant = val;
      else if (key == "t_rounds") cfg.t_rounds = std::stoull(val);
      else if (key == "dataset") cfg.dataset = val;
      else if (key == "idx_images") cfg.idx_images = val;
      else if (key == "idx_labels") cfg.idx_labels = val;
      else if (key == "idx_test_images") cfg.idx_test_images = val;
      else if (key == "idx_test_labels") cfg.idx_test_labels = val;
      else if (key == "n_features") cfg.n_features = std::stoull(val);
      else if (key == "n_classes") cfg.n_classes = std::stoull(val);
      else if (key == "train_samples") cfg.train_samples = std::stoull(val);
      else if (key == "test_samples") cfg.test_samples = std::stoull(val);
      else if (key == "blob_radius") cfg.blob_radius = std::stod(val);
      else if (key == "blob_noise") cfg.blob_noise = std::stod(val);
      else if (key == "m_devices") cfg.m_devices = std::stoull(val);
      else if (key == "k_m") cfg.k_m = std::stoull(val);
      else if (key == "chi") cfg.chi = std::stoi(val);
      else if (key == "eta") cfg.eta = std::stod(val);
      else if (key == "e_local") cfg.e_local = std::stoi(val);
      else if (key == "s_fraction") cfg.s_fraction = std::stod(val);
      else if (key == "k_fraction") cfg.k_fraction = std::stod(val);
      else if (key == "p_bar") cfg.p_bar = std::stod(val);
      else if (key == "sigma_e") cfg.sigma_e = std::stod(val);
      else if (key == "i_max") cfg.i_max = std::stoi(val);
      else if (key == "tol") cfg.tol = std::stod(val);
      else if (key == "damping") cfg.damping = std::stod(val);
      else if (key == "em_enabled") cfg.em_enabled = parse_bool(val, key);
      else if (key == "t0_window") cfg.t0_window = std::stoull(val);
      else if (key == "warmup") cfg.warmup = std::stoull(val);
      else if (key == "p01_0") cfg.p01_0 = std::stod(val);
      else if (key == "beta0") cfg.beta0 = std::stod(val);
      else if (key == "lambda0") cfg.lambda0 = std::stod(val);
      else if (key == "gamma0") cfg.gamma0 = std::stod(val);
      else if (key == "epsilon") cfg.epsilon = std::stod(val);
      else if (key == "metric_cadence") cfg.metric_cadence = std::stoull(val);
      else if (key == "out_dir") cfg.out_dir = val;
      else throw std::invalid_argument("unknown key: " + key);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const std::out_of_range&) {
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": value out of range");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

EvalMetrics evaluate(const SoftmaxRegression& model, std::span<const double> theta,
                     const DatasetShard& test) {
  EvalMetrics m;
  m.accuracy = model.accuracy(theta, test);
  m.cross_entropy = model.loss(theta, test);
  return m;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  SeededRng root(cfg.seed);

  DatasetShard train;
  DatasetShard test;
  if (cfg.dataset == "synthetic") {
    DatasetShard all = make_blob_dataset(cfg.train_samples + cfg.test_samples, cfg.n_features,
                                         cfg.n_classes, cfg.blob_radius, cfg.blob_noise,
                                         root.spawn("data"));
    train.n_features = test.n_features = all.n_features;
    train.n_classes = test.n_classes = all.n_classes;
    train.features.assign(all.features.begin(),
                          all.features.begin() + static_cast<std::ptrdiff_t>(
                                                     cfg.train_samples * all.n_features));
    train.labels.assign(all.labels.begin(),
                        all.labels.begin() + static_cast<std::ptrdiff_t>(cfg.train_samples));
    test.features.assign(all.features.begin() + static_cast<std::ptrdiff_t>(
                                                    cfg.train_samples * all.n_features),
                         all.features.end());
    test.labels.assign(all.labels.begin() + static_cast<std::ptrdiff_t>(cfg.train_samples),
                       all.labels.end());
  } else {
    train = load_idx_dataset(resolve_data_path(cfg.idx_images), resolve_data_path(cfg.idx_labels));
    test = load_idx_dataset(resolve_data_path(cfg.idx_test_images),
                            resolve_data_path(cfg.idx_test_labels));
    if (train.n_features != cfg.n_features) {
      throw std::runtime_error("run_experiment: idx feature count differs from n_features");
    }
  }

  const std::vector<DatasetShard> shards =
      partition_dataset(train, cfg.m_devices, cfg.k_m, cfg.chi, root.spawn("partition"));

  const SoftmaxRegression model(train.n_features, train.n_classes);
  const std::size_t n = model.dim();

  PipelineConfig pc;
  pc.n = n;
  pc.s = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(cfg.s_fraction *
                                                                      static_cast<double>(n))),
                                 1, n);
  pc.k = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(cfg.k_fraction *
                                                                      static_cast<double>(n))),
                                 1, n);
  pc.p_bar = cfg.p_bar;
  pc.sigma_e = cfg.sigma_e;
  pc.eta = cfg.eta;
  pc.e_local = cfg.e_local;
  pc.i_max = cfg.i_max;
  pc.tol = cfg.tol;
  pc.damping = cfg.damping;
  pc.variant = parse_variant(cfg.variant);
  pc.em_enabled = cfg.em_enabled;
  pc.t0_window = cfg.t0_window;
  pc.warmup = cfg.warmup;
  pc.lambda0 = cfg.lambda0;
  pc.p01_0 = cfg.p01_0;
  pc.beta0 = cfg.beta0;
  pc.gamma0 = cfg.gamma0;
  pc.epsilon = cfg.epsilon;

  std::vector<GradFn> grads;
  std::vector<double> counts;
  std::vector<std::shared_ptr<DatasetShard>> shard_ptrs;
  for (const auto& shard : shards) {
    shard_ptrs.push_back(std::make_shared<DatasetShard>(shard));
    counts.push_back(static_cast<double>(shard.size()));
  }
  for (const auto& sp : shard_ptrs) {
    grads.push_back([&model, sp](std::span<const double> theta, std::span<double> g) {
      model.gradient(theta, *sp, g);
    });
  }

  FeelPipeline pipe(pc, grads, counts, root.spawn("pipeline"));

  ExperimentResult result;
  EvalMetrics last_eval{};
  double last_train_loss = 0.0;
  double total_count = 0.0;
  for (double c : counts) total_count += c;

  for (std::size_t t = 1; t <= cfg.t_rounds; ++t) {
    const auto start = std::chrono::steady_clock::now();
    const RoundOutcome outcome = pipe.step();
    const auto stop = std::chrono::steady_clock::now();

    RoundLog log;
    log.round = t;
    if (t % cfg.metric_cadence == 0 || t == cfg.t_rounds) {
      last_eval = evaluate(model, pipe.theta(), test);
      double train_loss = 0.0;
      for (std::size_t devi = 0; devi < shard_ptrs.size(); ++devi) {
        train_loss += counts[devi] / total_count * model.loss(pipe.theta(), *shard_ptrs[devi]);
      }
      last_train_loss = train_loss;
    }
    log.accuracy = last_eval.accuracy;
    log.test_loss = last_eval.cross_entropy;
    log.train_loss = last_train_loss;
    log.nmse_db = nmse_to_db(outcome.nmse);
    log.alpha = outcome.alpha;
    log.sigma2 = outcome.sigma2;
    log.v_post = outcome.v_post;
    log.iterations = outcome.iterations;
    log.diverged = outcome.diverged;
    log.lambda = outcome.params.lambda;
    log.p01 = outcome.params.p01;
    log.p10 = outcome.params.p10;
    log.beta = outcome.params.beta;
    log.gamma = outcome.params.gamma;
    log.xi = outcome.params.xi;
    log.wall_ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(stop - start)
            .count();
    result.rounds.push_back(log);
  }
  result.final_accuracy = result.rounds.back().accuracy;
  result.final_test_loss = result.rounds.back().test_loss;

  if (!cfg.out_dir.empty()) emit_outputs(cfg, result.rounds, cfg.out_dir);
  return result;
}

void emit_outputs(const ExperimentConfig& cfg, const std::vector<RoundLog>& rounds,
                  const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    std::ofstream out(out_dir + "/rounds.csv", std::ios::trunc);
    if (!out) throw std::runtime_error("emit_outputs: cannot write rounds.csv");
    out << "round,accuracy,test_loss,train_loss,nmse_db,alpha,sigma2,v_post,iterations,"
           "diverged,lambda,p01,p10,beta,gamma,xi\n";
    for (const auto& r : rounds) {
      out << r.round << ',' << fmt(r.accuracy) << ',' << fmt(r.test_loss) << ','
          << fmt(r.train_loss) << ',' << fmt(r.nmse_db) << ',' << fmt(r.alpha) << ','
          << fmt(r.sigma2) << ',' << fmt(r.v_post) << ',' << r.iterations << ','
          << (r.diverged ? 1 : 0) << ',' << fmt(r.lambda) << ',' << fmt(r.p01) << ','
          << fmt(r.p10) << ',' << fmt(r.beta) << ',' << fmt(r.gamma) << ',' << fmt(r.xi) << '\n';
    }
  }
  {
    std::ofstream out(out_dir + "/params.csv", std::ios::trunc);
    if (!out) throw std::runtime_error("emit_outputs: cannot write params.csv");
    out << "round,lambda,p01,p10,beta,gamma,xi\n";
    for (const auto& r : rounds) {
      out << r.round << ',' << fmt(r.lambda) << ',' << fmt(r.p01) << ',' << fmt(r.p10) << ','
          << fmt(r.beta) << ',' << fmt(r.gamma) << ',' << fmt(r.xi) << '\n';
    }
  }
  {
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["variant"] = cfg.variant;
    j["t_rounds"] = cfg.t_rounds;
    j["dataset"] = cfg.dataset;
    if (cfg.dataset == "idx") {
      j["idx_images"] = cfg.idx_images;
      j["idx_labels"] = cfg.idx_labels;
      j["idx_test_images"] = cfg.idx_test_images;
      j["idx_test_labels"] = cfg.idx_test_labels;
    }
    j["n_features"] = cfg.n_features;
    j["n_classes"] = cfg.n_classes;
    j["train_samples"] = cfg.train_samples;
    j["test_samples"] = cfg.test_samples;
    j["blob_radius"] = cfg.blob_radius;
    j["blob_noise"] = cfg.blob_noise;
    j["m_devices"] = cfg.m_devices;
    j["k_m"] = cfg.k_m;
    if (cfg.chi) j["chi"] = *cfg.chi;
    j["eta"] = cfg.eta;
    j["e_local"] = cfg.e_local;
    j["s_fraction"] = cfg.s_fraction;
    j["k_fraction"] = cfg.k_fraction;
    j["p_bar"] = cfg.p_bar;
    j["sigma_e"] = cfg.sigma_e;
    j["i_max"] = cfg.i_max;
    j["tol"] = cfg.tol;
    j["damping"] = cfg.damping;
    j["em_enabled"] = cfg.em_enabled;
    j["t0_window"] = cfg.t0_window;
    j["warmup"] = cfg.warmup;
    j["p01_0"] = cfg.p01_0;
    j["beta0"] = cfg.beta0;
    if (cfg.lambda0) j["lambda0"] = *cfg.lambda0;
    if (cfg.gamma0) j["gamma0"] = *cfg.gamma0;
    j["epsilon"] = cfg.epsilon;
    j["metric_cadence"] = cfg.metric_cadence;
    j["out_dir"] = cfg.out_dir.empty() ? out_dir : cfg.out_dir;
    std::ofstream out(out_dir + "/config.json", std::ios::trunc);
    if (!out) throw std::runtime_error("emit_outputs: cannot write config.json");
    out << j.dump(2) << '\n';
  }
}

}  // namespace otafl
