#include "otafl/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "otafl/math.hpp"

namespace otafl {

void SoftmaxRegression::logits(std::span<const double> theta, const double* x,
                               std::span<double> out) const {
  const double* w = theta.data();
  const double* b = theta.data() + n_classes_ * n_features_;
  for (std::size_t c = 0; c < n_classes_; ++c) {
    const double* wc = w + c * n_features_;
    double z = b[c];
    for (std::size_t j = 0; j < n_features_; ++j) z += wc[j] * x[j];
    out[c] = z;
  }
}

double SoftmaxRegression::loss(std::span<const double> theta, const DatasetShard& data) const {
  if (theta.size() != dim()) throw std::invalid_argument("SoftmaxRegression::loss: bad theta size");
  if (data.n_features != n_features_) throw std::invalid_argument("SoftmaxRegression::loss: feature mismatch");
  if (data.size() == 0) throw std::invalid_argument("SoftmaxRegression::loss: empty shard");
  std::vector<double> z(n_classes_);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    logits(theta, data.sample(i), z);
    const double zmax = *std::max_element(z.begin(), z.end());
    double lse = 0.0;
    for (double v : z) lse += std::exp(v - zmax);
    lse = zmax + std::log(lse);
    total += lse - z[static_cast<std::size_t>(data.labels[i])];
  }
  return total / static_cast<double>(data.size());
}

void SoftmaxRegression::gradient(std::span<const double> theta, const DatasetShard& data,
                                 std::span<double> grad_out) const {
  if (theta.size() != dim() || grad_out.size() != dim()) {
    throw std::invalid_argument("SoftmaxRegression::gradient: bad sizes");
  }
  if (data.n_features != n_features_) throw std::invalid_argument("SoftmaxRegression::gradient: feature mismatch");
  if (data.size() == 0) throw std::invalid_argument("SoftmaxRegression::gradient: empty shard");
  std::fill(grad_out.begin(), grad_out.end(), 0.0);
  double* gw = grad_out.data();
  double* gb = grad_out.data() + n_classes_ * n_features_;
  std::vector<double> z(n_classes_);
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double* x = data.sample(i);
    logits(theta, x, z);
    const double zmax = *std::max_element(z.begin(), z.end());
    double norm = 0.0;
    for (double& v : z) {
      v = std::exp(v - zmax);
      norm += v;
    }
    for (double& v : z) v /= norm;  // z now holds softmax probabilities
    z[static_cast<std::size_t>(data.labels[i])] -= 1.0;
    for (std::size_t c = 0; c < n_classes_; ++c) {
      const double coeff = z[c] * inv_n;
      if (coeff == 0.0) continue;
      double* gwc = gw + c * n_features_;
      for (std::size_t j = 0; j < n_features_; ++j) gwc[j] += coeff * x[j];
      gb[c] += coeff;
    }
  }
}

double SoftmaxRegression::accuracy(std::span<const double> theta, const DatasetShard& data) const {
  if (theta.size() != dim()) throw std::invalid_argument("SoftmaxRegression::accuracy: bad theta size");
  if (data.size() == 0) throw std::invalid_argument("SoftmaxRegression::accuracy: empty shard");
  std::vector<double> z(n_classes_);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    logits(theta, data.sample(i), z);
    // arg-max with ties resolved to the lowest class index
    std::size_t best = 0;
    for (std::size_t c = 1; c < n_classes_; ++c) {
      if (z[c] > z[best]) best = c;
    }
    if (best == static_cast<std::size_t>(data.labels[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

QuadraticObjective::QuadraticObjective(std::vector<double> curvature, std::vector<double> target)
    : curvature_(std::move(curvature)), target_(std::move(target)) {
  if (curvature_.size() != target_.size() || curvature_.empty()) {
    throw std::invalid_argument("QuadraticObjective: size mismatch");
  }
  for (double h : curvature_) {
    if (!(h > 0.0)) throw std::invalid_argument("QuadraticObjective: curvature must be positive");
  }
}

double QuadraticObjective::loss(std::span<const double> theta) const {
  if (theta.size() != dim()) throw std::invalid_argument("QuadraticObjective::loss: bad theta size");
  double total = 0.0;
  for (std::size_t j = 0; j < dim(); ++j) total += 0.5 * curvature_[j] * sq(theta[j] - target_[j]);
  return total;
}

void QuadraticObjective::gradient(std::span<const double> theta, std::span<double> grad_out) const {
  if (theta.size() != dim() || grad_out.size() != dim()) {
    throw std::invalid_argument("QuadraticObjective::gradient: bad sizes");
  }
  for (std::size_t j = 0; j < dim(); ++j) grad_out[j] = curvature_[j] * (theta[j] - target_[j]);
}

}  // namespace otafl
