#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "otafl/dataset.hpp"

namespace otafl {

/// Multinomial logistic regression (softmax) over a linear layer with bias.
/// Parameter layout: theta = [W row-major (n_classes x n_features), b
/// (n_classes)], so dim() = n_classes * n_features + n_classes.
class SoftmaxRegression {
 public:
  SoftmaxRegression(std::size_t n_features, std::size_t n_classes)
      : n_features_(n_features), n_classes_(n_classes) {}

  std::size_t n_features() const noexcept { return n_features_; }
  std::size_t n_classes() const noexcept { return n_classes_; }
  std::size_t dim() const noexcept { return n_classes_ * n_features_ + n_classes_; }

  /// Mean cross-entropy over the shard.
  double loss(std::span<const double> theta, const DatasetShard& data) const;

  /// Full-batch gradient of the mean cross-entropy; grad_out must have dim()
  /// entries and is overwritten.
  void gradient(std::span<const double> theta, const DatasetShard& data,
                std::span<double> grad_out) const;

  /// Fraction of samples whose arg-max logit matches the label.
  double accuracy(std::span<const double> theta, const DatasetShard& data) const;

 private:
  void logits(std::span<const double> theta, const double* x, std::span<double> out) const;

  std::size_t n_features_;
  std::size_t n_classes_;
};

/// Separable quadratic objective 0.5 * sum_j h_j (theta_j - target_j)^2 with
/// known curvature, used for closed-form convergence baselines. All devices
/// share the curvature h; targets differ per device.
class QuadraticObjective {
 public:
  QuadraticObjective(std::vector<double> curvature, std::vector<double> target);

  std::size_t dim() const noexcept { return curvature_.size(); }
  std::span<const double> curvature() const noexcept { return curvature_; }
  std::span<const double> target() const noexcept { return target_; }

  double loss(std::span<const double> theta) const;
  void gradient(std::span<const double> theta, std::span<double> grad_out) const;

 private:
  std::vector<double> curvature_;
  std::vector<double> target_;
};

}  // namespace otafl
