#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "otafl/rng.hpp"

namespace otafl {

/// A labelled feature matrix in row-major layout: sample i occupies
/// features[i*n_features .. (i+1)*n_features).
struct DatasetShard {
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  const double* sample(std::size_t i) const { return features.data() + i * n_features; }

  void validate() const;
};

/// Reads an image/label pair in IDX format (the big-endian container used by
/// the classic handwritten-digit corpus). Pixel bytes are scaled to [0, 1].
DatasetShard load_idx_dataset(const std::string& images_path, const std::string& labels_path);

/// Splits `full` into m shards of k_m samples each.
/// Without a class constraint the split is disjoint and uniform (a global
/// shuffle, sliced). With `classes_per_device = chi`, each device draws chi
/// distinct classes uniformly and then k_m samples without replacement from
/// the pooled samples of those classes (devices may overlap). Throws if the
/// requested sizes are infeasible.
std::vector<DatasetShard> partition_dataset(const DatasetShard& full, std::size_t m_devices,
                                            std::size_t k_m, std::optional<int> classes_per_device,
                                            SeededRng rng);

/// Deterministic synthetic classification task: class centroids drawn on a
/// sphere, samples = centroid + isotropic Gaussian noise. Used when no IDX
/// corpus is available.
DatasetShard make_blob_dataset(std::size_t n_samples, std::size_t n_features,
                               std::size_t n_classes, double centroid_radius,
                               double noise_sd, SeededRng rng);

}  // namespace otafl
