#include "otafl/dataset.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "otafl/math.hpp"

namespace otafl {
namespace {

std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("truncated IDX header: " + path);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

}  // namespace

void DatasetShard::validate() const {
  if (n_features == 0) throw std::invalid_argument("DatasetShard: n_features == 0");
  if (features.size() != labels.size() * n_features) {
    throw std::invalid_argument("DatasetShard: feature/label size mismatch");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
      throw std::invalid_argument("DatasetShard: label outside [0, n_classes)");
    }
  }
}

DatasetShard load_idx_dataset(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot open IDX image file: " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("cannot open IDX label file: " + labels_path);

  const std::uint32_t img_magic = read_be_u32(img, images_path);
  if (img_magic != 0x00000803u) {
    throw std::runtime_error("bad IDX image magic in " + images_path);
  }
  const std::uint32_t n_images = read_be_u32(img, images_path);
  const std::uint32_t rows = read_be_u32(img, images_path);
  const std::uint32_t cols = read_be_u32(img, images_path);

  const std::uint32_t lab_magic = read_be_u32(lab, labels_path);
  if (lab_magic != 0x00000801u) {
    throw std::runtime_error("bad IDX label magic in " + labels_path);
  }
  const std::uint32_t n_labels = read_be_u32(lab, labels_path);
  if (n_images != n_labels) {
    throw std::runtime_error("IDX image/label count mismatch: " + images_path);
  }

  DatasetShard out;
  out.n_features = static_cast<std::size_t>(rows) * cols;
  out.n_classes = 10;
  out.features.resize(static_cast<std::size_t>(n_images) * out.n_features);
  out.labels.resize(n_images);

  std::vector<unsigned char> buf(out.n_features);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!img) throw std::runtime_error("truncated IDX image data: " + images_path);
    double* dst = out.features.data() + static_cast<std::size_t>(i) * out.n_features;
    for (std::size_t j = 0; j < out.n_features; ++j) dst[j] = buf[j] / 255.0;
  }
  std::vector<unsigned char> lbuf(n_labels);
  lab.read(reinterpret_cast<char*>(lbuf.data()), static_cast<std::streamsize>(lbuf.size()));
  if (!lab) throw std::runtime_error("truncated IDX label data: " + labels_path);
  for (std::uint32_t i = 0; i < n_labels; ++i) out.labels[i] = lbuf[i];

  out.validate();
  return out;
}

std::vector<DatasetShard> partition_dataset(const DatasetShard& full, std::size_t m_devices,
                                            std::size_t k_m, std::optional<int> classes_per_device,
                                            SeededRng rng) {
  full.validate();
  if (m_devices == 0 || k_m == 0) {
    throw std::invalid_argument("partition_dataset: m_devices and k_m must be > 0");
  }

  auto copy_samples = [&](const std::vector<std::size_t>& ids) {
    DatasetShard shard;
    shard.n_features = full.n_features;
    shard.n_classes = full.n_classes;
    shard.features.reserve(ids.size() * full.n_features);
    shard.labels.reserve(ids.size());
    for (std::size_t id : ids) {
      const double* src = full.sample(id);
      shard.features.insert(shard.features.end(), src, src + full.n_features);
      shard.labels.push_back(full.labels[id]);
    }
    return shard;
  };

  std::vector<DatasetShard> shards;
  shards.reserve(m_devices);

  if (!classes_per_device.has_value()) {
    if (m_devices * k_m > full.size()) {
      throw std::invalid_argument("partition_dataset: m_devices*k_m exceeds dataset size");
    }
    std::vector<std::size_t> idx(full.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    for (std::size_t m = 0; m < m_devices; ++m) {
      std::vector<std::size_t> ids(idx.begin() + static_cast<std::ptrdiff_t>(m * k_m),
                                   idx.begin() + static_cast<std::ptrdiff_t>((m + 1) * k_m));
      shards.push_back(copy_samples(ids));
    }
    return shards;
  }

  const int chi = *classes_per_device;
  if (chi <= 0 || static_cast<std::size_t>(chi) > full.n_classes) {
    throw std::invalid_argument("partition_dataset: classes_per_device outside [1, n_classes]");
  }
  std::vector<std::vector<std::size_t>> by_class(full.n_classes);
  for (std::size_t i = 0; i < full.size(); ++i) {
    by_class[static_cast<std::size_t>(full.labels[i])].push_back(i);
  }

  for (std::size_t m = 0; m < m_devices; ++m) {
    // chi distinct classes, uniform.
    std::vector<std::size_t> cls(full.n_classes);
    std::iota(cls.begin(), cls.end(), std::size_t{0});
    for (int i = 0; i < chi; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(i) + static_cast<std::size_t>(rng.uniform_int(cls.size() - i));
      std::swap(cls[static_cast<std::size_t>(i)], cls[j]);
    }
    std::vector<std::size_t> pool;
    for (int i = 0; i < chi; ++i) {
      const auto& members = by_class[cls[static_cast<std::size_t>(i)]];
      pool.insert(pool.end(), members.begin(), members.end());
    }
    if (pool.size() < k_m) {
      throw std::invalid_argument("partition_dataset: class constraint leaves fewer than k_m samples");
    }
    for (std::size_t i = 0; i < k_m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k_m);
    shards.push_back(copy_samples(pool));
  }
  return shards;
}

DatasetShard make_blob_dataset(std::size_t n_samples, std::size_t n_features,
                               std::size_t n_classes, double centroid_radius,
                               double noise_sd, SeededRng rng) {
  if (n_classes == 0 || n_features == 0) {
    throw std::invalid_argument("make_blob_dataset: empty dimensions");
  }
  // Class centroids: Gaussian directions scaled to the requested radius.
  std::vector<std::vector<double>> centroids(n_classes, std::vector<double>(n_features));
  for (auto& c : centroids) {
    for (auto& v : c) v = rng.gaussian();
    const double norm = l2_norm(c);
    if (norm > 0) {
      for (auto& v : c) v *= centroid_radius / norm;
    }
  }
  DatasetShard out;
  out.n_features = n_features;
  out.n_classes = n_classes;
  out.features.resize(n_samples * n_features);
  out.labels.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const int y = static_cast<int>(rng.uniform_int(n_classes));
    out.labels[i] = y;
    double* dst = out.features.data() + i * n_features;
    const auto& c = centroids[static_cast<std::size_t>(y)];
    for (std::size_t j = 0; j < n_features; ++j) dst[j] = c[j] + noise_sd * rng.gaussian();
  }
  out.validate();
  return out;
}

}  // namespace otafl
