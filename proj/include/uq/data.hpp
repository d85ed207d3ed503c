#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "uq/linalg.hpp"

namespace uq {

struct LabeledDataset {
  Matrix inputs;            // n × dim
  std::vector<int> labels;  // n entries in {0..k-1}
  int k = 2;                // class count

  int size() const { return inputs.rows(); }
  int dim() const { return inputs.cols(); }
  void validate() const;
};

/// k Gaussian clusters, n_per_class points each, labels = source cluster.
LabeledDataset gen_gaussian_clusters(int k, int n_per_class, const Matrix& means, double std_dev,
                                     uint64_t seed);

/// Class means evenly spaced on a circle of the given radius (2-D toys).
Matrix circle_means(int k, double radius);

/// Keep only two classes and relabel them 0/1.
LabeledDataset binarize(const LabeledDataset& data, int class_a, int class_b);

/// MNIST-format IDX pair (big-endian): image magic 0x00000803, label magic
/// 0x00000801. Pixels scaled to [0,1].
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Seed-deterministic disjoint split; second element holds n_val points.
std::pair<LabeledDataset, LabeledDataset> train_val_split(const LabeledDataset& data, int n_val,
                                                          uint64_t seed);

/// CSV with header "x0,...,x{d-1},label"; numbers written with 17
/// significant digits so a round trip is exact.
LabeledDataset load_csv(const std::string& path);
void save_csv(const LabeledDataset& data, const std::string& path);

}  // namespace uq
