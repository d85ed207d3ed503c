#pragma once

#include <cstdint>
#include <vector>

#include "uq/data.hpp"
#include "uq/network.hpp"

namespace uq {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 128;
  double learning_rate = 0.1;
  double weight_decay = 5e-4;
  double momentum = 0.9;
  uint64_t seed = 0;
};

struct EpochStats {
  int epoch;
  double loss;
  double accuracy;
};

struct Temperature {
  double t = 1.0;
};

/// Cross-entropy probabilities for one row of logits. k=1 encodes the
/// binary head: returns {p(y=0), p(y=1)} from the single logit.
Vector class_probabilities(const Vector& logits, double temperature = 1.0);

double dataset_accuracy(const Mlp& net, const LabeledDataset& data);

/// MAP training: SGD with momentum and weight decay, learning rate divided
/// by 10 at 50%, 75% and 95% of the epoch budget, full reshuffle per epoch.
Mlp train_map(const Mlp& net, const LabeledDataset& data, const TrainConfig& cfg,
              std::vector<EpochStats>* log = nullptr);

/// Mean negative log-likelihood at the given temperature. Probabilities are
/// floored at 1e-12 inside the log.
double nll(const Mlp& net, const LabeledDataset& data, double temperature = 1.0);
double nll_from_logits(const Matrix& logits, const std::vector<int>& labels, double temperature);

/// Optimal temperature by golden-section search on log T in [-3, 3],
/// tolerance 1e-4 in log T.
Temperature fit_temperature(const Matrix& logits, const std::vector<int>& labels);

/// softmax(logits / T); never changes the argmax.
Vector temperature_predict(const Vector& logits, const Temperature& temp);

}  // namespace uq
