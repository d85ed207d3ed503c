#include "uq/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uq/error.hpp"
#include "uq/rng.hpp"

namespace uq {

namespace {

constexpr double kProbFloor = 1e-12;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Vector softmax(const Vector& z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  Vector p(z.size());
  double sum = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - zmax);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace

Vector class_probabilities(const Vector& logits, double temperature) {
  if (temperature <= 0.0) {
    throw Error(Error::Kind::BadSize, "temperature must be positive");
  }
  if (logits.size() == 1) {
    const double p1 = sigmoid(logits[0] / temperature);
    return {1.0 - p1, p1};
  }
  Vector scaled(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) scaled[i] = logits[i] / temperature;
  return softmax(scaled);
}

double dataset_accuracy(const Mlp& net, const LabeledDataset& data) {
  int correct = 0;
  for (int i = 0; i < data.size(); ++i) {
    const Vector logits = net.forward(data.inputs.row(i));
    int pred;
    if (logits.size() == 1) {
      pred = logits[0] > 0.0 ? 1 : 0;
    } else {
      pred = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    }
    if (pred == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / data.size();
}

Mlp train_map(const Mlp& net, const LabeledDataset& data, const TrainConfig& cfg,
              std::vector<EpochStats>* log) {
  if (cfg.epochs < 1 || cfg.batch_size < 1) {
    throw Error(Error::Kind::BadSize, "epochs and batch size must be >= 1");
  }
  if (cfg.learning_rate < 0.0 || cfg.weight_decay < 0.0) {
    throw Error(Error::Kind::BadSize, "learning rate and weight decay must be nonnegative");
  }
  const int k = net.output_dim();
  for (int label : data.labels) {
    const int limit = k == 1 ? 2 : k;
    if (label < 0 || label >= limit) {
      throw Error(Error::Kind::ParseError, "label out of range for the network head");
    }
  }

  Mlp model = net;
  Vector theta = model.flatten_params();
  Vector velocity(theta.size(), 0.0);
  const int n = data.size();

  // Learning-rate drops mirroring the 50/75/95-of-100 schedule.
  const int drop1 = std::max(1, cfg.epochs * 50 / 100);
  const int drop2 = std::max(1, cfg.epochs * 75 / 100);
  const int drop3 = std::max(1, cfg.epochs * 95 / 100);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  double lr = cfg.learning_rate;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (epoch == drop1) lr /= 10.0;
    if (epoch == drop2 && drop2 != drop1) lr /= 10.0;
    if (epoch == drop3 && drop3 != drop2 && drop3 != drop1) lr /= 10.0;

    CounterRng shuffle_rng(cfg.seed, 0x65706f6368 /*"epoch"*/, epoch);
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.next_below(static_cast<uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }

    double epoch_loss = 0.0;
    int epoch_correct = 0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int end = std::min(n, start + cfg.batch_size);
      const int m = end - start;
      Vector grad(theta.size(), 0.0);
      for (int bi = start; bi < end; ++bi) {
        const int idx = order[bi];
        const Vector x = data.inputs.row(idx);
        const int y = data.labels[idx];
        const ForwardTrace trace = model.forward_trace(x);
        const Vector& logits = trace.activations.back();

        Vector seed(k);
        if (k == 1) {
          const double p = sigmoid(logits[0]);
          seed[0] = p - static_cast<double>(y);
          const double py = y == 1 ? p : 1.0 - p;
          epoch_loss -= std::log(std::max(py, kProbFloor));
          epoch_correct += ((logits[0] > 0.0 ? 1 : 0) == y) ? 1 : 0;
        } else {
          const Vector p = softmax(logits);
          for (int c = 0; c < k; ++c) seed[c] = p[c] - (c == y ? 1.0 : 0.0);
          epoch_loss -= std::log(std::max(p[y], kProbFloor));
          const int pred =
              static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
          epoch_correct += (pred == y) ? 1 : 0;
        }

        const Backprop bp = model.backprop(trace, seed);
        size_t pos = 0;
        for (int l = 0; l < model.layer_count(); ++l) {
          for (double g : bp.weight_grads[l].data()) grad[pos++] += g;
          if (model.has_biases()) {
            for (double g : bp.bias_grads[l]) grad[pos++] += g;
          }
        }
      }
      for (size_t j = 0; j < theta.size(); ++j) {
        const double g = grad[j] / m + cfg.weight_decay * theta[j];
        velocity[j] = cfg.momentum * velocity[j] + g;
        theta[j] -= lr * velocity[j];
      }
    }
    model.set_params(theta);

    epoch_loss /= n;
    if (!std::isfinite(epoch_loss)) {
      throw Error(Error::Kind::Diverged, "training loss became non-finite");
    }
    if (log) {
      log->push_back({epoch, epoch_loss, static_cast<double>(epoch_correct) / n});
    }
  }
  return model;
}

double nll_from_logits(const Matrix& logits, const std::vector<int>& labels, double temperature) {
  if (logits.rows() != static_cast<int>(labels.size()) || logits.rows() == 0) {
    throw Error(Error::Kind::LengthMismatch, "nll: logits/labels size mismatch or empty");
  }
  if (temperature <= 0.0) {
    throw Error(Error::Kind::BadSize, "temperature must be positive");
  }
  double total = 0.0;
  for (int i = 0; i < logits.rows(); ++i) {
    const Vector p = class_probabilities(logits.row(i), temperature);
    total -= std::log(std::max(p[labels[i]], kProbFloor));
  }
  return total / logits.rows();
}

double nll(const Mlp& net, const LabeledDataset& data, double temperature) {
  Matrix logits(data.size(), net.output_dim());
  for (int i = 0; i < data.size(); ++i) {
    const Vector row = net.forward(data.inputs.row(i));
    for (int j = 0; j < net.output_dim(); ++j) logits(i, j) = row[j];
  }
  return nll_from_logits(logits, data.labels, temperature);
}

Temperature fit_temperature(const Matrix& logits, const std::vector<int>& labels) {
  if (logits.rows() == 0) {
    throw Error(Error::Kind::EmptyInput, "fit_temperature: no rows");
  }
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = -3.0;
  double hi = 3.0;
  auto objective = [&](double log_t) { return nll_from_logits(logits, labels, std::exp(log_t)); };

  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  while (hi - lo > 1e-4) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = objective(x2);
    }
  }
  return Temperature{std::exp(0.5 * (lo + hi))};
}

Vector temperature_predict(const Vector& logits, const Temperature& temp) {
  if (temp.t <= 0.0) {
    throw Error(Error::Kind::BadSize, "temperature must be positive");
  }
  return class_probabilities(logits, temp.t);
}

}  // namespace uq
