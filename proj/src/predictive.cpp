#include "uq/predictive.hpp"

#include <algorithm>
#include <cmath>

#include "uq/error.hpp"
#include "uq/rng.hpp"

namespace uq {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vector softmax_of(const Vector& logits) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  Vector p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - zmax);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

PredictiveOutput output_from_binary(double p1, std::optional<double> z) {
  PredictiveOutput out;
  out.probs = {1.0 - p1, p1};
  out.confidence = std::max(p1, 1.0 - p1);
  out.z_value = z;
  return out;
}

PredictiveOutput output_from_probs(Vector probs) {
  PredictiveOutput out;
  out.confidence = confidence_of(probs);
  out.probs = std::move(probs);
  return out;
}

/// Upper-triangular R with RᵀR = A (for the matrix-normal column factor).
Matrix cholesky_upper(const Matrix& a) { return transpose(cholesky(a)); }

}  // namespace

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double probit_lambda() { return std::sqrt(kPi / 8.0); }

double probit_sigmoid_approx(double mean, double variance) {
  if (variance < 0.0) {
    throw Error(Error::Kind::NegativeVariance, "predictive variance is negative");
  }
  return sigmoid(mean / std::sqrt(1.0 + (kPi / 8.0) * variance));
}

double confidence_of(const Vector& probs) {
  if (probs.empty()) {
    throw Error(Error::Kind::EmptyInput, "confidence of an empty probability vector");
  }
  return *std::max_element(probs.begin(), probs.end());
}

PredictiveOutput predict_binary_last_layer(const Mlp& net, const LastLayerFull& post,
                                           const Vector& x, const BiasGaussian* bias_post) {
  if (post.head_count != 1) {
    throw Error(Error::Kind::DimensionMismatch, "binary path needs a single-logit posterior");
  }
  const Vector phi = net.last_layer_input(x);
  if (phi.size() != post.mean.size()) {
    throw Error(Error::Kind::DimensionMismatch, "feature/posterior dimension mismatch");
  }
  double m = dot(post.mean, phi);
  double v = quad_form(phi, post.cov);
  if (bias_post) {
    const size_t last = bias_post->mean.size() - 1;
    m += bias_post->mean[last][0];
    v += bias_post->cov[last](0, 0);
  } else if (net.has_biases()) {
    m += (*net.layer(net.layer_count() - 1).bias)[0];
  }
  const double z = m / std::sqrt(1.0 + (kPi / 8.0) * v);
  return output_from_binary(sigmoid(z), z);
}

PredictiveOutput predict_binary_all_layer(const Mlp& net, const FullAllLayers& post,
                                          const Vector& x) {
  if (net.output_dim() != 1) {
    throw Error(Error::Kind::DimensionMismatch, "binary path needs a single-logit head");
  }
  if (static_cast<int>(post.mean.size()) != net.param_count()) {
    throw Error(Error::Kind::DimensionMismatch, "posterior/parameter dimension mismatch");
  }
  const double f = net.forward(x)[0];
  const Vector d = net.grad_params(x, 0);
  const double v = quad_form(d, post.cov);
  const double z = f / std::sqrt(1.0 + (kPi / 8.0) * v);
  return output_from_binary(sigmoid(z), z);
}

std::pair<Vector, Matrix> function_space_gaussian(const Mlp& net, const LastLayerKron& post,
                                                  const Vector& x, const BiasGaussian* bias_post) {
  const Vector phi = net.last_layer_input(x);
  Vector mean = matvec(post.mean, phi);
  const double scalar = quad_form(phi, post.v_factor);
  Matrix cov = scale(post.u_factor, scalar);
  if (bias_post) {
    const size_t last = bias_post->mean.size() - 1;
    mean = add(mean, bias_post->mean[last]);
    cov = add(cov, bias_post->cov[last]);
  } else if (net.has_biases()) {
    mean = add(mean, *net.layer(net.layer_count() - 1).bias);
  }
  return {std::move(mean), std::move(cov)};
}

namespace {

Vector sample_logits_last_layer_full(const Mlp& net, const LastLayerFull& post, const Vector& x,
                                     const Matrix& chol_cov, CounterRng& rng) {
  const Vector phi = net.last_layer_input(x);
  const int dim = static_cast<int>(post.mean.size());
  const Vector eps = rng.gaussian_vector(dim);
  Vector theta = post.mean;
  for (int i = 0; i < dim; ++i) {
    double s = 0.0;
    for (int j = 0; j <= i; ++j) s += chol_cov(i, j) * eps[j];
    theta[i] += s;
  }
  const int k = post.head_count;
  const int d = static_cast<int>(phi.size());
  Vector logits(k, 0.0);
  for (int c = 0; c < k; ++c) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += theta[c * d + j] * phi[j];
    logits[c] = s;
  }
  if (net.has_biases()) logits = add(logits, *net.layer(net.layer_count() - 1).bias);
  return logits;
}

Mlp sample_network_diag(const Mlp& net, const DiagonalAllLayers& post, CounterRng& rng) {
  Vector theta = post.mean;
  for (size_t j = 0; j < theta.size(); ++j) {
    theta[j] += std::sqrt(post.variance[j]) * rng.next_gaussian();
  }
  Mlp sampled = net;
  sampled.set_params(theta);
  return sampled;
}

Mlp sample_network_kron(const Mlp& net, const KronAllLayers& post,
                        const std::vector<Matrix>& chol_u, const std::vector<Matrix>& chol_v_upper,
                        CounterRng& rng) {
  Mlp sampled = net;
  for (int l = 0; l < sampled.layer_count(); ++l) {
    const auto& factors = post.layers[l];
    const int out = factors.mean.rows();
    const int in = factors.mean.cols();
    Matrix eps(out, in);
    for (double& v : eps.data()) v = rng.next_gaussian();
    // W = M + U^{1/2} E V^{1/2}, lower factor on the left, upper on the right.
    const Matrix noise = matmul(chol_u[l], matmul(eps, chol_v_upper[l]));
    sampled.layer(l).weight = add(factors.mean, noise);
  }
  return sampled;
}

Mlp sample_network_full(const Mlp& net, const FullAllLayers& post, const Matrix& chol_cov,
                        CounterRng& rng) {
  const int p = static_cast<int>(post.mean.size());
  const Vector eps = rng.gaussian_vector(p);
  Vector theta = post.mean;
  for (int i = 0; i < p; ++i) {
    double s = 0.0;
    for (int j = 0; j <= i; ++j) s += chol_cov(i, j) * eps[j];
    theta[i] += s;
  }
  Mlp sampled = net;
  sampled.set_params(theta);
  return sampled;
}

Vector probs_of_logits(const Vector& logits) {
  if (logits.size() == 1) {
    const double p1 = sigmoid(logits[0]);
    return {1.0 - p1, p1};
  }
  return softmax_of(logits);
}

}  // namespace

PredictiveOutput mc_predict(const Mlp& net, const GaussianPosterior& post, const Vector& x,
                            const PredictiveConfig& cfg, uint64_t point_index) {
  if (cfg.n_samples < 1) {
    throw Error(Error::Kind::BadSize, "n_samples must be >= 1");
  }
  const int k = net.output_dim() == 1 ? 2 : net.output_dim();
  Vector mean_probs(k, 0.0);

  // Factorizations shared across samples.
  Matrix chol_cov;
  std::vector<Matrix> chol_u, chol_v_upper;
  if (const auto* llf = std::get_if<LastLayerFull>(&post.value)) {
    chol_cov = cholesky(llf->cov);
  } else if (const auto* llk = std::get_if<LastLayerKron>(&post.value)) {
    (void)llk;
  } else if (const auto* kfla = std::get_if<KronAllLayers>(&post.value)) {
    for (const auto& layer : kfla->layers) {
      chol_u.push_back(cholesky(layer.u_factor));
      chol_v_upper.push_back(cholesky_upper(layer.v_factor));
    }
  } else if (const auto* full = std::get_if<FullAllLayers>(&post.value)) {
    chol_cov = cholesky(full->cov);
  }

  std::optional<std::pair<Vector, Matrix>> fsg;
  Matrix fsg_chol;
  if (const auto* llk = std::get_if<LastLayerKron>(&post.value)) {
    fsg = function_space_gaussian(net, *llk, x, post.bias ? &*post.bias : nullptr);
    fsg_chol = cholesky(fsg->second);
  }

  for (int s = 0; s < cfg.n_samples; ++s) {
    CounterRng rng(cfg.seed, point_index, static_cast<uint64_t>(s));
    Vector logits;
    if (const auto* llf = std::get_if<LastLayerFull>(&post.value)) {
      logits = sample_logits_last_layer_full(net, *llf, x, chol_cov, rng);
    } else if (fsg) {
      const Vector eps = rng.gaussian_vector(static_cast<int>(fsg->first.size()));
      logits = fsg->first;
      for (size_t i = 0; i < logits.size(); ++i) {
        double acc = 0.0;
        for (size_t j = 0; j <= i; ++j) acc += fsg_chol(static_cast<int>(i), static_cast<int>(j)) * eps[j];
        logits[i] += acc;
      }
    } else if (const auto* dla = std::get_if<DiagonalAllLayers>(&post.value)) {
      logits = sample_network_diag(net, *dla, rng).forward(x);
    } else if (const auto* kfla = std::get_if<KronAllLayers>(&post.value)) {
      logits = sample_network_kron(net, *kfla, chol_u, chol_v_upper, rng).forward(x);
    } else if (const auto* full = std::get_if<FullAllLayers>(&post.value)) {
      logits = sample_network_full(net, *full, chol_cov, rng).forward(x);
    }
    const Vector p = probs_of_logits(logits);
    for (int c = 0; c < k; ++c) mean_probs[c] += p[c];
  }
  for (double& v : mean_probs) v /= cfg.n_samples;
  return output_from_probs(std::move(mean_probs));
}

PredictiveOutput predict(const Mlp& net, const GaussianPosterior* post, const Vector& x,
                         const PredictiveConfig& cfg, uint64_t point_index) {
  if (post == nullptr) {
    const Vector logits = net.forward(x);
    if (logits.size() == 1) {
      return output_from_binary(sigmoid(logits[0]), logits[0]);
    }
    return output_from_probs(softmax_of(logits));
  }
  if (cfg.mode == PredictiveConfig::Mode::Probit && net.output_dim() == 1) {
    if (const auto* llf = std::get_if<LastLayerFull>(post ? &post->value : nullptr)) {
      return predict_binary_last_layer(net, *llf, x, post->bias ? &*post->bias : nullptr);
    }
    if (const auto* full = std::get_if<FullAllLayers>(&post->value)) {
      if (!cfg.sample_full_network) {
        return predict_binary_all_layer(net, *full, x);
      }
    }
  }
  return mc_predict(net, *post, x, cfg, point_index);
}

}  // namespace uq
