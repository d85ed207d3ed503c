#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "uq/laplace.hpp"
#include "uq/network.hpp"

namespace uq {

struct PredictiveConfig {
  enum class Mode { Probit, Mc };
  Mode mode = Mode::Probit;
  int n_samples = 100;  // posterior draws for MC integration (20 for DLA/KFLA)
  uint64_t seed = 0;
  bool sample_full_network = false;  // FullAllLayers: sample nets instead of linearizing
};

struct PredictiveOutput {
  Vector probs;      // k entries; binary stored as {p0, p1}
  double confidence = 0.0;
  std::optional<double> z_value;  // binary probit path only
};

double sigmoid(double z);

/// σ(m / √(1 + π/8·v)) — the probit-scaled sigmoid integral.
double probit_sigmoid_approx(double mean, double variance);

/// Probit constant √(π/8).
double probit_lambda();

double confidence_of(const Vector& probs);

/// Binary last-layer path: m = μᵀφ (+ μ_b), v = φᵀΣφ (+ σ_b²).
PredictiveOutput predict_binary_last_layer(const Mlp& net, const LastLayerFull& post,
                                           const Vector& x, const BiasGaussian* bias_post = nullptr);

/// Binary all-layer path via the linearized logit: z = f_μ(x)/√(1 + π/8·dᵀΣd).
PredictiveOutput predict_binary_all_layer(const Mlp& net, const FullAllLayers& post,
                                          const Vector& x);

/// Function-space Gaussian of the logits under a last-layer matrix normal:
/// mean = Wφ (+ μ_b), cov = (φᵀVφ)·U (+ Σ_b).
std::pair<Vector, Matrix> function_space_gaussian(const Mlp& net, const LastLayerKron& post,
                                                  const Vector& x,
                                                  const BiasGaussian* bias_post = nullptr);

/// Monte Carlo predictive: averages softmax/sigmoid over posterior draws.
/// Streams are keyed by (seed, point_index, sample), so batch order is
/// irrelevant to the result.
PredictiveOutput mc_predict(const Mlp& net, const GaussianPosterior& post, const Vector& x,
                            const PredictiveConfig& cfg, uint64_t point_index = 0);

/// Routing wrapper: probit closed form for the binary Gaussians, MC for
/// everything else. A missing posterior gives the MAP prediction.
PredictiveOutput predict(const Mlp& net, const GaussianPosterior* post, const Vector& x,
                         const PredictiveConfig& cfg, uint64_t point_index = 0);

}  // namespace uq
