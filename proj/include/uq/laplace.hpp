#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "uq/data.hpp"
#include "uq/network.hpp"

namespace uq {

struct LaplaceConfig {
  double sigma0_sq = 1.0;  // prior variance; tau0 = 1/sigma0_sq
  double rho = 0.9;        // running-average weight across minibatches
  int batch_size = 0;      // 0 = single full batch (exact average)
  int label_samples = 1;   // Fisher label draws per datapoint (DLA/KFLA)
  uint64_t seed = 0;
  int dim_cap = 4096;      // largest dk for the exact multiclass Hessian
  int param_cap = 2000;    // largest p for the full all-layer posterior
};

/// Last-layer Gaussian with an explicit covariance. Binary head: mean is the
/// d-vector of last-layer weights. Multiclass: mean is vec(W) in canonical
/// row-major order and curvature/cov are dk×dk.
struct LastLayerFull {
  Vector mean;
  Matrix cov;
  Matrix curvature;  // Λ, the data-averaged Hessian; Σ = (n·Λ + τ₀ I)^{-1}
  int head_count = 1;
};

/// Last-layer matrix normal MN(W | mean, U, V).
struct LastLayerKron {
  Matrix mean;         // k × d
  Matrix u_factor;     // k × k
  Matrix v_factor;     // d × d
  Matrix a_curvature;  // output-curvature running mean (k × k)
  Matrix b_curvature;  // feature second-moment running mean (d × d)
};

/// Diagonal Gaussian over every parameter (canonical flat order).
struct DiagonalAllLayers {
  Vector mean;
  Vector variance;
  Vector fisher_diag;  // dataset-mean squared gradients
};

/// Per-layer matrix normals over the weight matrices.
struct KronAllLayers {
  struct LayerFactors {
    Matrix mean;  // out × in
    Matrix u_factor;
    Matrix v_factor;
    Matrix a_curvature;
    Matrix b_curvature;
  };
  std::vector<LayerFactors> layers;
};

/// Full Gaussian over every parameter.
struct FullAllLayers {
  Vector mean;
  Matrix cov;
  Matrix curvature;  // data-averaged GGN; Σ = (n·H + τ₀ I)^{-1}
};

/// Independent Gaussian over each layer's bias vector.
struct BiasGaussian {
  std::vector<Vector> mean;
  std::vector<Matrix> cov;
  std::vector<Matrix> curvature;
};

struct GaussianPosterior {
  using Variant =
      std::variant<LastLayerFull, LastLayerKron, DiagonalAllLayers, KronAllLayers, FullAllLayers>;

  Variant value;
  double sigma0_sq = 1.0;
  int n_data = 0;
  std::optional<BiasGaussian> bias;

  const char* variant_name() const;
};

GaussianPosterior fit_llla_binary(const Mlp& net, const LabeledDataset& data,
                                  const LaplaceConfig& cfg);
GaussianPosterior fit_llla_multiclass_exact(const Mlp& net, const LabeledDataset& data,
                                            const LaplaceConfig& cfg);
GaussianPosterior fit_llla_kron(const Mlp& net, const LabeledDataset& data,
                                const LaplaceConfig& cfg);
GaussianPosterior fit_dla(const Mlp& net, const LabeledDataset& data, const LaplaceConfig& cfg);
GaussianPosterior fit_kfla(const Mlp& net, const LabeledDataset& data, const LaplaceConfig& cfg);
GaussianPosterior fit_full_laplace(const Mlp& net, const LabeledDataset& data,
                                   const LaplaceConfig& cfg);
BiasGaussian fit_bias_gaussian(const Mlp& net, const LabeledDataset& data,
                               const LaplaceConfig& cfg);

/// Rebuild the covariance for a new prior variance from the stored
/// curvature, without touching the data again.
GaussianPosterior rebuild_with_sigma0(const GaussianPosterior& post, double sigma0_sq);

/// Cholesky-check every covariance factor; throws NotPositiveDefinite.
void validate_spd(const GaussianPosterior& post);

std::string posterior_to_json(const GaussianPosterior& post);
GaussianPosterior posterior_from_json(const std::string& text);

}  // namespace uq
