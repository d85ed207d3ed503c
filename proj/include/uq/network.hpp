#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uq/linalg.hpp"

namespace uq {

/// Activation pattern of the hidden ReLU units: one bit per unit,
/// set iff the preactivation is strictly positive (exact zero counts
/// as inactive). Two inputs with equal patterns share one affine map.
using ActivationPattern = std::vector<uint8_t>;

struct Layer {
  Matrix weight;               // out × in
  std::optional<Vector> bias;  // out, present for all layers or none
};

/// Forward-pass record used by the gradient routines: activations[l] is the
/// input to layer l (activations[0] = x), preactivations[l] its linear output.
struct ForwardTrace {
  std::vector<Vector> activations;
  std::vector<Vector> preactivations;
};

/// Gradients produced by one reverse sweep seeded with dL/d(logits).
struct Backprop {
  std::vector<Matrix> weight_grads;
  std::vector<Vector> bias_grads;         // empty when the net has no biases
  std::vector<Vector> preactivation_grads;  // dL/d(preactivation of layer l)
  Vector input_grad;
};

/// Fully-connected ReLU classifier. Hidden layers use ReLU, the final
/// layer is linear; output_dim() == 1 encodes the binary head.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<Layer> layers);

  /// Glorot-uniform initialization: uniform(±√(6/(fan_in+fan_out))), seeded.
  static Mlp random(const std::vector<int>& layer_dims, bool with_bias, uint64_t seed);

  int layer_count() const { return static_cast<int>(layers_.size()); }
  int input_dim() const { return layers_.front().weight.cols(); }
  int output_dim() const { return layers_.back().weight.rows(); }
  int feature_dim() const { return layers_.back().weight.cols(); }
  bool has_biases() const { return layers_.front().bias.has_value(); }
  int hidden_unit_count() const;
  int param_count() const;

  const Layer& layer(int l) const { return layers_[l]; }
  Layer& layer(int l) { return layers_[l]; }

  Vector forward(const Vector& x) const;
  ForwardTrace forward_trace(const Vector& x) const;

  /// Post-ReLU activation feeding the final linear layer (requires >= 2 layers).
  Vector features(const Vector& x) const;
  /// Like features() but defined for single-layer nets too (returns x there).
  Vector last_layer_input(const Vector& x) const;

  /// Reverse sweep from dL/d(logits) = seed.
  Backprop backprop(const ForwardTrace& trace, const Vector& logit_grad) const;

  /// Gradient of logit `output_index` w.r.t. all parameters, flattened in
  /// canonical order: per layer, weight entries row-major, then bias.
  Vector grad_params(const Vector& x, int output_index) const;

  /// Gradient of logit `output_index` w.r.t. the input = the matching row
  /// of the local affine slope.
  Vector grad_input(const Vector& x, int output_index) const;

  /// Local input Jacobian of the logits (k × n): masked weight product on
  /// the current linear region. Exact, no differencing.
  Matrix input_jacobian(const Vector& x) const;
  /// Same for the feature map (d × n).
  Matrix feature_input_jacobian(const Vector& x) const;

  ActivationPattern activation_pattern(const Vector& x) const;

  Vector flatten_params() const;
  void set_params(const Vector& theta);

  /// Canonical flat index ranges: [weight_begin, bias_begin, end) per layer.
  struct ParamLayout {
    int weight_begin;
    int bias_begin;  // == end when the layer has no bias
    int end;
  };
  std::vector<ParamLayout> param_layout() const;

  std::string to_json() const;
  static Mlp from_json(const std::string& text);

 private:
  void check_input(const Vector& x) const;
  std::vector<Layer> layers_;
};

/// Local affine map of a network (or feature map) around an input:
/// value(x') = slope·x' + intercept on the containing linear region.
struct LinearRegionAffine {
  Matrix slope;                    // k×n (k=1 binary) or d×n for features
  Vector intercept;                // k or d entries
  std::optional<Matrix> jacobian;  // n×p, ∂u/∂θ for the binary head
  double stable_from_delta = 1.0;  // α certifying the far-field region
};

/// Affine representation of the logits at x: slope = input Jacobian,
/// intercept = forward(x) − slope·x (zero for bias-free nets).
LinearRegionAffine affine_region(const Mlp& net, const Vector& x);

/// Smallest grid value after which the activation pattern of δ·x stops
/// changing across all remaining grid points. Throws Unstable when the
/// last two grid entries still differ.
double region_stability_scale(const Mlp& net, const Vector& x, const Vector& delta_grid);

/// n×p Jacobian of the local slope u w.r.t. the parameters, by central
/// finite differences of grad_input (binary head only). Throws
/// RegionBoundary when a hidden preactivation sits on a region facet.
Matrix region_jacobian(const Mlp& net, const Vector& x);

}  // namespace uq
