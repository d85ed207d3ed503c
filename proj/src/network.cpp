#include "uq/network.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "uq/rng.hpp"

namespace uq {

namespace {

void require_finite(const Matrix& w, const char* what) {
  for (double v : w.data()) {
    if (!std::isfinite(v)) {
      throw Error(Error::Kind::Diverged, std::string(what) + " contains a non-finite value");
    }
  }
}

}  // namespace

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) {
    throw Error(Error::Kind::DimensionMismatch, "network needs at least one layer");
  }
  const bool with_bias = layers_.front().bias.has_value();
  for (size_t l = 0; l < layers_.size(); ++l) {
    require_finite(layers_[l].weight, "weight");
    if (layers_[l].bias.has_value() != with_bias) {
      throw Error(Error::Kind::DimensionMismatch, "bias presence must be uniform across layers");
    }
    if (with_bias && static_cast<int>(layers_[l].bias->size()) != layers_[l].weight.rows()) {
      throw Error(Error::Kind::DimensionMismatch, "bias length must equal layer output dim");
    }
    if (l > 0 && layers_[l].weight.cols() != layers_[l - 1].weight.rows()) {
      throw Error(Error::Kind::DimensionMismatch,
                  "layer " + std::to_string(l) + " input dim does not chain");
    }
  }
}

Mlp Mlp::random(const std::vector<int>& layer_dims, bool with_bias, uint64_t seed) {
  if (layer_dims.size() < 2) {
    throw Error(Error::Kind::DimensionMismatch, "need at least input and output dims");
  }
  std::vector<Layer> layers;
  for (size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    CounterRng rng(seed, 0x6d6c70 /*"mlp"*/, l);
    Matrix w(fan_out, fan_in);
    for (double& v : w.data()) v = (2.0 * rng.next_uniform() - 1.0) * bound;
    Layer layer{std::move(w), std::nullopt};
    if (with_bias) layer.bias = Vector(fan_out, 0.0);
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

int Mlp::hidden_unit_count() const {
  int n = 0;
  for (int l = 0; l + 1 < layer_count(); ++l) n += layers_[l].weight.rows();
  return n;
}

int Mlp::param_count() const {
  int p = 0;
  for (const Layer& layer : layers_) {
    p += layer.weight.rows() * layer.weight.cols();
    if (layer.bias) p += static_cast<int>(layer.bias->size());
  }
  return p;
}

void Mlp::check_input(const Vector& x) const {
  if (static_cast<int>(x.size()) != input_dim()) {
    throw Error(Error::Kind::DimensionMismatch,
                "input has dim " + std::to_string(x.size()) + ", expected " +
                    std::to_string(input_dim()));
  }
}

Vector Mlp::forward(const Vector& x) const {
  check_input(x);
  Vector a = x;
  for (int l = 0; l < layer_count(); ++l) {
    Vector s = matvec(layers_[l].weight, a);
    if (layers_[l].bias) s = add(s, *layers_[l].bias);
    if (l + 1 < layer_count()) {
      for (double& v : s) v = v > 0.0 ? v : 0.0;
    }
    a = std::move(s);
  }
  return a;
}

ForwardTrace Mlp::forward_trace(const Vector& x) const {
  check_input(x);
  ForwardTrace trace;
  trace.activations.push_back(x);
  for (int l = 0; l < layer_count(); ++l) {
    Vector s = matvec(layers_[l].weight, trace.activations.back());
    if (layers_[l].bias) s = add(s, *layers_[l].bias);
    trace.preactivations.push_back(s);
    if (l + 1 < layer_count()) {
      for (double& v : s) v = v > 0.0 ? v : 0.0;
    }
    trace.activations.push_back(std::move(s));
  }
  return trace;
}

Vector Mlp::features(const Vector& x) const {
  if (layer_count() < 2) {
    throw Error(Error::Kind::DimensionMismatch, "features requires at least two layers");
  }
  return last_layer_input(x);
}

Vector Mlp::last_layer_input(const Vector& x) const {
  check_input(x);
  Vector a = x;
  for (int l = 0; l + 1 < layer_count(); ++l) {
    Vector s = matvec(layers_[l].weight, a);
    if (layers_[l].bias) s = add(s, *layers_[l].bias);
    for (double& v : s) v = v > 0.0 ? v : 0.0;
    a = std::move(s);
  }
  return a;
}

Backprop Mlp::backprop(const ForwardTrace& trace, const Vector& logit_grad) const {
  const int depth = layer_count();
  if (static_cast<int>(logit_grad.size()) != output_dim()) {
    throw Error(Error::Kind::DimensionMismatch, "backprop seed must match output dim");
  }
  Backprop out;
  out.weight_grads.resize(depth);
  out.preactivation_grads.resize(depth);
  if (has_biases()) out.bias_grads.resize(depth);

  Vector g = logit_grad;  // gradient w.r.t. current layer preactivation
  for (int l = depth - 1; l >= 0; --l) {
    out.preactivation_grads[l] = g;
    out.weight_grads[l] = outer(g, trace.activations[l]);
    if (has_biases()) out.bias_grads[l] = g;
    Vector upstream = matvec_t(layers_[l].weight, g);
    if (l > 0) {
      const Vector& pre = trace.preactivations[l - 1];
      for (size_t i = 0; i < upstream.size(); ++i) {
        if (pre[i] <= 0.0) upstream[i] = 0.0;
      }
    }
    g = std::move(upstream);
  }
  out.input_grad = std::move(g);
  return out;
}

Vector Mlp::grad_params(const Vector& x, int output_index) const {
  if (output_index < 0 || output_index >= output_dim()) {
    throw Error(Error::Kind::DimensionMismatch, "output index out of range");
  }
  Vector seed(output_dim(), 0.0);
  seed[output_index] = 1.0;
  const Backprop bp = backprop(forward_trace(x), seed);
  Vector flat;
  flat.reserve(param_count());
  for (int l = 0; l < layer_count(); ++l) {
    const auto& wg = bp.weight_grads[l].data();
    flat.insert(flat.end(), wg.begin(), wg.end());
    if (has_biases()) flat.insert(flat.end(), bp.bias_grads[l].begin(), bp.bias_grads[l].end());
  }
  return flat;
}

Vector Mlp::grad_input(const Vector& x, int output_index) const {
  if (output_index < 0 || output_index >= output_dim()) {
    throw Error(Error::Kind::DimensionMismatch, "output index out of range");
  }
  Vector seed(output_dim(), 0.0);
  seed[output_index] = 1.0;
  return backprop(forward_trace(x), seed).input_grad;
}

Matrix Mlp::input_jacobian(const Vector& x) const {
  const ForwardTrace trace = forward_trace(x);
  // Masked product D_{L-1} W_{L-1} ··· D_1 W_1, then the top linear layer.
  Matrix j = layers_[0].weight;
  for (int l = 0; l + 1 < layer_count(); ++l) {
    const Vector& pre = trace.preactivations[l];
    for (int r = 0; r < j.rows(); ++r) {
      if (pre[r] <= 0.0) {
        double* row = j.row_ptr(r);
        for (int c = 0; c < j.cols(); ++c) row[c] = 0.0;
      }
    }
    j = matmul(layers_[l + 1].weight, j);
  }
  return j;
}

Matrix Mlp::feature_input_jacobian(const Vector& x) const {
  if (layer_count() < 2) {
    throw Error(Error::Kind::DimensionMismatch, "feature jacobian requires >= 2 layers");
  }
  const ForwardTrace trace = forward_trace(x);
  Matrix j = layers_[0].weight;
  for (int l = 0; l + 1 < layer_count(); ++l) {
    const Vector& pre = trace.preactivations[l];
    for (int r = 0; r < j.rows(); ++r) {
      if (pre[r] <= 0.0) {
        double* row = j.row_ptr(r);
        for (int c = 0; c < j.cols(); ++c) row[c] = 0.0;
      }
    }
    if (l + 2 < layer_count()) j = matmul(layers_[l + 1].weight, j);
  }
  return j;
}

ActivationPattern Mlp::activation_pattern(const Vector& x) const {
  const ForwardTrace trace = forward_trace(x);
  ActivationPattern bits;
  bits.reserve(hidden_unit_count());
  for (int l = 0; l + 1 < layer_count(); ++l) {
    for (double v : trace.preactivations[l]) bits.push_back(v > 0.0 ? 1 : 0);
  }
  return bits;
}

Vector Mlp::flatten_params() const {
  Vector flat;
  flat.reserve(param_count());
  for (const Layer& layer : layers_) {
    flat.insert(flat.end(), layer.weight.data().begin(), layer.weight.data().end());
    if (layer.bias) flat.insert(flat.end(), layer.bias->begin(), layer.bias->end());
  }
  return flat;
}

void Mlp::set_params(const Vector& theta) {
  if (static_cast<int>(theta.size()) != param_count()) {
    throw Error(Error::Kind::DimensionMismatch, "parameter vector length mismatch");
  }
  size_t pos = 0;
  for (Layer& layer : layers_) {
    for (double& v : layer.weight.data()) v = theta[pos++];
    if (layer.bias) {
      for (double& v : *layer.bias) v = theta[pos++];
    }
  }
}

std::vector<Mlp::ParamLayout> Mlp::param_layout() const {
  std::vector<ParamLayout> layout;
  int pos = 0;
  for (const Layer& layer : layers_) {
    ParamLayout entry{};
    entry.weight_begin = pos;
    pos += layer.weight.rows() * layer.weight.cols();
    entry.bias_begin = pos;
    if (layer.bias) pos += static_cast<int>(layer.bias->size());
    entry.end = pos;
    layout.push_back(entry);
  }
  return layout;
}

std::string Mlp::to_json() const {
  nlohmann::json doc;
  doc["activation"] = "relu";
  doc["layers"] = nlohmann::json::array();
  for (const Layer& layer : layers_) {
    nlohmann::json jl;
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < layer.weight.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < layer.weight.cols(); ++j) row.push_back(layer.weight(i, j));
      rows.push_back(std::move(row));
    }
    jl["weight"] = std::move(rows);
    if (layer.bias) {
      jl["bias"] = *layer.bias;
    } else {
      jl["bias"] = nullptr;
    }
    doc["layers"].push_back(std::move(jl));
  }
  return doc.dump(2) + "\n";
}

Mlp Mlp::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Error::Kind::ParseError, e.what());
  }
  if (!doc.contains("activation") || doc["activation"] != "relu") {
    throw Error(Error::Kind::ParseError, "model file: activation must be \"relu\"");
  }
  if (!doc.contains("layers") || !doc["layers"].is_array() || doc["layers"].empty()) {
    throw Error(Error::Kind::ParseError, "model file: missing layers");
  }
  std::vector<Layer> layers;
  for (const auto& jl : doc["layers"]) {
    if (!jl.contains("weight") || !jl["weight"].is_array()) {
      throw Error(Error::Kind::ParseError, "model file: layer weight missing");
    }
    const auto& rows = jl["weight"];
    const int nr = static_cast<int>(rows.size());
    const int nc = nr > 0 ? static_cast<int>(rows[0].size()) : 0;
    Matrix w(nr, nc);
    for (int i = 0; i < nr; ++i) {
      if (static_cast<int>(rows[i].size()) != nc) {
        throw Error(Error::Kind::ParseError, "model file: ragged weight rows");
      }
      for (int j = 0; j < nc; ++j) w(i, j) = rows[i][j].get<double>();
    }
    Layer layer{std::move(w), std::nullopt};
    if (jl.contains("bias") && !jl["bias"].is_null()) {
      layer.bias = jl["bias"].get<Vector>();
    }
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

LinearRegionAffine affine_region(const Mlp& net, const Vector& x) {
  LinearRegionAffine region;
  region.slope = net.input_jacobian(x);
  const Vector fx = net.forward(x);
  region.intercept = sub(fx, matvec(region.slope, x));
  return region;
}

double region_stability_scale(const Mlp& net, const Vector& x, const Vector& delta_grid) {
  if (delta_grid.empty()) {
    throw Error(Error::Kind::BadSize, "delta grid must be nonempty");
  }
  for (size_t i = 0; i < delta_grid.size(); ++i) {
    if (delta_grid[i] <= 0.0 || (i > 0 && delta_grid[i] <= delta_grid[i - 1])) {
      throw Error(Error::Kind::BadSize, "delta grid must be positive and increasing");
    }
  }
  std::vector<ActivationPattern> patterns;
  patterns.reserve(delta_grid.size());
  for (double delta : delta_grid) {
    patterns.push_back(net.activation_pattern(scale(x, delta)));
  }
  if (patterns.size() >= 2 && patterns[patterns.size() - 1] != patterns[patterns.size() - 2]) {
    throw Error(Error::Kind::Unstable, "activation pattern still changing at grid end");
  }
  size_t first_stable = patterns.size() - 1;
  while (first_stable > 0 && patterns[first_stable - 1] == patterns.back()) --first_stable;
  return delta_grid[first_stable];
}

Matrix region_jacobian(const Mlp& net, const Vector& x) {
  if (net.output_dim() != 1) {
    throw Error(Error::Kind::DimensionMismatch, "region jacobian needs a binary head");
  }
  const ForwardTrace trace = net.forward_trace(x);
  const double boundary_tol = 1e-7 * (1.0 + norm2(x));
  for (size_t l = 0; l + 1 < trace.preactivations.size(); ++l) {
    for (double v : trace.preactivations[l]) {
      if (std::fabs(v) < boundary_tol) {
        throw Error(Error::Kind::RegionBoundary,
                    "input too close to a linear-region facet for du/dtheta");
      }
    }
  }

  const int n = net.input_dim();
  const int p = net.param_count();
  Mlp probe = net;
  Vector theta = net.flatten_params();
  Matrix j(n, p);
  for (int col = 0; col < p; ++col) {
    const double h = 1e-5 * (1.0 + std::fabs(theta[col]));
    const double saved = theta[col];
    theta[col] = saved + h;
    probe.set_params(theta);
    const Vector up = probe.grad_input(x, 0);
    theta[col] = saved - h;
    probe.set_params(theta);
    const Vector um = probe.grad_input(x, 0);
    theta[col] = saved;
    for (int i = 0; i < n; ++i) j(i, col) = (up[i] - um[i]) / (2.0 * h);
  }
  return j;
}

}  // namespace uq
