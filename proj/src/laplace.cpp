#include "uq/laplace.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "uq/error.hpp"
#include "uq/rng.hpp"

namespace uq {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// ρ-weighted running average; the first batch initializes, so one full
/// batch reproduces the plain average exactly.
class RunningAverage {
 public:
  explicit RunningAverage(double rho) : rho_(rho) {}

  void update(Matrix& state, const Matrix& batch_value) const {
    if (state.empty()) {
      state = batch_value;
    } else {
      state = add(scale(state, rho_), scale(batch_value, 1.0 - rho_));
    }
  }

 private:
  double rho_;
};

void check_config(const LaplaceConfig& cfg) {
  if (cfg.sigma0_sq <= 0.0) {
    throw Error(Error::Kind::BadSize, "sigma0_sq must be positive");
  }
  if (cfg.rho < 0.0 || cfg.rho >= 1.0) {
    throw Error(Error::Kind::BadSize, "rho must lie in [0, 1)");
  }
}

struct BatchRange {
  int begin;
  int end;
};

std::vector<BatchRange> make_batches(int n, int batch_size) {
  std::vector<BatchRange> out;
  const int step = batch_size <= 0 ? n : batch_size;
  for (int start = 0; start < n; start += step) {
    out.push_back({start, std::min(n, start + step)});
  }
  return out;
}

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

/// diag(p) - p pᵀ, the softmax output curvature.
Matrix output_curvature(const Vector& p) {
  const int k = static_cast<int>(p.size());
  Matrix lam(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) lam(i, j) = (i == j ? p[i] : 0.0) - p[i] * p[j];
  }
  return lam;
}

int sample_label(const Vector& probs, CounterRng& rng) {
  const double u = rng.next_uniform();
  double acc = 0.0;
  for (size_t c = 0; c < probs.size(); ++c) {
    acc += probs[c];
    if (u < acc) return static_cast<int>(c);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

const char* GaussianPosterior::variant_name() const {
  if (std::holds_alternative<LastLayerFull>(value)) return "last_layer_full";
  if (std::holds_alternative<LastLayerKron>(value)) return "last_layer_kron";
  if (std::holds_alternative<DiagonalAllLayers>(value)) return "diag_all";
  if (std::holds_alternative<KronAllLayers>(value)) return "kron_all";
  return "full_all";
}

GaussianPosterior fit_llla_binary(const Mlp& net, const LabeledDataset& data,
                                  const LaplaceConfig& cfg) {
  check_config(cfg);
  if (net.output_dim() != 1) {
    throw Error(Error::Kind::DimensionMismatch, "binary LLLA needs a single-logit head");
  }
  const int n = data.size();
  const int d = net.feature_dim();
  const RunningAverage avg(cfg.rho);

  Matrix lambda;
  for (const BatchRange& batch : make_batches(n, cfg.batch_size)) {
    Matrix batch_h(d, d);
    for (int i = batch.begin; i < batch.end; ++i) {
      const Vector x = data.inputs.row(i);
      const Vector phi = net.last_layer_input(x);
      const double s = sigmoid(net.forward(x)[0]);
      add_scaled_outer(batch_h, phi, phi, s * (1.0 - s));
    }
    avg.update(lambda, scale(batch_h, 1.0 / (batch.end - batch.begin)));
  }

  Matrix precision = add(scale(lambda, static_cast<double>(n)),
                         scale(Matrix::identity(d), 1.0 / cfg.sigma0_sq));
  GaussianPosterior post;
  LastLayerFull llf;
  llf.mean = net.layer(net.layer_count() - 1).weight.row(0);
  llf.cov = spd_inverse(precision);
  llf.curvature = std::move(lambda);
  llf.head_count = 1;
  post.value = std::move(llf);
  post.sigma0_sq = cfg.sigma0_sq;
  post.n_data = n;
  return post;
}

GaussianPosterior fit_llla_multiclass_exact(const Mlp& net, const LabeledDataset& data,
                                            const LaplaceConfig& cfg) {
  check_config(cfg);
  const int k = net.output_dim();
  if (k < 2) {
    throw Error(Error::Kind::DimensionMismatch, "multiclass LLLA needs k >= 2");
  }
  const int d = net.feature_dim();
  const int dk = d * k;
  if (dk > cfg.dim_cap) {
    throw Error(Error::Kind::DimensionTooLarge,
                "exact multiclass Hessian is " + std::to_string(dk) + "-dimensional, cap is " +
                    std::to_string(cfg.dim_cap));
  }
  const int n = data.size();
  const RunningAverage avg(cfg.rho);

  Matrix lambda;
  for (const BatchRange& batch : make_batches(n, cfg.batch_size)) {
    Matrix batch_h(dk, dk);
    for (int i = batch.begin; i < batch.end; ++i) {
      const Vector x = data.inputs.row(i);
      const Vector phi = net.last_layer_input(x);
      const Vector p = softmax_of(net.forward(x));
      // (diag(p) - p pᵀ) ⊗ φφᵀ over the row-major vec(W).
      const Matrix lam_out = output_curvature(p);
      for (int a = 0; a < k; ++a) {
        for (int c = 0; c < k; ++c) {
          const double w = lam_out(a, c);
          if (w == 0.0) continue;
          for (int b = 0; b < d; ++b) {
            double* row = batch_h.row_ptr(a * d + b);
            const double wphi = w * phi[b];
            for (int e = 0; e < d; ++e) row[c * d + e] += wphi * phi[e];
          }
        }
      }
    }
    avg.update(lambda, scale(batch_h, 1.0 / (batch.end - batch.begin)));
  }

  Matrix precision = add(scale(lambda, static_cast<double>(n)),
                         scale(Matrix::identity(dk), 1.0 / cfg.sigma0_sq));
  GaussianPosterior post;
  LastLayerFull llf;
  llf.mean.reserve(dk);
  const Matrix& w_map = net.layer(net.layer_count() - 1).weight;
  llf.mean.insert(llf.mean.end(), w_map.data().begin(), w_map.data().end());
  llf.cov = spd_inverse(precision);
  llf.curvature = std::move(lambda);
  llf.head_count = k;
  post.value = std::move(llf);
  post.sigma0_sq = cfg.sigma0_sq;
  post.n_data = n;
  return post;
}

GaussianPosterior fit_llla_kron(const Mlp& net, const LabeledDataset& data,
                                const LaplaceConfig& cfg) {
  check_config(cfg);
  const int k = net.output_dim();
  if (k < 2) {
    throw Error(Error::Kind::DimensionMismatch, "Kronecker LLLA needs k >= 2");
  }
  const int d = net.feature_dim();
  const int n = data.size();
  const RunningAverage avg(cfg.rho);

  Matrix a_curv;
  Matrix b_curv;
  for (const BatchRange& batch : make_batches(n, cfg.batch_size)) {
    Matrix batch_a(k, k);
    Matrix batch_b(d, d);
    for (int i = batch.begin; i < batch.end; ++i) {
      const Vector x = data.inputs.row(i);
      const Vector phi = net.last_layer_input(x);
      const Vector p = softmax_of(net.forward(x));
      batch_a = add(batch_a, output_curvature(p));
      add_scaled_outer(batch_b, phi, phi, 1.0);
    }
    const double inv_m = 1.0 / (batch.end - batch.begin);
    avg.update(a_curv, scale(batch_a, inv_m));
    avg.update(b_curv, scale(batch_b, inv_m));
  }

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double sqrt_tau = std::sqrt(1.0 / cfg.sigma0_sq);
  GaussianPosterior post;
  LastLayerKron llk;
  llk.mean = net.layer(net.layer_count() - 1).weight;
  llk.u_factor = spd_inverse(add(scale(a_curv, sqrt_n), scale(Matrix::identity(k), sqrt_tau)));
  llk.v_factor = spd_inverse(add(scale(b_curv, sqrt_n), scale(Matrix::identity(d), sqrt_tau)));
  llk.a_curvature = std::move(a_curv);
  llk.b_curvature = std::move(b_curv);
  post.value = std::move(llk);
  post.sigma0_sq = cfg.sigma0_sq;
  post.n_data = n;
  return post;
}

GaussianPosterior fit_dla(const Mlp& net, const LabeledDataset& data, const LaplaceConfig& cfg) {
  check_config(cfg);
  const int n = data.size();
  const int p = net.param_count();
  const int samples = std::max(1, cfg.label_samples);

  Vector fisher(p, 0.0);
  for (int i = 0; i < n; ++i) {
    const Vector x = data.inputs.row(i);
    const ForwardTrace trace = net.forward_trace(x);
    const Vector& logits = trace.activations.back();
    for (int s = 0; s < samples; ++s) {
      CounterRng rng(cfg.seed, 0x646c61 /*"dla"*/, i, s);
      Vector seed(net.output_dim());
      if (net.output_dim() == 1) {
        const double prob = sigmoid(logits[0]);
        const int y = rng.next_uniform() < prob ? 1 : 0;
        seed[0] = prob - y;
      } else {
        const Vector prob = softmax_of(logits);
        const int y = sample_label(prob, rng);
        for (int c = 0; c < net.output_dim(); ++c) seed[c] = prob[c] - (c == y ? 1.0 : 0.0);
      }
      const Backprop bp = net.backprop(trace, seed);
      size_t pos = 0;
      for (int l = 0; l < net.layer_count(); ++l) {
        for (double g : bp.weight_grads[l].data()) fisher[pos++] += g * g;
        if (net.has_biases()) {
          for (double g : bp.bias_grads[l]) fisher[pos++] += g * g;
        }
      }
    }
  }
  for (double& f : fisher) f /= static_cast<double>(n) * samples;

  GaussianPosterior post;
  DiagonalAllLayers dla;
  dla.mean = net.flatten_params();
  dla.variance.resize(p);
  for (int j = 0; j < p; ++j) dla.variance[j] = 1.0 / (1.0 / cfg.sigma0_sq + fisher[j]);
  dla.fisher_diag = std::move(fisher);
  post.value = std::move(dla);
  post.sigma0_sq = cfg.sigma0_sq;
  post.n_data = n;
  return post;
}

GaussianPosterior fit_kfla(const Mlp& net, const LabeledDataset& data, const LaplaceConfig& cfg) {
  check_config(cfg);
  const int n = data.size();
  const int depth = net.layer_count();
  const RunningAverage avg(cfg.rho);
  const int samples = std::max(1, cfg.label_samples);

  std::vector<Matrix> a_curv(depth);
  std::vector<Matrix> b_curv(depth);
  for (const BatchRange& batch : make_batches(n, cfg.batch_size)) {
    std::vector<Matrix> batch_a(depth);
    std::vector<Matrix> batch_b(depth);
    for (int l = 0; l < depth; ++l) {
      const int out = net.layer(l).weight.rows();
      const int in = net.layer(l).weight.cols();
      batch_a[l] = Matrix(out, out);
      batch_b[l] = Matrix(in, in);
    }
    for (int i = batch.begin; i < batch.end; ++i) {
      const Vector x = data.inputs.row(i);
      const ForwardTrace trace = net.forward_trace(x);
      const Vector& logits = trace.activations.back();
      for (int l = 0; l < depth; ++l) {
        add_scaled_outer(batch_b[l], trace.activations[l], trace.activations[l], 1.0);
      }
      for (int s = 0; s < samples; ++s) {
        CounterRng rng(cfg.seed, 0x6b666c61 /*"kfla"*/, i, s);
        Vector seed(net.output_dim());
        if (net.output_dim() == 1) {
          const double prob = sigmoid(logits[0]);
          const int y = rng.next_uniform() < prob ? 1 : 0;
          seed[0] = prob - y;
        } else {
          const Vector prob = softmax_of(logits);
          const int y = sample_label(prob, rng);
          for (int c = 0; c < net.output_dim(); ++c) seed[c] = prob[c] - (c == y ? 1.0 : 0.0);
        }
        const Backprop bp = net.backprop(trace, seed);
        for (int l = 0; l < depth; ++l) {
          add_scaled_outer(batch_a[l], bp.preactivation_grads[l], bp.preactivation_grads[l],
                           1.0 / samples);
        }
      }
    }
    const double inv_m = 1.0 / (batch.end - batch.begin);
    for (int l = 0; l < depth; ++l) {
      avg.update(a_curv[l], scale(batch_a[l], inv_m));
      avg.update(b_curv[l], scale(batch_b[l], inv_m));
    }
  }

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double sqrt_tau = std::sqrt(1.0 / cfg.sigma0_sq);
  GaussianPosterior post;
  KronAllLayers kfla;
  for (int l = 0; l < depth; ++l) {
    KronAllLayers::LayerFactors f;
    f.mean = net.layer(l).weight;
    const int out = f.mean.rows();
    const int in = f.mean.cols();
    f.u_factor = spd_inverse(add(scale(a_curv[l], sqrt_n), scale(Matrix::identity(out), sqrt_tau)));
    f.v_factor = spd_inverse(add(scale(b_curv[l], sqrt_n), scale(Matrix::identity(in), sqrt_tau)));
    f.a_curvature = std::move(a_curv[l]);
    f.b_curvature = std::move(b_curv[l]);
    kfla.layers.push_back(std::move(f));
  }
  post.value = std::move(kfla);
  post.sigma0_sq = cfg.sigma0_sq;
  post.n_data = n;
  return post;
}

GaussianPosterior fit_full_laplace(const Mlp& net, const LabeledDataset& data,
                                   const LaplaceConfig& cfg) {
  check_config(cfg);
  const int p = net.param_count();
  if (p > cfg.param_cap) {
    throw Error(Error::Kind::DimensionTooLarge,
                "full Laplace over " + std::to_string(p) + " parameters exceeds the cap of " +
                    std::to_string(cfg.param_cap));
  }
  const int n = data.size();
  const int k = net.output_dim();

  Matrix h(p, p);
  for (int i = 0; i < n; ++i) {
    const Vector x = data.inputs.row(i);
    if (k == 1) {
      const double s = sigmoid(net.forward(x)[0]);
      const Vector d = net.grad_params(x, 0);
      add_scaled_outer(h, d, d, s * (1.0 - s));
    } else {
      const Vector prob = softmax_of(net.forward(x));
      const Matrix lam_out = output_curvature(prob);
      Matrix jac(k, p);
      for (int c = 0; c < k; ++c) {
        const Vector row = net.grad_params(x, c);
        for (int j = 0; j < p; ++j) jac(c, j) = row[j];
      }
      const Matrix lj = matmul(lam_out, jac);
      for (int a = 0; a < k; ++a) {
        // H += jacᵀ(a,:)·lj(a,:) accumulated row by row
        const double* jrow = jac.row_ptr(a);
        const double* ljrow = lj.row_ptr(a);
        for (int r = 0; r < p; ++r) {
          if (jrow[r] == 0.0) continue;
          double* hrow = h.row_ptr(r);
          const double jv = jrow[r];
          for (int cidx = 0; cidx < p; ++cidx) hrow[cidx] += jv * ljrow[cidx];
        }
      }
    }
  }
  h = scale(h, 1.0 / n);

  Matrix precision =
      add(scale(h, static_cast<double>(n)), scale(Matrix::identity(p), 1.0 / cfg.sigma0_sq));
  GaussianPosterior post;
  FullAllLayers full;
  full.mean = net.flatten_params();
  full.cov = spd_inverse(precision);
  full.curvature = std::move(h);
  post.value = std::move(full);
  post.sigma0_sq = cfg.sigma0_sq;
  post.n_data = n;
  return post;
}

BiasGaussian fit_bias_gaussian(const Mlp& net, const LabeledDataset& data,
                               const LaplaceConfig& cfg) {
  check_config(cfg);
  if (!net.has_biases()) {
    throw Error(Error::Kind::DimensionMismatch, "network has no biases to fit");
  }
  const int n = data.size();
  const int k = net.output_dim();
  const int depth = net.layer_count();

  std::vector<Matrix> h(depth);
  for (int l = 0; l < depth; ++l) {
    const int out = net.layer(l).weight.rows();
    h[l] = Matrix(out, out);
  }
  for (int i = 0; i < n; ++i) {
    const Vector x = data.inputs.row(i);
    const ForwardTrace trace = net.forward_trace(x);
    const Vector& logits = trace.activations.back();
    if (k == 1) {
      const double s = sigmoid(logits[0]);
      const Backprop bp = net.backprop(trace, Vector{1.0});
      for (int l = 0; l < depth; ++l) {
        add_scaled_outer(h[l], bp.bias_grads[l], bp.bias_grads[l], s * (1.0 - s));
      }
    } else {
      const Vector prob = softmax_of(logits);
      const Matrix lam_out = output_curvature(prob);
      std::vector<Backprop> sweeps;
      sweeps.reserve(k);
      for (int c = 0; c < k; ++c) {
        Vector seed(k, 0.0);
        seed[c] = 1.0;
        sweeps.push_back(net.backprop(trace, seed));
      }
      for (int l = 0; l < depth; ++l) {
        for (int a = 0; a < k; ++a) {
          for (int c = 0; c < k; ++c) {
            const double w = lam_out(a, c);
            if (w == 0.0) continue;
            add_scaled_outer(h[l], sweeps[a].bias_grads[l], sweeps[c].bias_grads[l], w);
          }
        }
      }
    }
  }

  BiasGaussian bias;
  for (int l = 0; l < depth; ++l) {
    h[l] = scale(h[l], 1.0 / n);
    Matrix precision = add(scale(h[l], static_cast<double>(n)),
                           scale(Matrix::identity(h[l].rows()), 1.0 / cfg.sigma0_sq));
    bias.mean.push_back(*net.layer(l).bias);
    bias.cov.push_back(spd_inverse(precision));
    bias.curvature.push_back(std::move(h[l]));
  }
  return bias;
}

GaussianPosterior rebuild_with_sigma0(const GaussianPosterior& post, double sigma0_sq) {
  if (sigma0_sq <= 0.0) {
    throw Error(Error::Kind::BadSize, "sigma0_sq must be positive");
  }
  GaussianPosterior out = post;
  out.sigma0_sq = sigma0_sq;
  const double tau0 = 1.0 / sigma0_sq;
  const double n = static_cast<double>(post.n_data);

  if (auto* llf = std::get_if<LastLayerFull>(&out.value)) {
    const int dim = llf->curvature.rows();
    llf->cov = spd_inverse(add(scale(llf->curvature, n), scale(Matrix::identity(dim), tau0)));
  } else if (auto* llk = std::get_if<LastLayerKron>(&out.value)) {
    const double sqrt_n = std::sqrt(n);
    const double sqrt_tau = std::sqrt(tau0);
    llk->u_factor = spd_inverse(add(scale(llk->a_curvature, sqrt_n),
                                    scale(Matrix::identity(llk->a_curvature.rows()), sqrt_tau)));
    llk->v_factor = spd_inverse(add(scale(llk->b_curvature, sqrt_n),
                                    scale(Matrix::identity(llk->b_curvature.rows()), sqrt_tau)));
  } else if (auto* dla = std::get_if<DiagonalAllLayers>(&out.value)) {
    for (size_t j = 0; j < dla->variance.size(); ++j) {
      dla->variance[j] = 1.0 / (tau0 + dla->fisher_diag[j]);
    }
  } else if (auto* kfla = std::get_if<KronAllLayers>(&out.value)) {
    const double sqrt_n = std::sqrt(n);
    const double sqrt_tau = std::sqrt(tau0);
    for (auto& layer : kfla->layers) {
      layer.u_factor = spd_inverse(add(scale(layer.a_curvature, sqrt_n),
                                       scale(Matrix::identity(layer.a_curvature.rows()), sqrt_tau)));
      layer.v_factor = spd_inverse(add(scale(layer.b_curvature, sqrt_n),
                                       scale(Matrix::identity(layer.b_curvature.rows()), sqrt_tau)));
    }
  } else if (auto* full = std::get_if<FullAllLayers>(&out.value)) {
    const int p = full->curvature.rows();
    full->cov = spd_inverse(add(scale(full->curvature, n), scale(Matrix::identity(p), tau0)));
  }
  if (out.bias) {
    for (size_t l = 0; l < out.bias->cov.size(); ++l) {
      const Matrix& curv = out.bias->curvature[l];
      out.bias->cov[l] =
          spd_inverse(add(scale(curv, n), scale(Matrix::identity(curv.rows()), tau0)));
    }
  }
  return out;
}

void validate_spd(const GaussianPosterior& post) {
  if (const auto* llf = std::get_if<LastLayerFull>(&post.value)) {
    cholesky(llf->cov);
  } else if (const auto* llk = std::get_if<LastLayerKron>(&post.value)) {
    cholesky(llk->u_factor);
    cholesky(llk->v_factor);
  } else if (const auto* dla = std::get_if<DiagonalAllLayers>(&post.value)) {
    for (double v : dla->variance) {
      if (v <= 0.0) {
        throw Error(Error::Kind::NotPositiveDefinite, "diagonal posterior has a nonpositive variance");
      }
    }
  } else if (const auto* kfla = std::get_if<KronAllLayers>(&post.value)) {
    for (const auto& layer : kfla->layers) {
      cholesky(layer.u_factor);
      cholesky(layer.v_factor);
    }
  } else if (const auto* full = std::get_if<FullAllLayers>(&post.value)) {
    cholesky(full->cov);
  }
  if (post.bias) {
    for (const Matrix& cov : post.bias->cov) cholesky(cov);
  }
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& rows) {
  const int nr = static_cast<int>(rows.size());
  const int nc = nr > 0 ? static_cast<int>(rows[0].size()) : 0;
  Matrix m(nr, nc);
  for (int i = 0; i < nr; ++i) {
    if (static_cast<int>(rows[i].size()) != nc) {
      throw Error(Error::Kind::ParseError, "posterior file: ragged matrix");
    }
    for (int j = 0; j < nc; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

}  // namespace

std::string posterior_to_json(const GaussianPosterior& post) {
  nlohmann::json doc;
  doc["variant"] = post.variant_name();
  doc["sigma0_sq"] = post.sigma0_sq;
  doc["n_data"] = post.n_data;

  if (const auto* llf = std::get_if<LastLayerFull>(&post.value)) {
    doc["mean"] = llf->mean;
    doc["cov"] = matrix_to_json(llf->cov);
    doc["curvature"] = matrix_to_json(llf->curvature);
    doc["head_count"] = llf->head_count;
  } else if (const auto* llk = std::get_if<LastLayerKron>(&post.value)) {
    doc["mean"] = matrix_to_json(llk->mean);
    doc["u"] = matrix_to_json(llk->u_factor);
    doc["v"] = matrix_to_json(llk->v_factor);
    doc["a"] = matrix_to_json(llk->a_curvature);
    doc["b"] = matrix_to_json(llk->b_curvature);
  } else if (const auto* dla = std::get_if<DiagonalAllLayers>(&post.value)) {
    doc["mean"] = dla->mean;
    doc["variance"] = dla->variance;
    doc["fisher_diag"] = dla->fisher_diag;
  } else if (const auto* kfla = std::get_if<KronAllLayers>(&post.value)) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : kfla->layers) {
      nlohmann::json jl;
      jl["mean"] = matrix_to_json(layer.mean);
      jl["u"] = matrix_to_json(layer.u_factor);
      jl["v"] = matrix_to_json(layer.v_factor);
      jl["a"] = matrix_to_json(layer.a_curvature);
      jl["b"] = matrix_to_json(layer.b_curvature);
      layers.push_back(std::move(jl));
    }
    doc["layers"] = std::move(layers);
  } else if (const auto* full = std::get_if<FullAllLayers>(&post.value)) {
    doc["mean"] = full->mean;
    doc["cov"] = matrix_to_json(full->cov);
    doc["curvature"] = matrix_to_json(full->curvature);
  }

  if (post.bias) {
    nlohmann::json jb;
    jb["mean"] = nlohmann::json::array();
    jb["cov"] = nlohmann::json::array();
    jb["curvature"] = nlohmann::json::array();
    for (size_t l = 0; l < post.bias->mean.size(); ++l) {
      jb["mean"].push_back(post.bias->mean[l]);
      jb["cov"].push_back(matrix_to_json(post.bias->cov[l]));
      jb["curvature"].push_back(matrix_to_json(post.bias->curvature[l]));
    }
    doc["bias"] = std::move(jb);
  }
  return doc.dump(2) + "\n";
}

GaussianPosterior posterior_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Error::Kind::ParseError, e.what());
  }
  if (!doc.contains("variant") || !doc.contains("sigma0_sq")) {
    throw Error(Error::Kind::ParseError, "posterior file: missing variant or sigma0_sq");
  }
  GaussianPosterior post;
  post.sigma0_sq = doc["sigma0_sq"].get<double>();
  post.n_data = doc.value("n_data", 0);
  const std::string variant = doc["variant"].get<std::string>();

  if (variant == "last_layer_full") {
    LastLayerFull llf;
    llf.mean = doc["mean"].get<Vector>();
    llf.cov = matrix_from_json(doc["cov"]);
    llf.curvature = matrix_from_json(doc["curvature"]);
    llf.head_count = doc.value("head_count", 1);
    post.value = std::move(llf);
  } else if (variant == "last_layer_kron") {
    LastLayerKron llk;
    llk.mean = matrix_from_json(doc["mean"]);
    llk.u_factor = matrix_from_json(doc["u"]);
    llk.v_factor = matrix_from_json(doc["v"]);
    llk.a_curvature = matrix_from_json(doc["a"]);
    llk.b_curvature = matrix_from_json(doc["b"]);
    post.value = std::move(llk);
  } else if (variant == "diag_all") {
    DiagonalAllLayers dla;
    dla.mean = doc["mean"].get<Vector>();
    dla.variance = doc["variance"].get<Vector>();
    dla.fisher_diag = doc["fisher_diag"].get<Vector>();
    post.value = std::move(dla);
  } else if (variant == "kron_all") {
    KronAllLayers kfla;
    for (const auto& jl : doc["layers"]) {
      KronAllLayers::LayerFactors f;
      f.mean = matrix_from_json(jl["mean"]);
      f.u_factor = matrix_from_json(jl["u"]);
      f.v_factor = matrix_from_json(jl["v"]);
      f.a_curvature = matrix_from_json(jl["a"]);
      f.b_curvature = matrix_from_json(jl["b"]);
      kfla.layers.push_back(std::move(f));
    }
    post.value = std::move(kfla);
  } else if (variant == "full_all") {
    FullAllLayers full;
    full.mean = doc["mean"].get<Vector>();
    full.cov = matrix_from_json(doc["cov"]);
    full.curvature = matrix_from_json(doc["curvature"]);
    post.value = std::move(full);
  } else {
    throw Error(Error::Kind::ParseError, "posterior file: unknown variant '" + variant + "'");
  }

  if (doc.contains("bias")) {
    BiasGaussian bias;
    const auto& jb = doc["bias"];
    for (const auto& v : jb["mean"]) bias.mean.push_back(v.get<Vector>());
    for (const auto& m : jb["cov"]) bias.cov.push_back(matrix_from_json(m));
    for (const auto& m : jb["curvature"]) bias.curvature.push_back(matrix_from_json(m));
    post.bias = std::move(bias);
  }
  return post;
}

}  // namespace uq
