#include "uq/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace uq {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = static_cast<int>(rows.size());
  cols_ = rows_ > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  data_.reserve(static_cast<size_t>(rows_) * cols_);
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != cols_) {
      throw Error(Error::Kind::DimensionMismatch, "ragged initializer list");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diag(const Vector& d) {
  Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
  for (size_t i = 0; i < d.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = d[i];
  return m;
}

Vector Matrix::row(int i) const {
  return Vector(row_ptr(i), row_ptr(i) + cols_);
}

Vector Matrix::col(int j) const {
  Vector out(rows_);
  for (int i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw Error(Error::Kind::DimensionMismatch, "dot: size mismatch");
  }
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

Vector add(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw Error(Error::Kind::DimensionMismatch, "add: size mismatch");
  Vector out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector sub(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw Error(Error::Kind::DimensionMismatch, "sub: size mismatch");
  Vector out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector scale(const Vector& v, double s) {
  Vector out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] * s;
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(Error::Kind::DimensionMismatch, "matmul: inner dimensions differ");
  }
  Matrix out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int l = 0; l < a.cols(); ++l) {
      const double av = a(i, l);
      if (av == 0.0) continue;
      const double* brow = b.row_ptr(l);
      double* orow = out.row_ptr(i);
      for (int j = 0; j < b.cols(); ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (a.cols() != static_cast<int>(x.size())) {
    throw Error(Error::Kind::DimensionMismatch, "matvec: dimension mismatch");
  }
  Vector out(a.rows(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    const double* row = a.row_ptr(i);
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j) s += row[j] * x[j];
    out[i] = s;
  }
  return out;
}

Vector matvec_t(const Matrix& a, const Vector& x) {
  if (a.rows() != static_cast<int>(x.size())) {
    throw Error(Error::Kind::DimensionMismatch, "matvec_t: dimension mismatch");
  }
  Vector out(a.cols(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    const double* row = a.row_ptr(i);
    const double xi = x[i];
    for (int j = 0; j < a.cols(); ++j) out[j] += row[j] * xi;
  }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(Error::Kind::DimensionMismatch, "matrix add: shape mismatch");
  }
  Matrix out = a;
  for (size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(Error::Kind::DimensionMismatch, "matrix sub: shape mismatch");
  }
  Matrix out = a;
  for (size_t i = 0; i < out.data().size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

Matrix outer(const Vector& a, const Vector& b) {
  Matrix out(static_cast<int>(a.size()), static_cast<int>(b.size()));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) out(static_cast<int>(i), static_cast<int>(j)) = a[i] * b[j];
  return out;
}

void add_scaled_outer(Matrix& acc, const Vector& a, const Vector& b, double s) {
  if (acc.rows() != static_cast<int>(a.size()) || acc.cols() != static_cast<int>(b.size())) {
    throw Error(Error::Kind::DimensionMismatch, "add_scaled_outer: shape mismatch");
  }
  for (int i = 0; i < acc.rows(); ++i) {
    double* row = acc.row_ptr(i);
    const double sa = s * a[i];
    for (int j = 0; j < acc.cols(); ++j) row[j] += sa * b[j];
  }
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs_asymmetry(const Matrix& a) {
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i + 1; j < a.cols(); ++j) m = std::max(m, std::fabs(a(i, j) - a(j, i)));
  return m;
}

Matrix symmetrize(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw Error(Error::Kind::DimensionMismatch, "symmetrize: matrix not square");
  }
  const double scale_ref = 1.0 + frobenius_norm(a);
  if (max_abs_asymmetry(a) > 1e-8 * scale_ref) {
    throw Error(Error::Kind::DimensionMismatch, "symmetrize: matrix asymmetric beyond tolerance");
  }
  Matrix out(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out(i, j) = 0.5 * (a(i, j) + a(j, i));
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) {
      const double av = a(i, j);
      if (av == 0.0) continue;
      for (int r = 0; r < b.rows(); ++r) {
        double* orow = out.row_ptr(i * b.rows() + r);
        const double* brow = b.row_ptr(r);
        for (int s = 0; s < b.cols(); ++s) orow[j * b.cols() + s] += av * brow[s];
      }
    }
  }
  return out;
}

double quad_form(const Vector& v, const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() != static_cast<int>(v.size())) {
    throw Error(Error::Kind::DimensionMismatch, "quad_form: dimension mismatch");
  }
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    const double* row = a.row_ptr(i);
    double rs = 0.0;
    for (int j = 0; j < a.cols(); ++j) rs += row[j] * v[j];
    s += v[i] * rs;
  }
  return s;
}

Matrix cholesky(const Matrix& a) {
  const Matrix s = symmetrize(a);
  const int n = s.rows();
  Matrix l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = s(i, j);
      for (int k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
      if (i == j) {
        if (sum <= 0.0) {
          throw Error(Error::Kind::NotPositiveDefinite,
                      "cholesky: pivot " + std::to_string(i) + " is not positive");
        }
        l(i, j) = std::sqrt(sum);
      } else {
        l(i, j) = sum / l(j, j);
      }
    }
  }
  return l;
}

Vector chol_solve(const Matrix& chol_lower, const Vector& b) {
  const int n = chol_lower.rows();
  if (static_cast<int>(b.size()) != n) {
    throw Error(Error::Kind::DimensionMismatch, "chol_solve: dimension mismatch");
  }
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= chol_lower(i, k) * y[k];
    y[i] = s / chol_lower(i, i);
  }
  Vector x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < n; ++k) s -= chol_lower(k, i) * x[k];
    x[i] = s / chol_lower(i, i);
  }
  return x;
}

Vector solve_spd(const Matrix& a, const Vector& b) {
  return chol_solve(cholesky(a), b);
}

Matrix solve_spd(const Matrix& a, const Matrix& b) {
  const Matrix l = cholesky(a);
  Matrix out(b.rows(), b.cols());
  for (int j = 0; j < b.cols(); ++j) {
    Vector x = chol_solve(l, b.col(j));
    for (int i = 0; i < b.rows(); ++i) out(i, j) = x[i];
  }
  return out;
}

Matrix spd_inverse(const Matrix& a) {
  return solve_spd(a, Matrix::identity(a.rows()));
}

namespace {

double offdiag_frobenius(const Matrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

SymmetricEigen sym_eig(const Matrix& input) {
  Matrix a = symmetrize(input);
  const int n = a.rows();
  Matrix q = Matrix::identity(n);
  const double norm_a = frobenius_norm(a);
  const double tol = 1e-12 * (norm_a > 0.0 ? norm_a : 1.0);
  const int max_sweeps = 100;

  bool converged = offdiag_frobenius(a) <= tol;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int qi = p + 1; qi < n; ++qi) {
        const double apq = a(p, qi);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(qi, qi);
        // Classic two-sided Jacobi rotation annihilating a(p,q).
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, qi);
          a(k, p) = c * akp - s * akq;
          a(k, qi) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(qi, k);
          a(p, k) = c * apk - s * aqk;
          a(qi, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double qkp = q(k, p);
          const double qkq = q(k, qi);
          q(k, p) = c * qkp - s * qkq;
          q(k, qi) = s * qkp + c * qkq;
        }
      }
    }
    converged = offdiag_frobenius(a) <= tol;
  }
  if (!converged) {
    throw Error(Error::Kind::NoConvergence, "sym_eig: Jacobi sweeps exhausted");
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });

  SymmetricEigen out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (int i = 0; i < n; ++i) out.vectors(i, j) = q(i, order[j]);
  }
  return out;
}

double min_singular_value(const Matrix& a) {
  Matrix gram(a.cols(), a.cols());
  for (int i = 0; i < a.cols(); ++i) {
    for (int j = i; j < a.cols(); ++j) {
      double s = 0.0;
      for (int k = 0; k < a.rows(); ++k) s += a(k, i) * a(k, j);
      gram(i, j) = s;
      gram(j, i) = s;
    }
  }
  const SymmetricEigen eig = sym_eig(gram);
  const double lambda_min = eig.values.back();
  return std::sqrt(std::max(0.0, lambda_min));
}

}  // namespace uq
