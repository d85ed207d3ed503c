#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "uq/error.hpp"

namespace uq {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. The only storage format in this
/// project; everything in scope fits comfortably in dense form.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(int n);
  static Matrix diag(const Vector& d);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

  double* row_ptr(int i) { return data_.data() + static_cast<size_t>(i) * cols_; }
  const double* row_ptr(int i) const { return data_.data() + static_cast<size_t>(i) * cols_; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  Vector row(int i) const;
  Vector col(int j) const;

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  int rows_;
  int cols_;
  std::vector<double> data_;
};

struct SymmetricEigen {
  Vector values;   // sorted descending
  Matrix vectors;  // orthonormal columns, vectors.col(i) pairs with values[i]
};

// Vector helpers.
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector scale(const Vector& v, double s);

// Matrix algebra.
Matrix transpose(const Matrix& a);
Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, const Vector& x);
Vector matvec_t(const Matrix& a, const Vector& x);  // aᵀx
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix outer(const Vector& a, const Vector& b);
void add_scaled_outer(Matrix& acc, const Vector& a, const Vector& b, double s);
double frobenius_norm(const Matrix& a);
double max_abs_asymmetry(const Matrix& a);
Matrix symmetrize(const Matrix& a);  // (A + Aᵀ)/2; rejects gross asymmetry

/// Kronecker product: block (i,j) of the result is a(i,j)·b.
Matrix kron(const Matrix& a, const Matrix& b);

/// vᵀAv for square A.
double quad_form(const Vector& v, const Matrix& a);

/// Lower-triangular L with L·Lᵀ = A. Throws NotPositiveDefinite on a
/// non-positive pivot.
Matrix cholesky(const Matrix& a);

/// Solve A·x = b for SPD A via Cholesky.
Vector solve_spd(const Matrix& a, const Vector& b);
Matrix solve_spd(const Matrix& a, const Matrix& b);
Matrix spd_inverse(const Matrix& a);

/// Triangular solves against an explicit Cholesky factor.
Vector chol_solve(const Matrix& chol_lower, const Vector& b);

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
/// Converged when the off-diagonal Frobenius mass drops below
/// 1e-12·‖A‖_F; at most 100 sweeps, else NoConvergence.
SymmetricEigen sym_eig(const Matrix& a);

/// Smallest singular value via the Gram matrix: √(λ_min(AᵀA)).
double min_singular_value(const Matrix& a);

}  // namespace uq
