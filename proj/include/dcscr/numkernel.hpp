#pragma once

// Small dense real linear algebra used by the CSCR solver.
//
// Every reduction in this file is a plain left-to-right sum over logical
// indices, so results are bit-reproducible for identical inputs. Storage is
// row-major.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "dcscr/error.hpp"

namespace dcscr {

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t len, double fill = 0.0) : data_(len, fill) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}
  Vector(std::initializer_list<double> values) : data_(values) {}

  static Vector ones(std::size_t len) { return Vector(len, 1.0); }

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& raw() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> data_;
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  // Rows given as nested lists; all rows must have equal length.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);
  // Builds a D x k matrix whose columns are the given vectors.
  static Matrix from_columns(std::span<const Vector> columns);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  Vector column(std::size_t c) const;
  void set_column(std::size_t c, const Vector& v);

  Matrix transposed() const;
  bool all_finite() const noexcept;

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// --- elementwise / BLAS-like helpers -------------------------------------

double dot(const Vector& a, const Vector& b);
double squared_norm(const Vector& v);
double sum(const Vector& v);
double max_abs_diff(const Vector& a, const Vector& b);
Vector add(const Vector& a, const Vector& b);
Vector subtract(const Vector& a, const Vector& b);
Vector scale(const Vector& v, double s);
// y += s * x
void axpy(double s, const Vector& x, Vector& y);

Vector multiply(const Matrix& a, const Vector& x);
Matrix multiply(const Matrix& a, const Matrix& b);
// a^T * b without forming the transpose.
Matrix multiply_transposed_left(const Matrix& a, const Matrix& b);
Vector multiply_transposed(const Matrix& a, const Vector& x);
Matrix add(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
// Returns a += s * x * y^T in place.
void add_outer(Matrix& a, double s, const Vector& x, const Vector& y);

// --- Cholesky -------------------------------------------------------------

class CholeskyFactor {
 public:
  std::size_t size() const noexcept { return lower_.rows(); }
  const Matrix& lower() const noexcept { return lower_; }

 private:
  friend CholeskyFactor cholesky_factor(const Matrix& a);
  explicit CholeskyFactor(Matrix lower) : lower_(std::move(lower)) {}
  Matrix lower_;
};

inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kPivotFloorRelative = 1e-14;

// Throws NotSymmetric when |a_ij - a_ji| exceeds kSymmetryTolerance times the
// largest magnitude entry, and NotPositiveDefinite when a pivot falls at or
// below kPivotFloorRelative times the largest diagonal entry.
CholeskyFactor cholesky_factor(const Matrix& a);

Matrix cholesky_solve(const CholeskyFactor& f, const Matrix& b);
Vector cholesky_solve(const CholeskyFactor& f, const Vector& b);

// Solves a general square system with partial pivoting. Throws SingularKKT
// when a pivot vanishes relative to the matrix scale.
Vector solve_pivoted(Matrix a, Vector b);

// --- exact QP oracle ------------------------------------------------------

struct KktSolution {
  Vector alpha;
  Vector beta;
  double distance = 0.0;
  // Multipliers of sum(alpha) = 1 and sum(beta) = 1. They coincide with the
  // converged ADMM duals.
  double nu_alpha = 0.0;
  double nu_beta = 0.0;
};

// Minimizes mu*||X a - Y b||^2 + l1*||a||^2 + l2*||b||^2 subject to
// sum(a) = sum(b) = 1 by solving the (m+n+2) KKT system directly.
KktSolution kkt_qp_solve(const Matrix& x, const Matrix& y, double mu, double l1, double l2);

// The QP objective above evaluated at (alpha, beta).
double cscr_objective(const Matrix& x, const Matrix& y, const Vector& alpha,
                      const Vector& beta, double mu, double l1, double l2);

}  // namespace dcscr
