#include "dcscr/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dcscr {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::DimensionMismatch, what);
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

bool Vector::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::from_columns(std::span<const Vector> columns) {
  if (columns.empty()) return {};
  Matrix m(columns.front().size(), columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) m.set_column(c, columns[c]);
  return m;
}

Vector Matrix::column(std::size_t c) const {
  Vector v(rows_);
  for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
  return v;
}

void Matrix::set_column(std::size_t c, const Vector& v) {
  require(v.size() == rows_, "column length " + std::to_string(v.size()) +
                                 " does not match " + std::to_string(rows_) + " rows");
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double dot(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "dot of vectors with different lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(const Vector& v) { return dot(v, v); }

double sum(const Vector& v) {
  double s = 0.0;
  for (double x : v.values()) s += x;
  return s;
}

double max_abs_diff(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "max_abs_diff of vectors with different lengths");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

Vector add(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "add of vectors with different lengths");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector subtract(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "subtract of vectors with different lengths");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector scale(const Vector& v, double s) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * s;
  return out;
}

void axpy(double s, const Vector& x, Vector& y) {
  require(x.size() == y.size(), "axpy of vectors with different lengths");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

Vector multiply(const Matrix& a, const Vector& x) {
  require(a.cols() == x.size(), "matrix " + shape(a) + " times vector of length " +
                                    std::to_string(x.size()));
  Vector out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) s += a(r, c) * x[c];
    out[r] = s;
  }
  return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matrix " + shape(a) + " times " + shape(b));
  Matrix out(a.rows(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < b.cols(); ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(r, k) * b(k, c);
      out(r, c) = s;
    }
  return out;
}

Matrix multiply_transposed_left(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "transpose(" + shape(a) + ") times " + shape(b));
  Matrix out(a.cols(), b.cols());
  for (std::size_t r = 0; r < a.cols(); ++r)
    for (std::size_t c = 0; c < b.cols(); ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, r) * b(k, c);
      out(r, c) = s;
    }
  return out;
}

Vector multiply_transposed(const Matrix& a, const Vector& x) {
  require(a.rows() == x.size(), "transpose(" + shape(a) + ") times vector of length " +
                                    std::to_string(x.size()));
  Vector out(a.cols());
  for (std::size_t c = 0; c < a.cols(); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) s += a(r, c) * x[r];
    out[c] = s;
  }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add of " + shape(a) + " and " + shape(b));
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.values().size(); ++i) out.values()[i] = a.values()[i] + b.values()[i];
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.values().size(); ++i) out.values()[i] = a.values()[i] * s;
  return out;
}

void add_outer(Matrix& a, double s, const Vector& x, const Vector& y) {
  require(a.rows() == x.size() && a.cols() == y.size(), "outer product does not fit " + shape(a));
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) a(r, c) += s * x[r] * y[c];
}

CholeskyFactor cholesky_factor(const Matrix& a) {
  require(a.rows() == a.cols() && a.rows() > 0, "cholesky of non-square matrix " + shape(a));
  if (!a.all_finite()) throw Error(ErrorCode::NonFinite, "cholesky input has non-finite entries");
  const std::size_t n = a.rows();

  double scale_abs = 0.0;
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    max_diag = std::max(max_diag, a(i, i));
    for (std::size_t j = 0; j < n; ++j) scale_abs = std::max(scale_abs, std::abs(a(i, j)));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(a(i, j) - a(j, i)) > kSymmetryTolerance * scale_abs)
        throw Error(ErrorCode::NotSymmetric, "entries (" + std::to_string(i) + "," +
                                                 std::to_string(j) + ") differ from transpose");
  if (max_diag <= 0.0) throw Error(ErrorCode::NotPositiveDefinite, "non-positive diagonal");

  const double floor = kPivotFloorRelative * max_diag;
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > floor))
      throw Error(ErrorCode::NotPositiveDefinite, "pivot " + std::to_string(j) + " = " +
                                                      std::to_string(d) + " below floor");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return CholeskyFactor(std::move(l));
}

Vector cholesky_solve(const CholeskyFactor& f, const Vector& b) {
  const Matrix& l = f.lower();
  const std::size_t n = f.size();
  require(b.size() == n, "cholesky factor of size " + std::to_string(n) +
                             " applied to vector of length " + std::to_string(b.size()));
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  Vector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

Matrix cholesky_solve(const CholeskyFactor& f, const Matrix& b) {
  require(b.rows() == f.size(), "cholesky factor of size " + std::to_string(f.size()) +
                                    " applied to " + shape(b));
  Matrix out(b.rows(), b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) out.set_column(c, cholesky_solve(f, b.column(c)));
  return out;
}

Vector solve_pivoted(Matrix a, Vector b) {
  const std::size_t n = a.rows();
  require(a.cols() == n && b.size() == n, "pivoted solve of " + shape(a) + " with rhs of length " +
                                              std::to_string(b.size()));
  double scale_abs = 0.0;
  for (double v : a.values()) scale_abs = std::max(scale_abs, std::abs(v));
  const double tiny = 1e-14 * (scale_abs > 0.0 ? scale_abs : 1.0);

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (std::abs(a(piv, col)) <= tiny)
      throw Error(ErrorCode::SingularKKT, "vanishing pivot in column " + std::to_string(col));
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  Vector x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= a(r, c) * x[c];
    x[r] = s / a(r, r);
  }
  return x;
}

double cscr_objective(const Matrix& x, const Matrix& y, const Vector& alpha, const Vector& beta,
                      double mu, double l1, double l2) {
  const Vector r = subtract(multiply(x, alpha), multiply(y, beta));
  return mu * squared_norm(r) + l1 * squared_norm(alpha) + l2 * squared_norm(beta);
}

KktSolution kkt_qp_solve(const Matrix& x, const Matrix& y, double mu, double l1, double l2) {
  const std::size_t m = x.cols();
  const std::size_t n = y.cols();
  if (m == 0 || n == 0) throw Error(ErrorCode::EmptySet, "kkt_qp_solve needs nonempty sets");
  require(x.rows() == y.rows(), "sets have different feature dimensions");
  if (!x.all_finite() || !y.all_finite())
    throw Error(ErrorCode::NonFinite, "kkt_qp_solve input has non-finite entries");
  if (!(mu > 0.0 && l1 > 0.0 && l2 > 0.0))
    throw Error(ErrorCode::InvalidConfig, "mu, l1, l2 must be positive");

  // Stationarity rows: 2*(mu*A^T A + diag(l)) z + C^T nu = 0 with A = [X, -Y].
  const Matrix xx = multiply_transposed_left(x, x);
  const Matrix xy = multiply_transposed_left(x, y);
  const Matrix yy = multiply_transposed_left(y, y);
  const std::size_t dim = m + n + 2;
  Matrix k(dim, dim);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) k(i, j) = 2.0 * mu * xx(i, j);
    for (std::size_t j = 0; j < n; ++j) {
      k(i, m + j) = -2.0 * mu * xy(i, j);
      k(m + j, i) = -2.0 * mu * xy(i, j);
    }
    k(i, i) += 2.0 * l1;
    k(i, m + n) = 1.0;
    k(m + n, i) = 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k(m + i, m + j) = 2.0 * mu * yy(i, j);
    k(m + i, m + i) += 2.0 * l2;
    k(m + i, m + n + 1) = 1.0;
    k(m + n + 1, m + i) = 1.0;
  }
  Vector rhs(dim);
  rhs[m + n] = 1.0;
  rhs[m + n + 1] = 1.0;

  const Vector z = solve_pivoted(std::move(k), std::move(rhs));
  KktSolution sol;
  sol.alpha = Vector(std::vector<double>(z.values().begin(), z.values().begin() + m));
  sol.beta = Vector(std::vector<double>(z.values().begin() + m, z.values().begin() + m + n));
  sol.nu_alpha = z[m + n];
  sol.nu_beta = z[m + n + 1];
  sol.distance = squared_norm(subtract(multiply(x, sol.alpha), multiply(y, sol.beta)));
  return sol;
}

}  // namespace dcscr
