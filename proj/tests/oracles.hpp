#pragma once

// Reference computations for the tests. Everything here is written
// independently of the library numerics (long double, textbook loops) so that
// agreement means something.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dcscr/numkernel.hpp"

namespace oracle {

using LMat = std::vector<std::vector<long double>>;
using LVec = std::vector<long double>;

inline dcscr::Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                                   double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  dcscr::Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = n(rng);
  return m;
}

inline dcscr::Vector random_vector(std::mt19937_64& rng, std::size_t len, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  dcscr::Vector v(len);
  for (std::size_t i = 0; i < len; ++i) v[i] = n(rng);
  return v;
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

// Gaussian elimination with partial pivoting in extended precision.
inline LVec gauss_solve(LMat a, LVec b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::fabs(a[i][k]) > std::fabs(a[p][k])) p = i;
    if (a[p][k] == 0.0L) throw std::runtime_error("singular system");
    std::swap(a[p], a[k]);
    std::swap(b[p], b[k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const long double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  LVec x(n);
  for (std::size_t k = n; k-- > 0;) {
    long double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= a[k][j] * x[j];
    x[k] = s / a[k][k];
  }
  return x;
}

inline long double ldot_cols(const dcscr::Matrix& a, std::size_t i, const dcscr::Matrix& b,
                             std::size_t j) {
  long double s = 0.0L;
  for (std::size_t r = 0; r < a.rows(); ++r)
    s += static_cast<long double>(a(r, i)) * static_cast<long double>(b(r, j));
  return s;
}

inline long double distance(const dcscr::Matrix& x, const dcscr::Matrix& y, const LVec& a,
                            const LVec& b) {
  long double total = 0.0L;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    long double v = 0.0L;
    for (std::size_t i = 0; i < x.cols(); ++i) v += x(r, i) * a[i];
    for (std::size_t j = 0; j < y.cols(); ++j) v -= y(r, j) * b[j];
    total += v * v;
  }
  return total;
}

inline LVec widen(const dcscr::Vector& v) { return LVec(v.raw().begin(), v.raw().end()); }

struct Qp {
  std::vector<double> alpha;
  std::vector<double> beta;
  double distance = 0.0;
  double objective = 0.0;
};

// Stationarity of mu*|Xa - Yb|^2 + l1|a|^2 + l2|b|^2 with multipliers for
// sum(a) = sum(b) = 1, unknowns ordered [a; b; nu_a; nu_b].
inline Qp qp(const dcscr::Matrix& x, const dcscr::Matrix& y, double mu, double l1, double l2) {
  const std::size_t m = x.cols(), n = y.cols(), size = m + n + 2;
  LMat k(size, LVec(size, 0.0L));
  LVec rhs(size, 0.0L);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) k[i][j] = 2.0L * mu * ldot_cols(x, i, x, j);
    for (std::size_t j = 0; j < n; ++j) k[i][m + j] = -2.0L * mu * ldot_cols(x, i, y, j);
    k[i][i] += 2.0L * l1;
    k[i][m + n] = 1.0L;
    k[m + n][i] = 1.0L;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) k[m + i][j] = -2.0L * mu * ldot_cols(y, i, x, j);
    for (std::size_t j = 0; j < n; ++j) k[m + i][m + j] = 2.0L * mu * ldot_cols(y, i, y, j);
    k[m + i][m + i] += 2.0L * l2;
    k[m + i][m + n + 1] = 1.0L;
    k[m + n + 1][m + i] = 1.0L;
  }
  rhs[m + n] = 1.0L;
  rhs[m + n + 1] = 1.0L;
  const LVec z = gauss_solve(k, rhs);
  LVec a(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(m));
  LVec b(z.begin() + static_cast<std::ptrdiff_t>(m), z.begin() + static_cast<std::ptrdiff_t>(m + n));
  Qp out;
  out.alpha.assign(a.begin(), a.end());
  out.beta.assign(b.begin(), b.end());
  const long double d = distance(x, y, a, b);
  long double reg = 0.0L;
  for (long double v : a) reg += l1 * v * v;
  for (long double v : b) reg += l2 * v * v;
  out.distance = static_cast<double>(d);
  out.objective = static_cast<double>(mu * d + reg);
  return out;
}

inline double max_abs_diff(const std::vector<double>& a, const dcscr::Vector& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

// Relative error of an analytic gradient against a numeric one, both flattened.
inline double gradient_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  long double diff = 0.0L, norm = 0.0L;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * static_cast<long double>(analytic[i] - numeric[i]);
    norm = std::max(norm, static_cast<long double>(std::max(std::abs(analytic[i]), std::abs(numeric[i]))));
  }
  const double d = static_cast<double>(std::sqrt(diff));
  // Both gradients numerically zero: nothing to compare.
  if (norm < 1e-12L) return d;
  return d / static_cast<double>(norm);
}

// Contrastive loss with frozen coefficients, evaluated from scratch.
inline long double contrastive(const dcscr::Matrix& w, const dcscr::Matrix& px,
                               const dcscr::Matrix& py, bool same, const dcscr::Vector& alpha,
                               const dcscr::Vector& beta, double mu1, double mu2, double l1,
                               double l2, double margin) {
  long double d = 0.0L;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    long double v = 0.0L;
    for (std::size_t c = 0; c < w.cols(); ++c) {
      long double u = 0.0L;
      for (std::size_t i = 0; i < px.cols(); ++i) u += px(c, i) * static_cast<long double>(alpha[i]);
      for (std::size_t j = 0; j < py.cols(); ++j) u -= py(c, j) * static_cast<long double>(beta[j]);
      v += w(r, c) * u;
    }
    d += v * v;
  }
  long double reg = 0.0L;
  for (std::size_t i = 0; i < alpha.size(); ++i) reg += l1 * alpha[i] * static_cast<long double>(alpha[i]);
  for (std::size_t j = 0; j < beta.size(); ++j) reg += l2 * beta[j] * static_cast<long double>(beta[j]);
  if (same) return mu1 * d + reg;
  return mu2 * std::max(0.0L, static_cast<long double>(margin) - d) + reg;
}

// -log softmax(head z + bias)[label] by log-sum-exp.
inline long double xent(const dcscr::Matrix& head, const dcscr::Vector& bias, const dcscr::Vector& z,
                        std::size_t label) {
  LVec logits(head.rows());
  for (std::size_t k = 0; k < head.rows(); ++k) {
    long double s = bias[k];
    for (std::size_t j = 0; j < head.cols(); ++j) s += head(k, j) * static_cast<long double>(z[j]);
    logits[k] = s;
  }
  const long double top = *std::max_element(logits.begin(), logits.end());
  long double total = 0.0L;
  for (long double l : logits) total += std::exp(l - top);
  return top + std::log(total) - logits[label];
}

// Probability that a random same pair scores below a random different pair,
// ties counted half.
inline double mann_whitney_auc(const std::vector<double>& scores, const std::vector<bool>& same) {
  long double wins = 0.0L, pairs = 0.0L;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!same[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (same[j]) continue;
      pairs += 1.0L;
      if (scores[i] < scores[j]) wins += 1.0L;
      else if (scores[i] == scores[j]) wins += 0.5L;
    }
  }
  return static_cast<double>(wins / pairs);
}

}  // namespace oracle
