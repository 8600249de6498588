#include "dcscr/cscr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dcscr {

void Hyperparams::validate() const {
  const bool ok = mu1 > 0.0 && mu2 > 0.0 && lambda1 > 0.0 && lambda2 > 0.0 && margin > 0.0 &&
                  rho > 0.0 && tol_constraint > 0.0 && tol_iterate > 0.0 && max_iters >= 1;
  if (!ok) throw Error(ErrorCode::InvalidConfig, "hyperparameters must be strictly positive");
  const double all[] = {mu1, mu2, lambda1, lambda2, margin, rho, tol_constraint, tol_iterate};
  for (double v : all)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidConfig, "hyperparameters must be finite");
}

namespace {

void check_pair(const Matrix& x, const Matrix& y) {
  if (x.cols() == 0 || y.cols() == 0) throw Error(ErrorCode::EmptySet, "set has no frames");
  if (x.rows() != y.rows())
    throw Error(ErrorCode::DimensionMismatch, "feature dimensions " + std::to_string(x.rows()) +
                                                  " and " + std::to_string(y.rows()) + " differ");
  if (!x.all_finite() || !y.all_finite())
    throw Error(ErrorCode::NonFinite, "set features contain non-finite entries");
}

Matrix system_matrix(const Matrix& gram, double mu, double rho, double lambda) {
  Matrix s = scale(gram, 2.0 * mu);
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t j = 0; j < s.cols(); ++j) s(i, j) += rho;
    s(i, i) += 2.0 * lambda;
  }
  return s;
}

CholeskyFactor factor_or_fail(const Matrix& s) {
  try {
    return cholesky_factor(s);
  } catch (const Error& e) {
    throw Error(ErrorCode::NumericalFailure, std::string("ADMM system factorization: ") + e.what());
  }
}

}  // namespace

ADMMCache build_cache(const Matrix& x, const Matrix& y, PairKind kind, const Hyperparams& h) {
  check_pair(x, y);
  h.validate();
  const double mu = h.mu_for(kind);
  Matrix sa = system_matrix(multiply_transposed_left(x, x), mu, h.rho, h.lambda1);
  Matrix sb = system_matrix(multiply_transposed_left(y, y), mu, h.rho, h.lambda2);
  CholeskyFactor fa = factor_or_fail(sa);
  CholeskyFactor fb = factor_or_fail(sb);
  Matrix xy = multiply_transposed_left(x, y);
  Matrix yx = xy.transposed();
  return ADMMCache{mu,
                   std::move(sa),
                   std::move(sb),
                   std::move(fa),
                   std::move(fb),
                   std::move(xy),
                   std::move(yx),
                   Vector::ones(x.cols()),
                   Vector::ones(y.cols())};
}

ADMMState admm_iteration(const ADMMState& state, const ADMMCache& cache, const Hyperparams& h) {
  if (state.alpha.size() != cache.m() || state.beta.size() != cache.n())
    throw Error(ErrorCode::DimensionMismatch, "ADMM state does not match cache dimensions");

  ADMMState next;
  Vector rhs_a = scale(multiply(cache.cross_xy, state.beta), 2.0 * cache.mu);
  for (std::size_t i = 0; i < rhs_a.size(); ++i) rhs_a[i] += h.rho - state.eta1;
  next.alpha = cholesky_solve(cache.factor_alpha, rhs_a);

  Vector rhs_b = scale(multiply(cache.cross_yx, next.alpha), 2.0 * cache.mu);
  for (std::size_t i = 0; i < rhs_b.size(); ++i) rhs_b[i] += h.rho - state.eta2;
  next.beta = cholesky_solve(cache.factor_beta, rhs_b);

  next.eta1 = state.eta1 + h.rho * (dot(cache.ones_alpha, next.alpha) - 1.0);
  next.eta2 = state.eta2 + h.rho * (dot(cache.ones_beta, next.beta) - 1.0);
  next.iteration = state.iteration + 1;
  return next;
}

CSCRSolution solve_pair(const Matrix& x, const Matrix& y, PairKind kind, const Hyperparams& h) {
  const ADMMCache cache = build_cache(x, y, kind, h);

  CSCRSolution sol;
  if (x.cols() == 1 && y.cols() == 1) {
    // The constraints leave a single feasible point.
    sol.alpha = Vector{1.0};
    sol.beta = Vector{1.0};
    sol.converged = true;
    sol.distance = set_distance(x, y, sol);
    return sol;
  }

  ADMMState state;
  state.alpha = Vector(x.cols(), 1.0 / static_cast<double>(x.cols()));
  state.beta = Vector(y.cols(), 1.0 / static_cast<double>(y.cols()));

  while (state.iteration < h.max_iters) {
    ADMMState next = admm_iteration(state, cache, h);
    if (!next.alpha.all_finite() || !next.beta.all_finite() || !std::isfinite(next.eta1) ||
        !std::isfinite(next.eta2))
      throw Error(ErrorCode::NonFinite,
                  "ADMM iterate became non-finite at iteration " + std::to_string(next.iteration));
    const double change =
        std::max(max_abs_diff(next.alpha, state.alpha), max_abs_diff(next.beta, state.beta));
    state = std::move(next);
    sol.residual_alpha = std::abs(sum(state.alpha) - 1.0);
    sol.residual_beta = std::abs(sum(state.beta) - 1.0);
    if (sol.residual_alpha <= h.tol_constraint && sol.residual_beta <= h.tol_constraint &&
        change <= h.tol_iterate) {
      sol.converged = true;
      break;
    }
  }
  sol.iterations_used = state.iteration;
  sol.alpha = std::move(state.alpha);
  sol.beta = std::move(state.beta);
  sol.distance = set_distance(x, y, sol);
  return sol;
}

double set_distance(const Matrix& x, const Matrix& y, const CSCRSolution& sol) {
  if (x.rows() != y.rows() || x.cols() != sol.alpha.size() || y.cols() != sol.beta.size())
    throw Error(ErrorCode::DimensionMismatch, "coefficients do not match the set shapes");
  return squared_norm(subtract(multiply(x, sol.alpha), multiply(y, sol.beta)));
}

}  // namespace dcscr
