#pragma once

// Class-specific collaborative representation (CSCR) distance between two
// feature sets X (D x m) and Y (D x n):
//
//   min  mu*||X a - Y b||^2 + lambda1*||a||^2 + lambda2*||b||^2
//   s.t. sum(a) = 1, sum(b) = 1
//
// solved by ADMM on the augmented Lagrangian with scalar duals eta1, eta2.
// mu is mu1 for same-class pairs and mu2 otherwise. The set distance is the
// squared gap ||X a - Y b||^2 between the two affine-hull points.

#include <cstddef>

#include "dcscr/numkernel.hpp"

namespace dcscr {

enum class PairKind { Different = 0, Same = 1 };

struct Hyperparams {
  double mu1 = 0.01;
  double mu2 = 0.001;
  double lambda1 = 0.1;
  double lambda2 = 0.5;
  double margin = 2.0;
  double rho = 1.0;
  double tol_constraint = 1e-8;
  double tol_iterate = 1e-10;
  int max_iters = 500;

  double mu_for(PairKind kind) const { return kind == PairKind::Same ? mu1 : mu2; }
  // Throws InvalidConfig unless every field is strictly positive.
  void validate() const;
};

struct ADMMState {
  Vector alpha;
  Vector beta;
  double eta1 = 0.0;
  double eta2 = 0.0;
  int iteration = 0;
};

// Per-pair quantities reused by every ADMM iteration. The two system
// matrices 2mu X^T X + rho e e^T + 2lambda I are held as Cholesky factors.
struct ADMMCache {
  double mu = 0.0;
  Matrix system_alpha;
  Matrix system_beta;
  CholeskyFactor factor_alpha;
  CholeskyFactor factor_beta;
  Matrix cross_xy;  // X^T Y
  Matrix cross_yx;  // Y^T X
  Vector ones_alpha;
  Vector ones_beta;

  std::size_t m() const noexcept { return ones_alpha.size(); }
  std::size_t n() const noexcept { return ones_beta.size(); }
};

struct CSCRSolution {
  Vector alpha;
  Vector beta;
  double distance = 0.0;
  int iterations_used = 0;
  double residual_alpha = 0.0;  // |sum(alpha) - 1|
  double residual_beta = 0.0;   // |sum(beta) - 1|
  bool converged = false;
};

ADMMCache build_cache(const Matrix& x, const Matrix& y, PairKind kind, const Hyperparams& h);

// One Gauss-Seidel sweep: alpha from the previous beta, beta from the fresh
// alpha, then dual ascent on both sum constraints.
ADMMState admm_iteration(const ADMMState& state, const ADMMCache& cache, const Hyperparams& h);

// Starts from uniform weights and zero duals and iterates until both
// constraint residuals are within tol_constraint and the largest iterate
// change is within tol_iterate, or max_iters is reached (converged = false).
// Two singletons are returned directly as alpha = beta = [1].
CSCRSolution solve_pair(const Matrix& x, const Matrix& y, PairKind kind, const Hyperparams& h);

double set_distance(const Matrix& x, const Matrix& y, const CSCRSolution& sol);

}  // namespace dcscr
