// Built-in verification suites behind `dcscr check`. Each check compares the
// library against an independent route: the exact KKT solve, central finite
// differences, or a transformed copy of the input.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "dcscr/harness.hpp"
#include "dcscr/training.hpp"

namespace dcscr {

namespace {

using Rng = std::mt19937_64;

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double stddev = 1.0) {
  std::normal_distribution<double> nd(0.0, stddev);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = nd(rng);
  return m;
}

double log_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

std::size_t uniform_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

Matrix permute_columns(const Matrix& x, const std::vector<std::size_t>& perm) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) out.set_column(c, x.column(perm[c]));
  return out;
}

std::vector<CheckLine> oracle_suite() {
  Rng rng(20240601);
  double worst_coef = 0.0, worst_dist = 0.0, worst_res = 0.0;
  int converged = 0;
  const int count = 200;
  for (int t = 0; t < count; ++t) {
    const std::size_t d = uniform_size(rng, 1, 8), m = uniform_size(rng, 1, 6), n = uniform_size(rng, 1, 6);
    const Matrix x = random_matrix(d, m, rng), y = random_matrix(d, n, rng);
    Hyperparams h;
    h.mu1 = log_uniform(rng, 0.0003, 0.03);
    h.lambda1 = log_uniform(rng, 0.01, 0.3);
    h.lambda2 = log_uniform(rng, 0.01, 0.3);
    const CSCRSolution s = solve_pair(x, y, PairKind::Same, h);
    const KktSolution k = kkt_qp_solve(x, y, h.mu1, h.lambda1, h.lambda2);
    worst_coef = std::max({worst_coef, max_abs_diff(s.alpha, k.alpha), max_abs_diff(s.beta, k.beta)});
    worst_dist = std::max(worst_dist, rel_diff(s.distance, k.distance));
    if (s.converged) {
      ++converged;
      worst_res = std::max({worst_res, s.residual_alpha, s.residual_beta});
    }
  }
  return {
      {"admm_matches_kkt_coefficients", worst_coef <= 1e-5, fmt("max-norm error %.3g", worst_coef)},
      {"admm_matches_kkt_distance", worst_dist <= 1e-5, fmt("relative error %.3g", worst_dist)},
      {"converged_constraints", worst_res <= 1e-8 && converged > 0,
       fmt("%.0f converged, worst residual %.3g", converged, worst_res)},
  };
}

Vector random_coefficients(std::size_t len, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 0.3);
  Vector v(len, 1.0 / static_cast<double>(len));
  for (std::size_t i = 0; i < len; ++i) v[i] += nd(rng);
  return v;
}

std::vector<CheckLine> gradient_suite() {
  Rng rng(99173);
  const double step = 1e-5;
  double worst_contrastive = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t c = uniform_size(rng, 1, 6), e = uniform_size(rng, 1, 6);
    const std::size_t m = uniform_size(rng, 1, 5), n = uniform_size(rng, 1, 5);
    const Matrix px = random_matrix(c, m, rng), py = random_matrix(c, n, rng);
    Matrix w = random_matrix(e, c, rng);
    CSCRSolution sol;
    sol.alpha = random_coefficients(m, rng);
    sol.beta = random_coefficients(n, rng);
    Hyperparams h;
    const PairKind kind = t % 2 == 0 ? PairKind::Same : PairKind::Different;
    // Alternate negative pairs between the active and the inactive hinge.
    const double target = (t % 4 == 1) ? 0.5 * h.margin : 3.0 * h.margin;
    const double d0 = squared_norm(multiply(w, subtract(multiply(px, sol.alpha), multiply(py, sol.beta))));
    if (d0 < 1e-12) continue;
    w = scale(w, std::sqrt(target / d0));

    const Matrix grad = loss_grad_embedding(px, py, w, kind, sol, h);
    auto loss_at = [&](const Matrix& wp) {
      return contrastive_loss(multiply(wp, px), multiply(wp, py), kind, sol, h);
    };
    double err = 0.0, scale_ref = 0.0;
    for (std::size_t i = 0; i < w.values().size(); ++i) {
      Matrix plus = w, minus = w;
      plus.values()[i] += step;
      minus.values()[i] -= step;
      const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * step);
      err = std::max(err, std::abs(fd - grad.values()[i]));
      scale_ref = std::max({scale_ref, std::abs(fd), std::abs(grad.values()[i])});
    }
    worst_contrastive = std::max(worst_contrastive, scale_ref > 0.0 ? err / scale_ref : err);
  }

  double worst_softmax = 0.0;
  for (int t = 0; t < 100; ++t) {
    ModelConfig cfg;
    cfg.input_dim = 1;
    cfg.grid = GridShape{1, 1, 1};
    cfg.num_classes = uniform_size(rng, 2, 6);
    cfg.embedding_dim = uniform_size(rng, 1, 6);
    cfg.use_attention = false;
    Model model = make_model(cfg);
    model.head = random_matrix(model.head.rows(), model.head.cols(), rng);
    for (std::size_t k = 0; k < model.bias.size(); ++k) model.bias[k] = random_matrix(1, 1, rng)(0, 0);
    Vector z(cfg.embedding_dim);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = random_matrix(1, 1, rng)(0, 0);
    const std::size_t label = uniform_size(rng, 0, cfg.num_classes - 1);
    const SoftmaxXent xe = softmax_xent(z, label, model);

    double err = 0.0, scale_ref = 0.0;
    auto compare = [&](double fd, double an) {
      err = std::max(err, std::abs(fd - an));
      scale_ref = std::max({scale_ref, std::abs(fd), std::abs(an)});
    };
    for (std::size_t i = 0; i < model.head.values().size(); ++i) {
      Model p = model, q = model;
      p.head.values()[i] += step;
      q.head.values()[i] -= step;
      compare((softmax_xent(z, label, p).loss - softmax_xent(z, label, q).loss) / (2 * step),
              xe.grad_head.values()[i]);
    }
    for (std::size_t i = 0; i < model.bias.size(); ++i) {
      Model p = model, q = model;
      p.bias[i] += step;
      q.bias[i] -= step;
      compare((softmax_xent(z, label, p).loss - softmax_xent(z, label, q).loss) / (2 * step),
              xe.grad_bias[i]);
    }
    for (std::size_t i = 0; i < z.size(); ++i) {
      Vector zp = z, zq = z;
      zp[i] += step;
      zq[i] -= step;
      compare((softmax_xent(zp, label, model).loss - softmax_xent(zq, label, model).loss) / (2 * step),
              xe.grad_embedding_input[i]);
    }
    worst_softmax = std::max(worst_softmax, scale_ref > 0.0 ? err / scale_ref : err);
  }
  return {
      {"contrastive_gradient_vs_finite_differences", worst_contrastive <= 1e-4,
       fmt("worst relative error %.3g", worst_contrastive)},
      {"softmax_gradient_vs_finite_differences", worst_softmax <= 1e-4,
       fmt("worst relative error %.3g", worst_softmax)},
  };
}

std::vector<CheckLine> invariant_suite() {
  Rng rng(5150);
  Hyperparams h;
  h.lambda2 = h.lambda1;
  double translation = 0.0, permutation = 0.0, symmetry = 0.0, duplicate = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = uniform_size(rng, 2, 8), m = uniform_size(rng, 2, 6), n = uniform_size(rng, 1, 6);
    const Matrix x = random_matrix(d, m, rng), y = random_matrix(d, n, rng);
    const CSCRSolution base = solve_pair(x, y, PairKind::Same, h);

    const Matrix shift = random_matrix(d, 1, rng);
    Matrix xs = x, ys = y;
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < m; ++c) xs(r, c) += shift(r, 0);
      for (std::size_t c = 0; c < n; ++c) ys(r, c) += shift(r, 0);
    }
    translation = std::max(translation, rel_diff(solve_pair(xs, ys, PairKind::Same, h).distance, base.distance));

    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const CSCRSolution permuted = solve_pair(permute_columns(x, perm), y, PairKind::Same, h);
    for (std::size_t c = 0; c < m; ++c)
      permutation = std::max(permutation, std::abs(permuted.alpha[c] - base.alpha[perm[c]]));
    permutation = std::max(permutation, rel_diff(permuted.distance, base.distance));

    const CSCRSolution swapped = solve_pair(y, x, PairKind::Same, h);
    symmetry = std::max({symmetry, rel_diff(swapped.distance, base.distance),
                         max_abs_diff(swapped.alpha, base.beta), max_abs_diff(swapped.beta, base.alpha)});

    Matrix xd = x;
    xd.set_column(1, x.column(0));
    const CSCRSolution dup = solve_pair(xd, y, PairKind::Same, h);
    duplicate = std::max(duplicate, std::abs(dup.alpha[0] - dup.alpha[1]));
  }

  bool gap_exact = true, attention_exact = true;
  for (int t = 0; t < 20; ++t) {
    const std::size_t hh = uniform_size(rng, 1, 4), ww = uniform_size(rng, 1, 4), cc = uniform_size(rng, 1, 6);
    const Matrix entries = random_matrix(hh * ww, cc, rng);
    FeatureMap map(hh, ww, cc, std::vector<double>(entries.values().begin(), entries.values().end()));
    std::vector<std::size_t> perm(hh * ww);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    FeatureMap moved(hh, ww, cc);
    for (std::size_t p = 0; p < perm.size(); ++p) moved.set_position(p, map.position(perm[p]));
    gap_exact = gap_exact && gap(map) == gap(moved);

    const std::size_t reduced = std::max<std::size_t>(1, cc / 2);
    const AttentionParams params{random_matrix(reduced, cc, rng), random_matrix(reduced, cc, rng),
                                 random_matrix(reduced, cc, rng), random_matrix(cc, reduced, rng)};
    const FeatureMap out = nonlocal_attention(map, params);
    const FeatureMap out_moved = nonlocal_attention(moved, params);
    for (std::size_t p = 0; p < perm.size(); ++p)
      attention_exact = attention_exact && out_moved.position(p) == out.position(perm[p]);
  }

  return {
      {"translation_invariance", translation <= 1e-8, fmt("relative distance change %.3g", translation)},
      {"permutation_equivariance", permutation <= 1e-8, fmt("worst deviation %.3g", permutation)},
      {"swap_symmetry", symmetry <= 1e-8, fmt("worst deviation %.3g", symmetry)},
      {"duplicate_column_weights", duplicate <= 1e-6, fmt("worst weight gap %.3g", duplicate)},
      {"gap_permutation_invariance", gap_exact, gap_exact ? "exact" : "mismatch"},
      {"attention_permutation_equivariance", attention_exact, attention_exact ? "exact" : "mismatch"},
  };
}

}  // namespace

std::vector<CheckLine> run_check_suite(std::string_view suite) {
  if (suite == "oracle") return oracle_suite();
  if (suite == "gradients") return gradient_suite();
  if (suite == "invariants") return invariant_suite();
  throw Error(ErrorCode::InvalidConfig, "unknown check suite '" + std::string(suite) + "'");
}

}  // namespace dcscr
