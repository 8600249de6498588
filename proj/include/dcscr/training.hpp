#pragma once

// CSCR contrastive loss, its gradient with respect to the linear embedding,
// pair sampling, and the two training levels:
//   level 1: per-frame softmax cross-entropy on embedding + head
//   level 2: per pair, solve the CSCR coefficients with the network fixed,
//            then take an SGD step on the embedding with the coefficients fixed.

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include "dcscr/cscr.hpp"
#include "dcscr/dataset.hpp"
#include "dcscr/features.hpp"

namespace dcscr {

struct PairSample {
  std::size_t i = 0;
  std::size_t j = 0;
  PairKind kind = PairKind::Different;

  friend bool operator==(const PairSample&, const PairSample&) = default;
};

struct TrainConfig {
  int epochs_level1 = 30;
  int epochs_level2 = 30;
  double learning_rate_level1 = 0.1;
  double learning_rate_level2 = 0.1;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
  std::size_t pairs_per_epoch = 64;
  double positive_fraction = 0.5;

  // Epoch counts may be zero (level skipped); learning rates may be zero.
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double converged_fraction = 1.0;
  double mean_residual = 0.0;  // mean over solves of max(|sum a - 1|, |sum b - 1|)
  double max_residual = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  // Columns: epoch,mean_loss,converged_fraction
  void write_csv(std::ostream& out) const;
};

struct TrainResult {
  Model model;
  TrainHistory history;
};

// y*mu1*d + (1-y)*mu2*max(0, margin - d) + lambda1*||a||^2 + lambda2*||b||^2
// with d = ||X a - Y b||^2 recomputed from the coefficients.
double contrastive_loss(const Matrix& x, const Matrix& y, PairKind kind, const CSCRSolution& sol,
                        const Hyperparams& h);

// Gradient of contrastive_loss with respect to W where X = W * pooled_x and
// Y = W * pooled_y, holding the coefficients fixed. At d == margin the
// negative-pair hinge contributes the zero subgradient.
Matrix loss_grad_embedding(const Matrix& pooled_x, const Matrix& pooled_y, const Matrix& embedding,
                           PairKind kind, const CSCRSolution& sol, const Hyperparams& h);

// Exactly round(pairs_per_epoch * positive_fraction) positive pairs, the rest
// negative, shuffled. Deterministic in (seed, epoch).
std::vector<PairSample> sample_pairs(const Dataset& dataset, const TrainConfig& config, int epoch);

// Index of each set's label in model.class_labels (or in the sorted dataset
// labels when the model carries none).
std::vector<std::size_t> class_indices(const Dataset& dataset, const Model& model);

TrainResult pretrain_level1(const Dataset& dataset, Model model, const TrainConfig& config);

struct PairStep {
  CSCRSolution solution;
  double loss = 0.0;
};

// Step 1 then Step 2 for one pair: embed, solve, score, update the embedding.
PairStep level2_step(Model& model, const Matrix& pooled_x, const Matrix& pooled_y, PairKind kind,
                     const Hyperparams& h, double learning_rate);

TrainResult train_level2(const Dataset& dataset, Model model, const TrainConfig& config,
                         const Hyperparams& h);

}  // namespace dcscr
