#include "dcscr/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace dcscr {

void TrainConfig::validate() const {
  const bool ok = epochs_level1 >= 0 && epochs_level2 >= 0 && learning_rate_level1 >= 0.0 &&
                  learning_rate_level2 >= 0.0 && std::isfinite(learning_rate_level1) &&
                  std::isfinite(learning_rate_level2) && batch_size >= 1 && pairs_per_epoch >= 1 &&
                  positive_fraction > 0.0 && positive_fraction < 1.0;
  if (!ok) throw Error(ErrorCode::InvalidConfig, "invalid training configuration");
}

void TrainHistory::write_csv(std::ostream& out) const {
  out << "epoch,mean_loss,converged_fraction\n";
  const auto old = out.precision(17);
  for (const EpochRecord& r : epochs)
    out << r.epoch << ',' << r.mean_loss << ',' << r.converged_fraction << '\n';
  out.precision(old);
}

double contrastive_loss(const Matrix& x, const Matrix& y, PairKind kind, const CSCRSolution& sol,
                        const Hyperparams& h) {
  const double d = set_distance(x, y, sol);
  const double reg = h.lambda1 * squared_norm(sol.alpha) + h.lambda2 * squared_norm(sol.beta);
  if (kind == PairKind::Same) return h.mu1 * d + reg;
  return h.mu2 * std::max(0.0, h.margin - d) + reg;
}

Matrix loss_grad_embedding(const Matrix& pooled_x, const Matrix& pooled_y, const Matrix& embedding,
                           PairKind kind, const CSCRSolution& sol, const Hyperparams& h) {
  if (pooled_x.rows() != embedding.cols() || pooled_y.rows() != embedding.cols() ||
      pooled_x.cols() != sol.alpha.size() || pooled_y.cols() != sol.beta.size())
    throw Error(ErrorCode::DimensionMismatch, "pooled features, embedding and coefficients disagree");

  const Vector u = subtract(multiply(pooled_x, sol.alpha), multiply(pooled_y, sol.beta));
  const Vector r = multiply(embedding, u);
  Matrix grad(embedding.rows(), embedding.cols());
  if (kind == PairKind::Same) {
    add_outer(grad, 2.0 * h.mu1, r, u);
  } else if (squared_norm(r) < h.margin) {
    add_outer(grad, -2.0 * h.mu2, r, u);
  }
  return grad;
}

namespace {

std::mt19937_64 seeded(std::uint64_t seed, int epoch, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), stream};
  return std::mt19937_64(seq);
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

Matrix pooled_set(const FeatureSet& set, FeatureKind kind, const Model& model) {
  if (kind != FeatureKind::RawPixels)
    throw Error(ErrorCode::InvalidConfig, "training needs raw_pixels datasets");
  return set_pooled_features(set.frames, model);
}

void require_finite(const Model& model, const char* where) {
  if (!model.all_finite())
    throw Error(ErrorCode::NonFinite, std::string("model diverged during ") + where);
}

}  // namespace

std::vector<PairSample> sample_pairs(const Dataset& dataset, const TrainConfig& config, int epoch) {
  config.validate();
  const std::size_t n = dataset.sets.size();
  if (n < 2) throw Error(ErrorCode::InsufficientSets, "need at least two sets to form pairs");
  if (dataset.labels().size() < 2)
    throw Error(ErrorCode::InsufficientClasses, "need at least two classes to form negative pairs");

  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < n; ++i) by_label[dataset.sets[i].label].push_back(i);
  std::vector<std::size_t> has_partner;
  for (std::size_t i = 0; i < n; ++i)
    if (by_label[dataset.sets[i].label].size() >= 2) has_partner.push_back(i);

  const auto positives = static_cast<std::size_t>(
      std::llround(static_cast<double>(config.pairs_per_epoch) * config.positive_fraction));
  if (positives > 0 && has_partner.empty())
    throw Error(ErrorCode::InsufficientSets, "no class has two sets, positive pairs impossible");

  std::mt19937_64 rng = seeded(config.seed, epoch, 0x9a1u);
  std::vector<PairSample> pairs;
  pairs.reserve(config.pairs_per_epoch);
  for (std::size_t p = 0; p < positives; ++p) {
    const std::size_t i = has_partner[pick(rng, has_partner.size())];
    const auto& same = by_label[dataset.sets[i].label];
    std::size_t j = i;
    while (j == i) j = same[pick(rng, same.size())];
    pairs.push_back({i, j, PairKind::Same});
  }
  for (std::size_t p = positives; p < config.pairs_per_epoch; ++p) {
    const std::size_t i = pick(rng, n);
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < n; ++j)
      if (dataset.sets[j].label != dataset.sets[i].label) others.push_back(j);
    pairs.push_back({i, others[pick(rng, others.size())], PairKind::Different});
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);
  return pairs;
}

std::vector<std::size_t> class_indices(const Dataset& dataset, const Model& model) {
  const std::vector<std::string> labels =
      model.class_labels.empty() ? dataset.labels() : model.class_labels;
  if (labels.size() != model.num_classes())
    throw Error(ErrorCode::InvalidLabel, "dataset has " + std::to_string(labels.size()) +
                                             " classes, model head has " +
                                             std::to_string(model.num_classes()));
  std::vector<std::size_t> out;
  out.reserve(dataset.sets.size());
  for (const FeatureSet& s : dataset.sets) {
    auto it = std::find(labels.begin(), labels.end(), s.label);
    if (it == labels.end()) throw Error(ErrorCode::InvalidLabel, "unknown label '" + s.label + "'");
    out.push_back(static_cast<std::size_t>(it - labels.begin()));
  }
  return out;
}

TrainResult pretrain_level1(const Dataset& dataset, Model model, const TrainConfig& config) {
  config.validate();
  model.validate();
  const std::vector<std::size_t> labels = class_indices(dataset, model);

  struct Sample {
    Vector pooled;
    std::size_t label;
  };
  std::vector<Sample> samples;
  for (std::size_t s = 0; s < dataset.sets.size(); ++s) {
    const Matrix pooled = pooled_set(dataset.sets[s], dataset.kind, model);
    for (std::size_t f = 0; f < pooled.cols(); ++f) samples.push_back({pooled.column(f), labels[s]});
  }
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no frames to pretrain on");

  TrainHistory history;
  std::vector<std::size_t> order(samples.size());
  const double lr = config.learning_rate_level1;
  for (int epoch = 0; epoch < config.epochs_level1; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng = seeded(config.seed, epoch, 0x1e1u);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> losses(samples.size());
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const double inv = 1.0 / static_cast<double>(stop - start);
      Matrix grad_head(model.head.rows(), model.head.cols());
      Vector grad_bias(model.bias.size());
      Matrix grad_embedding(model.embedding.rows(), model.embedding.cols());
      for (std::size_t b = start; b < stop; ++b) {
        const Sample& sample = samples[order[b]];
        const Vector z = embed(sample.pooled, model);
        const SoftmaxXent xe = softmax_xent(z, sample.label, model);
        losses[order[b]] = xe.loss;
        grad_head = add(grad_head, xe.grad_head);
        axpy(1.0, xe.grad_bias, grad_bias);
        add_outer(grad_embedding, 1.0, xe.grad_embedding_input, sample.pooled);
      }
      model.head = add(model.head, scale(grad_head, -lr * inv));
      axpy(-lr * inv, grad_bias, model.bias);
      model.embedding = add(model.embedding, scale(grad_embedding, -lr * inv));
      require_finite(model, "level-1 pretraining");
    }
    // Summed in sample order so the shuffle does not perturb the mean.
    const double loss_total = std::accumulate(losses.begin(), losses.end(), 0.0);
    history.epochs.push_back({epoch, loss_total / static_cast<double>(samples.size()), 1.0, 0.0, 0.0});
  }
  return {std::move(model), std::move(history)};
}

PairStep level2_step(Model& model, const Matrix& pooled_x, const Matrix& pooled_y, PairKind kind,
                     const Hyperparams& h, double learning_rate) {
  const Matrix x = multiply(model.embedding, pooled_x);
  const Matrix y = multiply(model.embedding, pooled_y);
  PairStep step;
  step.solution = solve_pair(x, y, kind, h);
  step.loss = contrastive_loss(x, y, kind, step.solution, h);
  const Matrix grad = loss_grad_embedding(pooled_x, pooled_y, model.embedding, kind, step.solution, h);
  model.embedding = add(model.embedding, scale(grad, -learning_rate));
  require_finite(model, "level-2 training");
  return step;
}

TrainResult train_level2(const Dataset& dataset, Model model, const TrainConfig& config,
                         const Hyperparams& h) {
  config.validate();
  h.validate();
  model.validate();

  std::vector<Matrix> pooled;
  pooled.reserve(dataset.sets.size());
  for (const FeatureSet& s : dataset.sets) pooled.push_back(pooled_set(s, dataset.kind, model));

  TrainHistory history;
  for (int epoch = 0; epoch < config.epochs_level2; ++epoch) {
    const std::vector<PairSample> pairs = sample_pairs(dataset, config, epoch);
    double loss_total = 0.0, residual_total = 0.0, residual_max = 0.0;
    std::size_t converged = 0;
    for (const PairSample& p : pairs) {
      const PairStep step =
          level2_step(model, pooled[p.i], pooled[p.j], p.kind, h, config.learning_rate_level2);
      loss_total += step.loss;
      const double res = std::max(step.solution.residual_alpha, step.solution.residual_beta);
      residual_total += res;
      residual_max = std::max(residual_max, res);
      converged += step.solution.converged ? 1 : 0;
    }
    const double count = static_cast<double>(pairs.size());
    history.epochs.push_back({epoch, loss_total / count, static_cast<double>(converged) / count,
                              residual_total / count, residual_max});
  }
  return {std::move(model), std::move(history)};
}

}  // namespace dcscr
