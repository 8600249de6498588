#include "dcscr/features.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dcscr {

double canonical_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

FeatureMap::FeatureMap(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : height_(height), width_(width), channels_(channels),
      entries_(height * width * channels, fill) {
  if (height == 0 || width == 0 || channels == 0)
    throw Error(ErrorCode::InvalidConfig, "feature map dimensions must be positive");
}

FeatureMap::FeatureMap(std::size_t height, std::size_t width, std::size_t channels,
                       std::vector<double> entries)
    : height_(height), width_(width), channels_(channels), entries_(std::move(entries)) {
  if (height == 0 || width == 0 || channels == 0)
    throw Error(ErrorCode::InvalidConfig, "feature map dimensions must be positive");
  if (entries_.size() != height * width * channels)
    throw Error(ErrorCode::DimensionMismatch, "feature map entry count " +
                                                  std::to_string(entries_.size()) +
                                                  " does not match its shape");
}

Vector FeatureMap::position(std::size_t p) const {
  return Vector(std::vector<double>(entries_.begin() + p * channels_,
                                    entries_.begin() + (p + 1) * channels_));
}

void FeatureMap::set_position(std::size_t p, const Vector& v) {
  if (v.size() != channels_) throw Error(ErrorCode::DimensionMismatch, "channel count mismatch");
  std::copy(v.values().begin(), v.values().end(), entries_.begin() + p * channels_);
}

void AttentionParams::validate() const {
  const std::size_t c = query.cols();
  const std::size_t r = query.rows();
  const bool ok = c > 0 && r > 0 && key.rows() == r && key.cols() == c && value.rows() == r &&
                  value.cols() == c && output.rows() == c && output.cols() == r;
  if (!ok) throw Error(ErrorCode::DimensionMismatch, "attention projections have inconsistent shapes");
  if (!query.all_finite() || !key.all_finite() || !value.all_finite() || !output.all_finite())
    throw Error(ErrorCode::NonFinite, "attention parameters contain non-finite entries");
}

bool Model::all_finite() const {
  if (!encoder.all_finite() || !embedding.all_finite() || !head.all_finite() || !bias.all_finite())
    return false;
  if (attention) {
    const auto& a = *attention;
    return a.query.all_finite() && a.key.all_finite() && a.value.all_finite() &&
           a.output.all_finite();
  }
  return true;
}

void Model::validate() const {
  if (!config.grid) throw Error(ErrorCode::InvalidConfig, "model grid is unresolved");
  const GridShape& g = *config.grid;
  if (g.size() != encoder.rows())
    throw Error(ErrorCode::ShapeNotFactorable,
                "grid " + std::to_string(g.height) + "x" + std::to_string(g.width) + "x" +
                    std::to_string(g.channels) + " does not hold " +
                    std::to_string(encoder.rows()) + " encoder outputs");
  if (attention) {
    attention->validate();
    if (attention->channels() != g.channels)
      throw Error(ErrorCode::DimensionMismatch, "attention channels do not match grid channels");
  }
  if (embedding.cols() != g.channels)
    throw Error(ErrorCode::DimensionMismatch, "embedding input width does not match grid channels");
  if (head.cols() != embedding.rows() || bias.size() != head.rows() || head.rows() == 0)
    throw Error(ErrorCode::DimensionMismatch, "softmax head does not match embedding");
  if (!class_labels.empty() && class_labels.size() != head.rows())
    throw Error(ErrorCode::DimensionMismatch, "class label count does not match head");
  if (!all_finite()) throw Error(ErrorCode::NonFinite, "model has non-finite parameters");
}

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

// Two passes of modified Gram-Schmidt over the rows.
void orthonormalize_rows(Matrix& a) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        double d = 0.0;
        for (std::size_t c = 0; c < a.cols(); ++c) d += a(i, c) * a(j, c);
        for (std::size_t c = 0; c < a.cols(); ++c) a(i, c) -= d * a(j, c);
      }
      double norm = 0.0;
      for (std::size_t c = 0; c < a.cols(); ++c) norm += a(i, c) * a(i, c);
      norm = std::sqrt(norm);
      if (norm < 1e-12) throw Error(ErrorCode::NumericalFailure, "encoder rows are degenerate");
      for (std::size_t c = 0; c < a.cols(); ++c) a(i, c) /= norm;
    }
  }
}

}  // namespace

Model make_model(ModelConfig config) {
  if (config.input_dim == 0) throw Error(ErrorCode::InvalidConfig, "input dimension must be positive");
  if (config.num_classes == 0) throw Error(ErrorCode::InvalidConfig, "need at least one class");
  if (config.encoder_dim == 0) config.encoder_dim = config.input_dim;
  if (config.encoder_dim > config.input_dim)
    throw Error(ErrorCode::InvalidConfig, "encoder dimension exceeds input dimension; rows cannot be orthonormal");
  if (!config.grid) {
    config.grid = config.encoder_dim % 16 == 0 ? GridShape{4, 4, config.encoder_dim / 16}
                                               : GridShape{1, 1, config.encoder_dim};
  }
  const GridShape g = *config.grid;
  if (g.height == 0 || g.width == 0 || g.channels == 0 || g.size() != config.encoder_dim)
    throw Error(ErrorCode::ShapeNotFactorable, "grid does not factor the encoder dimension " +
                                                   std::to_string(config.encoder_dim));
  if (config.embedding_dim == 0) config.embedding_dim = g.channels;

  std::mt19937_64 rng(config.seed);
  Model model;
  model.encoder = gaussian(config.encoder_dim, config.input_dim, 1.0, rng);
  orthonormalize_rows(model.encoder);

  if (config.use_attention) {
    const std::size_t reduced = std::max<std::size_t>(1, g.channels / 2);
    const double s = 1.0 / std::sqrt(static_cast<double>(g.channels));
    AttentionParams a;
    a.query = gaussian(reduced, g.channels, s, rng);
    a.key = gaussian(reduced, g.channels, s, rng);
    a.value = gaussian(reduced, g.channels, s, rng);
    a.output = Matrix(g.channels, reduced);
    model.attention = std::move(a);
  }

  if (config.embedding_dim == g.channels) {
    model.embedding = Matrix::identity(g.channels);
  } else {
    model.embedding =
        gaussian(config.embedding_dim, g.channels, 1.0 / std::sqrt(static_cast<double>(g.channels)), rng);
  }
  model.head = gaussian(config.num_classes, config.embedding_dim, 0.01, rng);
  model.bias = Vector(config.num_classes);
  model.config = config;
  return model;
}

FeatureMap encode_frame(const Vector& pixels, const Model& model) {
  if (pixels.size() != model.input_dim())
    throw Error(ErrorCode::DimensionMismatch, "frame has " + std::to_string(pixels.size()) +
                                                  " pixels, model expects " +
                                                  std::to_string(model.input_dim()));
  const GridShape& g = *model.config.grid;
  if (g.size() != model.encoder.rows())
    throw Error(ErrorCode::ShapeNotFactorable, "grid does not factor the encoder output");
  Vector encoded = multiply(model.encoder, pixels);
  return FeatureMap(g.height, g.width, g.channels, encoded.raw());
}

FeatureMap nonlocal_attention(const FeatureMap& map, const AttentionParams& params) {
  params.validate();
  if (params.channels() != map.channels())
    throw Error(ErrorCode::DimensionMismatch, "attention expects " +
                                                  std::to_string(params.channels()) +
                                                  " channels, map has " +
                                                  std::to_string(map.channels()));
  const std::size_t n = map.positions();
  const std::size_t reduced = params.query.rows();

  std::vector<Vector> queries, keys, values;
  queries.reserve(n);
  keys.reserve(n);
  values.reserve(n);
  for (std::size_t p = 0; p < n; ++p) {
    const Vector x = map.position(p);
    queries.push_back(multiply(params.query, x));
    keys.push_back(multiply(params.key, x));
    values.push_back(multiply(params.value, x));
  }

  FeatureMap out = map;
  std::vector<double> scores(n), weights(n), terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) scores[j] = dot(queries[i], keys[j]);
    const double top = *std::max_element(scores.begin(), scores.end());
    for (std::size_t j = 0; j < n; ++j) weights[j] = std::exp(scores[j] - top);
    const double norm = canonical_sum(weights);

    Vector aggregate(reduced);
    for (std::size_t r = 0; r < reduced; ++r) {
      for (std::size_t j = 0; j < n; ++j) terms[j] = weights[j] * values[j][r];
      aggregate[r] = canonical_sum(terms) / norm;
    }
    out.set_position(i, add(map.position(i), multiply(params.output, aggregate)));
  }
  return out;
}

Vector gap(const FeatureMap& map) {
  const std::size_t n = map.positions();
  Vector out(map.channels());
  std::vector<double> terms(n);
  for (std::size_t c = 0; c < map.channels(); ++c) {
    for (std::size_t p = 0; p < n; ++p) terms[p] = map.values()[p * map.channels() + c];
    out[c] = canonical_sum(terms) / static_cast<double>(n);
  }
  return out;
}

Vector embed(const Vector& pooled, const Model& model) {
  if (pooled.size() != model.embedding.cols())
    throw Error(ErrorCode::DimensionMismatch, "pooled feature has length " +
                                                  std::to_string(pooled.size()) +
                                                  ", embedding expects " +
                                                  std::to_string(model.embedding.cols()));
  return multiply(model.embedding, pooled);
}

Vector pooled_feature(const Vector& pixels, const Model& model) {
  FeatureMap map = encode_frame(pixels, model);
  if (model.attention) map = nonlocal_attention(map, *model.attention);
  return gap(map);
}

SoftmaxXent softmax_xent(const Vector& z, std::size_t label, const Model& model) {
  if (label >= model.num_classes())
    throw Error(ErrorCode::InvalidLabel, "label " + std::to_string(label) + " outside " +
                                             std::to_string(model.num_classes()) + " classes");
  Vector logits = add(multiply(model.head, z), model.bias);
  const double top = *std::max_element(logits.values().begin(), logits.values().end());
  Vector prob(logits.size());
  double norm = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    prob[k] = std::exp(logits[k] - top);
    norm += prob[k];
  }
  for (std::size_t k = 0; k < prob.size(); ++k) prob[k] /= norm;

  SoftmaxXent out;
  out.loss = -std::log(std::max(prob[label], kProbabilityFloor));
  out.grad_bias = prob;
  out.grad_bias[label] -= 1.0;
  out.grad_head = Matrix(model.head.rows(), model.head.cols());
  add_outer(out.grad_head, 1.0, out.grad_bias, z);
  out.grad_embedding_input = multiply_transposed(model.head, out.grad_bias);
  return out;
}

Matrix set_pooled_features(std::span<const Vector> frames, const Model& model) {
  if (frames.empty()) throw Error(ErrorCode::EmptySet, "set has no frames");
  Matrix out(model.pooled_dim(), frames.size());
  for (std::size_t j = 0; j < frames.size(); ++j) out.set_column(j, pooled_feature(frames[j], model));
  return out;
}

Matrix set_features(std::span<const Vector> frames, const Model& model) {
  return multiply(model.embedding, set_pooled_features(frames, model));
}

}  // namespace dcscr
