#pragma once

// Frame-level feature pipeline:
//   pixels -> fixed orthonormal encoder -> H x W x C map
//          -> optional non-local attention -> global average pooling (C)
//          -> trainable linear embedding (D_emb)
// plus the softmax head used for cross-entropy pretraining.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcscr/numkernel.hpp"

namespace dcscr {

// Sums after sorting, so the result does not depend on the order in which
// the terms were produced.
double canonical_sum(std::vector<double> terms);

class FeatureMap {
 public:
  FeatureMap(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0);
  FeatureMap(std::size_t height, std::size_t width, std::size_t channels,
             std::vector<double> entries);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t positions() const noexcept { return height_ * width_; }

  double& at(std::size_t h, std::size_t w, std::size_t c) {
    return entries_[(h * width_ + w) * channels_ + c];
  }
  double at(std::size_t h, std::size_t w, std::size_t c) const {
    return entries_[(h * width_ + w) * channels_ + c];
  }
  // Channel vector of flattened spatial position p = h * W + w.
  Vector position(std::size_t p) const;
  void set_position(std::size_t p, const Vector& v);

  std::span<const double> values() const noexcept { return entries_; }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::size_t channels_;
  std::vector<double> entries_;
};

// Embedded-Gaussian non-local block parameters, reduced width C' = max(1, C/2).
struct AttentionParams {
  Matrix query;   // C' x C
  Matrix key;     // C' x C
  Matrix value;   // C' x C
  Matrix output;  // C x C'

  std::size_t channels() const noexcept { return query.cols(); }
  void validate() const;
};

struct GridShape {
  std::size_t height = 4;
  std::size_t width = 4;
  std::size_t channels = 1;

  std::size_t size() const noexcept { return height * width * channels; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

struct ModelConfig {
  std::size_t input_dim = 0;    // P
  std::size_t encoder_dim = 0;  // D_enc, 0 means P
  std::optional<GridShape> grid;  // default 4x4x(D_enc/16), or 1x1xD_enc if not divisible
  std::size_t embedding_dim = 0;  // 0 means C
  std::size_t num_classes = 2;
  bool use_attention = true;
  std::uint64_t seed = 1;
};

struct Model {
  ModelConfig config;  // fully resolved: grid set, dims nonzero
  Matrix encoder;      // D_enc x P, orthonormal rows
  std::optional<AttentionParams> attention;
  Matrix embedding;    // D_emb x C
  Matrix head;         // K x D_emb
  Vector bias;         // K
  std::vector<std::string> class_labels;  // index -> label, may be empty

  std::size_t input_dim() const noexcept { return encoder.cols(); }
  std::size_t pooled_dim() const noexcept { return config.grid->channels; }
  std::size_t embedding_dim() const noexcept { return embedding.rows(); }
  std::size_t num_classes() const noexcept { return head.rows(); }

  bool all_finite() const;
  // Checks the shape relations between every parameter block.
  void validate() const;
};

// Builds a model with a seeded orthonormal encoder, attention whose output
// projection is zero (the block starts as the identity), an identity
// embedding when D_emb equals C (seeded random otherwise), and a small
// random softmax head.
Model make_model(ModelConfig config);

FeatureMap encode_frame(const Vector& pixels, const Model& model);
FeatureMap nonlocal_attention(const FeatureMap& map, const AttentionParams& params);
Vector gap(const FeatureMap& map);
Vector embed(const Vector& pooled, const Model& model);

// Pooled (pre-embedding) feature of one frame: encode, attend, pool.
Vector pooled_feature(const Vector& pixels, const Model& model);

struct SoftmaxXent {
  double loss = 0.0;
  Matrix grad_head;             // K x D_emb
  Vector grad_bias;             // K
  Vector grad_embedding_input;  // D_emb, d loss / d z
};

inline constexpr double kProbabilityFloor = 1e-300;

SoftmaxXent softmax_xent(const Vector& z, std::size_t label, const Model& model);

// Columns are the embedded features of the frames, in order.
Matrix set_features(std::span<const Vector> frames, const Model& model);
// Pooled features before the embedding (C x m).
Matrix set_pooled_features(std::span<const Vector> frames, const Model& model);

}  // namespace dcscr
