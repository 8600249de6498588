#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dcscr/features.hpp"
#include "oracles.hpp"

using namespace dcscr;

namespace {

Model flat_model(std::size_t dim, std::size_t classes = 3, std::uint64_t seed = 1) {
  ModelConfig mc;
  mc.input_dim = dim;
  mc.grid = GridShape{1, 1, dim};
  mc.num_classes = classes;
  mc.seed = seed;
  return make_model(mc);
}

AttentionParams scalar_params(double q, double k, double v, double o) {
  return {Matrix{{q}}, Matrix{{k}}, Matrix{{v}}, Matrix{{o}}};
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

}  // namespace

TEST(CanonicalSum, OrderIndependent) {
  const std::vector<double> a{1e16, 1.0, -1e16, 3.5, 0.25};
  const std::vector<double> b{0.25, -1e16, 3.5, 1.0, 1e16};
  EXPECT_EQ(canonical_sum(a), canonical_sum(b));
  EXPECT_EQ(canonical_sum({}), 0.0);
}

TEST(MakeModel, DefaultGridAndShapes) {
  ModelConfig mc;
  mc.input_dim = 40;
  mc.encoder_dim = 32;
  mc.num_classes = 5;
  const Model m = make_model(mc);
  EXPECT_EQ(*m.config.grid, (GridShape{4, 4, 2}));
  EXPECT_EQ(m.encoder.rows(), 32u);
  EXPECT_EQ(m.encoder.cols(), 40u);
  EXPECT_EQ(m.embedding, Matrix::identity(2));
  EXPECT_EQ(m.head.rows(), 5u);
  EXPECT_EQ(m.bias, Vector(5));
  ASSERT_TRUE(m.attention.has_value());
  EXPECT_EQ(m.attention->query.rows(), 1u);
  EXPECT_EQ(m.attention->output, Matrix(2, 1));
}

TEST(MakeModel, GridFallsBackWhenNotDivisibleBySixteen) {
  ModelConfig mc;
  mc.input_dim = 10;
  EXPECT_EQ(*make_model(mc).config.grid, (GridShape{1, 1, 10}));
}

TEST(MakeModel, EncoderRowsOrthonormal) {
  ModelConfig mc;
  mc.input_dim = 48;
  mc.encoder_dim = 32;
  mc.seed = 42;
  const Model m = make_model(mc);
  const Matrix gram = multiply(m.encoder, m.encoder.transposed());
  for (std::size_t i = 0; i < 32; ++i)
    for (std::size_t j = 0; j < 32; ++j) EXPECT_NEAR(gram(i, j), i == j ? 1.0 : 0.0, 1e-10);
}

TEST(MakeModel, SeededAndDeterministic) {
  ModelConfig mc;
  mc.input_dim = 16;
  mc.embedding_dim = 3;
  const Model a = make_model(mc);
  const Model b = make_model(mc);
  EXPECT_EQ(a.encoder, b.encoder);
  EXPECT_EQ(a.embedding, b.embedding);
  EXPECT_EQ(a.head, b.head);
  mc.seed = 2;
  EXPECT_NE(make_model(mc).encoder, a.encoder);
}

TEST(MakeModel, RejectsBadConfigs) {
  ModelConfig mc;
  mc.input_dim = 8;
  mc.encoder_dim = 9;
  EXPECT_EQ(code_of([&] { make_model(mc); }), ErrorCode::InvalidConfig);
  mc.encoder_dim = 8;
  mc.grid = GridShape{3, 1, 2};
  EXPECT_EQ(code_of([&] { make_model(mc); }), ErrorCode::ShapeNotFactorable);
  mc.grid.reset();
  mc.input_dim = 0;
  EXPECT_EQ(code_of([&] { make_model(mc); }), ErrorCode::InvalidConfig);
}

TEST(EncodeFrame, ZeroPixelsGiveZeroMap) {
  ModelConfig mc;
  mc.input_dim = 32;
  const Model m = make_model(mc);
  const FeatureMap f = encode_frame(Vector(32), m);
  for (double v : f.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(f.height(), 4u);
  EXPECT_EQ(f.channels(), 2u);
}

TEST(EncodeFrame, IdentityEncoderFlatGridIsPassThrough) {
  Model m = flat_model(5);
  m.encoder = Matrix::identity(5);
  const Vector pixels{1.0, -2.0, 3.5, 0.0, 7.0};
  const FeatureMap f = encode_frame(pixels, m);
  EXPECT_EQ(f.position(0), pixels);
}

TEST(EncodeFrame, MatchesDirectMultiply) {
  ModelConfig mc;
  mc.input_dim = 20;
  mc.encoder_dim = 16;
  mc.seed = 3;
  const Model m = make_model(mc);
  std::mt19937_64 rng(1);
  const Vector pixels = oracle::random_vector(rng, 20);
  const FeatureMap f = encode_frame(pixels, m);
  for (std::size_t r = 0; r < 16; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 20; ++c) s += m.encoder(r, c) * pixels[c];
    EXPECT_EQ(f.values()[r], s);
  }
  // (h, w, c) layout: channel fastest.
  EXPECT_EQ(f.at(1, 2, 0), f.values()[(1 * 4 + 2) * 1 + 0]);
}

TEST(EncodeFrame, RejectsWrongLength) {
  const Model m = flat_model(4);
  EXPECT_EQ(code_of([&] { encode_frame(Vector(3), m); }), ErrorCode::DimensionMismatch);
}

TEST(Attention, ZeroOutputProjectionIsIdentity) {
  std::mt19937_64 rng(2);
  FeatureMap map(2, 3, 4);
  for (std::size_t p = 0; p < 6; ++p) map.set_position(p, oracle::random_vector(rng, 4));
  AttentionParams params{oracle::random_matrix(rng, 2, 4), oracle::random_matrix(rng, 2, 4),
                         oracle::random_matrix(rng, 2, 4), Matrix(4, 2)};
  EXPECT_EQ(nonlocal_attention(map, params), map);
}

TEST(Attention, TwoPositionHandComputed) {
  const FeatureMap map(1, 2, 1, std::vector<double>{1.0, 2.0});
  const FeatureMap out = nonlocal_attention(map, scalar_params(1.0, 1.0, 1.0, 1.0));
  const double e = std::exp(1.0);
  // Position 0: scores (1, 2); position 1: scores (2, 4).
  const double first = 1.0 + (1.0 + 2.0 * e) / (1.0 + e);
  const double second = 2.0 + (1.0 + 2.0 * e * e) / (1.0 + e * e);
  EXPECT_NEAR(out.at(0, 0, 0), first, 1e-12);
  EXPECT_NEAR(out.at(0, 1, 0), second, 1e-12);
}

TEST(Attention, PreservesShapeAndPermutes) {
  std::mt19937_64 rng(3);
  for (std::size_t channels : {1u, 3u, 6u}) {
    const std::size_t reduced = std::max<std::size_t>(1, channels / 2);
    AttentionParams params{oracle::random_matrix(rng, reduced, channels),
                           oracle::random_matrix(rng, reduced, channels),
                           oracle::random_matrix(rng, reduced, channels),
                           oracle::random_matrix(rng, channels, reduced)};
    FeatureMap map(3, 2, channels);
    for (std::size_t p = 0; p < 6; ++p) map.set_position(p, oracle::random_vector(rng, channels));
    const std::vector<std::size_t> perm{4, 1, 5, 0, 3, 2};
    FeatureMap moved(3, 2, channels);
    for (std::size_t p = 0; p < 6; ++p) moved.set_position(p, map.position(perm[p]));

    const FeatureMap out = nonlocal_attention(map, params);
    const FeatureMap out_moved = nonlocal_attention(moved, params);
    EXPECT_EQ(out.height(), 3u);
    EXPECT_EQ(out.width(), 2u);
    EXPECT_EQ(out.channels(), channels);
    for (std::size_t p = 0; p < 6; ++p) EXPECT_EQ(out_moved.position(p), out.position(perm[p]));
  }
}

TEST(Attention, RejectsChannelMismatch) {
  const FeatureMap map(1, 2, 2);
  EXPECT_EQ(code_of([&] { nonlocal_attention(map, scalar_params(1, 1, 1, 1)); }),
            ErrorCode::DimensionMismatch);
  AttentionParams broken{Matrix(1, 2), Matrix(1, 3), Matrix(1, 2), Matrix(2, 1)};
  EXPECT_EQ(code_of([&] { nonlocal_attention(map, broken); }), ErrorCode::DimensionMismatch);
}

TEST(Gap, ConstantMap) {
  EXPECT_EQ(gap(FeatureMap(3, 5, 2, 1.75)), (Vector{1.75, 1.75}));
}

TEST(Gap, SinglePosition) {
  const FeatureMap map(1, 1, 3, std::vector<double>{4.0, -1.0, 0.5});
  EXPECT_EQ(gap(map), (Vector{4.0, -1.0, 0.5}));
}

TEST(Gap, ArithmeticMean) {
  const FeatureMap map(2, 2, 1, std::vector<double>{1.0, 2.0, 3.0, 6.0});
  EXPECT_EQ(gap(map), (Vector{3.0}));
}

TEST(Gap, PermutationInvariantExactly) {
  std::mt19937_64 rng(4);
  FeatureMap map(4, 4, 3);
  for (std::size_t p = 0; p < 16; ++p) map.set_position(p, oracle::random_vector(rng, 3, 1e3));
  FeatureMap reversed(4, 4, 3);
  for (std::size_t p = 0; p < 16; ++p) reversed.set_position(p, map.position(15 - p));
  EXPECT_EQ(gap(map), gap(reversed));
}

TEST(Embed, IdentityZeroAndRandom) {
  Model m = flat_model(4);
  const Vector z{1.0, 2.0, 3.0, 4.0};
  EXPECT_EQ(embed(z, m), z);
  m.embedding = Matrix(2, 4);
  EXPECT_EQ(embed(z, m), Vector(2));
  std::mt19937_64 rng(5);
  m.embedding = oracle::random_matrix(rng, 3, 4);
  const Vector got = embed(z, m);
  for (std::size_t r = 0; r < 3; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 4; ++c) s += m.embedding(r, c) * z[c];
    EXPECT_EQ(got[r], s);
  }
  EXPECT_EQ(code_of([&] { embed(Vector(3), m); }), ErrorCode::DimensionMismatch);
}

TEST(SoftmaxXent, UniformLogitsGiveLogK) {
  for (std::size_t k : {2u, 3u, 7u}) {
    Model m = flat_model(4, k);
    m.head = Matrix(k, 4);
    const SoftmaxXent xe = softmax_xent(Vector{1.0, 2.0, 3.0, 4.0}, 1, m);
    EXPECT_NEAR(xe.loss, std::log(static_cast<double>(k)), 1e-12);
  }
}

TEST(SoftmaxXent, SaturatesTowardZero) {
  Model m = flat_model(2, 3);
  m.head = Matrix(3, 2);
  m.bias = Vector{0.0, 50.0, 0.0};
  const SoftmaxXent xe = softmax_xent(Vector{0.0, 0.0}, 1, m);
  EXPECT_LE(xe.loss, 1e-20);
  EXPECT_GE(xe.loss, 0.0);
}

TEST(SoftmaxXent, HugeLogitsStayFinite) {
  Model m = flat_model(2, 2);
  m.head = Matrix(2, 2);
  m.bias = Vector{0.0, 1e5};
  const SoftmaxXent xe = softmax_xent(Vector{0.0, 0.0}, 0, m);
  EXPECT_TRUE(std::isfinite(xe.loss));
  EXPECT_NEAR(xe.loss, -std::log(1e-300), 1e-9);
}

TEST(SoftmaxXent, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(6);
  const double step = 1e-5;
  for (int k = 0; k < 100; ++k) {
    const std::size_t classes = 2 + k % 4, width = 1 + k % 6;
    Model m = flat_model(width, classes);
    m.head = oracle::random_matrix(rng, classes, width);
    m.bias = oracle::random_vector(rng, classes);
    const Vector z = oracle::random_vector(rng, width, 2.0);
    const std::size_t label = static_cast<std::size_t>(k) % classes;
    const SoftmaxXent xe = softmax_xent(z, label, m);
    EXPECT_NEAR(xe.loss, static_cast<double>(oracle::xent(m.head, m.bias, z, label)), 1e-12);

    std::vector<double> analytic, numeric;
    for (std::size_t i = 0; i < width; ++i) {
      Vector zp = z, zm = z;
      zp[i] += step;
      zm[i] -= step;
      analytic.push_back(xe.grad_embedding_input[i]);
      numeric.push_back(static_cast<double>(
          (oracle::xent(m.head, m.bias, zp, label) - oracle::xent(m.head, m.bias, zm, label)) / (2 * step)));
    }
    for (std::size_t i = 0; i < m.head.values().size(); ++i) {
      Matrix hp = m.head, hm = m.head;
      hp.values()[i] += step;
      hm.values()[i] -= step;
      analytic.push_back(xe.grad_head.values()[i]);
      numeric.push_back(static_cast<double>(
          (oracle::xent(hp, m.bias, z, label) - oracle::xent(hm, m.bias, z, label)) / (2 * step)));
    }
    for (std::size_t i = 0; i < classes; ++i) {
      Vector bp = m.bias, bm = m.bias;
      bp[i] += step;
      bm[i] -= step;
      analytic.push_back(xe.grad_bias[i]);
      numeric.push_back(static_cast<double>(
          (oracle::xent(m.head, bp, z, label) - oracle::xent(m.head, bm, z, label)) / (2 * step)));
    }
    EXPECT_LE(oracle::gradient_error(analytic, numeric), 1e-4) << "instance " << k;
  }
}

TEST(SoftmaxXent, RejectsLabelOutOfRange) {
  const Model m = flat_model(2, 2);
  EXPECT_EQ(code_of([&] { softmax_xent(Vector(2), 2, m); }), ErrorCode::InvalidLabel);
}

TEST(SetFeatures, ComposesPerFrame) {
  ModelConfig mc;
  mc.input_dim = 32;
  mc.embedding_dim = 3;
  mc.seed = 7;
  Model m = make_model(mc);
  std::mt19937_64 rng(7);
  m.attention->output = oracle::random_matrix(rng, 2, 1);
  std::vector<Vector> frames;
  for (int f = 0; f < 3; ++f) frames.push_back(oracle::random_vector(rng, 32));

  const Matrix x = set_features(frames, m);
  ASSERT_EQ(x.cols(), 3u);
  for (std::size_t j = 0; j < 3; ++j) {
    const FeatureMap attended = nonlocal_attention(encode_frame(frames[j], m), *m.attention);
    EXPECT_EQ(x.column(j), embed(gap(attended), m));
  }

  const std::vector<Vector> single{frames[1]};
  EXPECT_EQ(set_features(single, m).column(0), x.column(1));
  const std::vector<Vector> doubled{frames[0], frames[0]};
  const Matrix d = set_features(doubled, m);
  EXPECT_EQ(d.column(0), d.column(1));
  const std::vector<Vector> reordered{frames[2], frames[0], frames[1]};
  const Matrix r = set_features(reordered, m);
  EXPECT_EQ(r.column(0), x.column(2));
  EXPECT_EQ(r.column(1), x.column(0));
  EXPECT_EQ(r.column(2), x.column(1));
}

TEST(SetFeatures, WithoutAttention) {
  ModelConfig mc;
  mc.input_dim = 16;
  mc.use_attention = false;
  const Model m = make_model(mc);
  EXPECT_FALSE(m.attention.has_value());
  const std::vector<Vector> frames{Vector(16, 1.0)};
  EXPECT_EQ(set_features(frames, m).column(0), embed(gap(encode_frame(frames[0], m)), m));
}

TEST(SetFeatures, RejectsEmptyAndRagged) {
  const Model m = flat_model(4);
  EXPECT_EQ(code_of([&] { set_features(std::vector<Vector>{}, m); }), ErrorCode::EmptySet);
  const std::vector<Vector> ragged{Vector(4), Vector(5)};
  EXPECT_EQ(code_of([&] { set_features(ragged, m); }), ErrorCode::DimensionMismatch);
}

TEST(ModelValidate, CatchesNonFinite) {
  Model m = flat_model(3);
  EXPECT_NO_THROW(m.validate());
  m.embedding(0, 0) = NAN;
  EXPECT_FALSE(m.all_finite());
  EXPECT_EQ(code_of([&] { m.validate(); }), ErrorCode::NonFinite);
}
