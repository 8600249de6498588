#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "dcscr/dataset.hpp"

using namespace dcscr;

namespace {

struct Caught {
  ErrorCode code = ErrorCode::IoError;
  std::string what;
};

template <typename F>
Caught catch_error(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return {e.code(), e.what()};
  }
  ADD_FAILURE() << "no error thrown";
  return {};
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "dcscr_test_dataset";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(DatasetIo, MinimalRoundTrip) {
  const Dataset ds{FeatureKind::RawPixels, 2, {{"only", "a", {Vector{0.1, -3.0}}}}};
  const auto path = scratch("minimal.json");
  save_dataset(ds, path);
  EXPECT_EQ(load_dataset(path), ds);
  EXPECT_EQ(parse_dataset(dump_dataset(ds)), ds);
}

TEST(DatasetIo, GeneratedRoundTripIsBitExact) {
  SynthConfig sc;
  sc.classes = 5;
  sc.sets_per_class = 2;
  sc.seed = 17;
  Dataset ds = gen_synthetic(sc);
  ASSERT_EQ(ds.sets.size(), 10u);
  // Values that stress shortest round-trip formatting.
  ds.sets[0].frames[0][0] = 0.1 + 0.2;
  ds.sets[0].frames[0][1] = std::numeric_limits<double>::denorm_min();
  ds.sets[0].frames[0][2] = -std::numeric_limits<double>::max();
  ds.sets[0].frames[0][3] = 1.0 / 3.0;
  const auto path = scratch("generated.json");
  save_dataset(ds, path);
  const Dataset back = load_dataset(path);
  ASSERT_EQ(back.sets.size(), ds.sets.size());
  for (std::size_t s = 0; s < ds.sets.size(); ++s)
    for (std::size_t f = 0; f < ds.sets[s].frames.size(); ++f)
      for (std::size_t d = 0; d < ds.dim; ++d)
        EXPECT_EQ(std::bit_cast<std::uint64_t>(back.sets[s].frames[f][d]),
                  std::bit_cast<std::uint64_t>(ds.sets[s].frames[f][d]));
  EXPECT_EQ(back, ds);
}

TEST(DatasetIo, PrecomputedKindSurvives) {
  const Dataset ds{FeatureKind::PrecomputedEmbeddings, 1, {{"x", "y", {Vector{1.0}, Vector{2.0}}}}};
  EXPECT_EQ(parse_dataset(dump_dataset(ds)).kind, FeatureKind::PrecomputedEmbeddings);
}

TEST(DatasetIo, WrongFrameLengthNamesTheSet) {
  const char* text = R"({"feature_kind": "raw_pixels", "dim": 2,
    "sets": [{"id": "good", "label": "a", "frames": [[1, 2]]},
             {"id": "bad-set", "label": "a", "frames": [[1, 2], [3]]}]})";
  const Caught c = catch_error([&] { parse_dataset(text); });
  EXPECT_EQ(c.code, ErrorCode::DimensionMismatch);
  EXPECT_NE(c.what.find("bad-set"), std::string::npos) << c.what;
}

TEST(DatasetIo, DuplicateIdsEmptySetsNonFinite) {
  EXPECT_EQ(catch_error([] {
              parse_dataset(R"({"feature_kind": "raw_pixels", "dim": 1, "sets": [
                {"id": "s", "label": "a", "frames": [[1]]}, {"id": "s", "label": "b", "frames": [[2]]}]})");
            }).code,
            ErrorCode::DuplicateSetId);
  EXPECT_EQ(catch_error([] {
              parse_dataset(R"({"feature_kind": "raw_pixels", "dim": 1, "sets": [{"id": "s", "label": "a", "frames": []}]})");
            }).code,
            ErrorCode::EmptySet);
  Dataset ds{FeatureKind::RawPixels, 1, {{"s", "a", {Vector{NAN}}}}};
  EXPECT_EQ(catch_error([&] { ds.validate(); }).code, ErrorCode::NonFinite);
}

TEST(DatasetIo, SyntaxErrorsCarryLineAndColumn) {
  const Caught c = catch_error([] { parse_dataset("{\n  \"dim\": 2,\n  \"sets\": [,]\n}"); });
  EXPECT_EQ(c.code, ErrorCode::ParseError);
  EXPECT_NE(c.what.find("line 3"), std::string::npos) << c.what;
}

TEST(DatasetIo, SchemaErrorsCarryFieldPath) {
  const Caught kind = catch_error([] { parse_dataset(R"({"feature_kind": "pixels", "dim": 1, "sets": []})"); });
  EXPECT_EQ(kind.code, ErrorCode::ParseError);
  EXPECT_NE(kind.what.find("feature_kind"), std::string::npos);

  const Caught frame = catch_error([] {
    parse_dataset(R"({"feature_kind": "raw_pixels", "dim": 1, "sets": [{"id": "s", "label": "a", "frames": [[1], ["x"]]}]})");
  });
  EXPECT_EQ(frame.code, ErrorCode::ParseError);
  EXPECT_NE(frame.what.find("sets[0].frames[1]"), std::string::npos) << frame.what;

  EXPECT_EQ(catch_error([] { parse_dataset(R"({"feature_kind": "raw_pixels", "dim": 0, "sets": []})"); }).code,
            ErrorCode::ParseError);
  EXPECT_EQ(catch_error([] { parse_dataset(R"({"feature_kind": "raw_pixels", "sets": []})"); }).code,
            ErrorCode::ParseError);
}

TEST(DatasetIo, MissingFile) {
  EXPECT_EQ(catch_error([] { load_dataset(scratch("does-not-exist.json")); }).code, ErrorCode::IoError);
}

TEST(DatasetQueries, LabelsAndFind) {
  const Dataset ds{FeatureKind::RawPixels, 1,
                   {{"p", "zeta", {Vector{1.0}}}, {"q", "alpha", {Vector{2.0}}}, {"r", "zeta", {Vector{3.0}}}}};
  EXPECT_EQ(ds.labels(), (std::vector<std::string>{"alpha", "zeta"}));
  EXPECT_EQ(ds.find("q").label, "alpha");
  EXPECT_THROW(ds.find("nope"), Error);
  EXPECT_EQ(ds.sets[0].as_matrix(), (Matrix{{1.0}}));
}

TEST(Synthetic, NoiselessFramesSitOnCenters) {
  SynthConfig sc;
  sc.noise = 0.0;
  const Dataset ds = gen_synthetic(sc);
  const auto centers = synthetic_centers(sc);
  for (const FeatureSet& s : ds.sets) {
    const std::size_t k = static_cast<std::size_t>(std::stoi(s.label.substr(5)));
    for (const Vector& f : s.frames) EXPECT_EQ(f, centers[k]);
  }
}

TEST(Synthetic, DeterministicAndSeeded) {
  SynthConfig sc;
  EXPECT_EQ(gen_synthetic(sc), gen_synthetic(sc));
  SynthConfig other = sc;
  other.seed = 2;
  EXPECT_NE(gen_synthetic(sc), gen_synthetic(other));
}

TEST(Synthetic, LayoutAndNaming) {
  SynthConfig sc;
  sc.classes = 3;
  sc.sets_per_class = 2;
  sc.frames_per_set = 4;
  sc.dim = 5;
  const Dataset ds = gen_synthetic(sc);
  EXPECT_EQ(ds.kind, FeatureKind::RawPixels);
  EXPECT_EQ(ds.dim, 5u);
  ASSERT_EQ(ds.sets.size(), 6u);
  EXPECT_EQ(ds.sets[0].id, "c0_s0");
  EXPECT_EQ(ds.sets[3].id, "c1_s1");
  EXPECT_EQ(ds.sets[5].label, "class2");
  for (const FeatureSet& s : ds.sets) EXPECT_EQ(s.frames.size(), 4u);
}

TEST(Synthetic, CentersOnSphere) {
  SynthConfig sc;
  sc.separation = 7.5;
  for (const Vector& c : synthetic_centers(sc)) EXPECT_NEAR(std::sqrt(squared_norm(c)), 7.5, 1e-12);
}

TEST(Synthetic, ClassMeansNearCenters) {
  SynthConfig sc;
  sc.classes = 4;
  sc.sets_per_class = 3;
  sc.frames_per_set = 10;
  sc.dim = 16;
  sc.separation = 10.0;
  sc.noise = 0.5;
  const Dataset ds = gen_synthetic(sc);
  const auto centers = synthetic_centers(sc);
  const double bound = 3.0 * sc.noise / std::sqrt(static_cast<double>(sc.frames_per_set));
  for (std::size_t k = 0; k < sc.classes; ++k) {
    Vector mean(sc.dim);
    double count = 0.0;
    for (const FeatureSet& s : ds.sets) {
      if (s.label != "class" + std::to_string(k)) continue;
      for (const Vector& f : s.frames) {
        axpy(1.0, f, mean);
        count += 1.0;
      }
    }
    mean = scale(mean, 1.0 / count);
    for (std::size_t d = 0; d < sc.dim; ++d) EXPECT_LE(std::abs(mean[d] - centers[k][d]), bound);
  }
}

TEST(Synthetic, RejectsBadConfig) {
  for (auto tweak : {+[](SynthConfig& c) { c.classes = 0; }, +[](SynthConfig& c) { c.dim = 0; },
                     +[](SynthConfig& c) { c.separation = 0.0; }, +[](SynthConfig& c) { c.noise = -1.0; },
                     +[](SynthConfig& c) { c.noise = NAN; }}) {
    SynthConfig sc;
    tweak(sc);
    EXPECT_EQ(catch_error([&] { gen_synthetic(sc); }).code, ErrorCode::InvalidConfig);
  }
}
