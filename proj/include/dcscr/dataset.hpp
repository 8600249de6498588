#pragma once

// Labeled collections of feature sets and their JSON file format:
//
//   {"feature_kind": "raw_pixels" | "precomputed_embeddings",
//    "dim": <int>,
//    "sets": [{"id": <str>, "label": <str>, "frames": [[<float>, ...], ...]}, ...]}
//
// Floats are written with round-trip precision, so save followed by load
// reproduces every finite entry bit for bit.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dcscr/numkernel.hpp"

namespace dcscr {

enum class FeatureKind { RawPixels, PrecomputedEmbeddings };

const char* to_string(FeatureKind kind) noexcept;

struct FeatureSet {
  std::string id;
  std::string label;
  std::vector<Vector> frames;

  // D x m matrix with one column per frame.
  Matrix as_matrix() const;

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

struct Dataset {
  FeatureKind kind = FeatureKind::RawPixels;
  std::size_t dim = 0;
  std::vector<FeatureSet> sets;

  // Throws DimensionMismatch (naming the set), EmptySet, DuplicateSetId or
  // NonFinite.
  void validate() const;
  // Distinct labels in lexicographic order.
  std::vector<std::string> labels() const;
  const FeatureSet& find(std::string_view id) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

Dataset parse_dataset(std::string_view json_text);
std::string dump_dataset(const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

struct SynthConfig {
  std::size_t classes = 4;
  std::size_t sets_per_class = 3;
  std::size_t frames_per_set = 10;
  std::size_t dim = 16;
  double separation = 10.0;
  double noise = 0.5;
  std::uint64_t seed = 1;
};

// Class centers lie on the sphere of radius `separation`; each frame is its
// class center plus isotropic Gaussian noise of scale `noise`. Set ids are
// "c<k>_s<s>" and labels "class<k>".
Dataset gen_synthetic(const SynthConfig& config);

// Class centers gen_synthetic draws for `config`, row k for class k.
std::vector<Vector> synthetic_centers(const SynthConfig& config);

}  // namespace dcscr
