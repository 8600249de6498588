#include "dcscr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace dcscr {

using nlohmann::json;

const char* to_string(FeatureKind kind) noexcept {
  return kind == FeatureKind::RawPixels ? "raw_pixels" : "precomputed_embeddings";
}

Matrix FeatureSet::as_matrix() const { return Matrix::from_columns(frames); }

void Dataset::validate() const {
  if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "declared dimension must be positive");
  std::unordered_set<std::string> seen;
  for (const FeatureSet& s : sets) {
    if (!seen.insert(s.id).second) throw Error(ErrorCode::DuplicateSetId, "set id '" + s.id + "'");
    if (s.frames.empty()) throw Error(ErrorCode::EmptySet, "set '" + s.id + "' has no frames");
    for (std::size_t f = 0; f < s.frames.size(); ++f) {
      if (s.frames[f].size() != dim)
        throw Error(ErrorCode::DimensionMismatch,
                    "set '" + s.id + "' frame " + std::to_string(f) + " has length " +
                        std::to_string(s.frames[f].size()) + ", expected " + std::to_string(dim));
      if (!s.frames[f].all_finite())
        throw Error(ErrorCode::NonFinite,
                    "set '" + s.id + "' frame " + std::to_string(f) + " has non-finite entries");
    }
  }
}

std::vector<std::string> Dataset::labels() const {
  std::set<std::string> unique;
  for (const FeatureSet& s : sets) unique.insert(s.label);
  return {unique.begin(), unique.end()};
}

const FeatureSet& Dataset::find(std::string_view id) const {
  for (const FeatureSet& s : sets)
    if (s.id == id) return s;
  throw Error(ErrorCode::InvalidConfig, "no set with id '" + std::string(id) + "'");
}

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ParseError, where + ": " + what);
}

const json& member(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) schema_error(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing field '") + key + "'");
  return *it;
}

std::string string_field(const json& obj, const char* key, const std::string& where) {
  const json& v = member(obj, key, where);
  if (!v.is_string()) schema_error(where + "." + key, "expected a string");
  return v.get<std::string>();
}

std::string line_context(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

Dataset parse_dataset(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, line_context(json_text, e.byte) + ": " + e.what());
  }

  Dataset ds;
  const std::string kind = string_field(doc, "feature_kind", "dataset");
  if (kind == "raw_pixels") {
    ds.kind = FeatureKind::RawPixels;
  } else if (kind == "precomputed_embeddings") {
    ds.kind = FeatureKind::PrecomputedEmbeddings;
  } else {
    schema_error("dataset.feature_kind", "unknown kind '" + kind + "'");
  }
  const json& dim = member(doc, "dim", "dataset");
  if (!dim.is_number_unsigned() || dim.get<std::size_t>() == 0)
    schema_error("dataset.dim", "expected a positive integer");
  ds.dim = dim.get<std::size_t>();

  const json& sets = member(doc, "sets", "dataset");
  if (!sets.is_array()) schema_error("dataset.sets", "expected an array");
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const std::string where = "sets[" + std::to_string(i) + "]";
    FeatureSet s;
    s.id = string_field(sets[i], "id", where);
    s.label = string_field(sets[i], "label", where);
    const json& frames = member(sets[i], "frames", where);
    if (!frames.is_array()) schema_error(where + ".frames", "expected an array");
    for (std::size_t f = 0; f < frames.size(); ++f) {
      const std::string fwhere = where + ".frames[" + std::to_string(f) + "]";
      if (!frames[f].is_array()) schema_error(fwhere, "expected an array of numbers");
      std::vector<double> values;
      values.reserve(frames[f].size());
      for (const json& v : frames[f]) {
        if (!v.is_number()) schema_error(fwhere, "expected a number");
        values.push_back(v.get<double>());
      }
      s.frames.emplace_back(std::move(values));
    }
    ds.sets.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

std::string dump_dataset(const Dataset& dataset) {
  dataset.validate();
  json sets = json::array();
  for (const FeatureSet& s : dataset.sets) {
    json frames = json::array();
    for (const Vector& f : s.frames) frames.push_back(f.raw());
    sets.push_back({{"id", s.id}, {"label", s.label}, {"frames", std::move(frames)}});
  }
  json doc = {{"feature_kind", to_string(dataset.kind)},
              {"dim", dataset.dim},
              {"sets", std::move(sets)}};
  return doc.dump();
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_dataset(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  const std::string text = dump_dataset(dataset);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

namespace {

void check_synth(const SynthConfig& c) {
  if (c.classes == 0 || c.sets_per_class == 0 || c.frames_per_set == 0 || c.dim == 0)
    throw Error(ErrorCode::InvalidConfig, "synthetic counts must be at least 1");
  if (!(c.separation > 0.0) || !std::isfinite(c.separation))
    throw Error(ErrorCode::InvalidConfig, "separation must be positive");
  if (!(c.noise >= 0.0) || !std::isfinite(c.noise))
    throw Error(ErrorCode::InvalidConfig, "noise must be non-negative");
}

std::vector<Vector> draw_centers(const SynthConfig& c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> centers;
  for (std::size_t k = 0; k < c.classes; ++k) {
    Vector v(c.dim);
    double norm = 0.0;
    while (norm < 1e-8) {
      for (std::size_t d = 0; d < c.dim; ++d) v[d] = normal(rng);
      norm = std::sqrt(squared_norm(v));
    }
    centers.push_back(scale(v, c.separation / norm));
  }
  return centers;
}

}  // namespace

std::vector<Vector> synthetic_centers(const SynthConfig& config) {
  check_synth(config);
  std::mt19937_64 rng(config.seed);
  return draw_centers(config, rng);
}

Dataset gen_synthetic(const SynthConfig& config) {
  check_synth(config);
  std::mt19937_64 rng(config.seed);
  const std::vector<Vector> centers = draw_centers(config, rng);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset ds;
  ds.kind = FeatureKind::RawPixels;
  ds.dim = config.dim;
  for (std::size_t k = 0; k < config.classes; ++k) {
    for (std::size_t s = 0; s < config.sets_per_class; ++s) {
      FeatureSet set;
      set.id = "c" + std::to_string(k) + "_s" + std::to_string(s);
      set.label = "class" + std::to_string(k);
      for (std::size_t f = 0; f < config.frames_per_set; ++f) {
        Vector frame = centers[k];
        for (std::size_t d = 0; d < config.dim; ++d) frame[d] += config.noise * normal(rng);
        set.frames.push_back(std::move(frame));
      }
      ds.sets.push_back(std::move(set));
    }
  }
  return ds;
}

}  // namespace dcscr
