#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "dcscr/harness.hpp"
#include "json.hpp"

namespace dcscr {

using nlohmann::json;

Matrix set_matrix(const FeatureSet& set, FeatureKind kind, const Model* model) {
  if (set.frames.empty()) throw Error(ErrorCode::EmptySet, "set '" + set.id + "' has no frames");
  if (kind == FeatureKind::RawPixels && model != nullptr) return set_features(set.frames, *model);
  return set.as_matrix();
}

namespace {

ProbeResult classify_matrix(const std::vector<Matrix>& gallery_features,
                            std::span<const FeatureSet> gallery, const FeatureSet& probe,
                            const Matrix& probe_features, const Hyperparams& h, PairKind branch) {
  ProbeResult out;
  out.probe_id = probe.id;
  out.true_label = probe.label;
  std::size_t best = 0;
  for (std::size_t g = 0; g < gallery.size(); ++g) {
    const double d = solve_pair(probe_features, gallery_features[g], branch, h).distance;
    out.gallery_distances.push_back(d);
    if (d < out.gallery_distances[best]) best = g;

    auto it = std::find_if(out.class_distances.begin(), out.class_distances.end(),
                           [&](const auto& e) { return e.first == gallery[g].label; });
    if (it == out.class_distances.end()) {
      out.class_distances.emplace_back(gallery[g].label, d);
    } else {
      it->second = std::min(it->second, d);
    }
  }
  out.predicted = gallery[best].label;
  out.correct = out.predicted == probe.label;
  return out;
}

}  // namespace

ProbeResult classify_probe(std::span<const FeatureSet> gallery, const FeatureSet& probe,
                           FeatureKind kind, const Model* model, const Hyperparams& h,
                           InferenceOptions options) {
  if (gallery.empty()) throw Error(ErrorCode::EmptyGallery, "gallery has no sets");
  std::vector<Matrix> features;
  for (const FeatureSet& g : gallery) features.push_back(set_matrix(g, kind, model));
  return classify_matrix(features, gallery, probe, set_matrix(probe, kind, model), h,
                         options.branch);
}

ClassificationResult classify(const Dataset& gallery, const Dataset& probes, const Model* model,
                              const Hyperparams& h, InferenceOptions options) {
  if (gallery.sets.empty()) throw Error(ErrorCode::EmptyGallery, "gallery has no sets");
  if (probes.sets.empty()) throw Error(ErrorCode::EmptyInput, "no probes to classify");
  if (gallery.kind != probes.kind || gallery.dim != probes.dim)
    throw Error(ErrorCode::DimensionMismatch, "gallery and probe datasets have different layouts");

  std::vector<Matrix> features;
  for (const FeatureSet& g : gallery.sets) features.push_back(set_matrix(g, gallery.kind, model));

  ClassificationResult result;
  for (const FeatureSet& p : probes.sets) {
    result.probes.push_back(classify_matrix(features, gallery.sets, p,
                                            set_matrix(p, probes.kind, model), h, options.branch));
    result.correct += result.probes.back().correct ? 1 : 0;
  }
  result.accuracy = static_cast<double>(result.correct) / static_cast<double>(result.probes.size());
  return result;
}

std::pair<Dataset, Dataset> split_gallery_probe(const Dataset& dataset) {
  Dataset gallery{dataset.kind, dataset.dim, {}};
  Dataset probes{dataset.kind, dataset.dim, {}};
  std::set<std::string> seen;
  for (const FeatureSet& s : dataset.sets) {
    if (seen.insert(s.label).second) {
      gallery.sets.push_back(s);
    } else {
      probes.sets.push_back(s);
    }
  }
  return {std::move(gallery), std::move(probes)};
}

// --- pairs file -------------------------------------------------------------

PairsFile parse_pairs(std::string_view json_text) {
  const Dataset ds = parse_dataset(json_text);
  const json doc = json::parse(json_text.begin(), json_text.end());
  auto it = doc.find("pairs");
  if (it == doc.end() || !it->is_array())
    throw Error(ErrorCode::ParseError, "pairs file: missing 'pairs' array");

  PairsFile out{ds.kind, ds.dim, {}};
  for (std::size_t k = 0; k < it->size(); ++k) {
    const json& p = (*it)[k];
    const std::string where = "pairs[" + std::to_string(k) + "]";
    if (!p.is_object() || !p.contains("a") || !p.contains("b") || !p["a"].is_string() ||
        !p["b"].is_string())
      throw Error(ErrorCode::ParseError, where + ": expected {\"a\": id, \"b\": id}");
    VerifyPair vp;
    try {
      vp.a = ds.find(p["a"].get<std::string>());
      vp.b = ds.find(p["b"].get<std::string>());
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, where + ": " + e.what());
    }
    if (p.contains("same")) {
      if (!p["same"].is_boolean()) throw Error(ErrorCode::ParseError, where + ".same: expected a boolean");
      vp.same = p["same"].get<bool>();
    } else {
      vp.same = vp.a.label == vp.b.label;
    }
    out.pairs.push_back(std::move(vp));
  }
  return out;
}

PairsFile load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_pairs(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string dump_pairs(const Dataset& dataset, const std::vector<PairRef>& pairs) {
  json doc = json::parse(dump_dataset(dataset));
  json list = json::array();
  for (const auto& [a, b, same] : pairs) list.push_back({{"a", a}, {"b", b}, {"same", same}});
  doc["pairs"] = std::move(list);
  return doc.dump();
}

std::vector<PairRef> make_pairs(const Dataset& dataset, std::size_t count, std::uint64_t seed) {
  std::vector<std::pair<std::size_t, std::size_t>> same, diff;
  for (std::size_t i = 0; i < dataset.sets.size(); ++i)
    for (std::size_t j = i + 1; j < dataset.sets.size(); ++j)
      (dataset.sets[i].label == dataset.sets[j].label ? same : diff).emplace_back(i, j);
  if (same.empty() || diff.empty())
    throw Error(ErrorCode::DegenerateLabels, "dataset cannot supply both same and different pairs");

  std::mt19937_64 rng(seed);
  std::vector<PairRef> out;
  for (std::size_t k = 0; k < count; ++k) {
    const auto& pool = k % 2 == 0 ? same : diff;
    const auto [i, j] = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    out.emplace_back(dataset.sets[i].id, dataset.sets[j].id, k % 2 == 0);
  }
  return out;
}

// --- ROC ----------------------------------------------------------------------

namespace {

std::pair<std::size_t, std::size_t> label_counts(std::span<const double> scores,
                                                 const std::vector<bool>& same) {
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "no scored pairs");
  if (scores.size() != same.size())
    throw Error(ErrorCode::DimensionMismatch, "scores and labels differ in length");
  const auto pos = static_cast<std::size_t>(std::count(same.begin(), same.end(), true));
  const std::size_t neg = same.size() - pos;
  if (pos == 0 || neg == 0)
    throw Error(ErrorCode::DegenerateLabels, "ROC needs both same and different pairs");
  return {pos, neg};
}

}  // namespace

RocPoint operating_point(std::span<const double> scores, const std::vector<bool>& same,
                         double threshold) {
  const auto [pos, neg] = label_counts(scores, same);
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < threshold) {
      if (same[i]) ++tp;
      else ++fp;
    }
  }
  return {threshold, static_cast<double>(fp) / static_cast<double>(neg),
          static_cast<double>(tp) / static_cast<double>(pos)};
}

std::vector<RocPoint> empirical_roc(std::span<const double> scores, const std::vector<bool>& same) {
  const auto [pos, neg] = label_counts(scores, same);
  for (double s : scores)
    if (!std::isfinite(s)) throw Error(ErrorCode::NonFinite, "non-finite verification score");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::vector<RocPoint> roc;
  roc.push_back({scores[order.front()], 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double s = scores[order[k]];
    for (; k < order.size() && scores[order[k]] == s; ++k) {
      if (same[order[k]]) ++tp;
      else ++fp;
    }
    const double fpr = fp == neg ? 1.0 : static_cast<double>(fp) / static_cast<double>(neg);
    const double tpr = tp == pos ? 1.0 : static_cast<double>(tp) / static_cast<double>(pos);
    roc.push_back({std::nextafter(s, std::numeric_limits<double>::infinity()), fpr, tpr});
  }
  return roc;
}

double roc_auc(std::span<const RocPoint> roc) {
  double area = 0.0;
  for (std::size_t k = 1; k < roc.size(); ++k)
    area += (roc[k].fpr - roc[k - 1].fpr) * (roc[k].tpr + roc[k - 1].tpr) * 0.5;
  return area;
}

VerificationResult verify_scores(std::vector<double> distances, std::vector<bool> same,
                                 std::span<const double> thresholds) {
  VerificationResult out;
  out.roc = empirical_roc(distances, same);
  out.auc = roc_auc(out.roc);

  std::vector<double> sorted(thresholds.begin(), thresholds.end());
  std::sort(sorted.begin(), sorted.end());
  double best_accuracy = -1.0;
  for (double t : sorted) {
    out.operating.push_back(operating_point(distances, same, t));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < distances.size(); ++i) correct += (distances[i] < t) == same[i];
    const double acc = static_cast<double>(correct) / static_cast<double>(distances.size());
    if (acc > best_accuracy) {
      best_accuracy = acc;
      out.threshold = t;
    }
  }
  if (sorted.empty()) out.threshold = out.roc.front().threshold;
  for (double d : distances) out.decisions.push_back(d < out.threshold);
  out.distances = std::move(distances);
  out.same = std::move(same);
  return out;
}

VerificationResult verify_pairs(std::span<const VerifyPair> pairs, FeatureKind kind,
                                const Model* model, const Hyperparams& h,
                                std::span<const double> thresholds, InferenceOptions options) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "no pairs to verify");
  std::vector<double> distances;
  std::vector<bool> same;
  for (const VerifyPair& p : pairs) {
    distances.push_back(
        solve_pair(set_matrix(p.a, kind, model), set_matrix(p.b, kind, model), options.branch, h)
            .distance);
    same.push_back(p.same);
  }
  return verify_scores(std::move(distances), std::move(same), thresholds);
}

}  // namespace dcscr
