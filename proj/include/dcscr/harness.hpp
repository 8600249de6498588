#pragma once

// Evaluation protocols on top of the CSCR distance, plus model persistence.
//
// Classification: every gallery set is compared with the probe and the probe
// takes the label of the closest gallery set (first one on exact ties).
// Verification: a pair is declared "same" iff its distance is below the
// threshold; ROC/AUC summarize all thresholds.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "dcscr/cscr.hpp"
#include "dcscr/dataset.hpp"
#include "dcscr/features.hpp"

namespace dcscr {

// --- model persistence ----------------------------------------------------

std::string dump_model(const Model& model);
Model parse_model(std::string_view json_text);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

// Model sized for `dataset` (input dim, class count and labels filled in).
Model init_model(const Dataset& dataset, ModelConfig config);

// Feature matrix a set contributes to a CSCR comparison. Precomputed
// embeddings are used as they are; raw pixels go through the model, or are
// used directly when no model is given.
Matrix set_matrix(const FeatureSet& set, FeatureKind kind, const Model* model);

// --- classification -------------------------------------------------------

struct ProbeResult {
  std::string probe_id;
  std::string true_label;
  std::string predicted;
  std::vector<double> gallery_distances;  // gallery order
  std::vector<std::pair<std::string, double>> class_distances;  // first-seen label order
  bool correct = false;
};

struct ClassificationResult {
  std::vector<ProbeResult> probes;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct InferenceOptions {
  // Which mu the comparisons use: mu1 (Same) or mu2 (Different).
  PairKind branch = PairKind::Same;
};

ProbeResult classify_probe(std::span<const FeatureSet> gallery, const FeatureSet& probe,
                           FeatureKind kind, const Model* model, const Hyperparams& h,
                           InferenceOptions options = {});

ClassificationResult classify(const Dataset& gallery, const Dataset& probes, const Model* model,
                              const Hyperparams& h, InferenceOptions options = {});

// Splits a dataset into one gallery set per class (the first set seen for
// each label) and the remaining sets as probes.
std::pair<Dataset, Dataset> split_gallery_probe(const Dataset& dataset);

// --- verification ---------------------------------------------------------

struct VerifyPair {
  FeatureSet a;
  FeatureSet b;
  bool same = false;
};

struct PairsFile {
  FeatureKind kind = FeatureKind::RawPixels;
  std::size_t dim = 0;
  std::vector<VerifyPair> pairs;
};

// A dataset document with an extra "pairs" array of {"a": id, "b": id,
// "same": bool}; "same" defaults to label equality.
PairsFile parse_pairs(std::string_view json_text);
PairsFile load_pairs(const std::filesystem::path& path);
using PairRef = std::tuple<std::string, std::string, bool>;  // (id a, id b, same)
std::string dump_pairs(const Dataset& dataset, const std::vector<PairRef>& pairs);
// `count` pairs, alternating same-label and different-label, seeded.
std::vector<PairRef> make_pairs(const Dataset& dataset, std::size_t count, std::uint64_t seed);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

// Operating point of "same iff score < threshold".
RocPoint operating_point(std::span<const double> scores, const std::vector<bool>& same, double threshold);

// Full empirical ROC: one point per distinct score plus the (0,0) start,
// sorted by threshold, ending at (1,1).
std::vector<RocPoint> empirical_roc(std::span<const double> scores, const std::vector<bool>& same);

// Trapezoid area under a ROC sorted by threshold.
double roc_auc(std::span<const RocPoint> roc);

struct VerificationResult {
  std::vector<double> distances;
  std::vector<bool> same;
  std::vector<RocPoint> roc;             // empirical curve
  std::vector<RocPoint> operating;       // at the requested thresholds
  double threshold = 0.0;                // requested threshold with best accuracy
  std::vector<bool> decisions;           // at `threshold`
  double auc = 0.0;
};

VerificationResult verify_scores(std::vector<double> distances, std::vector<bool> same,
                                 std::span<const double> thresholds);

VerificationResult verify_pairs(std::span<const VerifyPair> pairs, FeatureKind kind,
                                const Model* model, const Hyperparams& h,
                                std::span<const double> thresholds,
                                InferenceOptions options = {PairKind::Different});

// --- built-in verification suites -----------------------------------------

struct CheckLine {
  std::string name;
  bool passed = false;
  std::string detail;
};

// suite is one of "oracle", "gradients", "invariants".
std::vector<CheckLine> run_check_suite(std::string_view suite);

}  // namespace dcscr
