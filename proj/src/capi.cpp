#include <exception>
#include <fstream>
#include <new>
#include <string>

#include "dcscr/dcscr.h"
#include "dcscr/harness.hpp"
#include "dcscr/training.hpp"

struct dcscr_dataset {
  dcscr::Dataset value;
};
struct dcscr_model {
  dcscr::Model value;
};
struct dcscr_pairs {
  dcscr::PairsFile value;
};
struct dcscr_classification {
  dcscr::ClassificationResult value;
};
struct dcscr_verification {
  dcscr::VerificationResult value;
};
struct dcscr_history {
  dcscr::TrainHistory value;
};

namespace {

thread_local std::string last_error;

dcscr_status to_status(dcscr::ErrorCode code) {
  using dcscr::ErrorCode;
  switch (code) {
    case ErrorCode::DimensionMismatch: return DCSCR_ERR_DIMENSION_MISMATCH;
    case ErrorCode::NotSymmetric: return DCSCR_ERR_NOT_SYMMETRIC;
    case ErrorCode::NotPositiveDefinite: return DCSCR_ERR_NOT_POSITIVE_DEFINITE;
    case ErrorCode::SingularKKT: return DCSCR_ERR_SINGULAR_KKT;
    case ErrorCode::EmptySet: return DCSCR_ERR_EMPTY_SET;
    case ErrorCode::NonFinite: return DCSCR_ERR_NON_FINITE;
    case ErrorCode::NumericalFailure: return DCSCR_ERR_NUMERICAL_FAILURE;
    case ErrorCode::ShapeNotFactorable: return DCSCR_ERR_SHAPE_NOT_FACTORABLE;
    case ErrorCode::InvalidLabel: return DCSCR_ERR_INVALID_LABEL;
    case ErrorCode::InvalidConfig: return DCSCR_ERR_INVALID_CONFIG;
    case ErrorCode::InsufficientClasses: return DCSCR_ERR_INSUFFICIENT_CLASSES;
    case ErrorCode::InsufficientSets: return DCSCR_ERR_INSUFFICIENT_SETS;
    case ErrorCode::ParseError: return DCSCR_ERR_PARSE;
    case ErrorCode::DuplicateSetId: return DCSCR_ERR_DUPLICATE_SET_ID;
    case ErrorCode::EmptyGallery: return DCSCR_ERR_EMPTY_GALLERY;
    case ErrorCode::EmptyInput: return DCSCR_ERR_EMPTY_INPUT;
    case ErrorCode::DegenerateLabels: return DCSCR_ERR_DEGENERATE_LABELS;
    case ErrorCode::IoError: return DCSCR_ERR_IO;
  }
  return DCSCR_ERR_INTERNAL;
}

dcscr_status fail(dcscr_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

// Runs body, translating exceptions into status codes.
template <class F>
dcscr_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return DCSCR_OK;
  } catch (const dcscr::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(DCSCR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DCSCR_ERR_INTERNAL, e.what());
  }
}

#define DCSCR_REQUIRE(cond)                                                     \
  do {                                                                          \
    if (!(cond)) return fail(DCSCR_ERR_INVALID_ARGUMENT, "invalid argument: " #cond); \
  } while (0)

dcscr::Hyperparams from_c(const dcscr_hyperparams* h) {
  dcscr::Hyperparams out;
  if (h == nullptr) return out;
  out.mu1 = h->mu1;
  out.mu2 = h->mu2;
  out.lambda1 = h->lambda1;
  out.lambda2 = h->lambda2;
  out.margin = h->margin;
  out.rho = h->rho;
  out.tol_constraint = h->tol_constraint;
  out.tol_iterate = h->tol_iterate;
  out.max_iters = h->max_iters;
  return out;
}

dcscr::Matrix column_major(const double* data, std::size_t dim, std::size_t cols) {
  dcscr::Matrix m(dim, cols);
  for (std::size_t c = 0; c < cols; ++c)
    for (std::size_t r = 0; r < dim; ++r) m(r, c) = data[c * dim + r];
  return m;
}

void copy_out(const dcscr::Vector& v, double* out) {
  if (out == nullptr) return;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
}

dcscr::PairKind branch_kind(dcscr_branch b) {
  return b == DCSCR_BRANCH_SAME ? dcscr::PairKind::Same : dcscr::PairKind::Different;
}

}  // namespace

extern "C" {

const char* dcscr_version(void) { return "1.0.0"; }

const char* dcscr_status_name(dcscr_status status) {
  switch (status) {
    case DCSCR_OK: return "OK";
    case DCSCR_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case DCSCR_ERR_INTERNAL: return "Internal";
    default: break;
  }
  for (int c = 0; c <= static_cast<int>(dcscr::ErrorCode::IoError); ++c) {
    const auto code = static_cast<dcscr::ErrorCode>(c);
    if (to_status(code) == status) return dcscr::to_string(code);
  }
  return "Unknown";
}

int dcscr_status_is_numerical(dcscr_status status) {
  switch (status) {
    case DCSCR_ERR_NOT_SYMMETRIC:
    case DCSCR_ERR_NOT_POSITIVE_DEFINITE:
    case DCSCR_ERR_SINGULAR_KKT:
    case DCSCR_ERR_NON_FINITE:
    case DCSCR_ERR_NUMERICAL_FAILURE:
    case DCSCR_ERR_INTERNAL:
      return 1;
    default:
      return 0;
  }
}

const char* dcscr_last_error(void) { return last_error.c_str(); }

void dcscr_hyperparams_default(dcscr_hyperparams* out) {
  if (out == nullptr) return;
  const dcscr::Hyperparams h;
  *out = {h.mu1, h.mu2, h.lambda1, h.lambda2, h.margin, h.rho, h.tol_constraint, h.tol_iterate,
          h.max_iters};
}

void dcscr_synth_config_default(dcscr_synth_config* out) {
  if (out == nullptr) return;
  const dcscr::SynthConfig c;
  *out = {c.classes, c.sets_per_class, c.frames_per_set, c.dim, c.separation, c.noise, c.seed};
}

void dcscr_model_config_default(dcscr_model_config* out) {
  if (out == nullptr) return;
  *out = {0, 0, 0, 0, 0, 1, 1};
}

void dcscr_train_config_default(dcscr_train_config* out) {
  if (out == nullptr) return;
  const dcscr::TrainConfig c;
  *out = {c.epochs_level1, c.epochs_level2, c.learning_rate_level1, c.learning_rate_level2,
          c.batch_size,    c.seed,          c.pairs_per_epoch,      c.positive_fraction};
}

// --- datasets ---

dcscr_status dcscr_dataset_load(const char* path, dcscr_dataset** out) {
  DCSCR_REQUIRE(path != nullptr && out != nullptr);
  return guarded([&] { *out = new dcscr_dataset{dcscr::load_dataset(path)}; });
}

dcscr_status dcscr_dataset_save(const dcscr_dataset* ds, const char* path) {
  DCSCR_REQUIRE(ds != nullptr && path != nullptr);
  return guarded([&] { dcscr::save_dataset(ds->value, path); });
}

dcscr_status dcscr_dataset_gen_synthetic(const dcscr_synth_config* config, dcscr_dataset** out) {
  DCSCR_REQUIRE(config != nullptr && out != nullptr);
  return guarded([&] {
    const dcscr::SynthConfig c{config->classes, config->sets_per_class, config->frames_per_set,
                               config->dim,     config->separation,     config->noise,
                               config->seed};
    *out = new dcscr_dataset{dcscr::gen_synthetic(c)};
  });
}

void dcscr_dataset_free(dcscr_dataset* ds) { delete ds; }

size_t dcscr_dataset_dim(const dcscr_dataset* ds) { return ds ? ds->value.dim : 0; }

size_t dcscr_dataset_num_sets(const dcscr_dataset* ds) { return ds ? ds->value.sets.size() : 0; }

int dcscr_dataset_is_raw_pixels(const dcscr_dataset* ds) {
  return ds && ds->value.kind == dcscr::FeatureKind::RawPixels;
}

const char* dcscr_dataset_set_id(const dcscr_dataset* ds, size_t index) {
  if (!ds || index >= ds->value.sets.size()) return nullptr;
  return ds->value.sets[index].id.c_str();
}

const char* dcscr_dataset_set_label(const dcscr_dataset* ds, size_t index) {
  if (!ds || index >= ds->value.sets.size()) return nullptr;
  return ds->value.sets[index].label.c_str();
}

size_t dcscr_dataset_set_frames(const dcscr_dataset* ds, size_t index) {
  if (!ds || index >= ds->value.sets.size()) return 0;
  return ds->value.sets[index].frames.size();
}

dcscr_status dcscr_dataset_copy_set(const dcscr_dataset* ds, size_t index, double* buf,
                                    size_t buf_len) {
  DCSCR_REQUIRE(ds != nullptr && buf != nullptr && index < ds->value.sets.size());
  const auto& set = ds->value.sets[index];
  if (buf_len < set.frames.size() * ds->value.dim)
    return fail(DCSCR_ERR_DIMENSION_MISMATCH, "buffer too small for set '" + set.id + "'");
  std::size_t k = 0;
  for (const auto& frame : set.frames)
    for (double v : frame.values()) buf[k++] = v;
  return DCSCR_OK;
}

dcscr_status dcscr_dataset_find(const dcscr_dataset* ds, const char* id, size_t* index) {
  DCSCR_REQUIRE(ds != nullptr && id != nullptr && index != nullptr);
  for (std::size_t i = 0; i < ds->value.sets.size(); ++i) {
    if (ds->value.sets[i].id == id) {
      *index = i;
      return DCSCR_OK;
    }
  }
  return fail(DCSCR_ERR_INVALID_ARGUMENT, std::string("no set with id '") + id + "'");
}

dcscr_status dcscr_dataset_write_pairs(const dcscr_dataset* ds, size_t count, uint64_t seed,
                                       const char* path) {
  DCSCR_REQUIRE(ds != nullptr && path != nullptr);
  return guarded([&] {
    const std::string text = dcscr::dump_pairs(ds->value, dcscr::make_pairs(ds->value, count, seed));
    std::ofstream out(path);
    if (!out) throw dcscr::Error(dcscr::ErrorCode::IoError, std::string("cannot write ") + path);
    out << text << '\n';
  });
}

// --- single pair ---

dcscr_status dcscr_solve_pair(const double* x, size_t dim, size_t m, const double* y, size_t n,
                              int same, const dcscr_hyperparams* h, double* alpha_out,
                              double* beta_out, dcscr_pair_info* info_out) {
  DCSCR_REQUIRE(x != nullptr && y != nullptr && dim > 0);
  return guarded([&] {
    const dcscr::CSCRSolution sol =
        dcscr::solve_pair(column_major(x, dim, m), column_major(y, dim, n),
                          same ? dcscr::PairKind::Same : dcscr::PairKind::Different, from_c(h));
    copy_out(sol.alpha, alpha_out);
    copy_out(sol.beta, beta_out);
    if (info_out != nullptr)
      *info_out = {sol.distance, sol.iterations_used, sol.converged ? 1 : 0, sol.residual_alpha,
                   sol.residual_beta};
  });
}

dcscr_status dcscr_kkt_solve(const double* x, size_t dim, size_t m, const double* y, size_t n,
                             double mu, double lambda1, double lambda2, double* alpha_out,
                             double* beta_out, double* distance_out) {
  DCSCR_REQUIRE(x != nullptr && y != nullptr && dim > 0);
  return guarded([&] {
    const dcscr::KktSolution sol =
        dcscr::kkt_qp_solve(column_major(x, dim, m), column_major(y, dim, n), mu, lambda1, lambda2);
    copy_out(sol.alpha, alpha_out);
    copy_out(sol.beta, beta_out);
    if (distance_out != nullptr) *distance_out = sol.distance;
  });
}

// --- models ---

dcscr_status dcscr_model_init(const dcscr_dataset* ds, const dcscr_model_config* config,
                              dcscr_model** out) {
  DCSCR_REQUIRE(ds != nullptr && out != nullptr);
  return guarded([&] {
    dcscr::ModelConfig c;
    if (config != nullptr) {
      c.encoder_dim = config->encoder_dim;
      if (config->grid_height || config->grid_width || config->grid_channels)
        c.grid = dcscr::GridShape{config->grid_height, config->grid_width, config->grid_channels};
      c.embedding_dim = config->embedding_dim;
      c.use_attention = config->use_attention != 0;
      c.seed = config->seed;
    }
    *out = new dcscr_model{dcscr::init_model(ds->value, c)};
  });
}

dcscr_status dcscr_model_load(const char* path, dcscr_model** out) {
  DCSCR_REQUIRE(path != nullptr && out != nullptr);
  return guarded([&] { *out = new dcscr_model{dcscr::load_model(path)}; });
}

dcscr_status dcscr_model_save(const dcscr_model* model, const char* path) {
  DCSCR_REQUIRE(model != nullptr && path != nullptr);
  return guarded([&] { dcscr::save_model(model->value, path); });
}

void dcscr_model_free(dcscr_model* model) { delete model; }

size_t dcscr_model_embedding_dim(const dcscr_model* model) {
  return model ? model->value.embedding_dim() : 0;
}

// --- training ---

dcscr_status dcscr_train(dcscr_model* model, const dcscr_dataset* ds,
                         const dcscr_train_config* config, const dcscr_hyperparams* h,
                         dcscr_history** level1_out, dcscr_history** level2_out) {
  DCSCR_REQUIRE(model != nullptr && ds != nullptr);
  return guarded([&] {
    dcscr::TrainConfig c;
    if (config != nullptr) {
      c.epochs_level1 = config->epochs_level1;
      c.epochs_level2 = config->epochs_level2;
      c.learning_rate_level1 = config->learning_rate_level1;
      c.learning_rate_level2 = config->learning_rate_level2;
      c.batch_size = config->batch_size;
      c.seed = config->seed;
      c.pairs_per_epoch = config->pairs_per_epoch;
      c.positive_fraction = config->positive_fraction;
    }
    dcscr::TrainResult l1 = dcscr::pretrain_level1(ds->value, model->value, c);
    dcscr::TrainResult l2 = dcscr::train_level2(ds->value, std::move(l1.model), c, from_c(h));
    model->value = std::move(l2.model);
    if (level1_out != nullptr) *level1_out = new dcscr_history{std::move(l1.history)};
    if (level2_out != nullptr) *level2_out = new dcscr_history{std::move(l2.history)};
  });
}

void dcscr_history_free(dcscr_history* history) { delete history; }

size_t dcscr_history_epochs(const dcscr_history* history) {
  return history ? history->value.epochs.size() : 0;
}

double dcscr_history_mean_loss(const dcscr_history* history, size_t epoch) {
  if (!history || epoch >= history->value.epochs.size()) return 0.0;
  return history->value.epochs[epoch].mean_loss;
}

double dcscr_history_converged_fraction(const dcscr_history* history, size_t epoch) {
  if (!history || epoch >= history->value.epochs.size()) return 0.0;
  return history->value.epochs[epoch].converged_fraction;
}

dcscr_status dcscr_history_write_csv(const dcscr_history* history, const char* path) {
  DCSCR_REQUIRE(history != nullptr && path != nullptr);
  return guarded([&] {
    std::ofstream out(path);
    if (!out) throw dcscr::Error(dcscr::ErrorCode::IoError, std::string("cannot write ") + path);
    history->value.write_csv(out);
  });
}

// --- classification ---

dcscr_status dcscr_classify(const dcscr_dataset* gallery, const dcscr_dataset* probes,
                            const dcscr_model* model, const dcscr_hyperparams* h,
                            dcscr_branch branch, dcscr_classification** out) {
  DCSCR_REQUIRE(gallery != nullptr && probes != nullptr && out != nullptr);
  return guarded([&] {
    *out = new dcscr_classification{dcscr::classify(gallery->value, probes->value,
                                                    model ? &model->value : nullptr, from_c(h),
                                                    {branch_kind(branch)})};
  });
}

void dcscr_classification_free(dcscr_classification* result) { delete result; }

size_t dcscr_classification_count(const dcscr_classification* result) {
  return result ? result->value.probes.size() : 0;
}

const char* dcscr_classification_probe_id(const dcscr_classification* result, size_t i) {
  if (!result || i >= result->value.probes.size()) return nullptr;
  return result->value.probes[i].probe_id.c_str();
}

const char* dcscr_classification_predicted(const dcscr_classification* result, size_t i) {
  if (!result || i >= result->value.probes.size()) return nullptr;
  return result->value.probes[i].predicted.c_str();
}

const char* dcscr_classification_truth(const dcscr_classification* result, size_t i) {
  if (!result || i >= result->value.probes.size()) return nullptr;
  return result->value.probes[i].true_label.c_str();
}

double dcscr_classification_accuracy(const dcscr_classification* result) {
  return result ? result->value.accuracy : 0.0;
}

// --- verification ---

dcscr_status dcscr_pairs_load(const char* path, dcscr_pairs** out) {
  DCSCR_REQUIRE(path != nullptr && out != nullptr);
  return guarded([&] { *out = new dcscr_pairs{dcscr::load_pairs(path)}; });
}

void dcscr_pairs_free(dcscr_pairs* pairs) { delete pairs; }

size_t dcscr_pairs_count(const dcscr_pairs* pairs) { return pairs ? pairs->value.pairs.size() : 0; }

dcscr_status dcscr_verify(const dcscr_pairs* pairs, const dcscr_model* model,
                          const dcscr_hyperparams* h, dcscr_branch branch, const double* thresholds,
                          size_t threshold_count, dcscr_verification** out) {
  DCSCR_REQUIRE(pairs != nullptr && out != nullptr && (thresholds != nullptr || threshold_count == 0));
  return guarded([&] {
    *out = new dcscr_verification{dcscr::verify_pairs(
        pairs->value.pairs, pairs->value.kind, model ? &model->value : nullptr, from_c(h),
        std::span<const double>(thresholds, threshold_count), {branch_kind(branch)})};
  });
}

void dcscr_verification_free(dcscr_verification* result) { delete result; }

double dcscr_verification_auc(const dcscr_verification* result) {
  return result ? result->value.auc : 0.0;
}

size_t dcscr_verification_pair_count(const dcscr_verification* result) {
  return result ? result->value.distances.size() : 0;
}

double dcscr_verification_distance(const dcscr_verification* result, size_t i) {
  if (!result || i >= result->value.distances.size()) return 0.0;
  return result->value.distances[i];
}

size_t dcscr_verification_point_count(const dcscr_verification* result, int which) {
  if (!result) return 0;
  return which == 0 ? result->value.roc.size() : result->value.operating.size();
}

dcscr_status dcscr_verification_point(const dcscr_verification* result, int which, size_t i,
                                      double* threshold, double* fpr, double* tpr) {
  DCSCR_REQUIRE(result != nullptr);
  const auto& points = which == 0 ? result->value.roc : result->value.operating;
  DCSCR_REQUIRE(i < points.size());
  if (threshold) *threshold = points[i].threshold;
  if (fpr) *fpr = points[i].fpr;
  if (tpr) *tpr = points[i].tpr;
  return DCSCR_OK;
}

// --- self checks ---

dcscr_status dcscr_run_check(const char* suite, dcscr_line_callback callback, void* user,
                             int* failures) {
  DCSCR_REQUIRE(suite != nullptr);
  return guarded([&] {
    int failed = 0;
    for (const dcscr::CheckLine& line : dcscr::run_check_suite(suite)) {
      failed += line.passed ? 0 : 1;
      if (callback != nullptr) {
        const std::string text =
            std::string(line.passed ? "PASS " : "FAIL ") + line.name + " (" + line.detail + ")";
        callback(text.c_str(), user);
      }
    }
    if (failures != nullptr) *failures = failed;
  });
}

}  // extern "C"
