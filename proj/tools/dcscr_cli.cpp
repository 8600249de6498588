// Command-line front end. Talks to the library only through the C API.
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcscr/dcscr.h"
#include "json.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Failure {
  int exit_code;
  std::string message;
};

void check(dcscr_status status) {
  if (status == DCSCR_OK) return;
  throw Failure{dcscr_status_is_numerical(status) ? kExitNumerical : kExitValidation,
                std::string(dcscr_status_name(status)) + ": " + dcscr_last_error()};
}

[[noreturn]] void invalid(const std::string& message) { throw Failure{kExitValidation, message}; }

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using DatasetPtr = std::unique_ptr<dcscr_dataset, Deleter<dcscr_dataset, dcscr_dataset_free>>;
using ModelPtr = std::unique_ptr<dcscr_model, Deleter<dcscr_model, dcscr_model_free>>;
using PairsPtr = std::unique_ptr<dcscr_pairs, Deleter<dcscr_pairs, dcscr_pairs_free>>;
using HistoryPtr = std::unique_ptr<dcscr_history, Deleter<dcscr_history, dcscr_history_free>>;
using ClassificationPtr =
    std::unique_ptr<dcscr_classification, Deleter<dcscr_classification, dcscr_classification_free>>;
using VerificationPtr =
    std::unique_ptr<dcscr_verification, Deleter<dcscr_verification, dcscr_verification_free>>;

DatasetPtr load_dataset(const std::string& path) {
  dcscr_dataset* ds = nullptr;
  check(dcscr_dataset_load(path.c_str(), &ds));
  return DatasetPtr(ds);
}

ModelPtr load_model(const std::string& path) {
  if (path.empty()) return nullptr;
  dcscr_model* model = nullptr;
  check(dcscr_model_load(path.c_str(), &model));
  return ModelPtr(model);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) invalid("cannot write " + path);
  out.precision(17);
  return out;
}

struct HyperFlags {
  dcscr_hyperparams h{};
  std::string branch;

  void attach(CLI::App* app, const std::string& default_branch) {
    dcscr_hyperparams_default(&h);
    branch = default_branch;
    app->add_option("--mu1", h.mu1, "Weight of the distance term for same-class pairs")->capture_default_str();
    app->add_option("--mu2", h.mu2, "Weight of the hinge term for different-class pairs")->capture_default_str();
    app->add_option("--lambda1", h.lambda1, "Ridge weight on the first set's coefficients")->capture_default_str();
    app->add_option("--lambda2", h.lambda2, "Ridge weight on the second set's coefficients")->capture_default_str();
    app->add_option("--margin", h.margin, "Hinge margin on the squared distance")->capture_default_str();
    app->add_option("--rho", h.rho, "ADMM penalty")->capture_default_str();
    app->add_option("--tol", h.tol_constraint, "Constraint residual tolerance")->capture_default_str();
    app->add_option("--tol-iterate", h.tol_iterate, "Iterate change tolerance")->capture_default_str();
    app->add_option("--max-iters", h.max_iters, "ADMM iteration cap")->capture_default_str();
  }

  void attach_branch(CLI::App* app) {
    app->add_option("--branch", branch, "Which mu inference uses: same (mu1) or diff (mu2)")
        ->check(CLI::IsMember({"same", "diff"}))
        ->capture_default_str();
  }

  dcscr_branch selected() const { return branch == "same" ? DCSCR_BRANCH_SAME : DCSCR_BRANCH_DIFFERENT; }
};

std::vector<double> set_buffer(const dcscr_dataset* ds, std::size_t index, std::size_t* frames) {
  *frames = dcscr_dataset_set_frames(ds, index);
  std::vector<double> buf(*frames * dcscr_dataset_dim(ds));
  check(dcscr_dataset_copy_set(ds, index, buf.data(), buf.size()));
  return buf;
}

std::size_t set_index(const dcscr_dataset* ds, const std::string& id) {
  if (id.empty()) {
    if (dcscr_dataset_num_sets(ds) == 0) invalid("dataset has no sets");
    return 0;
  }
  std::size_t index = 0;
  check(dcscr_dataset_find(ds, id.c_str(), &index));
  return index;
}

int run_solve_pair(const std::string& a_path, const std::string& a_id, const std::string& b_path,
                   const std::string& b_id, bool same, const HyperFlags& flags,
                   const std::string& out_path) {
  DatasetPtr a = load_dataset(a_path);
  DatasetPtr b = load_dataset(b_path);
  if (dcscr_dataset_dim(a.get()) != dcscr_dataset_dim(b.get()))
    invalid("sets have different feature dimensions");
  std::size_t m = 0, n = 0;
  const auto x = set_buffer(a.get(), set_index(a.get(), a_id), &m);
  const auto y = set_buffer(b.get(), set_index(b.get(), b_id), &n);
  std::vector<double> alpha(m), beta(n);
  dcscr_pair_info info{};
  check(dcscr_solve_pair(x.data(), dcscr_dataset_dim(a.get()), m, y.data(), n, same ? 1 : 0,
                         &flags.h, alpha.data(), beta.data(), &info));
  nlohmann::json doc = {{"alpha", alpha},
                        {"beta", beta},
                        {"distance", info.distance},
                        {"iterations", info.iterations},
                        {"converged", info.converged != 0}};
  open_out(out_path) << doc.dump(2) << '\n';
  return 0;
}

int run_classify(const std::string& gallery_path, const std::string& probe_path,
                 const std::string& model_path, const HyperFlags& flags, const std::string& out_path) {
  DatasetPtr gallery = load_dataset(gallery_path);
  DatasetPtr probes = load_dataset(probe_path);
  ModelPtr model = load_model(model_path);
  dcscr_classification* raw = nullptr;
  check(dcscr_classify(gallery.get(), probes.get(), model.get(), &flags.h, flags.selected(), &raw));
  ClassificationPtr result(raw);

  std::ofstream out = open_out(out_path);
  out << "probe_id,predicted,true,correct\n";
  for (std::size_t i = 0; i < dcscr_classification_count(result.get()); ++i) {
    const std::string predicted = dcscr_classification_predicted(result.get(), i);
    const std::string truth = dcscr_classification_truth(result.get(), i);
    out << dcscr_classification_probe_id(result.get(), i) << ',' << predicted << ',' << truth << ','
        << (predicted == truth ? 1 : 0) << '\n';
  }
  out << "accuracy," << dcscr_classification_accuracy(result.get()) << '\n';
  std::cout << "accuracy " << dcscr_classification_accuracy(result.get()) << '\n';
  return 0;
}

int run_verify(const std::string& pairs_path, const std::string& model_path,
               const std::vector<double>& thresholds, const HyperFlags& flags,
               const std::string& out_path) {
  dcscr_pairs* raw_pairs = nullptr;
  check(dcscr_pairs_load(pairs_path.c_str(), &raw_pairs));
  PairsPtr pairs(raw_pairs);
  ModelPtr model = load_model(model_path);
  dcscr_verification* raw = nullptr;
  check(dcscr_verify(pairs.get(), model.get(), &flags.h, flags.selected(),
                     thresholds.empty() ? nullptr : thresholds.data(), thresholds.size(), &raw));
  VerificationPtr result(raw);

  const int which = thresholds.empty() ? 0 : 1;
  std::ofstream out = open_out(out_path);
  out << "threshold,fpr,tpr\n";
  for (std::size_t i = 0; i < dcscr_verification_point_count(result.get(), which); ++i) {
    double t = 0, fpr = 0, tpr = 0;
    check(dcscr_verification_point(result.get(), which, i, &t, &fpr, &tpr));
    out << t << ',' << fpr << ',' << tpr << '\n';
  }
  out << "auc," << dcscr_verification_auc(result.get()) << '\n';
  std::cout << "auc " << dcscr_verification_auc(result.get()) << '\n';
  return 0;
}

template <class T>
void read_field(const nlohmann::json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

int run_train(const std::string& data_path, const std::string& config_path,
              const std::string& init_model_path, const std::string& model_out,
              const std::string& history_out, const std::string& history1_out,
              const HyperFlags& flags, const CLI::Option* seed_flag, std::uint64_t seed) {
  DatasetPtr data = load_dataset(data_path);

  dcscr_train_config tc{};
  dcscr_train_config_default(&tc);
  dcscr_model_config mc{};
  dcscr_model_config_default(&mc);
  dcscr_hyperparams h = flags.h;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) invalid("cannot open " + config_path);
    try {
      const nlohmann::json cfg = nlohmann::json::parse(in);
      read_field(cfg, "epochs_level1", tc.epochs_level1);
      read_field(cfg, "epochs_level2", tc.epochs_level2);
      read_field(cfg, "learning_rate_level1", tc.learning_rate_level1);
      read_field(cfg, "learning_rate_level2", tc.learning_rate_level2);
      read_field(cfg, "batch_size", tc.batch_size);
      read_field(cfg, "seed", tc.seed);
      read_field(cfg, "pairs_per_epoch", tc.pairs_per_epoch);
      read_field(cfg, "positive_fraction", tc.positive_fraction);
      if (cfg.contains("model")) {
        const auto& m = cfg.at("model");
        read_field(m, "encoder_dim", mc.encoder_dim);
        read_field(m, "embedding_dim", mc.embedding_dim);
        read_field(m, "seed", mc.seed);
        if (m.contains("use_attention")) mc.use_attention = m.at("use_attention").get<bool>() ? 1 : 0;
        if (m.contains("grid")) {
          const auto& g = m.at("grid");
          mc.grid_height = g.at(0).get<std::size_t>();
          mc.grid_width = g.at(1).get<std::size_t>();
          mc.grid_channels = g.at(2).get<std::size_t>();
        }
      }
      if (cfg.contains("hyperparams")) {
        const auto& j = cfg.at("hyperparams");
        read_field(j, "mu1", h.mu1);
        read_field(j, "mu2", h.mu2);
        read_field(j, "lambda1", h.lambda1);
        read_field(j, "lambda2", h.lambda2);
        read_field(j, "margin", h.margin);
        read_field(j, "rho", h.rho);
        read_field(j, "tol_constraint", h.tol_constraint);
        read_field(j, "tol_iterate", h.tol_iterate);
        read_field(j, "max_iters", h.max_iters);
      }
    } catch (const nlohmann::json::exception& e) {
      invalid(config_path + ": " + e.what());
    }
  }
  if (seed_flag->count() > 0) tc.seed = seed;

  ModelPtr model;
  if (!init_model_path.empty()) {
    model = load_model(init_model_path);
  } else {
    dcscr_model* raw = nullptr;
    check(dcscr_model_init(data.get(), &mc, &raw));
    model.reset(raw);
  }

  dcscr_history* raw1 = nullptr;
  dcscr_history* raw2 = nullptr;
  check(dcscr_train(model.get(), data.get(), &tc, &h, &raw1, &raw2));
  HistoryPtr level1(raw1), level2(raw2);
  check(dcscr_model_save(model.get(), model_out.c_str()));
  check(dcscr_history_write_csv(level2.get(), history_out.c_str()));
  if (!history1_out.empty()) check(dcscr_history_write_csv(level1.get(), history1_out.c_str()));

  const std::size_t epochs = dcscr_history_epochs(level2.get());
  if (epochs > 0)
    std::cout << "level-2 mean loss " << dcscr_history_mean_loss(level2.get(), 0) << " -> "
              << dcscr_history_mean_loss(level2.get(), epochs - 1) << '\n';
  return 0;
}

int run_check(const std::string& suite) {
  int failures = 0;
  check(dcscr_run_check(
      suite.c_str(), [](const char* line, void*) { std::cout << line << '\n'; }, nullptr, &failures));
  std::cout << (failures == 0 ? "suite passed" : "suite FAILED") << '\n';
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-specific collaborative representation set distance toolkit"};
  app.require_subcommand(1);

  dcscr_synth_config synth{};
  dcscr_synth_config_default(&synth);
  std::string out_path;
  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic labeled set dataset");
  gen->add_option("--classes", synth.classes)->capture_default_str();
  gen->add_option("--sets", synth.sets_per_class, "Sets per class")->capture_default_str();
  gen->add_option("--frames", synth.frames_per_set, "Frames per set")->capture_default_str();
  gen->add_option("--dim", synth.dim)->capture_default_str();
  gen->add_option("--separation", synth.separation, "Radius of the class-center sphere")->capture_default_str();
  gen->add_option("--noise", synth.noise, "Per-coordinate noise scale")->capture_default_str();
  gen->add_option("--seed", synth.seed)->capture_default_str();
  gen->add_option("--out", out_path)->required();

  std::string data_path;
  std::size_t pair_count = 100;
  std::uint64_t pair_seed = 1;
  auto* mkpairs = app.add_subcommand("make-pairs", "Draw a verification pairs file from a dataset");
  mkpairs->add_option("--data", data_path)->required();
  mkpairs->add_option("--count", pair_count)->capture_default_str();
  mkpairs->add_option("--seed", pair_seed)->capture_default_str();
  mkpairs->add_option("--out", out_path)->required();

  dcscr_model_config mc{};
  dcscr_model_config_default(&mc);
  std::vector<std::size_t> grid;
  bool no_attention = false;
  auto* init = app.add_subcommand("init-model", "Create an untrained model for a dataset");
  init->add_option("--data", data_path)->required();
  init->add_option("--encoder-dim", mc.encoder_dim);
  init->add_option("--grid", grid, "Spatial grid H W C")->expected(3);
  init->add_option("--embedding-dim", mc.embedding_dim);
  init->add_flag("--no-attention", no_attention);
  init->add_option("--seed", mc.seed)->capture_default_str();
  init->add_option("--out", out_path)->required();

  std::string set_a, set_b, id_a, id_b;
  bool same = false, diff = false;
  HyperFlags solve_flags;
  auto* solve = app.add_subcommand("solve-pair", "Solve the CSCR coefficients for two sets");
  solve->add_option("--set-a", set_a, "Dataset file holding the first set")->required();
  solve->add_option("--set-b", set_b, "Dataset file holding the second set")->required();
  solve->add_option("--id-a", id_a, "Set id in --set-a (default: first set)");
  solve->add_option("--id-b", id_b, "Set id in --set-b (default: first set)");
  auto* same_flag = solve->add_flag("--same", same, "Same-class pair (mu1)");
  solve->add_flag("--diff", diff, "Different-class pair (mu2)")->excludes(same_flag);
  solve_flags.attach(solve, "same");
  std::uint64_t unused_seed = 0;
  solve->add_option("--seed", unused_seed, "Accepted for uniformity; the solve is deterministic");
  solve->add_option("--out", out_path)->required();

  std::string gallery_path, probe_path, model_path;
  HyperFlags classify_flags;
  auto* cls = app.add_subcommand("classify", "Nearest-set classification of probe sets");
  cls->add_option("--gallery", gallery_path)->required();
  cls->add_option("--probe", probe_path)->required();
  cls->add_option("--model", model_path, "Model file (omit to compare raw features)");
  classify_flags.attach(cls, "same");
  classify_flags.attach_branch(cls);
  cls->add_option("--seed", unused_seed, "Accepted for uniformity; inference is deterministic");
  cls->add_option("--out", out_path)->required();

  std::string pairs_path;
  std::vector<double> thresholds;
  HyperFlags verify_flags;
  auto* ver = app.add_subcommand("verify-pairs", "Pair verification with ROC and AUC");
  ver->add_option("--pairs", pairs_path)->required();
  ver->add_option("--model", model_path, "Model file (omit to compare raw features)");
  ver->add_option("--thresholds", thresholds, "Comma-separated distance thresholds")->delimiter(',');
  verify_flags.attach(ver, "diff");
  verify_flags.attach_branch(ver);
  ver->add_option("--seed", unused_seed, "Accepted for uniformity; inference is deterministic");
  ver->add_option("--out", out_path)->required();

  std::string config_path, model_out, history_out, history1_out, init_model_path;
  HyperFlags train_flags;
  std::uint64_t train_seed = 0;
  auto* train = app.add_subcommand("train", "Level-1 pretraining followed by level-2 CSCR training");
  train->add_option("--data", data_path)->required();
  train->add_option("--config", config_path, "Training configuration JSON");
  train->add_option("--init-model", init_model_path, "Start from this model instead of a fresh one");
  train->add_option("--out-model", model_out)->required();
  train->add_option("--history", history_out, "Level-2 loss curve CSV")->required();
  train->add_option("--history-level1", history1_out, "Level-1 loss curve CSV");
  train_flags.attach(train, "same");
  auto* train_seed_flag = train->add_option("--seed", train_seed, "Overrides the config seed");

  std::string suite;
  auto* chk = app.add_subcommand("check", "Run a built-in verification suite");
  chk->add_option("--suite", suite)->required()->check(CLI::IsMember({"oracle", "gradients", "invariants"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (gen->parsed()) {
      dcscr_dataset* raw = nullptr;
      check(dcscr_dataset_gen_synthetic(&synth, &raw));
      DatasetPtr ds(raw);
      check(dcscr_dataset_save(ds.get(), out_path.c_str()));
      return 0;
    }
    if (mkpairs->parsed()) {
      DatasetPtr ds = load_dataset(data_path);
      check(dcscr_dataset_write_pairs(ds.get(), pair_count, pair_seed, out_path.c_str()));
      return 0;
    }
    if (init->parsed()) {
      DatasetPtr ds = load_dataset(data_path);
      if (!grid.empty()) {
        mc.grid_height = grid[0];
        mc.grid_width = grid[1];
        mc.grid_channels = grid[2];
      }
      mc.use_attention = no_attention ? 0 : 1;
      dcscr_model* raw = nullptr;
      check(dcscr_model_init(ds.get(), &mc, &raw));
      ModelPtr model(raw);
      check(dcscr_model_save(model.get(), out_path.c_str()));
      return 0;
    }
    if (solve->parsed()) return run_solve_pair(set_a, id_a, set_b, id_b, !diff, solve_flags, out_path);
    if (cls->parsed()) return run_classify(gallery_path, probe_path, model_path, classify_flags, out_path);
    if (ver->parsed()) return run_verify(pairs_path, model_path, thresholds, verify_flags, out_path);
    if (train->parsed())
      return run_train(data_path, config_path, init_model_path, model_out, history_out, history1_out,
                       train_flags, train_seed_flag, train_seed);
    if (chk->parsed()) return run_check(suite);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.exit_code;
  }
  return 0;
}
