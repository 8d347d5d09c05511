// Copyright (c) 2026 sclfish contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end for the sclfish library: train and evaluate
// domain-generalization text classifiers, generate the synthetic
// multi-platform benchmark, and run alignment diagnostics.
//
// Exit codes:
//   0  success
//   2  invalid usage or configuration
//   3  data, split, or checkpoint errors
//   4  numeric failure (non-finite loss or parameters) during training
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "sclfish/data.hpp"
#include "sclfish/eval.hpp"
#include "sclfish/model.hpp"
#include "sclfish/trainers.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sclfish;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

void apply_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

void check_labels(const std::vector<Doc>& docs, std::size_t classes,
                  const std::string& which) {
  for (const Doc& d : docs) {
    if (d.label < 0 || static_cast<std::size_t>(d.label) >= classes) {
      throw DataError(which + ": label " + std::to_string(d.label) +
                      " out of range for " + std::to_string(classes) +
                      " classes");
    }
  }
}

json dims_to_json(const ModelDims& d) {
  return json{{"vocab", d.vocab},
              {"hidden1", d.hidden1},
              {"hidden2", d.hidden2},
              {"classes", d.classes}};
}

json report_to_json(const MetricsReport& r) {
  return json::parse(metrics_to_json(r));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError("short write to " + path.string());
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOpts {
  std::string data;
  std::string out;
  std::string algo = "fish";
  std::vector<std::string> train_platforms;
  std::string val_platform;
  std::size_t vocab = 4096;
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 16;
  std::size_t classes = 2;
  TrainConfig cfg;
  bool parallel = false;
  int threads = 0;
};

void run_train(const TrainOpts& o, CLI::App* cmd) {
  const auto t0 = std::chrono::steady_clock::now();
  apply_threads(o.threads);

  const ModelDims dims{o.vocab, o.hidden1, o.hidden2, o.classes};
  const std::vector<Doc> docs = load_jsonl(o.data);
  std::vector<std::string> val_set;
  if (!o.val_platform.empty()) val_set.push_back(o.val_platform);
  const SplitPlan splits = make_splits(docs, o.train_platforms, val_set);
  check_labels(splits.train, dims.classes, "train split");
  check_labels(splits.val, dims.classes, "validation split");
  check_labels(splits.test, dims.classes, "test split");

  const FeaturizedData train_data = featurize(splits.train, dims.vocab);
  const FeaturizedData val_data = featurize(splits.val, dims.vocab);
  const FeaturizedData test_data = featurize(splits.test, dims.vocab);

  TrainConfig cfg = o.cfg;
  cfg.mode = o.parallel ? ExecMode::OpenMP : ExecMode::Serial;

  fs::create_directories(o.out);
  const fs::path out_dir(o.out);

  std::ofstream trace_out(out_dir / "trace.jsonl", std::ios::binary);
  if (!trace_out)
    throw DataError("cannot open " + (out_dir / "trace.jsonl").string() +
                    " for writing");
  TraceSink sink = [&](const TraceRecord& r) {
    // nlohmann serializes non-finite doubles as null, which is exactly the
    // representation we want for "not computed on this step".
    const json line{{"epoch", r.epoch},
                    {"iter", r.iter},
                    {"platform_loss", r.platform_loss},
                    {"scl_loss", r.scl_loss},
                    {"gip_hat", r.gip_hat}};
    trace_out << line.dump() << '\n';
  };

  ParamVector theta;
  ParamVector best;
  std::size_t best_epoch = 0;
  double best_f1 = -1.0;
  json history = json::array();
  EpochHook on_epoch;
  if (!val_data.samples.empty()) {
    on_epoch = [&](std::size_t epoch, const ParamVector& th) {
      const MetricsReport r = evaluate(dims, th, val_data, cfg.mode);
      const double f1 = r.aggregate.macro_f1;
      history.push_back(json{{"epoch", epoch}, {"val_macro_f1", f1}});
      if (f1 > best_f1) {  // ties keep the earliest epoch
        best_f1 = f1;
        best_epoch = epoch;
        best = th;
      }
    };
  }

  train(o.algo, dims, theta, train_data.samples, cfg, sink, on_epoch);
  trace_out.close();

  json selection;
  if (best.empty()) {
    best = theta;
    best_epoch = cfg.epochs == 0 ? 0 : cfg.epochs - 1;
    selection = json{{"criterion", "final_epoch"}, {"best_epoch", best_epoch}};
  } else {
    selection = json{{"criterion", "val_macro_f1"},
                     {"best_epoch", best_epoch},
                     {"best_val_macro_f1", best_f1},
                     {"history", history}};
  }

  save_checkpoint((out_dir / "checkpoint.bin").string(), dims, best);
  // Written so that `sclfish --config <file>` (or `sclfish train --config
  // <file>` with overrides) reproduces this run exactly.
  write_text(out_dir / "resolved.cfg",
             "[train]\n" + cmd->config_to_str(true, false));

  json manifest{
      {"command", "train"},
      {"algo", o.algo},
      {"data", o.data},
      {"train_platforms", o.train_platforms},
      {"val_platform", o.val_platform},
      {"test_platforms", test_data.platform_names},
      {"dims", dims_to_json(dims)},
      {"train_config",
       {{"lr", cfg.lr},
        {"meta_lr", cfg.meta_lr},
        {"scl_lr", cfg.scl_lr},
        {"tau", cfg.tau},
        {"batch_size", cfg.batch_size},
        {"epochs", cfg.epochs},
        {"meta_sign", cfg.meta_sign},
        {"seed", cfg.seed},
        {"mode", cfg.mode == ExecMode::OpenMP ? "openmp" : "serial"}}},
      {"selection", selection},
      {"train_metrics", report_to_json(evaluate(dims, best, train_data,
                                                cfg.mode))},
      {"artifacts",
       {{"checkpoint", "checkpoint.bin"},
        {"trace", "trace.jsonl"},
        {"config", "resolved.cfg"}}},
  };
  if (!val_data.samples.empty())
    manifest["val_metrics"] =
        report_to_json(evaluate(dims, best, val_data, cfg.mode));
  if (!test_data.samples.empty())
    manifest["test_metrics"] =
        report_to_json(evaluate(dims, best, test_data, cfg.mode));
  manifest["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  const std::string manifest_text = manifest.dump(2) + "\n";
  write_text(out_dir / "manifest.json", manifest_text);
  std::cout << manifest_text;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOpts {
  std::string model;
  std::string data;
  std::string out;
  std::vector<std::string> platforms;
  bool balanced = false;
  std::uint64_t balanced_seed = 0;
  bool parallel = false;
  int threads = 0;
};

void run_eval(const EvalOpts& o) {
  apply_threads(o.threads);
  const Checkpoint ckpt = load_checkpoint(o.model);
  std::vector<Doc> docs = load_jsonl(o.data);
  if (!o.platforms.empty()) {
    // make_splits validates that every requested platform exists.
    docs = make_splits(docs, o.platforms, {}).train;
  }
  if (o.balanced) docs = balanced_subsample(docs, o.balanced_seed);
  check_labels(docs, ckpt.dims.classes, "eval data");
  const FeaturizedData data = featurize(docs, ckpt.dims.vocab);
  const ExecMode mode = o.parallel ? ExecMode::OpenMP : ExecMode::Serial;
  const MetricsReport report = evaluate(ckpt.dims, ckpt.theta, data, mode);
  const std::string text = metrics_to_json(report) + "\n";
  if (o.out.empty())
    std::cout << text;
  else
    write_text(o.out, text);
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthOpts {
  SynthConfig cfg;
  std::uint64_t seed = 1;
  std::string out;
};

void run_synth(const SynthOpts& o) {
  const std::vector<Doc> docs = generate_synthetic(o.cfg, o.seed);
  write_jsonl(o.out, docs);
  json summary{{"command", "synth"},
               {"out", o.out},
               {"documents", docs.size()},
               {"seed", o.seed},
               {"spurious_rate_positive",
                solve_spurious_rate(o.cfg.rho_train, o.cfg.positive_rate)}};
  std::cout << summary.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// diagnose gip
// ---------------------------------------------------------------------------

struct GipOpts {
  std::string data;
  std::string model;
  std::vector<std::string> platforms;
  std::size_t vocab = 4096;
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 16;
  std::size_t classes = 2;
  std::uint64_t seed = 1;
  bool parallel = false;
  int threads = 0;
};

void run_gip(const GipOpts& o) {
  apply_threads(o.threads);
  ModelDims dims{o.vocab, o.hidden1, o.hidden2, o.classes};
  ParamVector theta;
  if (!o.model.empty()) {
    Checkpoint ckpt = load_checkpoint(o.model);
    dims = ckpt.dims;
    theta = std::move(ckpt.theta);
  } else {
    theta = init_params(dims, o.seed);
  }

  std::vector<Doc> docs = load_jsonl(o.data);
  if (!o.platforms.empty()) docs = make_splits(docs, o.platforms, {}).train;
  check_labels(docs, dims.classes, "data");
  const FeaturizedData data = featurize(docs, dims.vocab);
  const ExecMode mode = o.parallel ? ExecMode::OpenMP : ExecMode::Serial;

  const auto by_platform = platform_index(data.samples);
  std::vector<ParamVector> grads;
  std::vector<double> losses;
  std::vector<std::string> names;
  for (std::size_t p = 0; p < by_platform.size(); ++p) {
    if (by_platform[p].empty()) continue;
    ParamVector g;
    losses.push_back(
        ce_gradient(dims, theta, data.samples, by_platform[p], g, mode));
    grads.push_back(std::move(g));
    names.push_back(data.platform_names[p]);
  }
  if (grads.size() < 2)
    throw DataError("gip needs at least two platforms, got " +
                    std::to_string(grads.size()));

  json pair_dots = json::array();
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (std::size_t j = i + 1; j < grads.size(); ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < grads[i].size(); ++k)
        dot += grads[i][k] * grads[j][k];
      pair_dots.push_back(json{{"platforms", {names[i], names[j]}},
                               {"dot", dot}});
    }
  }

  const double pairwise = gip(grads, mode);
  const double linear = gip_linear(grads, mode);
  const double s = static_cast<double>(grads.size());
  json out{{"command", "diagnose gip"},
           {"platforms", names},
           {"platform_loss", losses},
           {"gip", pairwise},
           {"gip_linear", linear},
           {"identity_gap", linear - s * (s - 1.0) * pairwise},
           {"pair_dots", pair_dots}};
  std::cout << out.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// diagnose cosine
// ---------------------------------------------------------------------------

struct CosineOpts {
  std::string toy = "logistic2";
  std::vector<double> alphas = {1e-2, 1e-3, 1e-4};
  bool printed_form = false;
  double fd_step = 1e-6;
};

void run_cosine(const CosineOpts& o) {
  const ToyProblem toy = make_toy(o.toy);
  json results = json::array();
  for (double alpha : o.alphas) {
    const CosineResult r =
        cosine_convergence(toy, alpha, o.printed_form, o.fd_step);
    results.push_back(json{{"alpha", r.alpha}, {"cosine", r.cosine}});
  }
  json out{{"command", "diagnose cosine"},
           {"toy", o.toy},
           {"printed_form", o.printed_form},
           {"fd_step", o.fd_step},
           {"results", results}};
  std::cout << out.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// export-embeddings
// ---------------------------------------------------------------------------

struct ExportOpts {
  std::string model;
  std::string data;
  std::string out;
  bool parallel = false;
  int threads = 0;
};

void run_export(const ExportOpts& o) {
  apply_threads(o.threads);
  const Checkpoint ckpt = load_checkpoint(o.model);
  const std::vector<Doc> docs = load_jsonl(o.data);
  check_labels(docs, ckpt.dims.classes, "data");
  const FeaturizedData data = featurize(docs, ckpt.dims.vocab);
  const ExecMode mode = o.parallel ? ExecMode::OpenMP : ExecMode::Serial;
  export_embeddings(o.out, ckpt.dims, ckpt.theta, data, mode);
}

void add_thread_flags(CLI::App* cmd, bool& parallel, int& threads) {
  cmd->add_flag("--parallel", parallel, "Use the OpenMP kernels");
  cmd->add_option("--threads", threads,
                  "OpenMP thread count (0 = library default)")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "sclfish: gradient-aligned multi-platform training for text "
      "classifiers"};
  app.require_subcommand(1);
  // The config file addresses train options inside a [train] section, which
  // is what run_train writes to resolved.cfg.
  app.set_config("--config", "",
                 "Read options from a previously written resolved.cfg");

  // --- train ---------------------------------------------------------------
  TrainOpts t;
  CLI::App* train_cmd = app.add_subcommand(
      "train", "Train a classifier and select a checkpoint by validation");
  train_cmd->configurable();
  train_cmd->fallthrough();
  train_cmd->add_option("--data", t.data, "Input JSONL corpus")->required();
  train_cmd->add_option("--out", t.out, "Output directory")->required();
  train_cmd
      ->add_option("--train-platforms", t.train_platforms,
                   "Comma-separated training platform names")
      ->required()
      ->delimiter(',');
  train_cmd
      ->add_option("--val-platform", t.val_platform,
                   "Validation platform (empty: keep the final epoch)")
      ->capture_default_str();
  train_cmd
      ->add_option("--algo", t.algo, "erm, scl-erm, fish, or scl-fish")
      ->check(CLI::IsMember({"erm", "scl-erm", "fish", "scl-fish"}))
      ->capture_default_str();
  train_cmd->add_option("--vocab", t.vocab, "Hash bucket count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--hidden1", t.hidden1, "First hidden width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--hidden2", t.hidden2, "Embedding width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--classes", t.classes, "Number of classes")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1024}))
      ->capture_default_str();
  train_cmd->add_option("--lr", t.cfg.lr, "Inner/SGD learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--meta-lr", t.cfg.meta_lr, "Meta step size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd
      ->add_option("--scl-lr", t.cfg.scl_lr,
                   "Contrastive step size (0 disables the phase)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train_cmd->add_option("--tau", t.cfg.tau, "Contrastive temperature")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--batch-size", t.cfg.batch_size, "Minibatch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--epochs", t.cfg.epochs, "Training epochs")
      ->capture_default_str();
  train_cmd
      ->add_option("--meta-sign", t.cfg.meta_sign,
                   "+1 moves toward the inner-loop result, -1 away")
      ->check(CLI::IsMember({1, -1}))
      ->capture_default_str();
  train_cmd->add_option("--seed", t.cfg.seed, "RNG seed")
      ->capture_default_str();
  add_thread_flags(train_cmd, t.parallel, t.threads);

  // --- eval ----------------------------------------------------------------
  EvalOpts e;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Evaluate a checkpoint on a JSONL corpus");
  eval_cmd->add_option("--model", e.model, "Checkpoint path")->required();
  eval_cmd->add_option("--data", e.data, "Input JSONL corpus")->required();
  eval_cmd->add_option("--out", e.out, "Write the JSON report here")
      ->capture_default_str();
  eval_cmd
      ->add_option("--platforms", e.platforms,
                   "Restrict to these platforms (default: all)")
      ->delimiter(',');
  eval_cmd->add_flag("--balanced", e.balanced,
                     "Class-balance each platform before scoring");
  eval_cmd
      ->add_option("--balanced-seed", e.balanced_seed,
                   "Seed for the balanced subsample")
      ->capture_default_str();
  add_thread_flags(eval_cmd, e.parallel, e.threads);

  // --- synth ---------------------------------------------------------------
  SynthOpts s;
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "Generate the synthetic multi-platform benchmark corpus");
  synth_cmd->add_option("--out", s.out, "Output JSONL path")->required();
  synth_cmd->add_option("--seed", s.seed, "RNG seed")->capture_default_str();
  synth_cmd
      ->add_option("--train-platforms", s.cfg.train_platforms,
                   "Number of training platforms")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd
      ->add_option("--samples-per-platform", s.cfg.samples_per_platform,
                   "Documents per platform")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd
      ->add_option("--rho-train", s.cfg.rho_train,
                   "Spurious/label correlation on training platforms")
      ->check(CLI::Range(-1.0, 1.0))
      ->capture_default_str();
  synth_cmd
      ->add_option("--rho-heldout", s.cfg.rho_heldout,
                   "Spurious/label correlation on the held-out platform")
      ->check(CLI::Range(-1.0, 1.0))
      ->capture_default_str();
  synth_cmd->add_flag("!--no-heldout", s.cfg.heldout,
                      "Skip the held-out platform");
  synth_cmd->add_option("--task-vocab", s.cfg.task_vocab, "Task vocabulary")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd
      ->add_option("--words-per-doc", s.cfg.words_per_doc,
                   "Task words per document")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd
      ->add_option("--q-match", s.cfg.q_match,
                   "Probability a task word matches the label")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  synth_cmd
      ->add_option("--spurious-per-platform", s.cfg.spurious_per_platform,
                   "Platform-specific spurious vocabulary size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd
      ->add_option("--spurious-tokens", s.cfg.spurious_tokens,
                   "Copies of the spurious word per affected document")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd
      ->add_option("--positive-rate", s.cfg.positive_rate,
                   "P(label = 1)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  // --- diagnose ------------------------------------------------------------
  CLI::App* diag_cmd =
      app.add_subcommand("diagnose", "Gradient-alignment diagnostics");
  diag_cmd->require_subcommand(1);

  GipOpts g;
  CLI::App* gip_cmd = diag_cmd->add_subcommand(
      "gip", "Per-platform gradient inner product at a parameter point");
  gip_cmd->add_option("--data", g.data, "Input JSONL corpus")->required();
  gip_cmd->add_option("--model", g.model,
                      "Checkpoint (default: fresh init from --seed)");
  gip_cmd
      ->add_option("--platforms", g.platforms,
                   "Restrict to these platforms (default: all)")
      ->delimiter(',');
  gip_cmd->add_option("--vocab", g.vocab, "Hash bucket count (no --model)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gip_cmd->add_option("--hidden1", g.hidden1, "First hidden width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gip_cmd->add_option("--hidden2", g.hidden2, "Embedding width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gip_cmd->add_option("--classes", g.classes, "Number of classes")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1024}))
      ->capture_default_str();
  gip_cmd->add_option("--seed", g.seed, "Init seed (no --model)")
      ->capture_default_str();
  add_thread_flags(gip_cmd, g.parallel, g.threads);

  CosineOpts c;
  CLI::App* cos_cmd = diag_cmd->add_subcommand(
      "cosine",
      "Cosine between the expected meta-update direction and the alignment "
      "gradient on a toy objective");
  cos_cmd->add_option("--toy", c.toy, "logistic2 or quad2")
      ->capture_default_str();
  cos_cmd->add_option("--alphas", c.alphas, "Inner step sizes to sweep")
      ->delimiter(',');
  cos_cmd->add_flag("--printed-form", c.printed_form,
                    "Use the opposite orientation (converges to -1)");
  cos_cmd->add_option("--fd-step", c.fd_step,
                      "Central-difference step for the alignment gradient")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // --- export-embeddings ---------------------------------------------------
  ExportOpts x;
  CLI::App* export_cmd = app.add_subcommand(
      "export-embeddings", "Write per-document embeddings as CSV");
  export_cmd->add_option("--model", x.model, "Checkpoint path")->required();
  export_cmd->add_option("--data", x.data, "Input JSONL corpus")->required();
  export_cmd->add_option("--out", x.out, "Output CSV path")->required();
  add_thread_flags(export_cmd, x.parallel, x.threads);

  try {
    app.parse(argc, argv);
    // Dispatch after the full parse so that config-file values (processed at
    // the end of parsing) are in place before any subcommand runs.
    if (app.got_subcommand(train_cmd)) {
      run_train(t, train_cmd);
    } else if (app.got_subcommand(eval_cmd)) {
      run_eval(e);
    } else if (app.got_subcommand(synth_cmd)) {
      run_synth(s);
    } else if (app.got_subcommand(diag_cmd)) {
      if (diag_cmd->got_subcommand(gip_cmd))
        run_gip(g);
      else
        run_cosine(c);
    } else if (app.got_subcommand(export_cmd)) {
      run_export(x);
    }
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kExitUsage;
  } catch (const CheckpointError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  } catch (const DataError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  } catch (const NumericError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
