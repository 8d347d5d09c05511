// Copyright (c) 2026 sclfish contributors
// SPDX-License-Identifier: Apache-2.0
//
// Release gate. Nine self-contained checks covering gradient exactness, the
// alignment statistics, trainer degeneracies, the oracle equivalences, the
// synthetic cross-platform benchmark, and persistence. Each check prints one
// PASS/FAIL line; the exit code is the number of failures. Tolerances and
// time budgets are pinned next to the checks that use them.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sclfish/data.hpp"
#include "sclfish/eval.hpp"
#include "sclfish/losses.hpp"
#include "sclfish/model.hpp"
#include "sclfish/trainers.hpp"

namespace fs = std::filesystem;
using namespace sclfish;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double urand(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Random sparse corpus in featurize's invariant form: sorted unique bucket
// indices, L2-normalized positive values.
Corpus random_corpus(const ModelDims& dims, std::size_t n,
                     std::mt19937_64& gen) {
  Corpus corpus(n);
  for (Sample& s : corpus) {
    const std::size_t nnz =
        1 + static_cast<std::size_t>(uniform_below(gen, 4));
    while (s.x.idx.size() < nnz) {
      const auto k = static_cast<std::uint32_t>(uniform_below(gen, dims.vocab));
      if (std::find(s.x.idx.begin(), s.x.idx.end(), k) == s.x.idx.end())
        s.x.idx.push_back(k);
    }
    std::sort(s.x.idx.begin(), s.x.idx.end());
    double sq = 0.0;
    for (std::size_t k = 0; k < nnz; ++k) {
      s.x.val.push_back(urand(gen, 0.2, 1.0));
      sq += s.x.val.back() * s.x.val.back();
    }
    for (double& v : s.x.val) v /= std::sqrt(sq);
    s.y = static_cast<int>(uniform_below(gen, dims.classes));
    s.platform_id = static_cast<std::uint32_t>(uniform_below(gen, 2));
  }
  return corpus;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f),
                     std::istreambuf_iterator<char>());
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

char buf[256];

std::string fmt(const char* f, auto... args) {
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Backward pass matches central finite differences for both losses.
// ---------------------------------------------------------------------------
bool criterion1(std::string& note) {
  const auto t0 = Clock::now();
  const double h = 1e-5;     // central-difference step
  const double tol = 1e-4;   // per-coordinate relative error bound
  const double tau = 0.5;
  std::mt19937_64 gen(101);
  double worst_ce = 0.0, worst_scl = 0.0;

  for (int m = 0; m < 20; ++m) {
    ModelDims dims;
    do {
      dims.vocab = 6 + uniform_below(gen, 20);
      dims.hidden1 = 2 + uniform_below(gen, 4);
      dims.hidden2 = 2 + uniform_below(gen, 3);
      dims.classes = 2 + uniform_below(gen, 3);
    } while (dims.param_count() > 200);

    ParamVector theta = init_params(dims, gen());
    const Corpus corpus = random_corpus(dims, 6, gen);
    std::vector<std::uint32_t> batch(corpus.size());
    std::iota(batch.begin(), batch.end(), 0u);
    std::vector<int> labels(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) labels[i] = corpus[i].y;

    const auto ce_at = [&](const ParamVector& th) {
      Activations a;
      forward(dims, th, corpus, batch, a);
      return cross_entropy(dims, a.logits, labels);
    };
    const auto scl_at = [&](const ParamVector& th) {
      Activations a;
      forward(dims, th, corpus, batch, a);
      return scl_loss(a.emb, dims.hidden2, labels, tau);
    };

    Activations acts;
    forward(dims, theta, corpus, batch, acts);
    UpstreamGrad up_ce, up_scl;
    cross_entropy(dims, acts.logits, labels, &up_ce.dlogits);
    scl_loss(acts.emb, dims.hidden2, labels, tau, &up_scl.demb);
    ParamVector g_ce, g_scl;
    backward(dims, theta, corpus, batch, acts, up_ce, g_ce);
    backward(dims, theta, corpus, batch, acts, up_scl, g_scl);

    // Relative error with a floor so coordinates whose true gradient is ~0
    // are judged against 1e-6 instead of dividing by zero.
    const auto rel = [](double a, double f) {
      return std::fabs(a - f) / std::max({std::fabs(a), std::fabs(f), 1e-6});
    };
    ParamVector th = theta;
    for (std::size_t i = 0; i < th.size(); ++i) {
      const double keep = th[i];
      th[i] = keep + h;
      const double ce_p = ce_at(th), scl_p = scl_at(th);
      th[i] = keep - h;
      const double ce_m = ce_at(th), scl_m = scl_at(th);
      th[i] = keep;
      worst_ce = std::max(worst_ce, rel(g_ce[i], (ce_p - ce_m) / (2.0 * h)));
      worst_scl =
          std::max(worst_scl, rel(g_scl[i], (scl_p - scl_m) / (2.0 * h)));
    }
  }

  const double secs = seconds_since(t0);
  note = fmt("max rel err ce %.2e, scl %.2e, %.1fs", worst_ce, worst_scl, secs);
  return worst_ce < tol && worst_scl < tol && secs < 30.0;
}

// ---------------------------------------------------------------------------
// 2. gip_linear equals the explicit pairwise-dot expansion.
// ---------------------------------------------------------------------------
bool criterion2(std::string& note) {
  const auto t0 = Clock::now();
  const double tol = 1e-9;
  std::mt19937_64 gen(202);
  double worst = 0.0;

  for (int t = 0; t < 100; ++t) {
    const std::size_t S = 2 + uniform_below(gen, 7);       // 2..8
    const std::size_t dim = 10 + uniform_below(gen, 991);  // 10..1000
    std::vector<ParamVector> grads(S, ParamVector(dim));
    for (ParamVector& g : grads)
      for (double& v : g) v = urand(gen, -1.0, 1.0);

    const double lin = gip_linear(grads);

    // Independent oracle: 2 * sum over pairs of explicit dot products.
    double pair_sum = 0.0;
    for (std::size_t i = 0; i < S; ++i)
      for (std::size_t j = i + 1; j < S; ++j) {
        double d = 0.0;
        for (std::size_t k = 0; k < dim; ++k) d += grads[i][k] * grads[j][k];
        pair_sum += d;
      }
    const double oracle = 2.0 * pair_sum;

    // Error relative to the largest magnitude entering the identity: the
    // linear form subtracts sum ||G_i||^2 from ||sum G_i||^2, so that scale
    // (not the possibly cancelled result) bounds the rounding.
    double sumsq = 0.0;
    for (const ParamVector& g : grads)
      for (double v : g) sumsq += v * v;
    const double scale = std::max({std::fabs(lin), std::fabs(oracle), sumsq});
    worst = std::max(worst, std::fabs(lin - oracle) / scale);
  }

  const double secs = seconds_since(t0);
  note = fmt("max rel err %.2e, %.2fs", worst, secs);
  return worst < tol && secs < 5.0;
}

// ---------------------------------------------------------------------------
// 3. Meta-step/alignment-gradient cosine rises to 1 as the inner rate drops.
// ---------------------------------------------------------------------------
bool criterion3(std::string& note) {
  const auto t0 = Clock::now();
  const ToyProblem toy = make_toy("logistic2");
  const double alphas[3] = {1e-2, 1e-3, 1e-4};
  double cos[3];
  bool nondecreasing = true;
  for (int i = 0; i < 3; ++i) {
    cos[i] = cosine_convergence(toy, alphas[i]).cosine;
    if (i > 0 && cos[i] < cos[i - 1]) nondecreasing = false;
  }
  const double secs = seconds_since(t0);
  note = fmt("cos(1e-2)=%.8f cos(1e-3)=%.8f cos(1e-4)=%.8f, %.1fs", cos[0],
             cos[1], cos[2], secs);
  return cos[2] >= 0.99 && nondecreasing && secs < 60.0;
}

// ---------------------------------------------------------------------------
// 4. Single-platform meta training with eps=1 and the contrastive phase off
//    is plain SGD, bit for bit across 100 steps.
// ---------------------------------------------------------------------------
bool criterion4(std::string& note) {
  SynthConfig sc;
  sc.train_platforms = 1;
  sc.heldout = false;
  sc.samples_per_platform = 80;  // 80 / batch 8 = 10 steps x 10 epochs = 100
  sc.task_vocab = 16;
  sc.words_per_doc = 6;
  const FeaturizedData fd = featurize(generate_synthetic(sc, 7), 256);
  const ModelDims dims{256, 8, 4, 2};

  TrainConfig cfg;
  cfg.lr = 0.3;
  cfg.meta_lr = 1.0;  // eps = 1
  cfg.scl_lr = 0.0;   // alpha' = 0
  cfg.batch_size = 8;
  cfg.epochs = 10;
  cfg.seed = 17;

  std::vector<double> loss_a, loss_b;
  std::vector<ParamVector> snap_a, snap_b;
  ParamVector theta_a = init_params(dims, cfg.seed);
  train_erm(
      dims, theta_a, fd.samples, cfg,
      [&](const TraceRecord& r) { loss_a.push_back(r.platform_loss.at(0)); },
      [&](std::size_t, const ParamVector& p) { snap_a.push_back(p); });
  ParamVector theta_b = init_params(dims, cfg.seed);
  train_fish(
      dims, theta_b, fd.samples, cfg,
      [&](const TraceRecord& r) { loss_b.push_back(r.platform_loss.at(0)); },
      [&](std::size_t, const ParamVector& p) { snap_b.push_back(p); });

  bool ok = loss_a.size() == 100 && bitwise_equal(loss_a, loss_b) &&
            snap_a.size() == 10 && snap_b.size() == 10 &&
            bitwise_equal(theta_a, theta_b);
  for (std::size_t e = 0; ok && e < snap_a.size(); ++e)
    ok = bitwise_equal(snap_a[e], snap_b[e]);
  note = fmt("%zu per-step losses, %zu epoch snapshots, final params %s",
             loss_a.size(), snap_a.size(),
             bitwise_equal(theta_a, theta_b) ? "identical" : "DIFFER");
  return ok;
}

// ---------------------------------------------------------------------------
// 5. Vectorized contrastive loss equals the brute-force reference.
// ---------------------------------------------------------------------------
bool criterion5(std::string& note) {
  const double tol = 1e-10;
  const double taus[3] = {0.05, 0.5, 1.0};
  std::mt19937_64 gen(505);
  double worst = 0.0;
  std::size_t empty_anchor_batches = 0;

  for (int b = 0; b < 50; ++b) {
    const std::size_t N = 2 + uniform_below(gen, 15);  // 2..16
    const std::size_t D = 1 + uniform_below(gen, 8);   // 1..8
    const double tau = taus[b % 3];
    std::vector<double> emb(N * D);
    for (double& v : emb) v = urand(gen, -1.0, 1.0);
    std::vector<int> labels(N);
    if (b % 5 == 0) {
      // All labels distinct: every anchor's positive set is empty.
      for (std::size_t i = 0; i < N; ++i) labels[i] = static_cast<int>(i);
      ++empty_anchor_batches;
    } else if (b % 5 == 1) {
      // One positive-free anchor inside an otherwise ordinary batch.
      for (int& y : labels) y = static_cast<int>(uniform_below(gen, 2));
      labels[0] = 99;
      ++empty_anchor_batches;
    } else {
      for (int& y : labels) y = static_cast<int>(uniform_below(gen, 3));
    }
    if (b % 7 == 0)  // exercise the zero-row normalization convention
      std::fill_n(emb.begin() + static_cast<std::ptrdiff_t>((b % N) * D), D,
                  0.0);

    std::vector<double> da, db;
    const double la = scl_loss(emb, D, labels, tau, &da);
    const double lb = scl_loss_bruteforce(emb, D, labels, tau, &db);
    worst = std::max(worst, std::fabs(la - lb));
    for (std::size_t k = 0; k < da.size(); ++k)
      worst = std::max(worst, std::fabs(da[k] - db[k]));
  }

  note = fmt("max |kernel - reference| %.2e over 50 batches (%zu with "
             "positive-free anchors)",
             worst, empty_anchor_batches);
  return worst <= tol && empty_anchor_batches >= 10;
}

// ---------------------------------------------------------------------------
// 6. Cross-platform benchmark: domain-sequential training beats pooled SGD
//    on the reversed-correlation platform.
// ---------------------------------------------------------------------------
bool criterion6(std::string& note) {
  const auto t0 = Clock::now();
  const SynthConfig sc;   // 3 train platforms rho=+0.9, held-out rho=-0.9,
                          // 2000 samples per platform
  const ModelDims dims;   // 4096 buckets, 32/16 hidden, 2 classes
  const TrainConfig base; // lr .5, eps .125, alpha' .02, tau 1, batch 8,
                          // 4 epochs
  const char* algos[3] = {"erm", "fish", "scl-fish"};
  std::vector<double> held[3];
  double min_train_acc = 1.0;

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const std::vector<Doc> docs = generate_synthetic(sc, seed);
    const SplitPlan plan =
        make_splits(docs, {"synth0", "synth1", "synth2"}, {});
    const FeaturizedData train_fd = featurize(plan.train, dims.vocab);
    const FeaturizedData held_fd = featurize(plan.test, dims.vocab);

    for (int a = 0; a < 3; ++a) {
      TrainConfig cfg = base;
      cfg.seed = seed;
      cfg.mode = ExecMode::OpenMP;
      ParamVector theta = init_params(dims, seed);
      train(algos[a], dims, theta, train_fd.samples, cfg);

      const MetricsReport tr = evaluate(dims, theta, train_fd, cfg.mode);
      for (const PlatformMetrics& pm : tr.platforms)
        min_train_acc = std::min(min_train_acc, pm.accuracy);
      held[a].push_back(
          evaluate(dims, theta, held_fd, cfg.mode).aggregate.macro_f1);
    }
  }

  double median[3];
  for (int a = 0; a < 3; ++a) {
    std::sort(held[a].begin(), held[a].end());
    median[a] = held[a][2] * 100.0;  // points
  }
  const double gap_fish = median[1] - median[0];
  const double gap_scl_fish = median[2] - median[0];
  const double secs = seconds_since(t0);
  note = fmt("median held-out macro-F1: erm %.1f, fish %.1f, scl-fish %.1f; "
             "min train acc %.1f%%; %.0fs",
             median[0], median[1], median[2], min_train_acc * 100.0, secs);
  return gap_fish >= 3.0 && gap_scl_fish >= 3.0 && min_train_acc >= 0.90 &&
         secs < 600.0;
}

// ---------------------------------------------------------------------------
// 7. Metrics match an independent precision/recall-composition oracle.
// ---------------------------------------------------------------------------
bool criterion7(std::string& note) {
  const double tol = 1e-12;
  std::mt19937_64 gen(707);
  double worst = 0.0;
  std::size_t degenerate = 0;

  for (int t = 0; t < 1000; ++t) {
    const std::size_t classes = t % 3 == 0 ? 2 : (t % 3 == 1 ? 3 : 5);
    const std::size_t n = 1 + uniform_below(gen, 50);
    std::vector<int> pred(n), lab(n);
    if (t % 10 == 0) {
      // Every label and every prediction the same single class.
      const int k = static_cast<int>(uniform_below(gen, classes));
      std::fill(lab.begin(), lab.end(), k);
      std::fill(pred.begin(), pred.end(), k);
      ++degenerate;
    } else if (t % 10 == 5) {
      // One class throughout, predicted as a different single class.
      const int k = static_cast<int>(uniform_below(gen, classes));
      std::fill(lab.begin(), lab.end(), k);
      std::fill(pred.begin(), pred.end(),
                (k + 1) % static_cast<int>(classes));
      ++degenerate;
    } else {
      for (int& v : lab) v = static_cast<int>(uniform_below(gen, classes));
      for (int& v : pred) v = static_cast<int>(uniform_below(gen, classes));
    }

    const PlatformMetrics m = compute_metrics(pred, lab, classes);

    // Oracle via a confusion matrix and precision/recall composition with
    // the 0/0 -> 0 convention applied at every stage.
    std::vector<std::vector<std::uint64_t>> cm(
        classes, std::vector<std::uint64_t>(classes, 0));
    for (std::size_t i = 0; i < n; ++i)
      cm[static_cast<std::size_t>(lab[i])][static_cast<std::size_t>(pred[i])]++;
    std::uint64_t diag = 0;
    for (std::size_t c = 0; c < classes; ++c) diag += cm[c][c];
    const double acc = static_cast<double>(diag) / static_cast<double>(n);
    double macro = 0.0, pos_f1 = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      std::uint64_t pred_c = 0, true_c = 0;
      for (std::size_t o = 0; o < classes; ++o) {
        pred_c += cm[o][c];
        true_c += cm[c][o];
      }
      const double tp = static_cast<double>(cm[c][c]);
      const double prec = pred_c == 0 ? 0.0 : tp / static_cast<double>(pred_c);
      const double rec = true_c == 0 ? 0.0 : tp / static_cast<double>(true_c);
      const double f1 =
          prec + rec == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
      if (c == 1) pos_f1 = f1;
      macro += f1;
    }
    macro /= static_cast<double>(classes);

    worst = std::max({worst, std::fabs(m.accuracy - acc),
                      std::fabs(m.positive_f1 - pos_f1),
                      std::fabs(m.macro_f1 - macro)});
  }

  note = fmt("max |library - oracle| %.2e over 1000 vectors (%zu one-class)",
             worst, degenerate);
  return worst <= tol && degenerate == 200;
}

// ---------------------------------------------------------------------------
// 8. Determinism and persistence.
// ---------------------------------------------------------------------------
bool criterion8(std::string& note) {
  const fs::path dir = fs::temp_directory_path() / "sclfish_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  SynthConfig sc;
  sc.train_platforms = 2;
  sc.heldout = false;
  sc.samples_per_platform = 60;
  sc.task_vocab = 16;
  sc.words_per_doc = 6;
  const FeaturizedData fd = featurize(generate_synthetic(sc, 11), 512);
  const ModelDims dims{512, 16, 8, 2};
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 5;

  const auto run = [&] {
    ParamVector theta = init_params(dims, cfg.seed);
    train_scl_fish(dims, theta, fd.samples, cfg);
    return theta;
  };
  const ParamVector theta1 = run();
  const ParamVector theta2 = run();
  const bool same_params = bitwise_equal(theta1, theta2);

  const fs::path p1 = dir / "a.ckpt", p2 = dir / "b.ckpt";
  save_checkpoint(p1.string(), dims, theta1);
  save_checkpoint(p2.string(), dims, theta2);
  const std::string bytes = read_bytes(p1);
  const bool same_files = !bytes.empty() && bytes == read_bytes(p2);

  const bool same_metrics = metrics_to_json(evaluate(dims, theta1, fd)) ==
                            metrics_to_json(evaluate(dims, theta2, fd));

  const Checkpoint back = load_checkpoint(p1.string());
  const bool roundtrip = back.dims == dims && bitwise_equal(back.theta, theta1);

  // Corruptions must map to their documented error classes.
  const auto expect = [&](const std::string& mutated, auto tag) {
    const fs::path p = dir / "bad.ckpt";
    write_bytes(p, mutated);
    try {
      load_checkpoint(p.string());
    } catch (const decltype(tag)&) {
      return true;
    } catch (...) {
      return false;
    }
    return false;
  };
  std::string mut = bytes;
  mut[0] = 'X';
  const bool bad_magic = expect(mut, BadMagicError{""});
  mut = bytes;
  mut[4] = 99;  // little-endian u32 version field
  const bool bad_version = expect(mut, VersionMismatchError{""});
  const bool truncated =
      expect(bytes.substr(0, bytes.size() - 9), TruncatedError{""});
  mut = bytes;
  mut[24] = static_cast<char>(static_cast<unsigned char>(mut[24]) + 1);
  const bool bad_count = expect(mut, LengthMismatchError{""});

  fs::remove_all(dir);
  note = fmt("repeat params %s, files %s, metrics %s, round-trip %s, "
             "errors %d/4",
             same_params ? "ok" : "DIFFER", same_files ? "ok" : "DIFFER",
             same_metrics ? "ok" : "DIFFER", roundtrip ? "ok" : "BROKEN",
             bad_magic + bad_version + truncated + bad_count);
  return same_params && same_files && same_metrics && roundtrip && bad_magic &&
         bad_version && truncated && bad_count;
}

// ---------------------------------------------------------------------------
// 9. Split protocol over the benchmark corpus names.
// ---------------------------------------------------------------------------
bool criterion9(std::string& note) {
  const std::vector<std::string> names = {"wiki", "twitter", "fb-yt",
                                          "stormfront", "twi-fb", "reddit",
                                          "gab", "yt_reddit"};
  std::vector<Doc> docs;
  for (const std::string& p : names) {
    docs.push_back({"benign " + p, 0, p});
    docs.push_back({"abusive " + p, 1, p});
  }

  const SplitPlan plan =
      make_splits(docs, {"fb-yt", "twitter", "wiki"}, {"stormfront"});
  const auto platforms_of = [](const std::vector<Doc>& ds) {
    std::vector<std::string> ps;
    for (const Doc& d : ds)
      if (std::find(ps.begin(), ps.end(), d.platform) == ps.end())
        ps.push_back(d.platform);
    std::sort(ps.begin(), ps.end());
    return ps;
  };
  const bool train_ok =
      platforms_of(plan.train) ==
      std::vector<std::string>{"fb-yt", "twitter", "wiki"};
  const bool val_ok =
      platforms_of(plan.val) == std::vector<std::string>{"stormfront"};
  const bool test_ok =
      platforms_of(plan.test) ==
      std::vector<std::string>{"gab", "reddit", "twi-fb", "yt_reddit"};
  const bool sizes_ok = plan.train.size() == 6 && plan.val.size() == 2 &&
                        plan.test.size() == 8;

  bool rejects = false;
  try {
    make_splits(docs, {"fb-yt", "twitter", "wiki"}, {"twitter"});
  } catch (const DataError&) {
    rejects = true;
  }
  bool rejects_test_overlap = false;
  try {
    make_splits(docs, {"fb-yt"}, {"stormfront"}, {{"fb-yt"}});
  } catch (const DataError&) {
    rejects_test_overlap = true;
  }

  note = fmt("roles %s, sizes %s, overlap rejected %s/%s",
             train_ok && val_ok && test_ok ? "ok" : "WRONG",
             sizes_ok ? "ok" : "WRONG", rejects ? "yes" : "NO",
             rejects_test_overlap ? "yes" : "NO");
  return train_ok && val_ok && test_ok && sizes_ok && rejects &&
         rejects_test_overlap;
}

}  // namespace

int main() {
  struct Check {
    int id;
    const char* what;
    bool (*run)(std::string&);
  };
  const Check checks[] = {
      {1, "backward pass matches central finite differences", criterion1},
      {2, "linear-time alignment statistic equals pairwise expansion",
       criterion2},
      {3, "meta/alignment cosine converges to 1 on the logistic toy",
       criterion3},
      {4, "single-platform meta training with eps=1 is plain SGD", criterion4},
      {5, "contrastive kernel equals brute-force reference", criterion5},
      {6, "held-out platform benchmark favors domain-sequential training",
       criterion6},
      {7, "metrics equal independent confusion-matrix oracle", criterion7},
      {8, "deterministic checkpoints, metrics, and error classes", criterion8},
      {9, "platform role assignment and overlap rejection", criterion9},
  };

  int failures = 0;
  for (const Check& c : checks) {
    std::string note;
    bool ok = false;
    try {
      ok = c.run(note);
    } catch (const std::exception& e) {
      note = std::string("unexpected exception: ") + e.what();
    }
    std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", c.id,
                c.what, note.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures;
}
