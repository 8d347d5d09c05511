// Copyright (c) 2026 sclfish contributors
// SPDX-License-Identifier: Apache-2.0
//
// Kernel benchmark: times the serial reference against the OpenMP variant of
// each compute kernel and verifies that both produce bit-identical output.
// Exits nonzero if any kernel disagrees.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"

#include "sclfish/losses.hpp"
#include "sclfish/model.hpp"
#include "sclfish/parallel.hpp"
#include "sclfish/trainers.hpp"

using namespace sclfish;

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warmup
  const auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct Row {
  std::string name;
  double serial_ms = 0.0;
  double openmp_ms = 0.0;
  bool identical = false;
};

Corpus random_corpus(const ModelDims& dims, std::size_t n, std::size_t nnz,
                     std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Corpus corpus(n);
  for (Sample& s : corpus) {
    s.y = static_cast<int>(gen() % dims.classes);
    std::vector<std::uint32_t> idx(nnz);
    for (auto& ix : idx) ix = static_cast<std::uint32_t>(gen() % dims.vocab);
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    std::vector<double> val(idx.size(), 1.0 / std::sqrt(double(idx.size())));
    s.x.idx = std::move(idx);
    s.x.val = std::move(val);
  }
  return corpus;
}

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<double> v(n);
  for (double& x : v)
    x = 2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53) - 1.0;
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t batch = 1024;
  std::size_t vocab = 16384;
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 32;
  std::size_t classes = 4;
  std::size_t nnz = 48;
  int reps = 20;
  int threads = 0;

  CLI::App app{"sclfish kernel benchmark: serial reference vs OpenMP"};
  app.add_option("--batch", batch, "Rows per kernel invocation")
      ->capture_default_str();
  app.add_option("--vocab", vocab, "Hash bucket count")->capture_default_str();
  app.add_option("--hidden1", hidden1, "First hidden width")
      ->capture_default_str();
  app.add_option("--hidden2", hidden2, "Embedding width")
      ->capture_default_str();
  app.add_option("--classes", classes, "Class count")->capture_default_str();
  app.add_option("--nnz", nnz, "Nonzero features per document")
      ->capture_default_str();
  app.add_option("--reps", reps, "Timed repetitions per kernel")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--threads", threads, "OpenMP thread count (0 = default)")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  const ModelDims dims{vocab, hidden1, hidden2, classes};
  const Corpus corpus = random_corpus(dims, batch, nnz, 1);
  const ParamVector theta = init_params(dims, 2);
  std::vector<std::uint32_t> rows(batch);
  for (std::size_t i = 0; i < batch; ++i)
    rows[i] = static_cast<std::uint32_t>(i);

  std::vector<Row> table;

  // forward
  {
    Activations s_acts, p_acts;
    Row row{"forward"};
    row.serial_ms = time_ms(
        [&] { forward(dims, theta, corpus, rows, s_acts, ExecMode::Serial); },
        reps);
    row.openmp_ms = time_ms(
        [&] { forward(dims, theta, corpus, rows, p_acts, ExecMode::OpenMP); },
        reps);
    row.identical = same_bits(s_acts.h1, p_acts.h1) &&
                    same_bits(s_acts.emb, p_acts.emb) &&
                    same_bits(s_acts.logits, p_acts.logits);
    table.push_back(row);

    // backward (reuses the forward activations)
    UpstreamGrad up;
    up.dlogits = random_vec(batch * classes, 3);
    up.demb = random_vec(batch * hidden2, 4);
    ParamVector s_grad, p_grad;
    Row brow{"backward"};
    brow.serial_ms = time_ms(
        [&] {
          backward(dims, theta, corpus, rows, s_acts, up, s_grad,
                   ExecMode::Serial);
        },
        reps);
    brow.openmp_ms = time_ms(
        [&] {
          backward(dims, theta, corpus, rows, s_acts, up, p_grad,
                   ExecMode::OpenMP);
        },
        reps);
    brow.identical = same_bits(s_grad, p_grad);
    table.push_back(brow);

    // cross entropy on the forward logits
    std::vector<int> labels;
    labels.reserve(batch);
    for (auto r : rows) labels.push_back(corpus[r].y);
    std::vector<double> s_dl, p_dl;
    double s_loss = 0.0, p_loss = 0.0;
    Row crow{"cross_entropy"};
    crow.serial_ms = time_ms(
        [&] {
          s_loss = cross_entropy(dims, s_acts.logits, labels, &s_dl,
                                 ExecMode::Serial);
        },
        reps);
    crow.openmp_ms = time_ms(
        [&] {
          p_loss = cross_entropy(dims, s_acts.logits, labels, &p_dl,
                                 ExecMode::OpenMP);
        },
        reps);
    crow.identical =
        std::memcmp(&s_loss, &p_loss, sizeof(double)) == 0 &&
        same_bits(s_dl, p_dl);
    table.push_back(crow);

    // supervised contrastive loss on the forward embeddings
    std::vector<double> s_de, p_de;
    double s_scl = 0.0, p_scl = 0.0;
    Row srow{"scl_loss"};
    srow.serial_ms = time_ms(
        [&] {
          s_scl = scl_loss(s_acts.emb, hidden2, labels, 0.1, &s_de,
                           ExecMode::Serial);
        },
        reps);
    srow.openmp_ms = time_ms(
        [&] {
          p_scl = scl_loss(s_acts.emb, hidden2, labels, 0.1, &p_de,
                           ExecMode::OpenMP);
        },
        reps);
    srow.identical = std::memcmp(&s_scl, &p_scl, sizeof(double)) == 0 &&
                     same_bits(s_de, p_de);
    table.push_back(srow);
  }

  // gradient inner product over 8 platform gradients
  {
    std::vector<ParamVector> grads;
    for (std::uint64_t i = 0; i < 8; ++i)
      grads.push_back(random_vec(dims.param_count(), 10 + i));
    double s_gip = 0.0, p_gip = 0.0, s_lin = 0.0, p_lin = 0.0;
    Row grow{"gip"};
    grow.serial_ms =
        time_ms([&] { s_gip = gip(grads, ExecMode::Serial); }, reps);
    grow.openmp_ms =
        time_ms([&] { p_gip = gip(grads, ExecMode::OpenMP); }, reps);
    grow.identical = std::memcmp(&s_gip, &p_gip, sizeof(double)) == 0;
    table.push_back(grow);

    Row lrow{"gip_linear"};
    lrow.serial_ms =
        time_ms([&] { s_lin = gip_linear(grads, ExecMode::Serial); }, reps);
    lrow.openmp_ms =
        time_ms([&] { p_lin = gip_linear(grads, ExecMode::OpenMP); }, reps);
    lrow.identical = std::memcmp(&s_lin, &p_lin, sizeof(double)) == 0;
    table.push_back(lrow);
  }

  std::printf("openmp: %s, max threads: %d\n",
              openmp_enabled() ? "enabled" : "disabled", max_threads());
  std::printf("batch=%zu vocab=%zu hidden1=%zu hidden2=%zu classes=%zu "
              "nnz=%zu reps=%d\n\n",
              batch, vocab, hidden1, hidden2, classes, nnz, reps);
  std::printf("%-14s %12s %12s %9s %10s\n", "kernel", "serial(ms)",
              "openmp(ms)", "speedup", "identical");
  bool all_ok = true;
  for (const Row& r : table) {
    std::printf("%-14s %12.3f %12.3f %8.2fx %10s\n", r.name.c_str(),
                r.serial_ms, r.openmp_ms,
                r.openmp_ms > 0 ? r.serial_ms / r.openmp_ms : 0.0,
                r.identical ? "yes" : "NO");
    all_ok = all_ok && r.identical;
  }
  if (!all_ok) {
    std::fprintf(stderr, "\nbitwise mismatch between serial and OpenMP\n");
    return 1;
  }
  return 0;
}
