// Copyright (c) 2026 sclfish contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sclfish/model.hpp"
#include "sclfish/parallel.hpp"

namespace sclfish {

// Raised when a loss or a parameter stops being finite mid-training.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double lr = 0.5;         // inner / SGD learning rate (alpha)
  double meta_lr = 0.125;  // meta step size (epsilon)
  double scl_lr = 0.02;    // contrastive step size (alpha'); 0 disables SCL
  double tau = 1.0;        // contrastive temperature
  std::size_t batch_size = 8;
  std::size_t epochs = 4;
  // +1 applies theta += eps * (tilde - theta); -1 applies the opposite
  // (descending away from the inner-loop result, kept for comparison runs).
  int meta_sign = +1;
  std::uint64_t seed = 1;
  ExecMode mode = ExecMode::Serial;
};

// One trace entry per optimization step (ERM: minibatch; Fish: meta
// iteration). `platform_loss` has one entry per training platform for the
// Fish trainers and a single pooled entry for the ERM trainers. `scl_loss`
// and `gip_hat` are NaN when the step does not compute them.
struct TraceRecord {
  std::size_t epoch = 0;
  std::size_t iter = 0;
  std::vector<double> platform_loss;
  double scl_loss = 0.0;
  double gip_hat = 0.0;
};

using TraceSink = std::function<void(const TraceRecord&)>;

// Called after each epoch with the epoch index and current parameters;
// drives checkpoint selection in the CLI.
using EpochHook = std::function<void(std::size_t, const ParamVector&)>;

// ---------------------------------------------------------------------------
// Building blocks (exposed for tests and diagnostics)
// ---------------------------------------------------------------------------

// Mean cross-entropy gradient of the batch at theta. Returns the loss.
double ce_gradient(const ModelDims& dims, const ParamVector& theta,
                   const Corpus& corpus, std::span<const std::uint32_t> batch,
                   ParamVector& grad, ExecMode mode = ExecMode::Serial);

// theta -= lr * grad
void axpy_update(ParamVector& theta, const ParamVector& grad, double lr);

// theta += sign * eps * (tilde - theta); eps == 1 with sign +1 assigns
// tilde to theta exactly (no rounding through the update formula).
void fish_meta_update(ParamVector& theta, const ParamVector& tilde, double eps,
                      int sign = +1);

// Gradient inner product: mean pairwise alignment of per-platform gradients,
//   gip(G) = 2 / (S (S-1)) * sum_{i<j} G_i . G_j
double gip(std::span<const ParamVector> grads,
           ExecMode mode = ExecMode::Serial);

// Linearized form ||sum_i G_i||^2 - sum_i ||G_i||^2, equal to
// S (S-1) * gip(G) up to floating-point rounding.
double gip_linear(std::span<const ParamVector> grads,
                  ExecMode mode = ExecMode::Serial);

// Per-platform index lists (platform id -> corpus row indices).
std::vector<std::vector<std::uint32_t>> platform_index(const Corpus& corpus);

// ---------------------------------------------------------------------------
// Trainers. All of them mutate theta in place, draw every random choice from
// mt19937_64(cfg.seed), check batch losses for finiteness, and scan theta
// once per epoch (NumericError on violation).
// ---------------------------------------------------------------------------

// Pooled-minibatch SGD on the mean cross-entropy.
void train_erm(const ModelDims& dims, ParamVector& theta, const Corpus& corpus,
               const TrainConfig& cfg, const TraceSink& trace = {},
               const EpochHook& on_epoch = {});

// ERM plus one contrastive step on each minibatch (after the CE step),
// at rate cfg.scl_lr. scl_lr == 0 reproduces train_erm exactly.
void train_scl_erm(const ModelDims& dims, ParamVector& theta,
                   const Corpus& corpus, const TrainConfig& cfg,
                   const TraceSink& trace = {}, const EpochHook& on_epoch = {});

// Domain-sequential meta-learning. Each meta iteration visits the training
// platforms in a fresh random order, applies one SGD step per platform batch
// to a clone, then moves theta toward the clone by eps. With cfg.scl_lr > 0
// the union of the visited batches is shuffled and consumed in minibatches
// by contrastive steps on theta (train_scl_fish); scl_lr == 0 skips that
// phase entirely, leaving the random stream untouched (train_fish).
void train_fish(const ModelDims& dims, ParamVector& theta, const Corpus& corpus,
                const TrainConfig& cfg, const TraceSink& trace = {},
                const EpochHook& on_epoch = {});
void train_scl_fish(const ModelDims& dims, ParamVector& theta,
                    const Corpus& corpus, const TrainConfig& cfg,
                    const TraceSink& trace = {},
                    const EpochHook& on_epoch = {});

// Dispatch by name: "erm", "scl-erm", "fish", "scl-fish".
void train(const std::string& algo, const ModelDims& dims, ParamVector& theta,
           const Corpus& corpus, const TrainConfig& cfg,
           const TraceSink& trace = {}, const EpochHook& on_epoch = {});

// ---------------------------------------------------------------------------
// Alignment-convergence experiment.
//
// On a toy objective with S domains, compare
//   G_f = E_perm[ tilde(perm) - theta ] + alpha * sum_i g_i(theta)
// (expectation over all S! domain orderings of one full-batch inner pass)
// against G_g = d/dtheta [ ||sum g_i||^2 - sum ||g_i||^2 ] via central
// differences. cos(G_f, G_g) -> 1 as alpha -> 0. `printed_form` flips G_f to
// E[theta - tilde] - alpha * sum g_i, which converges to cosine -1.
// ---------------------------------------------------------------------------

// Toy objective: a set of per-domain losses over a shared parameter vector
// with analytic gradients (the experiment differentiates through them).
struct ToyProblem {
  std::size_t dim = 0;
  std::size_t domains = 0;
  std::vector<double> theta0;
  std::function<double(std::size_t, std::span<const double>)> loss;
  std::function<void(std::size_t, std::span<const double>, std::span<double>)>
      grad;
};

// Builtin toys: "logistic2" (two logistic-regression domains, 5 params) and
// "quad2" (two shifted quadratics, exact cosine 1 at any alpha).
ToyProblem make_toy(const std::string& name);

struct CosineResult {
  double alpha = 0.0;
  double cosine = 0.0;
};

CosineResult cosine_convergence(const ToyProblem& toy, double alpha,
                                bool printed_form = false,
                                double fd_step = 1e-6);

}  // namespace sclfish
