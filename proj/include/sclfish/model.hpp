// Copyright (c) 2026 sclfish contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sclfish/parallel.hpp"

namespace sclfish {

// Flat parameter storage. Layout (row-major):
//   W1[H1 x V] | b1[H1] | W2[H2 x H1] | b2[H2] | W3[C x H2] | b3[C]
using ParamVector = std::vector<double>;

struct ModelDims {
  std::size_t vocab = 4096;
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 16;
  std::size_t classes = 2;

  std::size_t w1_size() const { return hidden1 * vocab; }
  std::size_t w2_size() const { return hidden2 * hidden1; }
  std::size_t w3_size() const { return classes * hidden2; }
  std::size_t w1_off() const { return 0; }
  std::size_t b1_off() const { return w1_off() + w1_size(); }
  std::size_t w2_off() const { return b1_off() + hidden1; }
  std::size_t b2_off() const { return w2_off() + w2_size(); }
  std::size_t w3_off() const { return b2_off() + hidden2; }
  std::size_t b3_off() const { return w3_off() + w3_size(); }
  std::size_t param_count() const { return b3_off() + classes; }

  bool operator==(const ModelDims&) const = default;
};

// One featurized document: sorted unique hash buckets with L2-normalized
// counts. An empty document has no entries and contributes only biases.
struct FeatureVec {
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
};

struct Sample {
  FeatureVec x;
  int y = 0;
  std::uint32_t platform_id = 0;
};

using Corpus = std::vector<Sample>;

// Per-batch activations, flattened row-major: h1 is N x H1, emb is N x H2,
// logits is N x C.
struct Activations {
  std::vector<double> h1;
  std::vector<double> emb;
  std::vector<double> logits;
};

// Per-sample upstream gradients for the pullback. Either member may be empty
// (treated as zero). dlogits is N x C, demb is N x H2. Mean factors (1/N)
// must already be folded in by the loss.
struct UpstreamGrad {
  std::vector<double> dlogits;
  std::vector<double> demb;
};

// Xavier-uniform init of W1, W2, W3 (in that order) from mt19937_64(seed);
// all biases zero. Uniform doubles are derived as (gen() >> 11) * 2^-53 so
// the stream is reproducible across standard library implementations.
ParamVector init_params(const ModelDims& dims, std::uint64_t seed);

// Forward pass over corpus rows selected by `batch`. Resizes the output
// buffers. h1 = tanh(W1 x + b1), emb = tanh(W2 h1 + b2), logits = W3 emb + b3.
void forward(const ModelDims& dims, const ParamVector& theta,
             const Corpus& corpus, std::span<const std::uint32_t> batch,
             Activations& acts, ExecMode mode = ExecMode::Serial);

// Pullback of `up` through the forward pass; overwrites `grad` with dL/dtheta.
// `acts` must come from forward() on the same (theta, batch).
void backward(const ModelDims& dims, const ParamVector& theta,
              const Corpus& corpus, std::span<const std::uint32_t> batch,
              const Activations& acts, const UpstreamGrad& up,
              ParamVector& grad, ExecMode mode = ExecMode::Serial);

// ---------------------------------------------------------------------------
// Checkpoint serialization. Binary little-endian: magic "SCLF", u32 version,
// u32 vocab/hidden1/hidden2/classes, u64 param count, raw doubles.
// ---------------------------------------------------------------------------

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadMagicError : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct VersionMismatchError : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct TruncatedError : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct LengthMismatchError : CheckpointError {
  using CheckpointError::CheckpointError;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const ModelDims& dims,
                     const ParamVector& theta);

struct Checkpoint {
  ModelDims dims;
  ParamVector theta;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace sclfish
