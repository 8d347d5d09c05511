// Copyright (c) 2026 sclfish contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sclfish/model.hpp"

namespace sclfish {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Doc {
  std::string text;
  int label = 0;
  std::string platform;
};

// FNV-1a 64-bit over the bytes of `s`.
std::uint64_t fnv1a64(std::string_view s);

// Lowercases ASCII letters and splits on ASCII non-alphanumerics; bytes
// >= 0x80 are kept as token characters. Returns the tokens in order.
std::vector<std::string> tokenize(std::string_view text);

// Hashing bag of words: token -> fnv1a64(token) % vocab, counts L2-normalized.
// Bucket ids come out sorted and unique; empty text gives an empty vector.
FeatureVec hash_features(std::string_view text, std::size_t vocab);

// JSONL with one object per line: {"text": str, "label": int, "platform": str}.
// Malformed lines raise DataError naming the 1-based line number.
std::vector<Doc> load_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<Doc>& docs);

// Featurized corpus; platform ids are assigned in order of first appearance.
struct FeaturizedData {
  Corpus samples;
  std::vector<std::string> platform_names;
};

FeaturizedData featurize(const std::vector<Doc>& docs, std::size_t vocab);

// Role assignment by platform name. Every named platform must exist in
// `docs` and no platform may appear in two roles; violations raise
// DataError. When `test_platforms` is absent, every platform named for
// neither train nor validation lands in `test`; when present (even empty),
// the test role is exactly the named platforms.
struct SplitPlan {
  std::vector<Doc> train;
  std::vector<Doc> val;
  std::vector<Doc> test;
};

SplitPlan make_splits(const std::vector<Doc>& docs,
                      const std::vector<std::string>& train_platforms,
                      const std::vector<std::string>& val_platforms,
                      const std::optional<std::vector<std::string>>&
                          test_platforms = std::nullopt);

// ---------------------------------------------------------------------------
// Synthetic multi-platform benchmark data.
//
// Each document is `words_per_doc` task tokens plus, with calibrated
// probability, `spurious_tokens` copies of one platform-specific spurious
// word. Task tokens are drawn from a class-matched half of the task
// vocabulary with probability q_match. The spurious presence/label point-
// biserial correlation is driven to exactly `rho` (for the configured
// positive rate) by solving for the conditional presence probabilities.
// Held-out platforms draw spurious words from the union of the training
// platforms' sets, with their own rho (typically reversed).
// ---------------------------------------------------------------------------

struct SynthConfig {
  std::size_t train_platforms = 3;
  std::size_t samples_per_platform = 2000;
  double rho_train = 0.9;
  double rho_heldout = -0.9;
  bool heldout = true;
  std::size_t task_vocab = 64;       // split evenly between the two classes
  std::size_t words_per_doc = 12;
  double q_match = 0.72;
  std::size_t spurious_per_platform = 8;
  std::size_t spurious_tokens = 2;
  double positive_rate = 0.5;
};

// Solves for p1 = P(spurious | y = 1), with p0 = 1 - p1, such that the
// point-biserial correlation between presence and label equals rho when
// P(y = 1) = r. Monotone bisection; exact to ~1e-15.
double solve_spurious_rate(double rho, double r);

// Training platforms are named "synth0".."synthN-1", the held-out platform
// "heldout". Deterministic in `seed`.
std::vector<Doc> generate_synthetic(const SynthConfig& cfg, std::uint64_t seed);

// Deterministic per-platform class-balanced subsample: for each platform,
// keeps min-over-classes counts from each class, chosen by a Fisher-Yates
// shuffle seeded with (seed XOR fnv1a64(platform name)). Returned docs keep
// their original relative order.
std::vector<Doc> balanced_subsample(const std::vector<Doc>& docs,
                                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Deterministic RNG helpers. std::mt19937_64 has a portable stream, but the
// standard distributions do not, so sampling goes through these.
// ---------------------------------------------------------------------------

// Uniform double in [0, 1): (gen() >> 11) * 2^-53.
template <typename Rng>
double uniform01(Rng& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection; n must be nonzero.
template <typename Rng>
std::uint64_t uniform_below(Rng& gen, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
  std::uint64_t v = gen();
  while (v >= limit) v = gen();
  return v % n;
}

// In-place Fisher-Yates shuffle.
template <typename Rng, typename T>
void shuffle_vec(Rng& gen, std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(gen, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace sclfish
