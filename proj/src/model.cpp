// Copyright (c) 2026 sclfish contributors
// SPDX-License-Identifier: Apache-2.0
#include "sclfish/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <random>

namespace sclfish {

namespace {

double next_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Fills [out, out+n) with uniform(-scale, scale).
void fill_uniform(std::mt19937_64& gen, double* out, std::size_t n,
                  double scale) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = scale * (2.0 * next_uniform(gen) - 1.0);
}

}  // namespace

ParamVector init_params(const ModelDims& dims, std::uint64_t seed) {
  ParamVector theta(dims.param_count(), 0.0);
  std::mt19937_64 gen(seed);
  const double s1 =
      std::sqrt(6.0 / static_cast<double>(dims.vocab + dims.hidden1));
  const double s2 =
      std::sqrt(6.0 / static_cast<double>(dims.hidden1 + dims.hidden2));
  const double s3 =
      std::sqrt(6.0 / static_cast<double>(dims.hidden2 + dims.classes));
  fill_uniform(gen, theta.data() + dims.w1_off(), dims.w1_size(), s1);
  fill_uniform(gen, theta.data() + dims.w2_off(), dims.w2_size(), s2);
  fill_uniform(gen, theta.data() + dims.w3_off(), dims.w3_size(), s3);
  return theta;
}

namespace {

// Computes one sample's activations into row slices of `acts`.
void forward_one(const ModelDims& d, const ParamVector& theta,
                 const Sample& s, double* h1, double* emb, double* logits) {
  const double* W1 = theta.data() + d.w1_off();
  const double* b1 = theta.data() + d.b1_off();
  const double* W2 = theta.data() + d.w2_off();
  const double* b2 = theta.data() + d.b2_off();
  const double* W3 = theta.data() + d.w3_off();
  const double* b3 = theta.data() + d.b3_off();

  for (std::size_t h = 0; h < d.hidden1; ++h) {
    double a = b1[h];
    const double* row = W1 + h * d.vocab;
    for (std::size_t t = 0; t < s.x.idx.size(); ++t)
      a += row[s.x.idx[t]] * s.x.val[t];
    h1[h] = std::tanh(a);
  }
  for (std::size_t k = 0; k < d.hidden2; ++k) {
    double a = b2[k];
    const double* row = W2 + k * d.hidden1;
    for (std::size_t h = 0; h < d.hidden1; ++h) a += row[h] * h1[h];
    emb[k] = std::tanh(a);
  }
  for (std::size_t c = 0; c < d.classes; ++c) {
    double a = b3[c];
    const double* row = W3 + c * d.hidden2;
    for (std::size_t k = 0; k < d.hidden2; ++k) a += row[k] * emb[k];
    logits[c] = a;
  }
}

}  // namespace

void forward(const ModelDims& dims, const ParamVector& theta,
             const Corpus& corpus, std::span<const std::uint32_t> batch,
             Activations& acts, ExecMode mode) {
  const std::size_t n = batch.size();
  acts.h1.resize(n * dims.hidden1);
  acts.emb.resize(n * dims.hidden2);
  acts.logits.resize(n * dims.classes);

  // Rows are independent; each thread writes disjoint slices, so the result
  // is bit-identical to the serial pass.
  const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (mode == ExecMode::OpenMP)
  for (std::int64_t i = 0; i < sn; ++i) {
    const Sample& s = corpus[batch[static_cast<std::size_t>(i)]];
    forward_one(dims, theta, s, acts.h1.data() + i * dims.hidden1,
                acts.emb.data() + i * dims.hidden2,
                acts.logits.data() + i * dims.classes);
  }
}

namespace {

// Per-sample pre-activation gradients; small enough to store per batch row.
struct SampleBack {
  std::vector<double> da1;       // H1
  std::vector<double> da2;       // H2
  const double* dlogits = nullptr;  // C (upstream, may be null)
};

// Backprop through the dense layers of one sample. Only fills da1/da2; the
// parameter gradient itself is accumulated later in batch order.
void backward_one(const ModelDims& d, const ParamVector& theta,
                  const double* h1, const double* emb, const double* dlogits,
                  const double* demb, SampleBack& out) {
  const double* W2 = theta.data() + d.w2_off();
  const double* W3 = theta.data() + d.w3_off();

  out.da2.assign(d.hidden2, 0.0);
  for (std::size_t k = 0; k < d.hidden2; ++k) {
    double de = demb ? demb[k] : 0.0;
    if (dlogits) {
      for (std::size_t c = 0; c < d.classes; ++c)
        de += W3[c * d.hidden2 + k] * dlogits[c];
    }
    out.da2[k] = de * (1.0 - emb[k] * emb[k]);
  }
  out.da1.assign(d.hidden1, 0.0);
  for (std::size_t h = 0; h < d.hidden1; ++h) {
    double dh = 0.0;
    for (std::size_t k = 0; k < d.hidden2; ++k)
      dh += W2[k * d.hidden1 + h] * out.da2[k];
    out.da1[h] = dh * (1.0 - h1[h] * h1[h]);
  }
}

}  // namespace

void backward(const ModelDims& dims, const ParamVector& theta,
              const Corpus& corpus, std::span<const std::uint32_t> batch,
              const Activations& acts, const UpstreamGrad& up,
              ParamVector& grad, ExecMode mode) {
  const std::size_t n = batch.size();
  const bool has_dl = !up.dlogits.empty();
  const bool has_de = !up.demb.empty();
  std::vector<SampleBack> per(n);

  // Phase 1 (parallel): per-sample chain rule, no shared writes.
  const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (mode == ExecMode::OpenMP)
  for (std::int64_t i = 0; i < sn; ++i) {
    const std::size_t u = static_cast<std::size_t>(i);
    per[u].dlogits = has_dl ? up.dlogits.data() + u * dims.classes : nullptr;
    backward_one(dims, theta, acts.h1.data() + u * dims.hidden1,
                 acts.emb.data() + u * dims.hidden2, per[u].dlogits,
                 has_de ? up.demb.data() + u * dims.hidden2 : nullptr, per[u]);
  }

  // Phase 2 (serial): accumulate parameter gradients in batch order, the
  // exact sequence the serial mode uses, so both modes agree bitwise.
  grad.assign(dims.param_count(), 0.0);
  double* gW1 = grad.data() + dims.w1_off();
  double* gb1 = grad.data() + dims.b1_off();
  double* gW2 = grad.data() + dims.w2_off();
  double* gb2 = grad.data() + dims.b2_off();
  double* gW3 = grad.data() + dims.w3_off();
  double* gb3 = grad.data() + dims.b3_off();

  for (std::size_t u = 0; u < n; ++u) {
    const Sample& s = corpus[batch[u]];
    const SampleBack& sb = per[u];
    const double* h1 = acts.h1.data() + u * dims.hidden1;
    const double* emb = acts.emb.data() + u * dims.hidden2;
    if (sb.dlogits) {
      for (std::size_t c = 0; c < dims.classes; ++c) {
        const double dc = sb.dlogits[c];
        double* row = gW3 + c * dims.hidden2;
        for (std::size_t k = 0; k < dims.hidden2; ++k) row[k] += dc * emb[k];
        gb3[c] += dc;
      }
    }
    for (std::size_t k = 0; k < dims.hidden2; ++k) {
      const double dk = sb.da2[k];
      double* row = gW2 + k * dims.hidden1;
      for (std::size_t h = 0; h < dims.hidden1; ++h) row[h] += dk * h1[h];
      gb2[k] += dk;
    }
    for (std::size_t h = 0; h < dims.hidden1; ++h) {
      const double dh = sb.da1[h];
      double* row = gW1 + h * dims.vocab;
      for (std::size_t t = 0; t < s.x.idx.size(); ++t)
        row[s.x.idx[t]] += dh * s.x.val[t];
      gb1[h] += dh;
    }
  }
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'C', 'L', 'F'};

void put_u32(std::FILE* f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  std::fwrite(b, 1, 4, f);
}

void put_u64(std::FILE* f, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  std::fwrite(b, 1, 8, f);
}

bool get_u32(std::FILE* f, std::uint32_t& v) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, f) != 4) return false;
  v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{b[i]} << (8 * i);
  return true;
}

bool get_u64(std::FILE* f, std::uint64_t& v) {
  unsigned char b[8];
  if (std::fread(b, 1, 8, f) != 8) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return true;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const ModelDims& dims,
                     const ParamVector& theta) {
  if (theta.size() != dims.param_count())
    throw LengthMismatchError("parameter vector does not match dims: " + path);
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
  if (!f) throw CheckpointError("cannot open for writing: " + path);
  std::fwrite(kMagic, 1, 4, f.get());
  put_u32(f.get(), kCheckpointVersion);
  put_u32(f.get(), static_cast<std::uint32_t>(dims.vocab));
  put_u32(f.get(), static_cast<std::uint32_t>(dims.hidden1));
  put_u32(f.get(), static_cast<std::uint32_t>(dims.hidden2));
  put_u32(f.get(), static_cast<std::uint32_t>(dims.classes));
  put_u64(f.get(), theta.size());
  // Little-endian doubles; asserted at build time below.
  static_assert(sizeof(double) == 8);
  for (double v : theta) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(f.get(), bits);
  }
  if (std::ferror(f.get()))
    throw CheckpointError("write failure: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
  if (!f) throw CheckpointError("cannot open: " + path);
  char magic[4];
  if (std::fread(magic, 1, 4, f.get()) != 4)
    throw TruncatedError("shorter than header: " + path);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw BadMagicError("bad magic: " + path);
  std::uint32_t version = 0;
  if (!get_u32(f.get(), version))
    throw TruncatedError("shorter than header: " + path);
  if (version != kCheckpointVersion)
    throw VersionMismatchError("unsupported version " +
                               std::to_string(version) + ": " + path);
  std::uint32_t v = 0, h1 = 0, h2 = 0, c = 0;
  std::uint64_t count = 0;
  if (!get_u32(f.get(), v) || !get_u32(f.get(), h1) || !get_u32(f.get(), h2) ||
      !get_u32(f.get(), c) || !get_u64(f.get(), count))
    throw TruncatedError("shorter than header: " + path);
  Checkpoint ck;
  ck.dims = ModelDims{v, h1, h2, c};
  if (count != ck.dims.param_count())
    throw LengthMismatchError("parameter count " + std::to_string(count) +
                              " does not match dims: " + path);
  ck.theta.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    if (!get_u64(f.get(), bits))
      throw TruncatedError("parameter block cut short: " + path);
    std::memcpy(&ck.theta[i], &bits, 8);
  }
  return ck;
}

}  // namespace sclfish
