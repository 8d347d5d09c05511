// Copyright (c) 2026 sclfish contributors
// SPDX-License-Identifier: Apache-2.0
#include "sclfish/trainers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>

#include "sclfish/data.hpp"
#include "sclfish/losses.hpp"

namespace sclfish {

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

double ce_gradient(const ModelDims& dims, const ParamVector& theta,
                   const Corpus& corpus, std::span<const std::uint32_t> batch,
                   ParamVector& grad, ExecMode mode) {
  Activations acts;
  forward(dims, theta, corpus, batch, acts, mode);
  std::vector<int> labels(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) labels[i] = corpus[batch[i]].y;
  UpstreamGrad up;
  const double loss =
      cross_entropy(dims, acts.logits, labels, &up.dlogits, mode);
  backward(dims, theta, corpus, batch, acts, up, grad, mode);
  return loss;
}

void axpy_update(ParamVector& theta, const ParamVector& grad, double lr) {
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
}

void fish_meta_update(ParamVector& theta, const ParamVector& tilde, double eps,
                      int sign) {
  if (eps == 1.0 && sign > 0) {
    theta = tilde;  // exact handoff, no rounding through the update formula
    return;
  }
  const double step = sign > 0 ? eps : -eps;
  for (std::size_t i = 0; i < theta.size(); ++i)
    theta[i] += step * (tilde[i] - theta[i]);
}

double gip(std::span<const ParamVector> grads, ExecMode mode) {
  const std::size_t S = grads.size();
  if (S < 2) return 0.0;
  const std::size_t pairs = S * (S - 1) / 2;
  std::vector<double> dots(pairs, 0.0);
  // Pair (i, j) -> slot; each dot product runs serially in index order, so
  // the result does not depend on the thread count.
  const std::int64_t sp = static_cast<std::int64_t>(pairs);
#pragma omp parallel for schedule(static) if (mode == ExecMode::OpenMP)
  for (std::int64_t t = 0; t < sp; ++t) {
    std::size_t rem = static_cast<std::size_t>(t), i = 0;
    while (rem >= S - 1 - i) {
      rem -= S - 1 - i;
      ++i;
    }
    const std::size_t j = i + 1 + rem;
    const ParamVector& a = grads[i];
    const ParamVector& b = grads[j];
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d += a[k] * b[k];
    dots[static_cast<std::size_t>(t)] = d;
  }
  double sum = 0.0;
  for (double d : dots) sum += d;
  return 2.0 * sum / (static_cast<double>(S) * static_cast<double>(S - 1));
}

double gip_linear(std::span<const ParamVector> grads, ExecMode mode) {
  const std::size_t S = grads.size();
  if (S == 0) return 0.0;
  const std::size_t P = grads[0].size();
  std::vector<double> coord(P, 0.0);
  const std::int64_t sP = static_cast<std::int64_t>(P);
  // ||sum_i G_i||^2 - sum_i ||G_i||^2, coordinate-parallel: each k owns its
  // slot; the final reduction is serial and order-fixed.
#pragma omp parallel for schedule(static) if (mode == ExecMode::OpenMP)
  for (std::int64_t k = 0; k < sP; ++k) {
    double s = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < S; ++i) {
      const double g = grads[i][static_cast<std::size_t>(k)];
      s += g;
      sq += g * g;
    }
    coord[static_cast<std::size_t>(k)] = s * s - sq;
  }
  double total = 0.0;
  for (double v : coord) total += v;
  return total;
}

std::vector<std::vector<std::uint32_t>> platform_index(const Corpus& corpus) {
  std::uint32_t nplat = 0;
  for (const Sample& s : corpus) nplat = std::max(nplat, s.platform_id + 1);
  std::vector<std::vector<std::uint32_t>> idx(nplat);
  for (std::size_t i = 0; i < corpus.size(); ++i)
    idx[corpus[i].platform_id].push_back(static_cast<std::uint32_t>(i));
  return idx;
}

// ---------------------------------------------------------------------------
// Shared trainer plumbing
// ---------------------------------------------------------------------------

namespace {

void check_finite_loss(double loss, const char* what) {
  if (!std::isfinite(loss))
    throw NumericError(std::string(what) + " loss is not finite");
}

void check_finite_params(const ParamVector& theta, std::size_t epoch) {
  for (double v : theta)
    if (!std::isfinite(v))
      throw NumericError("non-finite parameter after epoch " +
                         std::to_string(epoch));
}

void validate_config(const TrainConfig& cfg, const Corpus& corpus) {
  if (corpus.empty()) throw DataError("empty training corpus");
  if (cfg.batch_size == 0) throw NumericError("batch_size must be positive");
  if (cfg.lr <= 0.0) throw NumericError("lr must be positive");
}

// One contrastive SGD step on the rows in `batch`; returns the loss.
double scl_step(const ModelDims& dims, ParamVector& theta, const Corpus& corpus,
                std::span<const std::uint32_t> batch, double lr, double tau,
                ExecMode mode, ParamVector& grad_buf) {
  Activations acts;
  forward(dims, theta, corpus, batch, acts, mode);
  std::vector<int> labels(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) labels[i] = corpus[batch[i]].y;
  UpstreamGrad up;
  const double loss =
      scl_loss(acts.emb, dims.hidden2, labels, tau, &up.demb, mode);
  backward(dims, theta, corpus, batch, acts, up, grad_buf, mode);
  axpy_update(theta, grad_buf, lr);
  return loss;
}

void run_erm(const ModelDims& dims, ParamVector& theta, const Corpus& corpus,
             const TrainConfig& cfg, bool with_scl, const TraceSink& trace,
             const EpochHook& on_epoch) {
  validate_config(cfg, corpus);
  if (theta.size() != dims.param_count())
    theta = init_params(dims, cfg.seed);
  std::mt19937_64 gen(cfg.seed);
  std::vector<std::uint32_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0u);
  ParamVector grad;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_vec(gen, order);
    std::size_t iter = 0;
    for (std::size_t off = 0; off < order.size(); off += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - off);
      const std::span<const std::uint32_t> batch(order.data() + off, len);
      const double loss = ce_gradient(dims, theta, corpus, batch, grad, cfg.mode);
      check_finite_loss(loss, "cross-entropy");
      axpy_update(theta, grad, cfg.lr);
      double scl = nan;
      if (with_scl && cfg.scl_lr != 0.0) {
        scl = scl_step(dims, theta, corpus, batch, cfg.scl_lr, cfg.tau,
                       cfg.mode, grad);
        check_finite_loss(scl, "contrastive");
      }
      if (trace) trace(TraceRecord{epoch, iter, {loss}, scl, nan});
      ++iter;
    }
    check_finite_params(theta, epoch);
    if (on_epoch) on_epoch(epoch, theta);
  }
}

// Per-platform batch scheduler: cycles a shuffled index list per platform,
// reshuffling whenever a platform runs out.
class DomainSchedule {
 public:
  DomainSchedule(std::vector<std::vector<std::uint32_t>> idx,
                 std::size_t batch_size, std::mt19937_64& gen)
      : idx_(std::move(idx)), cursor_(idx_.size(), 0), batch_(batch_size) {
    for (auto& rows : idx_) shuffle_vec(gen, rows);
  }

  std::size_t domains() const { return idx_.size(); }
  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& rows : idx_) n += rows.size();
    return n;
  }

  // Appends up to batch_size indices of platform p to `out`.
  void next(std::size_t p, std::mt19937_64& gen,
            std::vector<std::uint32_t>& out) {
    auto& rows = idx_[p];
    const std::size_t take = std::min(batch_, rows.size());
    for (std::size_t t = 0; t < take; ++t) {
      if (cursor_[p] == rows.size()) {
        shuffle_vec(gen, rows);
        cursor_[p] = 0;
      }
      out.push_back(rows[cursor_[p]++]);
    }
  }

 private:
  std::vector<std::vector<std::uint32_t>> idx_;
  std::vector<std::size_t> cursor_;
  std::size_t batch_;
};

void run_fish(const ModelDims& dims, ParamVector& theta, const Corpus& corpus,
              const TrainConfig& cfg, const TraceSink& trace,
              const EpochHook& on_epoch) {
  validate_config(cfg, corpus);
  if (theta.size() != dims.param_count())
    theta = init_params(dims, cfg.seed);
  std::mt19937_64 gen(cfg.seed);

  auto pidx = platform_index(corpus);
  // Platforms with no rows cannot be visited.
  std::erase_if(pidx, [](const auto& rows) { return rows.empty(); });
  const std::size_t S = pidx.size();
  if (S == 0) throw DataError("no platforms in training corpus");
  DomainSchedule sched(std::move(pidx), cfg.batch_size, gen);

  const std::size_t denom = S * cfg.batch_size;
  const std::size_t iters =
      std::max<std::size_t>(1, (sched.total() + denom - 1) / denom);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::size_t> visit(S);
  std::iota(visit.begin(), visit.end(), 0u);
  ParamVector tilde, grad;
  std::vector<ParamVector> inner_grads(S);
  std::vector<std::uint32_t> batch, pool;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t iter = 0; iter < iters; ++iter) {
      shuffle_vec(gen, visit);
      tilde = theta;
      pool.clear();
      std::vector<double> platform_loss(S, nan);
      for (std::size_t v = 0; v < S; ++v) {
        const std::size_t p = visit[v];
        batch.clear();
        sched.next(p, gen, batch);
        const double loss =
            ce_gradient(dims, tilde, corpus, batch, inner_grads[p], cfg.mode);
        check_finite_loss(loss, "inner cross-entropy");
        platform_loss[p] = loss;
        axpy_update(tilde, inner_grads[p], cfg.lr);
        pool.insert(pool.end(), batch.begin(), batch.end());
      }
      fish_meta_update(theta, tilde, cfg.meta_lr, cfg.meta_sign);

      double scl_mean = nan;
      if (cfg.scl_lr != 0.0) {
        // The contrastive phase consumes the union of the visited batches in
        // fresh minibatches. Skipped entirely when disabled so that the
        // random stream (and thus the trajectory) matches plain Fish.
        shuffle_vec(gen, pool);
        double sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t off = 0; off < pool.size(); off += cfg.batch_size) {
          const std::size_t len = std::min(cfg.batch_size, pool.size() - off);
          const double l =
              scl_step(dims, theta, corpus,
                       std::span<const std::uint32_t>(pool.data() + off, len),
                       cfg.scl_lr, cfg.tau, cfg.mode, grad);
          check_finite_loss(l, "contrastive");
          sum += l;
          ++steps;
        }
        if (steps > 0) scl_mean = sum / static_cast<double>(steps);
      }

      if (trace) {
        // Alignment diagnostic from the inner-loop gradients (each taken at
        // its own visit point along the inner trajectory).
        trace(TraceRecord{epoch, iter, platform_loss, scl_mean,
                          gip_linear(inner_grads, cfg.mode)});
      }
    }
    check_finite_params(theta, epoch);
    if (on_epoch) on_epoch(epoch, theta);
  }
}

}  // namespace

void train_erm(const ModelDims& dims, ParamVector& theta, const Corpus& corpus,
               const TrainConfig& cfg, const TraceSink& trace,
               const EpochHook& on_epoch) {
  run_erm(dims, theta, corpus, cfg, /*with_scl=*/false, trace, on_epoch);
}

void train_scl_erm(const ModelDims& dims, ParamVector& theta,
                   const Corpus& corpus, const TrainConfig& cfg,
                   const TraceSink& trace, const EpochHook& on_epoch) {
  run_erm(dims, theta, corpus, cfg, /*with_scl=*/true, trace, on_epoch);
}

void train_fish(const ModelDims& dims, ParamVector& theta, const Corpus& corpus,
                const TrainConfig& cfg, const TraceSink& trace,
                const EpochHook& on_epoch) {
  TrainConfig plain = cfg;
  plain.scl_lr = 0.0;
  run_fish(dims, theta, corpus, plain, trace, on_epoch);
}

void train_scl_fish(const ModelDims& dims, ParamVector& theta,
                    const Corpus& corpus, const TrainConfig& cfg,
                    const TraceSink& trace, const EpochHook& on_epoch) {
  run_fish(dims, theta, corpus, cfg, trace, on_epoch);
}

void train(const std::string& algo, const ModelDims& dims, ParamVector& theta,
           const Corpus& corpus, const TrainConfig& cfg,
           const TraceSink& trace, const EpochHook& on_epoch) {
  if (algo == "erm")
    train_erm(dims, theta, corpus, cfg, trace, on_epoch);
  else if (algo == "scl-erm")
    train_scl_erm(dims, theta, corpus, cfg, trace, on_epoch);
  else if (algo == "fish")
    train_fish(dims, theta, corpus, cfg, trace, on_epoch);
  else if (algo == "scl-fish")
    train_scl_fish(dims, theta, corpus, cfg, trace, on_epoch);
  else
    throw std::invalid_argument("unknown algorithm: " + algo);
}

// ---------------------------------------------------------------------------
// Alignment-convergence experiment
// ---------------------------------------------------------------------------

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Two logistic-regression domains over 5 parameters (4 features + bias).
// Deterministic data; domains differ in feature scaling and label noise so
// their gradients are genuinely misaligned.
ToyProblem make_logistic2() {
  constexpr std::size_t kN = 24, kF = 4, kDim = kF + 1;
  ToyProblem toy;
  toy.dim = kDim;
  toy.domains = 2;
  toy.theta0 = {0.4, -0.2, 0.1, 0.3, -0.1};

  // Shared deterministic dataset: features in [-2, 2), labels by a fixed
  // teacher with domain-dependent sign flips.
  auto data = std::make_shared<std::vector<std::array<double, kDim + 1>>>();
  std::mt19937_64 gen(7);
  const double teacher[kDim] = {1.0, -2.0, 0.5, 1.5, 0.2};
  for (std::size_t d = 0; d < 2; ++d) {
    const double scale = d == 0 ? 2.0 : 1.0;
    for (std::size_t i = 0; i < kN; ++i) {
      std::array<double, kDim + 1> row{};
      double margin = teacher[kF];
      for (std::size_t f = 0; f < kF; ++f) {
        row[f] = scale * (2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53) -
                          1.0) *
                 2.0;
        margin += teacher[f] * row[f];
      }
      double y = margin > 0.0 ? 1.0 : 0.0;
      if (i % (d == 0 ? 7 : 5) == 0) y = 1.0 - y;  // domain-specific noise
      row[kF] = 1.0;  // bias input
      row[kDim] = y;
      data->push_back(row);
    }
  }

  auto domain_rows = [](std::size_t d) {
    return std::pair<std::size_t, std::size_t>{d * kN, (d + 1) * kN};
  };
  toy.loss = [data, domain_rows](std::size_t d, std::span<const double> th) {
    auto [lo, hi] = domain_rows(d);
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& row = (*data)[i];
      double z = 0.0;
      for (std::size_t f = 0; f < kDim; ++f) z += th[f] * row[f];
      const double y = row[kDim];
      // Stable log(1 + exp(.)) form.
      const double softplus = z > 0 ? z + std::log1p(std::exp(-z))
                                    : std::log1p(std::exp(z));
      sum += softplus - y * z;
    }
    return sum / static_cast<double>(kN);
  };
  toy.grad = [data, domain_rows](std::size_t d, std::span<const double> th,
                                 std::span<double> out) {
    auto [lo, hi] = domain_rows(d);
    for (std::size_t f = 0; f < kDim; ++f) out[f] = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& row = (*data)[i];
      double z = 0.0;
      for (std::size_t f = 0; f < kDim; ++f) z += th[f] * row[f];
      const double err = sigmoid(z) - row[kDim];
      for (std::size_t f = 0; f < kDim; ++f) out[f] += err * row[f];
    }
    for (std::size_t f = 0; f < kDim; ++f) out[f] /= static_cast<double>(kN);
  };
  return toy;
}

// Two quadratics with distinct centers and a shared Hessian. The alignment
// statistic is exactly linear in theta here, so the cosine is 1 at any alpha.
ToyProblem make_quad2() {
  constexpr std::size_t kDim = 4;
  ToyProblem toy;
  toy.dim = kDim;
  toy.domains = 2;
  toy.theta0 = {1.0, -0.5, 0.25, 2.0};
  auto center = [](std::size_t d) {
    return d == 0 ? std::array<double, kDim>{0.0, 1.0, -1.0, 0.5}
                  : std::array<double, kDim>{2.0, -1.0, 1.0, -0.5};
  };
  static constexpr std::array<double, kDim> kDiag{1.0, 2.0, 0.5, 1.5};
  toy.loss = [center](std::size_t d, std::span<const double> th) {
    const auto c = center(d);
    double sum = 0.0;
    for (std::size_t k = 0; k < kDim; ++k)
      sum += 0.5 * kDiag[k] * (th[k] - c[k]) * (th[k] - c[k]);
    return sum;
  };
  toy.grad = [center](std::size_t d, std::span<const double> th,
                      std::span<double> out) {
    const auto c = center(d);
    for (std::size_t k = 0; k < kDim; ++k) out[k] = kDiag[k] * (th[k] - c[k]);
  };
  return toy;
}

// Linearized pairwise alignment of the per-domain toy gradients at theta.
double toy_gip_linear(const ToyProblem& toy, std::span<const double> theta) {
  std::vector<double> sum(toy.dim, 0.0), g(toy.dim, 0.0);
  double sq = 0.0;
  for (std::size_t d = 0; d < toy.domains; ++d) {
    toy.grad(d, theta, g);
    for (std::size_t k = 0; k < toy.dim; ++k) {
      sum[k] += g[k];
      sq += g[k] * g[k];
    }
  }
  double total = 0.0;
  for (std::size_t k = 0; k < toy.dim; ++k) total += sum[k] * sum[k];
  return total - sq;
}

}  // namespace

ToyProblem make_toy(const std::string& name) {
  if (name == "logistic2") return make_logistic2();
  if (name == "quad2") return make_quad2();
  throw std::invalid_argument("unknown toy problem: " + name);
}

CosineResult cosine_convergence(const ToyProblem& toy, double alpha,
                                bool printed_form, double fd_step) {
  const std::size_t P = toy.dim;
  const std::size_t S = toy.domains;
  std::vector<double> theta = toy.theta0;

  // E over all S! visit orders of the inner-loop endpoint.
  std::vector<std::size_t> perm(S);
  std::iota(perm.begin(), perm.end(), 0u);
  std::vector<double> mean_delta(P, 0.0);
  std::size_t nperm = 0;
  std::vector<double> tilde(P), g(P);
  do {
    tilde = theta;
    for (std::size_t v = 0; v < S; ++v) {
      toy.grad(perm[v], tilde, g);
      for (std::size_t k = 0; k < P; ++k) tilde[k] -= alpha * g[k];
    }
    for (std::size_t k = 0; k < P; ++k) mean_delta[k] += tilde[k] - theta[k];
    ++nperm;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (std::size_t k = 0; k < P; ++k)
    mean_delta[k] /= static_cast<double>(nperm);

  // G_f = E[tilde - theta] + alpha * sum_i g_i(theta); the residual after the
  // first-order terms cancel is proportional to the alignment gradient.
  std::vector<double> Gf = mean_delta;
  for (std::size_t d = 0; d < S; ++d) {
    toy.grad(d, theta, g);
    for (std::size_t k = 0; k < P; ++k) Gf[k] += alpha * g[k];
  }
  if (printed_form)
    for (double& v : Gf) v = -v;

  // G_g = central-difference gradient of the linearized alignment statistic.
  std::vector<double> Gg(P, 0.0), probe = theta;
  for (std::size_t k = 0; k < P; ++k) {
    probe[k] = theta[k] + fd_step;
    const double up = toy_gip_linear(toy, probe);
    probe[k] = theta[k] - fd_step;
    const double dn = toy_gip_linear(toy, probe);
    probe[k] = theta[k];
    Gg[k] = (up - dn) / (2.0 * fd_step);
  }

  double ff = 0.0, gg = 0.0, fg = 0.0;
  for (std::size_t k = 0; k < P; ++k) {
    ff += Gf[k] * Gf[k];
    gg += Gg[k] * Gg[k];
    fg += Gf[k] * Gg[k];
  }
  CosineResult r;
  r.alpha = alpha;
  r.cosine = (ff == 0.0 || gg == 0.0) ? 0.0 : fg / std::sqrt(ff * gg);
  return r;
}

}  // namespace sclfish
