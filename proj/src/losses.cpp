// Copyright (c) 2026 sclfish contributors
// SPDX-License-Identifier: Apache-2.0
#include "sclfish/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace sclfish {

double cross_entropy(const ModelDims& dims, std::span<const double> logits,
                     std::span<const int> labels,
                     std::vector<double>* dlogits, ExecMode mode) {
  const std::size_t C = dims.classes;
  const std::size_t n = labels.size();
  if (dlogits) dlogits->assign(n * C, 0.0);
  std::vector<double> per_loss(n, 0.0);

  const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (mode == ExecMode::OpenMP)
  for (std::int64_t i = 0; i < sn; ++i) {
    const std::size_t u = static_cast<std::size_t>(i);
    const double* z = logits.data() + u * C;
    double m = z[0];
    for (std::size_t c = 1; c < C; ++c) m = std::max(m, z[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) sum += std::exp(z[c] - m);
    const double lse = m + std::log(sum);
    per_loss[u] = lse - z[labels[u]];
    if (dlogits) {
      double* d = dlogits->data() + u * C;
      for (std::size_t c = 0; c < C; ++c) {
        double p = std::exp(z[c] - m) / sum;
        d[c] = (p - (static_cast<int>(c) == labels[u] ? 1.0 : 0.0)) /
               static_cast<double>(n);
      }
    }
  }

  double loss = 0.0;  // fixed-order reduction
  for (std::size_t u = 0; u < n; ++u) loss += per_loss[u];
  return loss / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Supervised contrastive loss
// ---------------------------------------------------------------------------

double scl_loss(std::span<const double> emb, std::size_t dim,
                std::span<const int> labels, double tau,
                std::vector<double>* demb, ExecMode mode) {
  const std::size_t N = labels.size();
  if (demb) demb->assign(N * dim, 0.0);
  if (N < 2) return 0.0;

  // Normalized embeddings; zero rows stay zero.
  std::vector<double> Z(N * dim, 0.0);
  std::vector<double> norms(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) s += emb[i * dim + d] * emb[i * dim + d];
    norms[i] = std::sqrt(s);
    if (norms[i] > 0.0)
      for (std::size_t d = 0; d < dim; ++d)
        Z[i * dim + d] = emb[i * dim + d] / norms[i];
  }

  std::size_t anchors = 0;
  std::vector<std::size_t> pos_count(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j)
      if (j != i && labels[j] == labels[i]) ++pos_count[i];
    if (pos_count[i] > 0) ++anchors;
  }
  if (anchors == 0) return 0.0;

  // Row i of the coefficient matrix c and the per-anchor loss term are local
  // to i, so the anchor loop parallelizes without shared writes.
  std::vector<double> c(N * N, 0.0);
  std::vector<double> per_loss(N, 0.0);
  const std::int64_t sN = static_cast<std::int64_t>(N);
#pragma omp parallel for schedule(static) if (mode == ExecMode::OpenMP)
  for (std::int64_t ii = 0; ii < sN; ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    if (pos_count[i] == 0) continue;
    const double* zi = Z.data() + i * dim;
    // s_ik = z_i . z_k / tau over k != i, max-subtracted.
    std::vector<double> s(N, 0.0);
    double m = -1e300;
    for (std::size_t k = 0; k < N; ++k) {
      if (k == i) continue;
      double dot = 0.0;
      const double* zk = Z.data() + k * dim;
      for (std::size_t d = 0; d < dim; ++d) dot += zi[d] * zk[d];
      s[k] = dot / tau;
      m = std::max(m, s[k]);
    }
    double den = 0.0;
    for (std::size_t k = 0; k < N; ++k)
      if (k != i) den += std::exp(s[k] - m);
    const double log_den = std::log(den);
    const double inv_pos = 1.0 / static_cast<double>(pos_count[i]);
    double li = 0.0;
    for (std::size_t j = 0; j < N; ++j)
      if (j != i && labels[j] == labels[i])
        li += -((s[j] - m) - log_den) * inv_pos;
    per_loss[i] = li;
    const double inv_anchors = 1.0 / static_cast<double>(anchors);
    for (std::size_t k = 0; k < N; ++k) {
      if (k == i) continue;
      const double p = std::exp(s[k] - m) / den;
      const double is_pos = (labels[k] == labels[i]) ? inv_pos : 0.0;
      c[i * N + k] = (p - is_pos) * inv_anchors;
    }
  }

  double loss = 0.0;  // fixed-order reduction
  for (std::size_t i = 0; i < N; ++i) loss += per_loss[i];
  loss /= static_cast<double>(anchors);

  if (demb) {
    // dZ = (c + c^T) Z / tau, then pull back through the normalization:
    // de_i = (dZ_i - z_i (z_i . dZ_i)) / ||e_i||, zero where ||e_i|| = 0.
    std::vector<double> dZ(N * dim, 0.0);
#pragma omp parallel for schedule(static) if (mode == ExecMode::OpenMP)
    for (std::int64_t ii = 0; ii < sN; ++ii) {
      const std::size_t i = static_cast<std::size_t>(ii);
      double* out = dZ.data() + i * dim;
      for (std::size_t k = 0; k < N; ++k) {
        const double w = c[i * N + k] + c[k * N + i];
        if (w == 0.0) continue;
        const double* zk = Z.data() + k * dim;
        for (std::size_t d = 0; d < dim; ++d) out[d] += w * zk[d];
      }
      for (std::size_t d = 0; d < dim; ++d) out[d] /= tau;
      if (norms[i] > 0.0) {
        const double* zi = Z.data() + i * dim;
        double proj = 0.0;
        for (std::size_t d = 0; d < dim; ++d) proj += zi[d] * out[d];
        double* de = demb->data() + i * dim;
        for (std::size_t d = 0; d < dim; ++d)
          de[d] = (out[d] - zi[d] * proj) / norms[i];
      }
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Brute-force reference: every log-softmax term is evaluated and
// differentiated independently, straight from the definition.
// ---------------------------------------------------------------------------

namespace {

// d s_ab / d e_c, accumulated into out[c * dim + :] with weight w. s_ab is
// the cosine similarity of rows a and b over tau; the derivative goes through
// both normalizations.
void add_sim_grad(std::span<const double> emb, std::size_t dim, double tau,
                  std::size_t a, std::size_t b, double w,
                  std::vector<double>& out) {
  const double* ea = emb.data() + a * dim;
  const double* eb = emb.data() + b * dim;
  double na2 = 0.0, nb2 = 0.0, dot = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    na2 += ea[d] * ea[d];
    nb2 += eb[d] * eb[d];
    dot += ea[d] * eb[d];
  }
  const double na = std::sqrt(na2), nb = std::sqrt(nb2);
  if (na == 0.0 || nb == 0.0) return;  // s_ab is identically 0 on a ray
  // d/d ea [ ea.eb / (|ea||eb|) ] = eb/(|ea||eb|) - (ea.eb) ea/(|ea|^3 |eb|)
  for (std::size_t d = 0; d < dim; ++d) {
    out[a * dim + d] +=
        w / tau * (eb[d] / (na * nb) - dot * ea[d] / (na2 * na * nb));
    out[b * dim + d] +=
        w / tau * (ea[d] / (na * nb) - dot * eb[d] / (nb2 * nb * na));
  }
}

double sim(std::span<const double> emb, std::size_t dim, double tau,
           std::size_t a, std::size_t b) {
  const double* ea = emb.data() + a * dim;
  const double* eb = emb.data() + b * dim;
  double na2 = 0.0, nb2 = 0.0, dot = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    na2 += ea[d] * ea[d];
    nb2 += eb[d] * eb[d];
    dot += ea[d] * eb[d];
  }
  if (na2 == 0.0 || nb2 == 0.0) return 0.0;
  return dot / (std::sqrt(na2) * std::sqrt(nb2) * tau);
}

}  // namespace

double scl_loss_bruteforce(std::span<const double> emb, std::size_t dim,
                           std::span<const int> labels, double tau,
                           std::vector<double>* demb) {
  const std::size_t N = labels.size();
  if (demb) demb->assign(N * dim, 0.0);
  if (N < 2) return 0.0;

  std::size_t anchors = 0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j)
      if (j != i && labels[j] == labels[i]) {
        ++anchors;
        break;
      }
  if (anchors == 0) return 0.0;
  const double scale = 1.0 / static_cast<double>(anchors);

  double loss = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    std::size_t npos = 0;
    for (std::size_t j = 0; j < N; ++j)
      if (j != i && labels[j] == labels[i]) ++npos;
    if (npos == 0) continue;
    double m = -1e300;
    for (std::size_t k = 0; k < N; ++k)
      if (k != i) m = std::max(m, sim(emb, dim, tau, i, k));
    double den = 0.0;
    for (std::size_t k = 0; k < N; ++k)
      if (k != i) den += std::exp(sim(emb, dim, tau, i, k) - m);
    const double w_term = scale / static_cast<double>(npos);
    for (std::size_t j = 0; j < N; ++j) {
      if (j == i || labels[j] != labels[i]) continue;
      loss += -w_term * ((sim(emb, dim, tau, i, j) - m) - std::log(den));
      if (demb) {
        // -d s_ij plus the softmax pullback sum_k p_ik d s_ik.
        add_sim_grad(emb, dim, tau, i, j, -w_term, *demb);
        for (std::size_t k = 0; k < N; ++k) {
          if (k == i) continue;
          const double p = std::exp(sim(emb, dim, tau, i, k) - m) / den;
          add_sim_grad(emb, dim, tau, i, k, w_term * p, *demb);
        }
      }
    }
  }
  return loss;
}

}  // namespace sclfish
