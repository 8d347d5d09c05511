// Copyright (c) 2026 sclfish contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sclfish/model.hpp"
#include "sclfish/parallel.hpp"

namespace sclfish {

// Mean cross-entropy of `logits` (N x C, from Activations) against labels.
// If dlogits != nullptr it is resized to N x C and receives the upstream
// gradient with the 1/N mean factor folded in. Uses max-subtracted logsumexp.
double cross_entropy(const ModelDims& dims, std::span<const double> logits,
                     std::span<const int> labels,
                     std::vector<double>* dlogits = nullptr,
                     ExecMode mode = ExecMode::Serial);

// Supervised contrastive loss over a batch of embeddings (N x D, row-major).
//
//   z_i = e_i / ||e_i||            (zero rows stay zero)
//   s_ik = z_i . z_k / tau
//   L = -(1/|A|) sum_{i in A} (1/|P_i|) sum_{j in P_i}
//         log( exp(s_ij) / sum_{k != i} exp(s_ik) )
//
// A = anchors with at least one positive; P_i = { j != i : y_j = y_i }.
// Batches where A is empty yield loss 0 and zero gradient. Per-anchor
// max-subtraction keeps the softmax finite at small tau. If demb != nullptr
// it is resized to N x D and receives dL/de (through the normalization).
double scl_loss(std::span<const double> emb, std::size_t dim,
                std::span<const int> labels, double tau,
                std::vector<double>* demb = nullptr,
                ExecMode mode = ExecMode::Serial);

// Reference implementation of scl_loss: a direct term-by-term translation of
// the definition with explicit loops and per-term chain rule, sharing no code
// with the production kernel. Serial only; used to cross-check scl_loss.
double scl_loss_bruteforce(std::span<const double> emb, std::size_t dim,
                           std::span<const int> labels, double tau,
                           std::vector<double>* demb = nullptr);

}  // namespace sclfish
