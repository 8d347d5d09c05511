// Copyright (c) 2026 sclfish contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sclfish/data.hpp"
#include "sclfish/model.hpp"
#include "sclfish/parallel.hpp"

namespace sclfish {

// Argmax with ties resolved toward the lower class index.
int predict_class(std::span<const double> logits);

struct PlatformMetrics {
  std::string platform;
  std::size_t n = 0;
  double accuracy = 0.0;
  double positive_f1 = 0.0;  // F1 of class 1
  double macro_f1 = 0.0;     // unweighted mean of per-class one-vs-rest F1
};

// `aggregate` holds the unweighted mean of the per-platform metrics.
struct MetricsReport {
  std::vector<PlatformMetrics> platforms;
  PlatformMetrics aggregate;
};

// Metrics from integer prediction/label pairs. A class with an empty F1
// denominator (no predictions and no occurrences) scores 0.
PlatformMetrics compute_metrics(std::span<const int> predictions,
                                std::span<const int> labels,
                                std::size_t classes);

// Runs the model over `data` and reports metrics per platform (ordered by
// platform id) plus the aggregate row.
MetricsReport evaluate(const ModelDims& dims, const ParamVector& theta,
                       const FeaturizedData& data,
                       ExecMode mode = ExecMode::Serial);

std::string metrics_to_json(const MetricsReport& report);

// CSV with header "platform,label,e_0,...,e_{D-1}"; one row per sample in
// corpus order, embeddings printed with %.17g.
void export_embeddings(const std::string& path, const ModelDims& dims,
                       const ParamVector& theta, const FeaturizedData& data,
                       ExecMode mode = ExecMode::Serial);

}  // namespace sclfish
