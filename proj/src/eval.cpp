// Copyright (c) 2026 sclfish contributors
// SPDX-License-Identifier: Apache-2.0
#include "sclfish/eval.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include "json.hpp"

#include "sclfish/data.hpp"

namespace sclfish {

int predict_class(std::span<const double> logits) {
  int best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c)
    if (logits[c] > logits[best]) best = static_cast<int>(c);
  return best;
}

PlatformMetrics compute_metrics(std::span<const int> predictions,
                                std::span<const int> labels,
                                std::size_t classes) {
  PlatformMetrics m;
  m.n = labels.size();
  if (m.n == 0) return m;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < m.n; ++i)
    if (predictions[i] == labels[i]) ++correct;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n);

  double f1_sum = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < m.n; ++i) {
      const bool pred = predictions[i] == static_cast<int>(c);
      const bool truth = labels[i] == static_cast<int>(c);
      tp += pred && truth;
      fp += pred && !truth;
      fn += !pred && truth;
    }
    const std::uint64_t den = 2 * tp + fp + fn;
    const double f1 =
        den == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(den);
    if (c == 1) m.positive_f1 = f1;
    f1_sum += f1;
  }
  m.macro_f1 = f1_sum / static_cast<double>(classes);
  return m;
}

namespace {

std::vector<int> predict_all(const ModelDims& dims, const ParamVector& theta,
                             const FeaturizedData& data, ExecMode mode,
                             std::vector<double>* emb_out = nullptr) {
  const std::size_t n = data.samples.size();
  std::vector<std::uint32_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = static_cast<std::uint32_t>(i);
  Activations acts;
  forward(dims, theta, data.samples, all, acts, mode);
  std::vector<int> preds(n);
  for (std::size_t i = 0; i < n; ++i)
    preds[i] = predict_class(std::span<const double>(
        acts.logits.data() + i * dims.classes, dims.classes));
  if (emb_out) *emb_out = std::move(acts.emb);
  return preds;
}

}  // namespace

MetricsReport evaluate(const ModelDims& dims, const ParamVector& theta,
                       const FeaturizedData& data, ExecMode mode) {
  const std::vector<int> preds = predict_all(dims, theta, data, mode);
  MetricsReport report;
  report.aggregate.platform = "aggregate";
  for (std::size_t p = 0; p < data.platform_names.size(); ++p) {
    std::vector<int> pp, pl;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
      if (data.samples[i].platform_id == p) {
        pp.push_back(preds[i]);
        pl.push_back(data.samples[i].y);
      }
    }
    PlatformMetrics m = compute_metrics(pp, pl, dims.classes);
    m.platform = data.platform_names[p];
    report.platforms.push_back(std::move(m));
  }
  const std::size_t np = report.platforms.size();
  if (np > 0) {
    for (const PlatformMetrics& m : report.platforms) {
      report.aggregate.n += m.n;
      report.aggregate.accuracy += m.accuracy;
      report.aggregate.positive_f1 += m.positive_f1;
      report.aggregate.macro_f1 += m.macro_f1;
    }
    report.aggregate.accuracy /= static_cast<double>(np);
    report.aggregate.positive_f1 /= static_cast<double>(np);
    report.aggregate.macro_f1 /= static_cast<double>(np);
  }
  return report;
}

std::string metrics_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["platforms"] = nlohmann::json::array();
  auto row = [](const PlatformMetrics& m) {
    return nlohmann::json{{"platform", m.platform},
                          {"n", m.n},
                          {"accuracy", m.accuracy},
                          {"positive_f1", m.positive_f1},
                          {"macro_f1", m.macro_f1}};
  };
  for (const PlatformMetrics& m : report.platforms)
    j["platforms"].push_back(row(m));
  j["aggregate"] = row(report.aggregate);
  return j.dump(2);
}

void export_embeddings(const std::string& path, const ModelDims& dims,
                       const ParamVector& theta, const FeaturizedData& data,
                       ExecMode mode) {
  std::vector<double> emb;
  predict_all(dims, theta, data, mode, &emb);
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "platform,label";
  for (std::size_t d = 0; d < dims.hidden2; ++d) out << ",e_" << d;
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const Sample& s = data.samples[i];
    out << data.platform_names[s.platform_id] << ',' << s.y;
    for (std::size_t d = 0; d < dims.hidden2; ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", emb[i * dims.hidden2 + d]);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failure: " + path);
}

}  // namespace sclfish
