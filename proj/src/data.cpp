// Copyright (c) 2026 sclfish contributors
// SPDX-License-Identifier: Apache-2.0
#include "sclfish/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sclfish {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

bool is_token_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80;
}

unsigned char lower_ascii(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<unsigned char>(c - 'A' + 'a') : c;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char raw : text) {
    const unsigned char c = lower_ascii(raw);
    if (is_token_char(c)) {
      cur.push_back(static_cast<char>(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

FeatureVec hash_features(std::string_view text, std::size_t vocab) {
  std::map<std::uint32_t, double> counts;
  for (const std::string& tok : tokenize(text))
    counts[static_cast<std::uint32_t>(fnv1a64(tok) % vocab)] += 1.0;
  FeatureVec fv;
  fv.idx.reserve(counts.size());
  fv.val.reserve(counts.size());
  double sq = 0.0;
  for (const auto& [bucket, count] : counts) {
    fv.idx.push_back(bucket);
    fv.val.push_back(count);
    sq += count * count;
  }
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : fv.val) v *= inv;
  }
  return fv;
}

std::vector<Doc> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  std::vector<Doc> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw DataError(path + ":" + std::to_string(lineno) + ": invalid JSON");
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string() ||
        !j.contains("label") || !j["label"].is_number_integer() ||
        !j.contains("platform") || !j["platform"].is_string())
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected {text: str, label: int, platform: str}");
    Doc d;
    d.text = j["text"].get<std::string>();
    d.label = j["label"].get<int>();
    d.platform = j["platform"].get<std::string>();
    if (d.label != 0 && d.label != 1)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": label outside {0,1}");
    docs.push_back(std::move(d));
  }
  if (docs.empty()) throw DataError(path + ": no examples");
  return docs;
}

void write_jsonl(const std::string& path, const std::vector<Doc>& docs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (const Doc& d : docs) {
    nlohmann::json j{{"text", d.text}, {"label", d.label},
                     {"platform", d.platform}};
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failure: " + path);
}

FeaturizedData featurize(const std::vector<Doc>& docs, std::size_t vocab) {
  FeaturizedData out;
  std::map<std::string, std::uint32_t> ids;
  out.samples.reserve(docs.size());
  for (const Doc& d : docs) {
    auto [it, inserted] =
        ids.emplace(d.platform, static_cast<std::uint32_t>(out.platform_names.size()));
    if (inserted) out.platform_names.push_back(d.platform);
    out.samples.push_back(
        Sample{hash_features(d.text, vocab), d.label, it->second});
  }
  return out;
}

SplitPlan make_splits(
    const std::vector<Doc>& docs,
    const std::vector<std::string>& train_platforms,
    const std::vector<std::string>& val_platforms,
    const std::optional<std::vector<std::string>>& test_platforms) {
  std::set<std::string> train_set(train_platforms.begin(),
                                  train_platforms.end());
  std::set<std::string> val_set(val_platforms.begin(), val_platforms.end());
  for (const std::string& p : val_set)
    if (train_set.count(p))
      throw DataError("platform in both train and validation: " + p);
  std::set<std::string> present;
  for (const Doc& d : docs) present.insert(d.platform);
  for (const std::string& p : train_set)
    if (!present.count(p)) throw DataError("unknown train platform: " + p);
  for (const std::string& p : val_set)
    if (!present.count(p)) throw DataError("unknown validation platform: " + p);

  std::set<std::string> test_set;
  if (test_platforms.has_value()) {
    test_set.insert(test_platforms->begin(), test_platforms->end());
    for (const std::string& p : test_set) {
      if (train_set.count(p))
        throw DataError("platform in both train and test: " + p);
      if (val_set.count(p))
        throw DataError("platform in both validation and test: " + p);
      if (!present.count(p)) throw DataError("unknown test platform: " + p);
    }
  } else {
    for (const std::string& p : present)
      if (!train_set.count(p) && !val_set.count(p)) test_set.insert(p);
  }

  SplitPlan s;
  for (const Doc& d : docs) {
    if (train_set.count(d.platform))
      s.train.push_back(d);
    else if (val_set.count(d.platform))
      s.val.push_back(d);
    else if (test_set.count(d.platform))
      s.test.push_back(d);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic benchmark
// ---------------------------------------------------------------------------

double solve_spurious_rate(double rho, double r) {
  // phi(p1) = (2 p1 - 1) sqrt(r (1-r)) / sqrt(Pb (1-Pb)), Pb = r p1 + (1-r)(1-p1).
  // Monotone increasing in p1 on (0, 1), so bisection converges.
  auto phi = [&](double p1) {
    const double p0 = 1.0 - p1;
    const double pb = r * p1 + (1.0 - r) * p0;
    if (pb <= 0.0 || pb >= 1.0) return p1 > 0.5 ? 1.0 : -1.0;
    return (2.0 * p1 - 1.0) * std::sqrt(r * (1.0 - r)) /
           std::sqrt(pb * (1.0 - pb));
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (phi(mid) < rho)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

// Task words carry no digits ambiguity with the spurious words and survive
// the tokenizer unchanged: "aw<i>" / "nw<i>" / "sp<platform letter><j>".
std::vector<Doc> gen_platform(std::mt19937_64& gen, const std::string& name,
                              const std::vector<std::string>& spur_words,
                              double rho, const SynthConfig& cfg) {
  const double p1 = solve_spurious_rate(rho, cfg.positive_rate);
  const std::size_t half = cfg.task_vocab / 2;
  std::vector<Doc> docs;
  docs.reserve(cfg.samples_per_platform);
  for (std::size_t i = 0; i < cfg.samples_per_platform; ++i) {
    const int y = uniform01(gen) < cfg.positive_rate ? 1 : 0;
    std::string text;
    for (std::size_t w = 0; w < cfg.words_per_doc; ++w) {
      const bool match = uniform01(gen) < cfg.q_match;
      const bool abusive_bucket = (y == 1) == match;
      if (w) text += ' ';
      text += abusive_bucket ? "aw" : "nw";
      text += std::to_string(uniform_below(gen, half));
    }
    const double p_present = (y == 1) ? p1 : 1.0 - p1;
    if (uniform01(gen) < p_present) {
      const std::string& sw =
          spur_words[uniform_below(gen, spur_words.size())];
      for (std::size_t t = 0; t < cfg.spurious_tokens; ++t) {
        text += ' ';
        text += sw;
      }
    }
    docs.push_back(Doc{std::move(text), y, name});
  }
  return docs;
}

}  // namespace

std::vector<Doc> generate_synthetic(const SynthConfig& cfg,
                                    std::uint64_t seed) {
  if (cfg.task_vocab < 2 || cfg.words_per_doc == 0 ||
      cfg.train_platforms == 0 || cfg.spurious_per_platform == 0)
    throw DataError("degenerate synthetic config");
  std::mt19937_64 gen(seed);
  std::vector<std::vector<std::string>> spur_sets(cfg.train_platforms);
  for (std::size_t p = 0; p < cfg.train_platforms; ++p)
    for (std::size_t j = 0; j < cfg.spurious_per_platform; ++j)
      spur_sets[p].push_back("sp" + std::string(1, static_cast<char>('a' + p % 26)) +
                             std::to_string(p / 26) + std::to_string(j));
  std::vector<Doc> docs;
  for (std::size_t p = 0; p < cfg.train_platforms; ++p) {
    auto part = gen_platform(gen, "synth" + std::to_string(p), spur_sets[p],
                             cfg.rho_train, cfg);
    docs.insert(docs.end(), std::make_move_iterator(part.begin()),
                std::make_move_iterator(part.end()));
  }
  if (cfg.heldout) {
    std::vector<std::string> pool;  // union of the training platforms' words
    for (const auto& s : spur_sets) pool.insert(pool.end(), s.begin(), s.end());
    auto part = gen_platform(gen, "heldout", pool, cfg.rho_heldout, cfg);
    docs.insert(docs.end(), std::make_move_iterator(part.begin()),
                std::make_move_iterator(part.end()));
  }
  return docs;
}

std::vector<Doc> balanced_subsample(const std::vector<Doc>& docs,
                                    std::uint64_t seed) {
  // Group row indices per platform, preserving first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto [it, inserted] = rows.try_emplace(docs[i].platform);
    if (inserted) order.push_back(docs[i].platform);
    it->second.push_back(i);
  }
  std::vector<char> keep(docs.size(), 0);
  for (const std::string& plat : order) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i : rows[plat]) by_class[docs[i].label].push_back(i);
    std::size_t m = docs.size();
    for (const auto& [cls, idxs] : by_class) m = std::min(m, idxs.size());
    std::mt19937_64 gen(seed ^ fnv1a64(plat));
    // Class groups are shuffled in ascending class order so the platform's
    // draw depends only on (seed, platform, class layout).
    for (auto& [cls, idxs] : by_class) {
      std::vector<std::size_t> shuffled = idxs;
      shuffle_vec(gen, shuffled);
      for (std::size_t t = 0; t < m; ++t) keep[shuffled[t]] = 1;
    }
  }
  std::vector<Doc> out;
  for (std::size_t i = 0; i < docs.size(); ++i)
    if (keep[i]) out.push_back(docs[i]);
  return out;
}

}  // namespace sclfish
