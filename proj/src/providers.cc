// Copyright 2026 The Econet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "econet/providers.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "econet/random.h"
#include "econet/store.h"

namespace econet {

std::vector<double> hash_vector(const std::string &key, size_t dim, const std::string &salt) {
  Rng rng(mix_seed(fnv1a64(key), salt));
  std::vector<double> v(dim);
  for (double &x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

Tensor VectorProvider::rows(const std::vector<std::string> &keys) const {
  Tensor out({keys.size(), dim()});
  for (size_t i = 0; i < keys.size(); ++i) {
    const auto v = vector(keys[i]);
    std::copy(v.begin(), v.end(), &out(i, 0));
  }
  return out;
}

TableVectorProvider::TableVectorProvider(std::unordered_map<std::string, std::vector<double>> table,
                                         size_t dim, std::string fallback_salt)
    : table_(std::move(table)), dim_(dim), salt_(std::move(fallback_salt)) {
  for (const auto &[k, v] : table_) {
    if (v.size() != dim_) throw ConfigError("embedding for " + k + " has the wrong dimension");
  }
}

TableVectorProvider TableVectorProvider::load(const std::string &path, const std::string &fallback_salt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  std::unordered_map<std::string, std::vector<double>> table;
  size_t dim = 0;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineno) + ": missing tab");
    std::istringstream vs(line.substr(tab + 1));
    std::vector<double> v;
    for (double x; vs >> x;) v.push_back(x);
    if (v.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty vector");
    if (dim == 0) dim = v.size();
    if (v.size() != dim) throw ConfigError(path + ":" + std::to_string(lineno) + ": dimension mismatch");
    table[line.substr(0, tab)] = std::move(v);
  }
  if (dim == 0) throw ConfigError("embedding file is empty: " + path);
  return TableVectorProvider(std::move(table), dim, fallback_salt);
}

std::vector<double> TableVectorProvider::vector(const std::string &key) const {
  auto it = table_.find(key);
  if (it != table_.end()) return it->second;
  return hash_vector(key, dim_, salt_);
}

GlossKnowledgeProvider::GlossKnowledgeProvider(std::map<std::string, std::vector<std::string>> glosses,
                                               std::shared_ptr<const VectorProvider> base)
    : glosses_(std::move(glosses)), base_(std::move(base)) {}

GlossKnowledgeProvider GlossKnowledgeProvider::load(const std::string &path,
                                                    std::shared_ptr<const VectorProvider> base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gloss file: " + path);
  std::map<std::string, std::vector<std::string>> glosses;
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    glosses[line.substr(0, tab)] = split_tokens(line.substr(tab + 1));
  }
  return GlossKnowledgeProvider(std::move(glosses), std::move(base));
}

std::vector<double> GlossKnowledgeProvider::vector(const std::string &key) const {
  auto it = glosses_.find(key);
  if (it == glosses_.end() || it->second.empty()) return base_->vector(key);
  std::vector<double> mean(dim(), 0.0);
  for (const auto &w : it->second) {
    const auto v = base_->vector(w);
    for (size_t i = 0; i < mean.size(); ++i) mean[i] += v[i];
  }
  for (double &x : mean) x /= static_cast<double>(it->second.size());
  return mean;
}

PosLexicon::PosLexicon(std::map<std::string, std::string> lexicon) : lexicon_(std::move(lexicon)) {
  std::set<std::string> tags;
  for (const auto &[w, t] : lexicon_)
    if (t != "X") tags.insert(t);
  tags_.push_back("X");
  tags_.insert(tags_.end(), tags.begin(), tags.end());
  for (size_t i = 0; i < tags_.size(); ++i) tag_ids_[tags_[i]] = i;
}

PosLexicon PosLexicon::load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open POS lexicon: " + path);
  std::map<std::string, std::string> lex;
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    lex[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return PosLexicon(std::move(lex));
}

const std::string &PosLexicon::tag(const std::string &word) const {
  auto it = lexicon_.find(word);
  return it == lexicon_.end() ? tags_[0] : it->second;
}

size_t PosLexicon::tag_id(const std::string &word) const { return tag_ids_.at(tag(word)); }

namespace {

constexpr const char *kBos = "<s>";
constexpr const char *kEos = "</s>";
constexpr const char *kUnk = "<unk>";

std::string bigram_key(const std::string &a, const std::string &b) { return a + '\x1f' + b; }

}  // namespace

BigramLm::BigramLm(const std::vector<std::vector<std::string>> &corpus) {
  for (const auto &sent : corpus)
    for (const auto &w : sent) known_[w] = true;
  // </s> and <unk> are predictable outcomes alongside the training words.
  vocab_size_ = known_.size() + 2;
  for (const auto &sent : corpus) {
    std::string prev = kBos;
    for (const auto &w : sent) {
      unigram_[prev] += 1;
      bigram_[bigram_key(prev, w)] += 1;
      prev = w;
    }
    unigram_[prev] += 1;
    bigram_[bigram_key(prev, kEos)] += 1;
  }
}

std::string BigramLm::norm(const std::string &w) const {
  if (w == kBos || w == kEos) return w;
  return known_.count(w) ? w : std::string(kUnk);
}

double BigramLm::probability(const std::string &prev, const std::string &word) const {
  const std::string p = norm(prev), w = norm(word);
  auto u = unigram_.find(p);
  auto b = bigram_.find(bigram_key(p, w));
  const double cu = u == unigram_.end() ? 0.0 : u->second;
  const double cb = b == bigram_.end() ? 0.0 : b->second;
  return (cb + 1.0) / (cu + static_cast<double>(vocab_size_));
}

double BigramLm::perplexity(const std::vector<std::string> &tokens) const {
  double log_sum = 0;
  std::string prev = kBos;
  for (const auto &w : tokens) {
    log_sum += std::log(probability(prev, w));
    prev = w;
  }
  log_sum += std::log(probability(prev, kEos));
  return std::exp(-log_sum / static_cast<double>(tokens.size() + 1));
}

WordPopularity::WordPopularity(const std::vector<std::vector<std::string>> &corpus) {
  for (const auto &sent : corpus)
    for (const auto &w : sent) ++freq_[w];
  for (const auto &[w, f] : freq_) sorted_.push_back(f);
  std::sort(sorted_.begin(), sorted_.end());
}

double WordPopularity::operator()(const std::string &word) const {
  auto it = freq_.find(word);
  if (it == freq_.end()) return 0.0;
  const auto upper = std::upper_bound(sorted_.begin(), sorted_.end(), it->second);
  return static_cast<double>(upper - sorted_.begin()) / static_cast<double>(sorted_.size());
}

size_t WordPopularity::frequency(const std::string &word) const {
  auto it = freq_.find(word);
  return it == freq_.end() ? 0 : it->second;
}

}  // namespace econet
