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

// Pluggable sources of side information: word vectors, textual-context
// vectors, gloss knowledge, part-of-speech tags and a language model. The
// defaults are deterministic stubs so every run is reproducible offline.

#ifndef ECONET_PROVIDERS_H_
#define ECONET_PROVIDERS_H_

#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "econet/tensor.h"

namespace econet {

// Pseudo-random vector in [-1, 1)^dim keyed by (salt, key).
std::vector<double> hash_vector(const std::string &key, size_t dim, const std::string &salt);

class VectorProvider {
 public:
  virtual ~VectorProvider() = default;
  virtual size_t dim() const = 0;
  virtual std::vector<double> vector(const std::string &key) const = 0;
  // [n x dim], one row per key.
  Tensor rows(const std::vector<std::string> &keys) const;
};

class HashVectorProvider : public VectorProvider {
 public:
  HashVectorProvider(size_t dim, std::string salt) : dim_(dim), salt_(std::move(salt)) {}
  size_t dim() const override { return dim_; }
  std::vector<double> vector(const std::string &key) const override { return hash_vector(key, dim_, salt_); }

 private:
  size_t dim_;
  std::string salt_;
};

// Explicit table with hashed fallback for missing keys.
class TableVectorProvider : public VectorProvider {
 public:
  TableVectorProvider(std::unordered_map<std::string, std::vector<double>> table, size_t dim,
                      std::string fallback_salt);
  // Lines "key<TAB>v1 v2 ... vd"; all rows must share one dimension.
  static TableVectorProvider load(const std::string &path, const std::string &fallback_salt);
  size_t dim() const override { return dim_; }
  std::vector<double> vector(const std::string &key) const override;
  size_t size() const { return table_.size(); }

 private:
  std::unordered_map<std::string, std::vector<double>> table_;
  size_t dim_;
  std::string salt_;
};

// Knowledge vector of a word: the mean of the base vectors of its gloss
// words. Words without a gloss fall back to their own base vector.
class GlossKnowledgeProvider : public VectorProvider {
 public:
  GlossKnowledgeProvider(std::map<std::string, std::vector<std::string>> glosses,
                         std::shared_ptr<const VectorProvider> base);
  // Lines "word<TAB>gloss text".
  static GlossKnowledgeProvider load(const std::string &path, std::shared_ptr<const VectorProvider> base);
  size_t dim() const override { return base_->dim(); }
  std::vector<double> vector(const std::string &key) const override;

 private:
  std::map<std::string, std::vector<std::string>> glosses_;
  std::shared_ptr<const VectorProvider> base_;
};

// Word -> tag lexicon; unknown words get "X". Tag ids: "X" = 0, then the
// lexicon's tags in sorted order.
class PosLexicon {
 public:
  PosLexicon() : PosLexicon(std::map<std::string, std::string>{}) {}
  explicit PosLexicon(std::map<std::string, std::string> lexicon);
  // Lines "word<TAB>tag".
  static PosLexicon load(const std::string &path);

  const std::string &tag(const std::string &word) const;
  size_t tag_id(const std::string &word) const;
  size_t tag_count() const { return tags_.size(); }
  const std::map<std::string, std::string> &entries() const { return lexicon_; }

 private:
  std::map<std::string, std::string> lexicon_;
  std::vector<std::string> tags_;
  std::map<std::string, size_t> tag_ids_;
};

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual double perplexity(const std::vector<std::string> &tokens) const = 0;
};

// Add-one smoothed bigram model with <s> and </s> markers. For a sentence
// w_1..w_n:
//
//   P(w | v) = (c(v, w) + 1) / (c(v) + V)
//   ppl = exp(-(1 / (n + 1)) * sum_{i=1}^{n+1} log P(w_i | w_{i-1}))
//
// with w_0 = <s>, w_{n+1} = </s>. Unseen words map to <unk>, and V is the
// number of distinct training words plus two (</s> and <unk>).
class BigramLm : public LanguageModel {
 public:
  explicit BigramLm(const std::vector<std::vector<std::string>> &corpus);
  double perplexity(const std::vector<std::string> &tokens) const override;
  double probability(const std::string &prev, const std::string &word) const;
  size_t vocabulary_size() const { return vocab_size_; }

 private:
  std::string norm(const std::string &w) const;
  std::unordered_map<std::string, double> unigram_;  // count as history
  std::unordered_map<std::string, double> bigram_;   // key "prev\x1fword"
  size_t vocab_size_ = 0;
  std::unordered_map<std::string, bool> known_;
};

// Empirical CDF of corpus word frequencies: popularity(w) is the fraction of
// vocabulary words whose frequency is <= freq(w). Unseen words score 0.
class WordPopularity {
 public:
  explicit WordPopularity(const std::vector<std::vector<std::string>> &corpus);
  double operator()(const std::string &word) const;
  size_t frequency(const std::string &word) const;

 private:
  std::unordered_map<std::string, size_t> freq_;
  std::vector<size_t> sorted_;
};

}  // namespace econet

#endif  // ECONET_PROVIDERS_H_
