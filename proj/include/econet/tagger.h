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

// CRF sequence tagger: emission scorers, featurization, fuzzy training,
// decoding, vocabulary mining, concept tagging and distant supervision.

#ifndef ECONET_TAGGER_H_
#define ECONET_TAGGER_H_

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "econet/autodiff.h"
#include "econet/crf.h"
#include "econet/providers.h"
#include "econet/store.h"
#include "json.hpp"

namespace econet {

// Token -> id map with id 0 reserved for unknown entries.
class Vocabulary {
 public:
  Vocabulary() : entries_{"<unk>"} {}
  // Entries ordered by descending count then lexicographically; entries
  // below min_count are dropped.
  static Vocabulary build(const std::vector<std::vector<std::string>> &sequences, size_t min_count = 1);
  size_t id(const std::string &token) const;
  size_t size() const { return entries_.size(); }
  const std::vector<std::string> &entries() const { return entries_; }
  nlohmann::json to_json() const { return entries_; }
  static Vocabulary from_json(const nlohmann::json &j);

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, size_t> ids_;
};

struct EmissionInput {
  std::vector<std::string> tokens;
  std::vector<size_t> word_ids;
  std::vector<std::vector<size_t>> char_ids;
  std::vector<size_t> pos_ids;
  Tensor context;                  // [len x tm_dim]; absent when tm_dim == 0
  std::optional<Tensor> features;  // [len x F] for the dense scorer
  size_t size() const { return tokens.size(); }
};

struct ScorerConfig {
  std::string kind = "conv_attention";  // or "dense"
  size_t word_dim = 24;
  size_t char_dim = 8;
  size_t char_filters = 12;
  int char_window = 3;
  size_t pos_dim = 4;
  size_t hidden = 32;
  int window = 3;
  size_t context_dim = 0;  // textual-context vector size; 0 disables it
  size_t attention_dim = 16;
  size_t feature_dim = 0;  // dense scorer input size
  nlohmann::json to_json() const;
  static ScorerConfig from_json(const nlohmann::json &j);
};

// Maps an input to [len x L] emission scores on a graph.
class EmissionScorer {
 public:
  virtual ~EmissionScorer() = default;
  virtual void init(ParameterSet &params, size_t labels, uint64_t seed) const = 0;
  virtual Var emissions(Graph &g, const EmissionInput &x) const = 0;
};

// chars -> conv -> max pool, concatenated with word and POS embeddings;
// windowed conv (tanh); optional context vectors appended; single-head
// self-attention; linear layer over [z; attention(z)].
class ConvAttentionScorer : public EmissionScorer {
 public:
  ConvAttentionScorer(ScorerConfig cfg, size_t words, size_t chars, size_t pos_tags)
      : cfg_(cfg), words_(words), chars_(chars), pos_tags_(pos_tags) {}
  void init(ParameterSet &params, size_t labels, uint64_t seed) const override;
  Var emissions(Graph &g, const EmissionInput &x) const override;

 private:
  ScorerConfig cfg_;
  size_t words_, chars_, pos_tags_;
};

// Linear map of per-token dense features.
class DenseFeatureScorer : public EmissionScorer {
 public:
  explicit DenseFeatureScorer(size_t feature_dim) : feature_dim_(feature_dim) {}
  void init(ParameterSet &params, size_t labels, uint64_t seed) const override;
  Var emissions(Graph &g, const EmissionInput &x) const override;

 private:
  size_t feature_dim_;
};

// Turns token sequences into EmissionInputs.
class Featurizer {
 public:
  Featurizer() = default;
  Featurizer(Vocabulary words, Vocabulary chars, PosLexicon pos, size_t context_dim)
      : words_(std::move(words)), chars_(std::move(chars)), pos_(std::move(pos)), context_(context_dim, "context") {}
  static Featurizer build(const std::vector<std::vector<std::string>> &corpus, PosLexicon pos,
                          size_t context_dim);

  EmissionInput featurize(const std::vector<std::string> &tokens) const;
  const Vocabulary &words() const { return words_; }
  const Vocabulary &chars() const { return chars_; }
  const PosLexicon &pos() const { return pos_; }
  size_t context_dim() const { return context_.dim(); }

 private:
  Vocabulary words_, chars_;
  PosLexicon pos_;
  HashVectorProvider context_{0, "context"};
};

// Characters of a UTF-8 token, one code point per entry.
std::vector<std::string> utf8_chars(const std::string &token);

struct TrainConfig {
  size_t epochs = 8;
  size_t batch = 16;
  double lr = 0.01;
  uint64_t seed = 1;
};

struct TrainExample {
  EmissionInput input;
  PartialLabeling allowed;
};

class CrfTagger {
 public:
  CrfTagger(LabelSet labels, ScorerConfig cfg, Featurizer featurizer, uint64_t seed);

  const LabelSet &labels() const { return labels_; }
  const CrfMask &mask() const { return mask_; }
  const Featurizer &featurizer() const { return featurizer_; }
  const ScorerConfig &scorer_config() const { return cfg_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }

  // Emission and transition values for one input.
  Tensor emissions(const EmissionInput &x) const;
  Tensor transitions() const { return params_.value("crf.transitions"); }
  double log_partition(const EmissionInput &x) const;
  CrfPath viterbi(const EmissionInput &x) const;
  std::vector<Span> decode(const std::vector<std::string> &tokens) const;

  // Fuzzy negative log-likelihood of one example as a graph node.
  Var loss(Graph &g, const EmissionInput &x, const PartialLabeling &allowed) const;

  // Adam over shuffled mini-batches; returns the mean loss of each epoch.
  std::vector<double> train(const std::vector<TrainExample> &data, const TrainConfig &cfg);

  // {"format": "econet.tagger", "version": 1, "domains", "scorer",
  //  "words", "chars", "pos", "seed", "params"}
  void save(const std::string &path) const;
  static CrfTagger load(const std::string &path);

 private:
  LabelSet labels_;
  CrfMask mask_;
  ScorerConfig cfg_;
  Featurizer featurizer_;
  uint64_t seed_;
  std::unique_ptr<EmissionScorer> scorer_;
  ParameterSet params_;
};

// Tagged corpus helpers. Tokens are tab separated; a tag cell may list
// alternatives separated by '|' to express a partial labeling.
std::vector<std::vector<std::string>> read_token_file(const std::string &path);
void write_token_file(const std::string &path, const std::vector<std::vector<std::string>> &rows);
PartialLabeling parse_partial_tags(const LabelSet &labels, const std::vector<std::string> &cells);

struct MinedConcept {
  std::string surface;
  std::string domain;
  size_t count = 0;
  std::string status = "awaiting_review";
};

// Decoded spans aggregated by (surface, domain); ordered by count, then
// surface, then domain.
std::vector<MinedConcept> mine_concepts(const std::vector<std::vector<std::string>> &corpus,
                                        const CrfTagger &tagger);

struct TagLink {
  size_t begin = 0;
  size_t end = 0;
  std::string domain;
  std::optional<std::string> primitive;  // smallest matching id, if any
};

std::vector<TagLink> tag_concept(const std::vector<std::string> &phrase, const CrfTagger &tagger,
                                 const ConceptStore &store);

struct DistantSupervisionConfig {
  std::set<std::string> stopwords{"a", "an", "and", "for", "in", "of", "on", "the", "to", "with"};
  // Only these domains produce labels; empty means all.
  std::set<std::string> domains;
};

struct LabeledSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};

// Number of optimal labelings under max coverage then fewest segments,
// saturating at 2, plus one optimal tag sequence.
struct SegmentationResult {
  size_t optimal_labelings = 0;
  size_t covered = 0;
  size_t segments = 0;
  std::vector<std::string> tags;
};

SegmentationResult max_match(const std::vector<std::string> &tokens,
                             const std::unordered_map<std::string, std::vector<std::string>> &surface_domains,
                             size_t max_tokens);

// Keeps sentences with exactly one optimal labeling and no uncovered
// non-stopword.
std::vector<LabeledSentence> distant_supervision(const std::vector<std::vector<std::string>> &corpus,
                                                 const ConceptStore &store,
                                                 const DistantSupervisionConfig &cfg = {});

struct SpanMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  size_t true_positive = 0;
  size_t predicted = 0;
  size_t gold = 0;
};

SpanMetrics span_prf(const std::vector<std::vector<Span>> &gold, const std::vector<std::vector<Span>> &predicted);
SpanMetrics evaluate(const CrfTagger &tagger, const std::vector<LabeledSentence> &gold);

}  // namespace econet

#endif  // ECONET_TAGGER_H_
