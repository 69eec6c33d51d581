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

// E-commerce concept candidates: slot patterns over the store, n-gram
// mining, a wide and deep classifier, and the sampled QA gate.

#ifndef ECONET_GENERATION_H_
#define ECONET_GENERATION_H_

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "econet/active_learning.h"
#include "econet/autodiff.h"
#include "econet/providers.h"
#include "econet/store.h"
#include "econet/tagger.h"
#include "json.hpp"

namespace econet {

struct PatternSlot {
  bool is_class = false;
  std::string value;  // class id, or the literal token
  bool operator==(const PatternSlot &) const = default;
};

class GenerationPattern {
 public:
  GenerationPattern() = default;
  GenerationPattern(std::string id, std::vector<PatternSlot> slots);
  // "[Function] [Category] for [Event]": bracketed words are class ids.
  static GenerationPattern parse(const std::string &id, const std::string &text);
  const std::string &id() const { return id_; }
  const std::vector<PatternSlot> &slots() const { return slots_; }
  std::string text() const;

  nlohmann::json to_json() const;
  static GenerationPattern from_json(const nlohmann::json &j);

 private:
  std::string id_;
  std::vector<PatternSlot> slots_;
};

// JSON list of {"id", "slots": [{"class": "Event"} | {"literal": "for"}]};
// a slot may also be given as a pattern string under "pattern".
std::vector<GenerationPattern> load_generation_patterns(const std::string &path);

struct CandidateConcept {
  std::string phrase;
  std::vector<std::string> tokens;
  std::string source;      // mined | generated | primitive
  std::string pattern_id;  // generated only
  std::vector<ConceptLink> links;
  std::optional<double> score;

  nlohmann::json to_json() const;
  static CandidateConcept from_json(const nlohmann::json &j);
};

// Cartesian fill of class slots, pattern order then primitive id order (last
// slot varies fastest). limit caps each pattern's output; 0 = no cap.
// Phrases are unique across the result. Throws StoreError for unknown classes.
std::vector<CandidateConcept> generate_from_patterns(const std::vector<GenerationPattern> &patterns,
                                                     const ConceptStore &store, size_t limit);

// Every primitive surface as a candidate.
std::vector<CandidateConcept> primitive_candidates(const ConceptStore &store);

// True when tokens read as the pattern with each class slot filled by a
// primitive surface of that class or a descendant.
bool matches_pattern(const std::vector<std::string> &tokens, const GenerationPattern &pattern,
                     const ConceptStore &store);

struct MiningConfig {
  size_t min_tokens = 2;
  size_t max_tokens = 5;
  size_t min_count = 3;
  double min_npmi = 0.3;
  std::set<std::string> stopwords{"a", "an", "and", "for", "in", "of", "on", "the", "to", "with"};
};

// Frequent n-grams scored by count * NPMI, where the NPMI of an n-gram is the
// weakest split into a left and a right part. Sorted by score, then phrase.
std::vector<CandidateConcept> mine_candidates(const std::vector<std::vector<std::string>> &corpus,
                                              const MiningConfig &cfg);

struct WideFeatures {
  size_t char_count = 0;  // code points, spaces excluded
  size_t word_count = 0;
  double lm_perplexity = 0;
  double mean_popularity = 0;
  double min_popularity = 0;
  bool pattern_match = false;

  static constexpr size_t kSize = 6;
  // log1p(chars), log1p(words), log(ppl) / 5, mean and min popularity,
  // pattern indicator.
  std::vector<double> vector() const;
  nlohmann::json to_json() const;
};

class WideFeatureExtractor {
 public:
  WideFeatureExtractor(std::shared_ptr<const LanguageModel> lm, std::shared_ptr<const WordPopularity> popularity,
                       std::vector<GenerationPattern> patterns = {},
                       std::shared_ptr<const ConceptStore> store = nullptr);
  WideFeatures extract(const std::vector<std::string> &tokens) const;

 private:
  std::shared_ptr<const LanguageModel> lm_;
  std::shared_ptr<const WordPopularity> popularity_;
  std::vector<GenerationPattern> patterns_;
  std::shared_ptr<const ConceptStore> store_;
};

struct ClassifierConfig {
  size_t char_dim = 8;
  size_t char_filters = 16;
  int char_window = 3;
  size_t word_dim = 16;
  size_t pos_dim = 4;
  size_t attention_dim = 8;
  size_t wide_hidden = 16;
  size_t wide_out = 8;
  size_t mlp_hidden = 16;
  bool use_wide = true;
  bool use_knowledge = true;
  nlohmann::json to_json() const;
  static ClassifierConfig from_json(const nlohmann::json &j);
};

struct ClassifierInput {
  std::vector<std::string> tokens;
  std::vector<size_t> char_ids;  // whole phrase, spaces excluded
  std::vector<size_t> word_ids;
  std::vector<size_t> pos_ids;
  Tensor knowledge;  // [m x knowledge dim]
  Tensor wide;       // [1 x WideFeatures::kSize]
};

class ConceptFeaturizer {
 public:
  ConceptFeaturizer(Vocabulary words, Vocabulary chars, PosLexicon pos,
                    std::shared_ptr<const VectorProvider> knowledge, WideFeatureExtractor wide);
  // Vocabularies from the candidate phrases and the corpus.
  static ConceptFeaturizer build(const std::vector<std::vector<std::string>> &texts, PosLexicon pos,
                                 std::shared_ptr<const VectorProvider> knowledge, WideFeatureExtractor wide);
  ClassifierInput featurize(const std::vector<std::string> &tokens) const;

  const Vocabulary &words() const { return words_; }
  const Vocabulary &chars() const { return chars_; }
  const PosLexicon &pos() const { return pos_; }
  size_t knowledge_dim() const { return knowledge_->dim(); }

 private:
  Vocabulary words_, chars_;
  PosLexicon pos_;
  std::shared_ptr<const VectorProvider> knowledge_;
  WideFeatureExtractor wide_;
};

struct ClassifierTrainConfig {
  size_t epochs = 10;
  size_t batch = 16;
  double lr = 0.01;
  uint64_t seed = 1;
};

struct LabeledCandidate {
  std::vector<std::string> tokens;
  int label = 0;
};

// Labeled data TSV: phrase<TAB>0|1.
std::vector<LabeledCandidate> read_labeled_candidates(const std::string &path);

// Deep side: char conv with mean pooling (c1); word and POS embeddings with
// self-attention, concatenated with self-attended knowledge vectors and max
// pooled (c2). Wide side: two ReLU layers over the wide features (c3).
// Score: sigmoid(MLP([c1; c2; c3])).
class ConceptClassifier {
 public:
  ConceptClassifier(ClassifierConfig cfg, size_t words, size_t chars, size_t pos_tags, size_t knowledge_dim,
                    uint64_t seed);

  const ClassifierConfig &config() const { return cfg_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }

  Var logit(Graph &g, const ClassifierInput &x) const;
  double score(const ClassifierInput &x) const;
  // Binary NLL averaged over the batch.
  Var loss(Graph &g, const std::vector<const ClassifierInput *> &xs, const std::vector<int> &labels) const;
  // Throws ContractError on single-class data.
  std::vector<double> train(const std::vector<ClassifierInput> &xs, const std::vector<int> &labels,
                            const ClassifierTrainConfig &cfg);

  nlohmann::json to_json() const;
  static ConceptClassifier from_json(const nlohmann::json &j);

 private:
  ClassifierConfig cfg_;
  size_t words_, chars_, pos_tags_, knowledge_dim_;
  ParameterSet params_;
};

struct ClassificationMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double accuracy = 0;
  nlohmann::json to_json() const;
};

ClassificationMetrics classification_metrics(const std::vector<double> &scores, const std::vector<int> &labels,
                                             double threshold = 0.5);

struct QaResult {
  bool accepted = false;
  double accuracy = 0;
  std::vector<std::string> sampled;  // phrases
  std::vector<int> labels;           // oracle answers for the sampled phrases
  std::vector<std::string> written;  // ids of validated concepts
};

// Samples max(1, floor(rate * |batch|)) candidates, asks the oracle (sample
// ids are phrases) and accepts iff accuracy >= threshold. Accepted batches
// are written to the store as validated concepts when store is non-null.
// An OracleError propagates with nothing written.
QaResult qa_gate(const std::vector<CandidateConcept> &batch, double sample_rate, double accuracy_threshold,
                 Oracle &oracle, uint64_t seed, ConceptStore *store);

// Deterministic id for an e-commerce concept phrase.
std::string ecommerce_id(const std::string &phrase);

}  // namespace econet

#endif  // ECONET_GENERATION_H_
