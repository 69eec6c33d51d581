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

// isA discovery between primitive concepts: textual patterns, the head-word
// rule and a bilinear projection model y = sigmoid(W s + b), s_k = p' T_k h.

#ifndef ECONET_HYPERNYM_H_
#define ECONET_HYPERNYM_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "econet/autodiff.h"
#include "econet/providers.h"
#include "json.hpp"

namespace econet {

// Template such as "Y such as X". Exactly one X and one Y token.
class HearstPattern {
 public:
  static HearstPattern parse(const std::string &text);
  const std::string &text() const { return text_; }
  const std::vector<std::string> &tokens() const { return tokens_; }

 private:
  std::string text_;
  std::vector<std::string> tokens_;
};

std::vector<HearstPattern> default_hearst_patterns();
// One template per line; blank lines and lines starting with '#' skipped.
std::vector<HearstPattern> load_hearst_patterns(const std::string &path);

struct PatternPair {
  std::string hyponym;
  std::string hypernym;
  size_t support = 0;
  bool operator==(const PatternPair &) const = default;
};

// Slot fillers must be known surfaces; a plural final token ("jackets",
// "dresses", "berries") is mapped back to its singular surface when only
// that form is known. Output sorted by (hyponym, hypernym).
std::vector<PatternPair> hearst_extract(const std::vector<std::vector<std::string>> &corpus,
                                        const std::vector<HearstPattern> &patterns,
                                        const std::set<std::string> &surfaces);

// (full surface, head surface) for multi-token surfaces whose final token is
// itself in the vocabulary.
std::vector<std::pair<std::string, std::string>> head_rule_extract(const std::set<std::string> &vocabulary);

// Fixed embedding table keyed by concept id.
class ConceptEmbeddings {
 public:
  explicit ConceptEmbeddings(size_t dim = 0) : dim_(dim) {}
  static ConceptEmbeddings from_provider(const std::vector<std::string> &ids, const VectorProvider &provider);
  // "id<TAB>v1 v2 ..." lines.
  static ConceptEmbeddings load(const std::string &path);

  void set(const std::string &id, const std::vector<double> &v);
  bool contains(const std::string &id) const { return index_.count(id) > 0; }
  size_t index(const std::string &id) const;
  const std::vector<std::string> &ids() const { return ids_; }
  size_t dim() const { return dim_; }
  size_t size() const { return ids_.size(); }
  std::span<const double> row(const std::string &id) const;
  // [n x dim] rows for the given ids.
  Tensor gather(const std::vector<std::string> &ids) const;

  nlohmann::json to_json() const;
  static ConceptEmbeddings from_json(const nlohmann::json &j);

 private:
  size_t dim_;
  std::vector<std::string> ids_;
  std::vector<double> data_;
  std::unordered_map<std::string, size_t> index_;
};

struct LabeledPair {
  std::string hyponym;
  std::string hypernym;
  int label = 0;
  bool operator==(const LabeledPair &) const = default;
};

// TSV rows (hyponym_id, hypernym_id, label).
std::vector<LabeledPair> read_pairs(const std::string &path);
void write_pairs(const std::string &path, const std::vector<LabeledPair> &pairs);

struct ProjectionTrainConfig {
  size_t epochs = 30;
  size_t batch = 256;
  double lr = 0.02;
  uint64_t seed = 1;
};

class ProjectionModel {
 public:
  // slices = K. Parameters: "T.0".."T.{K-1}" [d x d], "W" [1 x K], "b" [1 x 1].
  ProjectionModel(ConceptEmbeddings embeddings, size_t slices, uint64_t seed);

  size_t slices() const { return slices_; }
  const ConceptEmbeddings &embeddings() const { return embeddings_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }

  double score(const std::string &hyponym, const std::string &hypernym) const;
  std::vector<double> score(const std::vector<std::pair<std::string, std::string>> &pairs) const;

  // Mean binary NLL over the pairs.
  Var loss(Graph &g, const std::vector<LabeledPair> &pairs) const;
  // Adam over shuffled mini-batches. Returns mean loss per epoch.
  std::vector<double> train(const std::vector<LabeledPair> &data, const ProjectionTrainConfig &cfg);

  nlohmann::json to_json() const;
  static ProjectionModel from_json(const nlohmann::json &j);
  void save(const std::string &path) const;
  static ProjectionModel load(const std::string &path);

 private:
  Var logits(Graph &g, const std::vector<std::string> &hypo, const std::vector<std::string> &hyper) const;

  ConceptEmbeddings embeddings_;
  size_t slices_;
  ParameterSet params_;
};

// ratio negatives per positive: the hypernym is replaced by a random
// vocabulary entry that is neither the hyponym nor one of its known
// hypernyms. Throws ConfigError when a hyponym has no valid replacement.
std::vector<LabeledPair> negative_sample(const std::vector<std::pair<std::string, std::string>> &positives,
                                         size_t ratio, const std::vector<std::string> &vocabulary, uint64_t seed);

struct RankedHypernyms {
  std::string hyponym;
  std::vector<std::pair<std::string, double>> candidates;  // score desc, then id
  bool self_candidate = false;                             // hyponym among candidates
};

RankedHypernyms rank(const std::string &hyponym, const std::vector<std::string> &candidates,
                     const ProjectionModel &model);

struct RankingMetrics {
  double map = 0;
  double mrr = 0;
  double p_at_1 = 0;
  size_t queries = 0;
  nlohmann::json to_json() const;
};

// Gold missing from a ranking contributes zero. Throws std::invalid_argument
// on a query without gold.
RankingMetrics evaluate_rankings(const std::vector<RankedHypernyms> &rankings,
                                 const std::map<std::string, std::set<std::string>> &gold);

}  // namespace econet

#endif  // ECONET_HYPERNYM_H_
