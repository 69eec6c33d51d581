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

// Concept-item matching: conv encoders, two-way attention pooling, a
// bilinear matching pyramid over [words; knowledge; classes] against the
// title, and an MLP scorer. Association writes item_ecommerce edges.

#ifndef ECONET_MATCHING_H_
#define ECONET_MATCHING_H_

#include <memory>
#include <string>
#include <vector>

#include "econet/autodiff.h"
#include "econet/providers.h"
#include "econet/store.h"
#include "json.hpp"

namespace econet {

struct ConceptSideInput {
  std::vector<std::string> tokens;
  Tensor words;                   // [m x word dim], pretrained vectors
  std::vector<size_t> pos_ids;    // m
  Tensor knowledge;               // [m x knowledge dim]
  std::vector<size_t> class_ids;  // one per linked primitive class
};

struct ItemSideInput {
  std::vector<std::string> tokens;
  Tensor words;  // [l x word dim]
  std::vector<size_t> pos_ids;
};

// Builds model inputs. Class ids index `classes` shifted by one; 0 is the
// unknown class.
class MatchFeaturizer {
 public:
  MatchFeaturizer(std::shared_ptr<const VectorProvider> words, std::shared_ptr<const VectorProvider> knowledge,
                  PosLexicon pos, std::vector<std::string> classes);

  ConceptSideInput concept_input(const std::vector<std::string> &tokens,
                                 const std::vector<std::string> &classes = {}) const;
  // Classes of the linked primitives, in link order.
  ConceptSideInput concept_input(const ECommerceConcept &cpt, const ConceptStore &store) const;
  ItemSideInput item_input(const std::vector<std::string> &tokens) const;

  size_t word_dim() const { return words_->dim(); }
  size_t knowledge_dim() const { return knowledge_->dim(); }
  size_t pos_tags() const { return pos_.tag_count(); }
  size_t class_count() const { return classes_.size() + 1; }
  size_t class_id(const std::string &cls) const;

 private:
  std::shared_ptr<const VectorProvider> words_, knowledge_;
  PosLexicon pos_;
  std::vector<std::string> classes_;
};

struct MatchConfig {
  size_t pos_dim = 4;
  size_t encoder_dim = 16;
  int window = 3;
  size_t attention_dim = 8;
  size_t slices = 2;
  size_t channels1 = 8;
  size_t channels2 = 4;
  size_t grid = 4;
  size_t pyramid_out = 16;
  size_t mlp_hidden = 16;
  bool use_knowledge = true;
  nlohmann::json to_json() const;
  static MatchConfig from_json(const nlohmann::json &j);
};

struct AttentionPool {
  Var c;        // [1 x encoder dim]
  Var i;        // [1 x encoder dim]
  Var att;      // [m x l]
  Var alpha_w;  // [1 x m]
  Var alpha_t;  // [1 x l]
};

struct MatchExample {
  std::string concept_id;
  std::string item_id;
  ConceptSideInput concept_side;
  ItemSideInput item;
  int label = 0;
};

struct MatchTrainConfig {
  size_t epochs = 3;
  size_t batch = 16;
  double lr = 0.003;
  uint64_t seed = 1;
};

class MatchModel {
 public:
  MatchModel(MatchConfig cfg, size_t word_dim, size_t pos_tags, size_t knowledge_dim, size_t classes, uint64_t seed);

  const MatchConfig &config() const { return cfg_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }

  // [m x in] rows of word vectors with POS embeddings.
  Var embed(Graph &g, const Tensor &words, const std::vector<size_t> &pos_ids) const;
  // att_ij = v^T tanh(W1 w'_i + W2 t'_j); weights are softmaxes of the row
  // and column sums.
  AttentionPool attention_pool(Graph &g, Var w_enc, Var t_enc) const;
  // [words; knowledge; classes] rows, knowledge rows only when enabled.
  Var concept_rows(Graph &g, const ConceptSideInput &x) const;
  // [slices x n x l] with match^k_ij = kw_i^T W_k t_j.
  Var match_matrices(Graph &g, Var kw, Var t) const;
  // Two conv layers and grid max pooling per slice, then a dense layer.
  Var pyramid(Graph &g, Var matches) const;

  Var logit(Graph &g, const ConceptSideInput &cpt, const ItemSideInput &item) const;
  double score(const ConceptSideInput &cpt, const ItemSideInput &item) const;
  // Binary NLL averaged over the batch.
  Var loss(Graph &g, const std::vector<const MatchExample *> &batch) const;
  // Throws ContractError on single-class data.
  std::vector<double> train(const std::vector<MatchExample> &data, const MatchTrainConfig &cfg);

  nlohmann::json to_json() const;
  static MatchModel from_json(const nlohmann::json &j);
  // SHA-256 of the serialized checkpoint.
  std::string checksum() const;

 private:
  MatchConfig cfg_;
  size_t word_dim_, pos_tags_, knowledge_dim_, classes_;
  ParameterSet params_;
};

// Rank AUC; tied scores count one half. Throws on single-class input.
double roc_auc(const std::vector<double> &scores, const std::vector<int> &labels);

struct MatchMetrics {
  double auc = 0;
  double f1 = 0;        // threshold 0.5
  double p_at_10 = 0;   // mean over concepts of precision in the top min(10, n)
  size_t concepts = 0;
  nlohmann::json to_json() const;
};

MatchMetrics evaluate_matching(const std::vector<double> &scores, const std::vector<int> &labels,
                               const std::vector<std::string> &concept_ids);

// Pair TSV: concept_id<TAB>item_id<TAB>0|1.
struct PairLabel {
  std::string concept_id;
  std::string item_id;
  int label = 0;
};
std::vector<PairLabel> read_pair_labels(const std::string &path);
void write_pair_labels(const std::string &path, const std::vector<PairLabel> &pairs);

// Featurizes labeled pairs whose ids refer to e-commerce concepts and items
// in the store.
std::vector<MatchExample> build_match_examples(const std::vector<PairLabel> &pairs, const ConceptStore &store,
                                               const MatchFeaturizer &featurizer);

struct AssociationResult {
  size_t scored = 0;
  size_t written = 0;  // new edges
  size_t updated = 0;  // existing edges whose weight changed
  nlohmann::json to_json() const;
};

// Scores every (concept, item) pair and upserts item_ecommerce edges with
// weight = score when score >= threshold. Audit lines go to audit_log_path
// when it is non-empty.
AssociationResult associate(ConceptStore &store, const MatchModel &model, const MatchFeaturizer &featurizer,
                            const std::vector<std::string> &concept_ids, const std::vector<std::string> &item_ids,
                            double threshold, const std::string &audit_log_path = "");

}  // namespace econet

#endif  // ECONET_MATCHING_H_
