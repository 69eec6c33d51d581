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

// Pool-based active learning. Strategies: random, US (least confident
// first), CS (most confident first) and UCS (a share alpha of confident
// samples plus the least confident rest).

#ifndef ECONET_ACTIVE_LEARNING_H_
#define ECONET_ACTIVE_LEARNING_H_

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "econet/hypernym.h"
#include "econet/random.h"
#include "json.hpp"

namespace econet {

struct ALConfig {
  size_t k = 50;
  double alpha = 0.3;
  size_t patience = 3;
  std::string strategy = "UCS";     // random | US | CS | UCS
  std::string ucs_variant = "prose";  // prose: confident share drawn from S >= 0.5; literal: any S
  uint64_t seed = 1;
  size_t max_rounds = 0;  // 0 = until patience or pool exhaustion

  void validate() const;
  nlohmann::json to_json() const;
  static ALConfig from_json(const nlohmann::json &j);
};

// p_i = |S_i - 0.5| / 0.5
std::vector<double> uncertainty(const std::vector<double> &scores);

// Indices into scores. Ties are broken by lower index; pass pools sorted by
// id to get ties by id. Throws std::out_of_range if fewer than k samples.
std::vector<size_t> select_batch(const std::vector<double> &scores, size_t k, const ALConfig &cfg, Rng &rng);

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Oracle {
 public:
  virtual ~Oracle() = default;
  // One 0/1 label per id. Throws OracleError on failure.
  virtual std::vector<int> label(const std::vector<std::string> &ids) = 0;
};

class SimulatedOracle : public Oracle {
 public:
  explicit SimulatedOracle(std::map<std::string, int> truth) : truth_(std::move(truth)) {}
  std::vector<int> label(const std::vector<std::string> &ids) override;
  size_t queries() const { return queries_; }
  const std::multiset<std::string> &asked() const { return asked_; }

 private:
  std::map<std::string, int> truth_;
  size_t queries_ = 0;
  std::multiset<std::string> asked_;
};

// A binary model the loop can retrain and evaluate.
class ActiveTask {
 public:
  virtual ~ActiveTask() = default;
  // Retrains from scratch on the labeled samples.
  virtual void fit(const std::vector<std::string> &ids, const std::vector<int> &labels) = 0;
  virtual std::vector<double> score(const std::vector<std::string> &ids) const = 0;
  // Held-out metrics; must contain the key named by metric_name().
  virtual nlohmann::json metrics() const = 0;
  virtual std::string metric_name() const { return "map"; }
  virtual nlohmann::json snapshot() const = 0;
  virtual void restore(const nlohmann::json &snapshot) = 0;
};

struct RoundRecord {
  size_t round = 0;
  size_t labeled = 0;
  double fs = 0;
  nlohmann::json metrics;
  std::vector<std::string> batch;
  nlohmann::json to_json() const;
};

// Stepwise form of the loop, shared by run_loop and the annotation service:
// propose() a batch, collect labels, commit() them.
class ActiveLearner {
 public:
  ActiveLearner(ActiveTask &task, std::vector<std::string> pool, ALConfig cfg);

  // Next batch: K random ids in the seed round, the strategy afterwards.
  // Repeated calls without commit return the same batch.
  const std::vector<std::string> &propose();
  // Adds labels for exactly the proposed batch, retrains, evaluates.
  // kSkip leaves a sample unlabeled and back in the pool.
  const RoundRecord &commit(const std::vector<int> &labels);
  static constexpr int kSkip = -1;
  // Drops the pending batch; its ids stay in the pool.
  void discard() { pending_.reset(); }

  bool done() const;
  bool has_pending() const { return pending_.has_value(); }
  const std::vector<std::string> &pending() const;

  const std::vector<std::string> &pool() const { return pool_; }
  const std::vector<std::string> &labeled_ids() const { return labeled_ids_; }
  const std::vector<int> &labels() const { return labels_; }
  const std::vector<RoundRecord> &history() const { return history_; }
  size_t best_round() const { return best_round_; }
  double best_metric() const { return best_fs_; }
  const nlohmann::json &best_snapshot() const { return best_snapshot_; }
  const ALConfig &config() const { return cfg_; }
  ActiveTask &task() { return task_; }

 private:
  ActiveTask &task_;
  std::vector<std::string> pool_;  // unlabeled, sorted by id
  ALConfig cfg_;
  Rng rng_;
  std::vector<std::string> labeled_ids_;
  std::vector<int> labels_;
  std::vector<RoundRecord> history_;
  std::optional<std::vector<std::string>> pending_;
  size_t best_round_ = 0;
  double best_fs_ = 0;
  nlohmann::json best_snapshot_;
};

struct ALResult {
  std::vector<RoundRecord> history;
  std::vector<std::string> labeled_ids;
  std::vector<int> labels;
  size_t best_round = 0;
  double best_metric = 0;
  size_t stop_round = 0;
};

// Runs rounds until the metric has not improved for `patience` rounds, the
// pool is empty or max_rounds is hit; leaves the task restored to the best
// round's model. An OracleError discards that round's batch and is rethrown.
ALResult run_loop(ActiveTask &task, Oracle &oracle, const std::vector<std::string> &pool, const ALConfig &cfg,
                  const std::string &round_log_path = "");

void append_round_log(const std::string &path, const RoundRecord &record);

// Hypernym pairs as active-learning samples. Sample ids are
// "hyponym<TAB>hypernym".
class HypernymTask : public ActiveTask {
 public:
  HypernymTask(ConceptEmbeddings embeddings, std::vector<std::string> candidates,
               std::map<std::string, std::set<std::string>> test_gold, size_t slices,
               ProjectionTrainConfig train_cfg, uint64_t seed);

  static std::string sample_id(const std::string &hyponym, const std::string &hypernym);
  static std::pair<std::string, std::string> split_sample_id(const std::string &id);

  void fit(const std::vector<std::string> &ids, const std::vector<int> &labels) override;
  std::vector<double> score(const std::vector<std::string> &ids) const override;
  nlohmann::json metrics() const override;
  nlohmann::json snapshot() const override { return model_.params().to_json(); }
  void restore(const nlohmann::json &snapshot) override;
  const ProjectionModel &model() const { return model_; }

 private:
  ConceptEmbeddings embeddings_;
  std::vector<std::string> candidates_;
  std::map<std::string, std::set<std::string>> test_gold_;
  size_t slices_;
  ProjectionTrainConfig train_cfg_;
  uint64_t seed_;
  ProjectionModel model_;
};

}  // namespace econet

#endif  // ECONET_ACTIVE_LEARNING_H_
