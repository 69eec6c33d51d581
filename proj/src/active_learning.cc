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

#include "econet/active_learning.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace econet {

using nlohmann::json;

void ALConfig::validate() const {
  if (k == 0) throw ConfigError("active learning: K must be at least 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("active learning: alpha must lie in [0, 1]");
  if (patience == 0) throw ConfigError("active learning: patience must be at least 1");
  if (strategy != "random" && strategy != "US" && strategy != "CS" && strategy != "UCS") {
    throw ConfigError("active learning: unknown strategy '" + strategy + "'");
  }
  if (ucs_variant != "prose" && ucs_variant != "literal") {
    throw ConfigError("active learning: unknown ucs_variant '" + ucs_variant + "'");
  }
}

json ALConfig::to_json() const {
  return json{{"k", k},
              {"alpha", alpha},
              {"patience", patience},
              {"strategy", strategy},
              {"ucs_variant", ucs_variant},
              {"seed", seed},
              {"max_rounds", max_rounds}};
}

ALConfig ALConfig::from_json(const json &j) {
  ALConfig c;
  c.k = j.value("k", c.k);
  c.alpha = j.value("alpha", c.alpha);
  c.patience = j.value("patience", c.patience);
  c.strategy = j.value("strategy", c.strategy);
  c.ucs_variant = j.value("ucs_variant", c.ucs_variant);
  c.seed = j.value("seed", c.seed);
  c.max_rounds = j.value("max_rounds", c.max_rounds);
  c.validate();
  return c;
}

std::vector<double> uncertainty(const std::vector<double> &scores) {
  std::vector<double> p(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) p[i] = std::abs(scores[i] - 0.5) / 0.5;
  return p;
}

std::vector<size_t> select_batch(const std::vector<double> &scores, size_t k, const ALConfig &cfg, Rng &rng) {
  cfg.validate();
  if (k == 0) throw ConfigError("select_batch: k must be at least 1");
  if (k > scores.size()) {
    throw std::out_of_range("pool exhausted: " + std::to_string(scores.size()) + " samples left, batch of " +
                            std::to_string(k) + " requested");
  }
  const std::vector<double> p = uncertainty(scores);
  std::vector<size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto by_p_asc = [&](size_t a, size_t b) { return p[a] != p[b] ? p[a] < p[b] : a < b; };
  auto by_p_desc = [&](size_t a, size_t b) { return p[a] != p[b] ? p[a] > p[b] : a < b; };
  std::vector<size_t> out;
  if (cfg.strategy == "random") {
    rng.shuffle(idx);
    out.assign(idx.begin(), idx.begin() + static_cast<long>(k));
  } else if (cfg.strategy == "US") {
    std::sort(idx.begin(), idx.end(), by_p_asc);
    out.assign(idx.begin(), idx.begin() + static_cast<long>(k));
  } else if (cfg.strategy == "CS") {
    std::sort(idx.begin(), idx.end(), by_p_desc);
    out.assign(idx.begin(), idx.begin() + static_cast<long>(k));
  } else {
    const size_t n_conf = std::min(k, static_cast<size_t>(std::llround(cfg.alpha * static_cast<double>(k))));
    std::vector<size_t> conf;
    for (size_t i : idx) {
      if (cfg.ucs_variant == "literal" || scores[i] >= 0.5) conf.push_back(i);
    }
    std::sort(conf.begin(), conf.end(), by_p_desc);
    std::vector<char> taken(scores.size(), 0);
    for (size_t i = 0; i < conf.size() && out.size() < n_conf; ++i) {
      out.push_back(conf[i]);
      taken[conf[i]] = 1;
    }
    std::sort(idx.begin(), idx.end(), by_p_asc);
    for (size_t i : idx) {
      if (out.size() == k) break;
      if (!taken[i]) out.push_back(i);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> SimulatedOracle::label(const std::vector<std::string> &ids) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (const auto &id : ids) {
    auto it = truth_.find(id);
    if (it == truth_.end()) throw OracleError("oracle has no answer for '" + id + "'");
    out.push_back(it->second);
  }
  for (const auto &id : ids) asked_.insert(id);
  ++queries_;
  return out;
}

json RoundRecord::to_json() const {
  return json{{"round", round}, {"labeled", labeled}, {"fs", fs}, {"metrics", metrics}, {"batch", batch}};
}

ActiveLearner::ActiveLearner(ActiveTask &task, std::vector<std::string> pool, ALConfig cfg)
    : task_(task), pool_(std::move(pool)), cfg_(std::move(cfg)), rng_(mix_seed(cfg_.seed, "active_learning")) {
  cfg_.validate();
  std::sort(pool_.begin(), pool_.end());
  pool_.erase(std::unique(pool_.begin(), pool_.end()), pool_.end());
  if (pool_.empty()) throw ConfigError("active learning: empty pool");
}

bool ActiveLearner::done() const {
  if (pool_.empty()) return true;
  if (cfg_.max_rounds > 0 && history_.size() >= cfg_.max_rounds) return true;
  return !history_.empty() && history_.size() - 1 - best_round_ >= cfg_.patience;
}

const std::vector<std::string> &ActiveLearner::pending() const {
  if (!pending_) throw ContractError("no pending batch");
  return *pending_;
}

const std::vector<std::string> &ActiveLearner::propose() {
  if (pending_) return *pending_;
  if (done()) throw ContractError("active learning loop has stopped");
  const size_t k = std::min(cfg_.k, pool_.size());
  std::vector<size_t> picked;
  if (history_.empty()) {
    ALConfig seed_cfg = cfg_;
    seed_cfg.strategy = "random";
    picked = select_batch(std::vector<double>(pool_.size(), 0.5), k, seed_cfg, rng_);
  } else {
    picked = select_batch(task_.score(pool_), k, cfg_, rng_);
  }
  std::vector<std::string> batch;
  for (size_t i : picked) batch.push_back(pool_[i]);
  pending_ = std::move(batch);
  return *pending_;
}

const RoundRecord &ActiveLearner::commit(const std::vector<int> &labels) {
  if (!pending_) throw ContractError("commit without a proposed batch");
  if (labels.size() != pending_->size()) throw ContractError("commit: label count does not match the batch");
  for (int l : labels) {
    if (l != 0 && l != 1 && l != kSkip) throw ContractError("commit: labels must be 0, 1 or skip");
  }
  std::set<std::string> batch;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kSkip) continue;
    batch.insert((*pending_)[i]);
    labeled_ids_.push_back((*pending_)[i]);
    labels_.push_back(labels[i]);
  }
  std::vector<std::string> rest;
  for (const auto &id : pool_) {
    if (!batch.count(id)) rest.push_back(id);
  }
  pool_ = std::move(rest);
  task_.fit(labeled_ids_, labels_);
  RoundRecord rec;
  rec.round = history_.size();
  rec.labeled = labeled_ids_.size();
  rec.metrics = task_.metrics();
  rec.fs = rec.metrics.at(task_.metric_name()).get<double>();
  rec.batch = std::move(*pending_);
  pending_.reset();
  if (history_.empty() || rec.fs > best_fs_) {
    best_fs_ = rec.fs;
    best_round_ = rec.round;
    best_snapshot_ = task_.snapshot();
  }
  history_.push_back(std::move(rec));
  return history_.back();
}

void append_round_log(const std::string &path, const RoundRecord &record) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write round log: " + path);
  out << record.to_json().dump() << '\n';
}

ALResult run_loop(ActiveTask &task, Oracle &oracle, const std::vector<std::string> &pool, const ALConfig &cfg,
                  const std::string &round_log_path) {
  ActiveLearner learner(task, pool, cfg);
  while (!learner.done()) {
    const std::vector<std::string> batch = learner.propose();
    std::vector<int> labels;
    try {
      labels = oracle.label(batch);
    } catch (const OracleError &) {
      learner.discard();
      if (!learner.history().empty()) task.restore(learner.best_snapshot());
      throw;
    }
    const RoundRecord &rec = learner.commit(labels);
    if (!round_log_path.empty()) append_round_log(round_log_path, rec);
  }
  task.restore(learner.best_snapshot());
  ALResult r;
  r.history = learner.history();
  r.labeled_ids = learner.labeled_ids();
  r.labels = learner.labels();
  r.best_round = learner.best_round();
  r.best_metric = learner.best_metric();
  r.stop_round = r.history.empty() ? 0 : r.history.size() - 1;
  return r;
}

HypernymTask::HypernymTask(ConceptEmbeddings embeddings, std::vector<std::string> candidates,
                           std::map<std::string, std::set<std::string>> test_gold, size_t slices,
                           ProjectionTrainConfig train_cfg, uint64_t seed)
    : embeddings_(std::move(embeddings)),
      candidates_(std::move(candidates)),
      test_gold_(std::move(test_gold)),
      slices_(slices),
      train_cfg_(train_cfg),
      seed_(seed),
      model_(embeddings_, slices, seed) {}

std::string HypernymTask::sample_id(const std::string &hyponym, const std::string &hypernym) {
  return hyponym + "\t" + hypernym;
}

std::pair<std::string, std::string> HypernymTask::split_sample_id(const std::string &id) {
  const auto tab = id.find('\t');
  if (tab == std::string::npos) throw std::invalid_argument("not a hypernym sample id: '" + id + "'");
  return {id.substr(0, tab), id.substr(tab + 1)};
}

void HypernymTask::fit(const std::vector<std::string> &ids, const std::vector<int> &labels) {
  model_ = ProjectionModel(embeddings_, slices_, seed_);
  if (ids.empty()) return;
  std::vector<LabeledPair> data;
  for (size_t i = 0; i < ids.size(); ++i) {
    auto [p, h] = split_sample_id(ids[i]);
    data.push_back({p, h, labels.at(i)});
  }
  model_.train(data, train_cfg_);
}

std::vector<double> HypernymTask::score(const std::vector<std::string> &ids) const {
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(ids.size());
  for (const auto &id : ids) pairs.push_back(split_sample_id(id));
  return model_.score(pairs);
}

json HypernymTask::metrics() const {
  std::vector<RankedHypernyms> rankings;
  for (const auto &[q, gold] : test_gold_) rankings.push_back(rank(q, candidates_, model_));
  return evaluate_rankings(rankings, test_gold_).to_json();
}

void HypernymTask::restore(const json &snapshot) { model_.params() = ParameterSet::from_json(snapshot); }

}  // namespace econet
