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

// Run manifests and the annotation service behind the human oracle.

#ifndef ECONET_PIPELINE_H_
#define ECONET_PIPELINE_H_

#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "econet/active_learning.h"
#include "econet/generation.h"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace econet {

// {"command", "config_hash", "seed", "inputs": {path: sha256},
//  "outputs": {path: sha256}}. Paths are recorded as given.
struct Manifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  uint64_t seed = 0;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;

  void add_input(const std::string &path);
  void add_output(const std::string &path);
  std::string config_hash() const;
  nlohmann::json to_json() const;
  void write(const std::string &path) const;
};

// Error with the HTTP status it maps to.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string &what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

enum class TaskStatus { kPending, kLabeled, kSkipped };
std::string_view to_string(TaskStatus s);

struct AnnotationTask {
  std::string id;
  std::string kind;  // hypernym_pair | concept_candidate
  nlohmann::json payload;
  double score = 0;
  size_t round = 0;
  TaskStatus status = TaskStatus::kPending;
  std::optional<int> label;
  nlohmann::json to_json() const;
};

struct ProposedSample {
  std::string sample_id;
  nlohmann::json payload;
  double score = 0;
};

// What the service drives: rounds of samples that humans resolve.
class AnnotationBackend {
 public:
  virtual ~AnnotationBackend() = default;
  virtual std::string kind() const = 0;
  virtual std::string strategy() const = 0;
  virtual bool allows_skip() const { return true; }
  virtual bool done() const = 0;
  // Samples of the next round. Only called when !done().
  virtual std::vector<ProposedSample> open_round() = 0;
  // labels parallel to the opened samples; ActiveLearner::kSkip for skips.
  virtual nlohmann::json close_round(const std::vector<int> &labels) = 0;
  virtual nlohmann::json history() const = 0;
};

// Active learning over an ActiveTask. Payloads come from `describe`.
class LearnerBackend : public AnnotationBackend {
 public:
  LearnerBackend(ActiveTask &task, std::vector<std::string> pool, ALConfig cfg, std::string round_log_path = "",
                 std::function<nlohmann::json(const std::string &)> describe = nullptr);
  std::string kind() const override { return "hypernym_pair"; }
  std::string strategy() const override { return learner_.config().strategy; }
  bool done() const override { return learner_.done(); }
  std::vector<ProposedSample> open_round() override;
  nlohmann::json close_round(const std::vector<int> &labels) override;
  nlohmann::json history() const override;
  const ActiveLearner &learner() const { return learner_; }

 private:
  ActiveTask &task_;
  ActiveLearner learner_;
  std::string round_log_path_;
  std::function<nlohmann::json(const std::string &)> describe_;
};

// One QA round over a candidate batch; closing it runs the gate.
class QaBackend : public AnnotationBackend {
 public:
  QaBackend(std::vector<CandidateConcept> batch, double sample_rate, double threshold, uint64_t seed,
            ConceptStore *store);
  std::string kind() const override { return "concept_candidate"; }
  std::string strategy() const override { return "qa_gate"; }
  bool allows_skip() const override { return false; }
  bool done() const override { return result_.has_value(); }
  std::vector<ProposedSample> open_round() override;
  nlohmann::json close_round(const std::vector<int> &labels) override;
  nlohmann::json history() const override;
  const std::optional<QaResult> &result() const { return result_; }

 private:
  std::vector<CandidateConcept> batch_;
  double rate_, threshold_;
  uint64_t seed_;
  ConceptStore *store_;
  std::vector<std::string> sampled_;
  std::optional<QaResult> result_;
};

// Thread-safe task bookkeeping with a JSONL write-ahead log. Each label and
// each round advance is appended and synced before it takes effect; a log
// found at startup is replayed.
class AnnotationService {
 public:
  AnnotationService(AnnotationBackend &backend, std::string wal_path = "");
  ~AnnotationService();
  AnnotationService(const AnnotationService &) = delete;
  AnnotationService &operator=(const AnnotationService &) = delete;

  nlohmann::json current_round() const;
  nlohmann::json tasks(std::optional<size_t> limit) const;
  // {"labels": [{"task_id": "...", "label": 0 | 1 | "skip"}]}
  nlohmann::json post_labels(const nlohmann::json &body);
  nlohmann::json advance();
  bool finished() const;
  size_t round() const;

 private:
  struct Resolution {
    std::string task_id;
    int value;  // 0, 1 or ActiveLearner::kSkip
  };
  std::vector<Resolution> validate(const nlohmann::json &body) const;
  bool apply(const Resolution &r);
  nlohmann::json advance_locked();
  void open_locked();
  void log(const nlohmann::json &entry);
  void replay();

  mutable std::shared_mutex mu_;
  AnnotationBackend &backend_;
  std::string wal_path_;
  std::FILE *wal_ = nullptr;
  size_t round_ = 0;
  std::map<std::string, AnnotationTask> tasks_;
  std::vector<std::string> current_;  // task ids of the open round, in sample order
  nlohmann::json last_close_;
};

// GET /health, GET /rounds/current, GET /tasks?limit=N, POST /labels,
// POST /rounds/advance.
void mount_annotation_routes(httplib::Server &server, AnnotationService &service);

}  // namespace econet

#endif  // ECONET_PIPELINE_H_
