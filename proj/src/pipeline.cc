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

#include "econet/pipeline.h"

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>

#include "econet/checksum.h"
#include "httplib.h"

namespace econet {

using json = nlohmann::json;

void Manifest::add_input(const std::string &path) { inputs[path] = sha256_file(path); }
void Manifest::add_output(const std::string &path) { outputs[path] = sha256_file(path); }

std::string Manifest::config_hash() const { return sha256_hex(config.dump()); }

json Manifest::to_json() const {
  return {{"command", command}, {"config", config},   {"config_hash", config_hash()},
          {"seed", seed},       {"inputs", inputs},   {"outputs", outputs}};
}

void Manifest::write(const std::string &path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << to_json().dump(2) << '\n';
}

std::string_view to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::kPending: return "pending";
    case TaskStatus::kLabeled: return "labeled";
    case TaskStatus::kSkipped: return "skipped";
  }
  return "pending";
}

json AnnotationTask::to_json() const {
  json j{{"task_id", id}, {"kind", kind},  {"payload", payload},
         {"score", score}, {"round", round}, {"status", to_string(status)}};
  j["label"] = label ? json(*label) : json(nullptr);
  return j;
}

LearnerBackend::LearnerBackend(ActiveTask &task, std::vector<std::string> pool, ALConfig cfg,
                               std::string round_log_path, std::function<json(const std::string &)> describe)
    : task_(task),
      learner_(task, std::move(pool), std::move(cfg)),
      round_log_path_(std::move(round_log_path)),
      describe_(std::move(describe)) {}

std::vector<ProposedSample> LearnerBackend::open_round() {
  const std::vector<std::string> batch = learner_.propose();
  const std::vector<double> scores = task_.score(batch);
  std::vector<ProposedSample> out;
  for (size_t i = 0; i < batch.size(); ++i) {
    out.push_back({batch[i], describe_ ? describe_(batch[i]) : json{{"sample_id", batch[i]}}, scores[i]});
  }
  return out;
}

json LearnerBackend::close_round(const std::vector<int> &labels) {
  const RoundRecord &rec = learner_.commit(labels);
  if (!round_log_path_.empty()) append_round_log(round_log_path_, rec);
  json j = rec.to_json();
  if (learner_.done()) task_.restore(learner_.best_snapshot());
  return j;
}

json LearnerBackend::history() const {
  json h = json::array();
  for (const auto &r : learner_.history()) h.push_back(r.to_json());
  return h;
}

namespace {

class ProbeOracle : public Oracle {
 public:
  std::vector<int> label(const std::vector<std::string> &ids) override {
    seen = ids;
    throw OracleError("probe");
  }
  std::vector<std::string> seen;
};

class AnswerOracle : public Oracle {
 public:
  explicit AnswerOracle(std::map<std::string, int> answers) : answers_(std::move(answers)) {}
  std::vector<int> label(const std::vector<std::string> &ids) override {
    std::vector<int> out;
    for (const auto &id : ids) {
      auto it = answers_.find(id);
      if (it == answers_.end()) throw OracleError("no answer for " + id);
      out.push_back(it->second);
    }
    return out;
  }

 private:
  std::map<std::string, int> answers_;
};

}  // namespace

QaBackend::QaBackend(std::vector<CandidateConcept> batch, double sample_rate, double threshold, uint64_t seed,
                     ConceptStore *store)
    : batch_(std::move(batch)), rate_(sample_rate), threshold_(threshold), seed_(seed), store_(store) {}

std::vector<ProposedSample> QaBackend::open_round() {
  ProbeOracle probe;
  try {
    qa_gate(batch_, rate_, threshold_, probe, seed_, nullptr);
  } catch (const OracleError &) {
  }
  sampled_ = probe.seen;
  std::vector<ProposedSample> out;
  for (const auto &phrase : sampled_) {
    auto it = std::find_if(batch_.begin(), batch_.end(), [&](const CandidateConcept &c) { return c.phrase == phrase; });
    json payload{{"phrase", phrase}};
    double score = 0;
    if (it != batch_.end()) {
      payload["source"] = it->source;
      if (!it->pattern_id.empty()) payload["pattern_id"] = it->pattern_id;
      score = it->score.value_or(0);
    }
    out.push_back({phrase, payload, score});
  }
  return out;
}

json QaBackend::close_round(const std::vector<int> &labels) {
  std::map<std::string, int> answers;
  for (size_t i = 0; i < sampled_.size(); ++i) answers[sampled_[i]] = labels.at(i);
  AnswerOracle oracle(std::move(answers));
  result_ = qa_gate(batch_, rate_, threshold_, oracle, seed_, store_);
  return history();
}

json QaBackend::history() const {
  if (!result_) return json::array();
  return json::array({json{{"round", 0},
                           {"accepted", result_->accepted},
                           {"accuracy", result_->accuracy},
                           {"fs", result_->accuracy},
                           {"labeled", result_->labels.size()},
                           {"sampled", result_->sampled},
                           {"written", result_->written}}});
}

AnnotationService::AnnotationService(AnnotationBackend &backend, std::string wal_path)
    : backend_(backend), wal_path_(std::move(wal_path)) {
  if (!backend_.done()) open_locked();
  if (wal_path_.empty()) return;
  if (std::filesystem::exists(wal_path_)) replay();
  wal_ = std::fopen(wal_path_.c_str(), "ab");
  if (!wal_) throw std::runtime_error("cannot open write-ahead log: " + wal_path_);
}

AnnotationService::~AnnotationService() {
  if (wal_) std::fclose(wal_);
}

void AnnotationService::open_locked() {
  current_.clear();
  const std::vector<ProposedSample> samples = backend_.open_round();
  for (size_t i = 0; i < samples.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "r%zu-%04zu", round_, i);
    AnnotationTask t;
    t.id = buf;
    t.kind = backend_.kind();
    t.payload = samples[i].payload;
    t.payload["sample_id"] = samples[i].sample_id;
    t.score = samples[i].score;
    t.round = round_;
    tasks_[t.id] = t;
    current_.push_back(t.id);
  }
}

void AnnotationService::log(const json &entry) {
  if (!wal_) return;
  const std::string line = entry.dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), wal_) != line.size() || std::fflush(wal_) != 0 ||
      ::fsync(::fileno(wal_)) != 0) {
    throw ServiceError(500, "write-ahead log write failed");
  }
}

void AnnotationService::replay() {
  std::ifstream in(wal_path_);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string op = j.at("op");
      if (op == "label") {
        for (const auto &r : validate(json{{"labels", json::array({j.at("entry")})}})) apply(r);
      } else if (op == "advance") {
        advance_locked();
      } else {
        throw std::runtime_error("unknown op " + op);
      }
    } catch (const std::exception &e) {
      throw std::runtime_error(wal_path_ + ":" + std::to_string(lineno) + ": replay failed: " + e.what());
    }
  }
}

std::vector<AnnotationService::Resolution> AnnotationService::validate(const json &body) const {
  if (!body.is_object() || !body.contains("labels") || !body.at("labels").is_array()) {
    throw ServiceError(400, "body must be an object with a \"labels\" array");
  }
  std::vector<Resolution> out;
  std::map<std::string, int> seen;
  for (const auto &e : body.at("labels")) {
    if (!e.is_object() || !e.contains("task_id") || !e.at("task_id").is_string() || !e.contains("label")) {
      throw ServiceError(400, "each label needs \"task_id\" and \"label\"");
    }
    const std::string id = e.at("task_id");
    const json &l = e.at("label");
    int value;
    if (l.is_number_integer() && (l.get<int64_t>() == 0 || l.get<int64_t>() == 1)) {
      value = l.get<int>();
    } else if (l.is_string() && l.get<std::string>() == "skip") {
      value = ActiveLearner::kSkip;
    } else {
      throw ServiceError(400, "label for " + id + " must be 0, 1 or \"skip\"");
    }
    if (value == ActiveLearner::kSkip && !backend_.allows_skip()) {
      throw ServiceError(400, backend_.kind() + " tasks cannot be skipped");
    }
    auto it = tasks_.find(id);
    if (it == tasks_.end()) throw ServiceError(404, "unknown task " + id);
    const AnnotationTask &t = it->second;
    if (t.status != TaskStatus::kPending) {
      const int have = t.status == TaskStatus::kSkipped ? ActiveLearner::kSkip : *t.label;
      if (have != value) throw ServiceError(409, "task " + id + " is already resolved differently");
    }
    auto [s, fresh] = seen.emplace(id, value);
    if (!fresh && s->second != value) throw ServiceError(409, "conflicting labels for " + id + " in one request");
    out.push_back({id, value});
  }
  return out;
}

bool AnnotationService::apply(const Resolution &r) {
  AnnotationTask &t = tasks_.at(r.task_id);
  if (t.status != TaskStatus::kPending) return false;
  if (r.value == ActiveLearner::kSkip) {
    t.status = TaskStatus::kSkipped;
  } else {
    t.status = TaskStatus::kLabeled;
    t.label = r.value;
  }
  return true;
}

json AnnotationService::post_labels(const json &body) {
  std::unique_lock lock(mu_);
  const std::vector<Resolution> rs = validate(body);
  size_t applied = 0, unchanged = 0;
  for (const auto &r : rs) {
    if (tasks_.at(r.task_id).status != TaskStatus::kPending) {
      ++unchanged;
      continue;
    }
    const json value = r.value == ActiveLearner::kSkip ? json("skip") : json(r.value);
    log({{"op", "label"}, {"entry", {{"task_id", r.task_id}, {"label", value}}}});
    apply(r);
    ++applied;
  }
  size_t pending = 0;
  for (const auto &id : current_) pending += tasks_.at(id).status == TaskStatus::kPending;
  return {{"applied", applied}, {"unchanged", unchanged}, {"pending", pending}};
}

json AnnotationService::advance_locked() {
  if (backend_.done()) throw ServiceError(409, "annotation has finished");
  std::vector<int> labels;
  for (const auto &id : current_) {
    const AnnotationTask &t = tasks_.at(id);
    if (t.status == TaskStatus::kPending) throw ServiceError(409, "round has pending tasks");
    labels.push_back(t.status == TaskStatus::kSkipped ? ActiveLearner::kSkip : *t.label);
  }
  last_close_ = backend_.close_round(labels);
  const size_t closed = round_++;
  current_.clear();
  if (!backend_.done()) open_locked();
  return {{"closed_round", closed}, {"round", round_}, {"result", last_close_}, {"done", backend_.done()}};
}

json AnnotationService::advance() {
  std::unique_lock lock(mu_);
  if (backend_.done()) throw ServiceError(409, "annotation has finished");
  for (const auto &id : current_) {
    if (tasks_.at(id).status == TaskStatus::kPending) throw ServiceError(409, "round has pending tasks");
  }
  const size_t closing = round_;
  json out = advance_locked();
  log({{"op", "advance"}, {"round", closing}});
  return out;
}

json AnnotationService::current_round() const {
  std::shared_lock lock(mu_);
  size_t labeled = 0, skipped = 0, pending = 0;
  for (const auto &id : current_) {
    switch (tasks_.at(id).status) {
      case TaskStatus::kLabeled: ++labeled; break;
      case TaskStatus::kSkipped: ++skipped; break;
      case TaskStatus::kPending: ++pending; break;
    }
  }
  return {{"round", round_},        {"kind", backend_.kind()}, {"strategy", backend_.strategy()},
          {"done", backend_.done()}, {"total", current_.size()}, {"labeled", labeled},
          {"skipped", skipped},     {"pending", pending},      {"history", backend_.history()},
          {"last_result", last_close_}};
}

json AnnotationService::tasks(std::optional<size_t> limit) const {
  std::shared_lock lock(mu_);
  json out = json::array();
  for (const auto &id : current_) {
    if (limit && out.size() >= *limit) break;
    const AnnotationTask &t = tasks_.at(id);
    if (t.status == TaskStatus::kPending) out.push_back(t.to_json());
  }
  return out;
}

bool AnnotationService::finished() const {
  std::shared_lock lock(mu_);
  return backend_.done();
}

size_t AnnotationService::round() const {
  std::shared_lock lock(mu_);
  return round_;
}

namespace {

void reply(httplib::Response &res, int status, const json &body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
void guarded(httplib::Response &res, F &&f) {
  try {
    reply(res, 200, f());
  } catch (const ServiceError &e) {
    reply(res, e.status(), {{"error", e.what()}});
  } catch (const json::exception &e) {
    reply(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
  } catch (const std::exception &e) {
    reply(res, 500, {{"error", e.what()}});
  }
}

}  // namespace

void mount_annotation_routes(httplib::Server &server, AnnotationService &service) {
  server.Get("/health", [](const httplib::Request &, httplib::Response &res) { reply(res, 200, {{"status", "ok"}}); });
  server.Get("/rounds/current", [&service](const httplib::Request &, httplib::Response &res) {
    guarded(res, [&] { return service.current_round(); });
  });
  server.Get("/tasks", [&service](const httplib::Request &req, httplib::Response &res) {
    guarded(res, [&] {
      std::optional<size_t> limit;
      if (req.has_param("limit")) {
        const std::string v = req.get_param_value("limit");
        if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos || v.size() > 9) {
          throw ServiceError(400, "limit must be a non-negative integer");
        }
        limit = std::stoul(v);
      }
      return service.tasks(limit);
    });
  });
  server.Post("/labels", [&service](const httplib::Request &req, httplib::Response &res) {
    guarded(res, [&] { return service.post_labels(json::parse(req.body)); });
  });
  server.Post("/rounds/advance", [&service](const httplib::Request &, httplib::Response &res) {
    guarded(res, [&] { return service.advance(); });
  });
}

}  // namespace econet
