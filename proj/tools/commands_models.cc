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

// hearst, train-hypernym, al-run, serve, generate, train-classifier,
// classify, qa-gate, train-match, associate, eval.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <iostream>
#include <memory>
#include <set>
#include <thread>

#include "cli.h"
#include "econet/active_learning.h"
#include "econet/generation.h"
#include "econet/hypernym.h"
#include "econet/matching.h"
#include "httplib.h"

namespace econet::cli {
namespace {

using json = nlohmann::json;

void emit(Run &run, const std::string &out, const json &j) {
  if (out.empty()) {
    std::cout << j.dump(1) << std::endl;
  } else {
    write_json(out, j);
    run.output(out);
  }
}

struct ServeOpts {
  std::string host = "127.0.0.1";
  int port = 8377;
  std::string wal;
  std::string static_dir;
};

void add_serve_options(CLI::App *sub, ServeOpts &o) {
  sub->add_option("--host", o.host, "Bind address");
  sub->add_option("--port", o.port, "Port; 0 picks a free one");
  sub->add_option("--wal", o.wal, "JSONL write-ahead log of labels and advances");
  sub->add_option("--static", o.static_dir, "Directory served at / (annotation UI build)");
}

// Blocks until the backend has nothing left to annotate.
void serve_until_done(AnnotationService &svc, const ServeOpts &o) {
  httplib::Server server;
  mount_annotation_routes(server, svc);
  if (!o.static_dir.empty() && !server.set_mount_point("/", o.static_dir)) {
    throw ConfigError("static directory not found: " + o.static_dir);
  }
  const int port = o.port == 0 ? server.bind_to_any_port(o.host) : (server.bind_to_port(o.host, o.port) ? o.port : -1);
  if (port < 0) throw std::runtime_error("cannot bind " + o.host + ":" + std::to_string(o.port));
  std::cout << json{{"listening", "http://" + o.host + ":" + std::to_string(port)}}.dump() << std::endl;
  std::atomic<bool> stop{false};
  std::thread monitor([&] {
    while (!stop) {
      if (svc.finished()) {
        server.stop();
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  });
  if (!svc.finished()) server.listen_after_bind();
  stop = true;
  monitor.join();
}

// ---- hypernyms ----

std::map<std::string, std::set<std::string>> gold_from(const std::vector<LabeledPair> &pairs) {
  std::map<std::string, std::set<std::string>> gold;
  for (const auto &p : pairs) {
    if (p.label == 1) gold[p.hyponym].insert(p.hypernym);
  }
  return gold;
}

std::vector<std::string> hypernym_candidates(Run &run, const std::string &path,
                                             const std::vector<LabeledPair> &pairs) {
  if (!path.empty()) return read_lines(run.input(path));
  std::set<std::string> out;
  for (const auto &p : pairs) out.insert(p.hypernym);
  return {out.begin(), out.end()};
}

struct HypernymOpts {
  std::string embeddings, pairs, test, hypernyms, out;
  size_t negatives = 10, slices = 4;
  ProjectionTrainConfig train;
};

void add_hypernym_train_options(CLI::App *sub, HypernymOpts &o) {
  sub->add_option("--embeddings", o.embeddings, "id<TAB>space separated vector")->required();
  sub->add_option("--pairs", o.pairs, "hyponym<TAB>hypernym<TAB>label")->required();
  sub->add_option("--hypernyms", o.hypernyms, "Candidate hypernym ids, one per line");
  sub->add_option("--negatives", o.negatives, "Sampled negatives per positive; 0 disables sampling");
  sub->add_option("--slices", o.slices);
  sub->add_option("--epochs", o.train.epochs);
  sub->add_option("--batch", o.train.batch);
  sub->add_option("--lr", o.train.lr);
}

std::vector<LabeledPair> with_negatives(const std::vector<LabeledPair> &pairs, size_t ratio,
                                        const std::vector<std::string> &vocabulary, uint64_t seed) {
  std::vector<LabeledPair> out = pairs;
  if (ratio == 0) return out;
  std::vector<std::pair<std::string, std::string>> pos;
  for (const auto &p : pairs) {
    if (p.label == 1) pos.push_back({p.hyponym, p.hypernym});
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto &p : pairs) seen.insert({p.hyponym, p.hypernym});
  for (const auto &n : negative_sample(pos, ratio, vocabulary, seed)) {
    if (seen.insert({n.hyponym, n.hypernym}).second) out.push_back(n);
  }
  return out;
}

struct ALOpts {
  HypernymOpts h;
  ALConfig al;
  std::string oracle = "simulated";
  std::string log;
  ServeOpts serve;
};

void add_al_options(CLI::App *sub, ALOpts &o) {
  add_hypernym_train_options(sub, o.h);
  sub->add_option("--test", o.h.test, "Gold test pairs for the round metric")->required();
  sub->add_option("--out", o.h.out, "Best-round model")->required();
  sub->add_option("--strategy", o.al.strategy)->transform(CLI::IsMember({"random", "US", "CS", "UCS"}, CLI::ignore_case));
  sub->add_option("--k", o.al.k, "Batch size");
  sub->add_option("--alpha", o.al.alpha, "Confident share of a UCS batch");
  sub->add_option("--patience", o.al.patience, "Rounds without strict improvement before stopping");
  sub->add_option("--max-rounds", o.al.max_rounds, "0 = no cap");
  sub->add_option("--ucs-variant", o.al.ucs_variant)->check(CLI::IsMember({"prose", "literal"}));
  sub->add_option("--log", o.log, "Round log JSONL");
  add_serve_options(sub, o.serve);
}

void al_run(Run &run, ALOpts o, bool served) {
  o.al.seed = run.seed();
  const ConceptEmbeddings emb = ConceptEmbeddings::load(run.input(o.h.embeddings));
  const auto labeled = read_pairs(run.input(o.h.pairs));
  const auto test = read_pairs(run.input(o.h.test));
  const auto candidates = hypernym_candidates(run, o.h.hypernyms, labeled);
  const auto pool_pairs = with_negatives(labeled, o.h.negatives, candidates, run.seed());
  std::map<std::string, int> truth;
  for (const auto &p : pool_pairs) truth[HypernymTask::sample_id(p.hyponym, p.hypernym)] = p.label;
  std::vector<std::string> pool;
  for (const auto &[id, l] : truth) pool.push_back(id);
  o.h.train.seed = run.seed();
  HypernymTask task(emb, candidates, gold_from(test), o.h.slices, o.h.train, run.seed());
  if (!o.log.empty()) write_text(o.log, "");
  json summary;
  if (!served) {
    SimulatedOracle oracle(truth);
    const ALResult r = run_loop(task, oracle, pool, o.al, o.log);
    summary = {{"rounds", r.history.size()}, {"labeled", r.labeled_ids.size()}, {"best_round", r.best_round},
               {"best_metric", r.best_metric}, {"stop_round", r.stop_round}};
  } else {
    auto describe = [](const std::string &id) {
      auto [p, h] = HypernymTask::split_sample_id(id);
      return json{{"hyponym", p}, {"hypernym", h}};
    };
    LearnerBackend backend(task, pool, o.al, o.log, describe);
    AnnotationService svc(backend, o.serve.wal);
    serve_until_done(svc, o.serve);
    const auto &l = backend.learner();
    summary = {{"rounds", l.history().size()}, {"labeled", l.labeled_ids().size()}, {"best_round", l.best_round()},
               {"best_metric", l.best_metric()}};
  }
  task.model().save(o.h.out);
  run.output(o.h.out);
  if (!o.log.empty()) run.output(o.log);
  std::cout << summary.dump() << std::endl;
}

// ---- concept generation ----

struct ClassifierResources {
  std::string corpus, store, patterns, pos, glosses;
  size_t knowledge_dim = 16;
};

void add_resource_options(CLI::App *sub, ClassifierResources &r) {
  sub->add_option("--corpus", r.corpus, "Token file for the language model and popularity")->required();
  sub->add_option("--store", r.store, "Store for the pattern indicator")->required();
  sub->add_option("--patterns", r.patterns, "Pattern JSON")->required();
  sub->add_option("--pos", r.pos, "POS lexicon TSV");
  sub->add_option("--glosses", r.glosses, "word<TAB>gloss words; knowledge vectors are gloss means");
  sub->add_option("--knowledge-dim", r.knowledge_dim);
}

struct LoadedResources {
  std::vector<std::vector<std::string>> corpus;
  PosLexicon pos;
  std::shared_ptr<const VectorProvider> knowledge;
  std::unique_ptr<WideFeatureExtractor> wide;
};

LoadedResources load_resources(Run &run, const ClassifierResources &r) {
  LoadedResources out;
  out.corpus = read_token_file(run.input(r.corpus));
  auto store = std::make_shared<ConceptStore>(load_store(run, r.store));
  auto patterns = load_generation_patterns(run.input(r.patterns));
  out.pos = r.pos.empty() ? PosLexicon() : PosLexicon::load(run.input(r.pos));
  if (r.glosses.empty()) {
    out.knowledge = std::make_shared<HashVectorProvider>(r.knowledge_dim, "knowledge");
  } else {
    auto base = std::make_shared<HashVectorProvider>(r.knowledge_dim, "words");
    out.knowledge = std::make_shared<GlossKnowledgeProvider>(GlossKnowledgeProvider::load(run.input(r.glosses), base));
  }
  out.wide = std::make_unique<WideFeatureExtractor>(std::make_shared<BigramLm>(out.corpus),
                                                    std::make_shared<WordPopularity>(out.corpus), patterns, store);
  return out;
}

struct ClassifierBundle {
  ConceptFeaturizer featurizer;
  ConceptClassifier model;
};

ClassifierBundle load_classifier(Run &run, const std::string &path, const LoadedResources &res) {
  const json j = read_json(run.input(path));
  if (j.value("format", "") != "econet.classifier_bundle") throw ParseError(0, path + ": not a classifier bundle");
  ConceptFeaturizer f(Vocabulary::from_json(j.at("words")), Vocabulary::from_json(j.at("chars")), res.pos,
                      res.knowledge, *res.wide);
  ConceptClassifier m = ConceptClassifier::from_json(j.at("classifier"));
  if (f.knowledge_dim() != j.at("knowledge_dim").get<size_t>()) {
    throw ConfigError("knowledge dim differs from the trained model");
  }
  return {std::move(f), std::move(m)};
}

std::vector<CandidateConcept> read_candidates(Run &run, const std::string &path) {
  std::vector<CandidateConcept> out;
  for (const auto &j : read_jsonl(run.input(path))) out.push_back(CandidateConcept::from_json(j));
  return out;
}

void write_candidates(Run &run, const std::string &path, const std::vector<CandidateConcept> &rows) {
  std::vector<json> out;
  for (const auto &c : rows) out.push_back(c.to_json());
  write_jsonl(path, out);
  run.output(path);
}

// ---- matching ----

struct MatchResources {
  std::string store, glosses, pos;
  size_t dim = 16;
};

struct MatchBundle {
  std::unique_ptr<MatchFeaturizer> featurizer;
  std::unique_ptr<MatchModel> model;
  json header;
};

std::unique_ptr<MatchFeaturizer> make_match_featurizer(size_t dim, const std::map<std::string, std::vector<std::string>> &glosses,
                                                       const PosLexicon &pos, const std::vector<std::string> &classes) {
  auto base = std::make_shared<HashVectorProvider>(dim, "words");
  auto know = std::make_shared<GlossKnowledgeProvider>(glosses, base);
  return std::make_unique<MatchFeaturizer>(base, know, pos, classes);
}

std::map<std::string, std::vector<std::string>> read_glosses(Run &run, const std::string &path) {
  std::map<std::string, std::vector<std::string>> out;
  if (path.empty()) return out;
  for (const auto &line : read_lines(run.input(path))) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    out[line.substr(0, tab)] = split_tokens(line.substr(tab + 1));
  }
  return out;
}

MatchBundle load_match(Run &run, const std::string &path) {
  const json j = read_json(run.input(path));
  if (j.value("format", "") != "econet.match_bundle") throw ParseError(0, path + ": not a match bundle");
  MatchBundle b;
  b.featurizer = make_match_featurizer(j.at("word_dim"), j.at("glosses"), PosLexicon(j.at("pos")), j.at("classes"));
  b.model = std::make_unique<MatchModel>(MatchModel::from_json(j.at("model")));
  b.header = j;
  return b;
}

std::vector<std::string> ids_or_all(Run &run, const std::string &path, std::vector<std::string> all) {
  if (path.empty()) return all;
  return read_lines(run.input(path));
}

}  // namespace

void add_model_commands(CLI::App &app, Globals &g) {
  {
    struct Opts {
      std::string corpus, store, patterns, out;
      bool head_rule = false;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("hearst", "Extract isA pairs with lexical patterns (and the head rule)");
    sub->add_option("--corpus", o->corpus, "Token file")->required();
    sub->add_option("--store", o->store, "Primitive concepts to match")->required();
    sub->add_option("--patterns", o->patterns, "One template per line, X and Y as slots");
    sub->add_flag("--head-rule", o->head_rule, "Also emit Category surfaces isA their head word");
    sub->add_option("--out", o->out, "Pairs TSV of primitive ids")->required();
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      const ConceptStore store = load_store(run, o->store);
      const auto patterns = o->patterns.empty() ? default_hearst_patterns() : load_hearst_patterns(run.input(o->patterns));
      std::set<std::string> surfaces;
      for (const auto &p : store.primitives()) surfaces.insert(p.surface);
      auto id_of = [&](const std::string &surface) { return store.lookup_surface(surface).front().id; };
      std::set<std::pair<std::string, std::string>> seen;
      std::vector<LabeledPair> out;
      auto push = [&](const std::string &a, const std::string &b) {
        const std::string x = id_of(a), y = id_of(b);
        if (x != y && seen.insert({x, y}).second) out.push_back({x, y, 1});
      };
      size_t support = 0;
      for (const auto &p : hearst_extract(read_token_file(run.input(o->corpus)), patterns, surfaces)) {
        push(p.hyponym, p.hypernym);
        support += p.support;
      }
      if (o->head_rule) {
        std::set<std::string> category;
        for (const auto &p : store.primitives()) {
          for (const auto &d : store.domains_of(p.id)) {
            if (d == "Category") category.insert(p.surface);
          }
        }
        for (const auto &[a, b] : head_rule_extract(category)) push(a, b);
      }
      write_pairs(o->out, out);
      run.output(o->out);
      std::cout << json{{"pairs", out.size()}, {"pattern_support", support}}.dump() << std::endl;
      run.finish();
    });
  }
  {
    auto o = std::make_shared<HypernymOpts>();
    auto *sub = app.add_subcommand("train-hypernym", "Train the K-slice projection model");
    add_hypernym_train_options(sub, *o);
    sub->add_option("--out", o->out)->required();
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      const ConceptEmbeddings emb = ConceptEmbeddings::load(run.input(o->embeddings));
      const auto pairs = read_pairs(run.input(o->pairs));
      const auto data = with_negatives(pairs, o->negatives, hypernym_candidates(run, o->hypernyms, pairs), run.seed());
      ProjectionModel model(emb, o->slices, run.seed());
      ProjectionTrainConfig tc = o->train;
      tc.seed = run.seed();
      const auto losses = model.train(data, tc);
      model.save(o->out);
      run.output(o->out);
      std::cout << json{{"examples", data.size()}, {"final_loss", losses.empty() ? 0.0 : losses.back()}}.dump()
                << std::endl;
      run.finish();
    });
  }
  {
    auto o = std::make_shared<ALOpts>();
    auto *sub = app.add_subcommand("al-run", "Active learning for hypernym pairs with a simulated or served oracle");
    add_al_options(sub, *o);
    sub->add_option("--oracle", o->oracle)->check(CLI::IsMember({"simulated", "served"}));
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      al_run(run, *o, o->oracle == "served");
      run.finish();
    });
  }
  {
    struct Opts {
      std::string task = "hypernym";
      ALOpts al;
      std::string candidates, store, out;
      double rate = 0.2, threshold = 0.9, min_score = 0.5;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("serve", "HTTP annotation service for active learning or the QA gate");
    sub->add_option("--task", o->task)->check(CLI::IsMember({"hypernym", "qa"}));
    add_serve_options(sub, o->al.serve);
    sub->add_option("--embeddings", o->al.h.embeddings);
    sub->add_option("--pairs", o->al.h.pairs);
    sub->add_option("--test", o->al.h.test);
    sub->add_option("--hypernyms", o->al.h.hypernyms);
    sub->add_option("--negatives", o->al.h.negatives);
    sub->add_option("--slices", o->al.h.slices);
    sub->add_option("--epochs", o->al.h.train.epochs);
    sub->add_option("--strategy", o->al.al.strategy)
        ->transform(CLI::IsMember({"random", "US", "CS", "UCS"}, CLI::ignore_case));
    sub->add_option("--k", o->al.al.k);
    sub->add_option("--alpha", o->al.al.alpha);
    sub->add_option("--patience", o->al.al.patience);
    sub->add_option("--max-rounds", o->al.al.max_rounds);
    sub->add_option("--log", o->al.log);
    sub->add_option("--candidates", o->candidates, "Scored candidates JSONL (qa)");
    sub->add_option("--store", o->store, "Store receiving validated concepts (qa)");
    sub->add_option("--rate", o->rate);
    sub->add_option("--threshold", o->threshold);
    sub->add_option("--min-score", o->min_score);
    sub->add_option("--out", o->out, "Model (hypernym) or store (qa) written at the end");
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      if (o->out.empty()) throw ConfigError("--out is required");
      if (o->task == "hypernym") {
        for (const auto *f : {&o->al.h.embeddings, &o->al.h.pairs, &o->al.h.test}) {
          if (f->empty()) throw ConfigError("hypernym serving needs --embeddings, --pairs and --test");
        }
        ALOpts al = o->al;
        al.h.out = o->out;
        al_run(run, al, true);
      } else {
        if (o->candidates.empty() || o->store.empty()) throw ConfigError("qa serving needs --candidates and --store");
        ConceptStore store = load_store(run, o->store);
        std::vector<CandidateConcept> batch;
        for (const auto &c : read_candidates(run, o->candidates)) {
          if (!c.score || *c.score >= o->min_score) batch.push_back(c);
        }
        QaBackend backend(batch, o->rate, o->threshold, run.seed(), &store);
        AnnotationService svc(backend, o->al.serve.wal);
        serve_until_done(svc, o->al.serve);
        save_store(run, store, o->out);
        std::cout << backend.history().dump() << std::endl;
      }
      run.finish();
    });
  }
  {
    struct Opts {
      std::string store, patterns, corpus, out;
      size_t limit = 0;
      bool primitives = false;
      MiningConfig mining;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("generate", "Candidate e-commerce concepts from patterns and corpus n-grams");
    sub->add_option("--store", o->store)->required();
    sub->add_option("--patterns", o->patterns, "Pattern JSON");
    sub->add_option("--limit", o->limit, "Per-pattern cap; 0 = none");
    sub->add_option("--corpus", o->corpus, "Token file to mine n-gram candidates from");
    sub->add_option("--min-count", o->mining.min_count);
    sub->add_option("--min-npmi", o->mining.min_npmi);
    sub->add_option("--max-tokens", o->mining.max_tokens);
    sub->add_flag("--primitives", o->primitives, "Add every primitive surface as a candidate");
    sub->add_option("--out", o->out, "Candidates JSONL")->required();
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      const ConceptStore store = load_store(run, o->store);
      std::vector<CandidateConcept> out;
      std::set<std::string> phrases;
      auto add = [&](std::vector<CandidateConcept> cs) {
        for (auto &c : cs) {
          if (phrases.insert(c.phrase).second) out.push_back(std::move(c));
        }
      };
      if (!o->patterns.empty()) {
        add(generate_from_patterns(load_generation_patterns(run.input(o->patterns)), store, o->limit));
      }
      if (!o->corpus.empty()) add(mine_candidates(read_token_file(run.input(o->corpus)), o->mining));
      if (o->primitives) add(primitive_candidates(store));
      write_candidates(run, o->out, out);
      std::cout << json{{"candidates", out.size()}}.dump() << std::endl;
      run.finish();
    });
  }
  {
    struct Opts {
      std::string train, out;
      ClassifierResources res;
      ClassifierTrainConfig tc;
      bool no_wide = false, no_knowledge = false;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("train-classifier", "Train the wide and deep concept classifier");
    sub->add_option("--train", o->train, "phrase<TAB>0|1")->required();
    add_resource_options(sub, o->res);
    sub->add_option("--epochs", o->tc.epochs);
    sub->add_option("--batch", o->tc.batch);
    sub->add_option("--lr", o->tc.lr);
    sub->add_flag("--no-wide", o->no_wide);
    sub->add_flag("--no-knowledge", o->no_knowledge);
    sub->add_option("--out", o->out)->required();
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      const auto train = read_labeled_candidates(run.input(o->train));
      LoadedResources res = load_resources(run, o->res);
      auto texts = res.corpus;
      for (const auto &c : train) texts.push_back(c.tokens);
      ConceptFeaturizer f = ConceptFeaturizer::build(texts, res.pos, res.knowledge, *res.wide);
      ClassifierConfig cc;
      cc.use_wide = !o->no_wide;
      cc.use_knowledge = !o->no_knowledge;
      ConceptClassifier m(cc, f.words().size(), f.chars().size(), f.pos().tag_count(), f.knowledge_dim(), run.seed());
      std::vector<ClassifierInput> xs;
      std::vector<int> ys;
      for (const auto &c : train) {
        xs.push_back(f.featurize(c.tokens));
        ys.push_back(c.label);
      }
      ClassifierTrainConfig tc = o->tc;
      tc.seed = run.seed();
      const auto losses = m.train(xs, ys, tc);
      write_json(o->out, {{"format", "econet.classifier_bundle"},
                          {"version", 1},
                          {"words", f.words().to_json()},
                          {"chars", f.chars().to_json()},
                          {"knowledge_dim", f.knowledge_dim()},
                          {"classifier", m.to_json()}});
      run.output(o->out);
      std::cout << json{{"examples", xs.size()}, {"epoch_loss", losses}}.dump() << std::endl;
      run.finish();
    });
  }
  {
    struct Opts {
      std::string model, in, out;
      ClassifierResources res;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("classify", "Score candidate concepts");
    sub->add_option("--model", o->model)->required();
    sub->add_option("--in", o->in, "Candidates JSONL")->required();
    sub->add_option("--out", o->out, "Candidates JSONL with scores")->required();
    add_resource_options(sub, o->res);
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      LoadedResources res = load_resources(run, o->res);
      ClassifierBundle b = load_classifier(run, o->model, res);
      auto cands = read_candidates(run, o->in);
      for (auto &c : cands) c.score = b.model.score(b.featurizer.featurize(c.tokens));
      write_candidates(run, o->out, cands);
      run.finish();
    });
  }
  {
    struct Opts {
      std::string in, store, oracle, out;
      double rate = 0.2, threshold = 0.9, min_score = 0.5;
      ServeOpts serve;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("qa-gate", "Sample a candidate batch for review; write it when accurate enough");
    sub->add_option("--in", o->in, "Scored candidates JSONL")->required();
    sub->add_option("--store", o->store)->required();
    sub->add_option("--oracle", o->oracle, "phrase<TAB>0|1 answers, or 'served'")->required();
    sub->add_option("--rate", o->rate, "Sampling rate in (0, 1]");
    sub->add_option("--threshold", o->threshold, "Minimum sampled accuracy");
    sub->add_option("--min-score", o->min_score, "Candidates scoring below are left out of the batch");
    sub->add_option("--out", o->out, "Store after the gate")->required();
    add_serve_options(sub, o->serve);
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      ConceptStore store = load_store(run, o->store);
      std::vector<CandidateConcept> batch;
      for (const auto &c : read_candidates(run, o->in)) {
        if (!c.score || *c.score >= o->min_score) batch.push_back(c);
      }
      json result;
      if (o->oracle == "served") {
        QaBackend backend(batch, o->rate, o->threshold, run.seed(), &store);
        AnnotationService svc(backend, o->serve.wal);
        serve_until_done(svc, o->serve);
        const QaResult &r = *backend.result();
        result = {{"accepted", r.accepted}, {"accuracy", r.accuracy}, {"sampled", r.sampled.size()},
                  {"written", r.written.size()}};
      } else {
        SimulatedOracle oracle(read_phrase_labels(run.input(o->oracle)));
        const QaResult r = qa_gate(batch, o->rate, o->threshold, oracle, run.seed(), &store);
        result = {{"accepted", r.accepted}, {"accuracy", r.accuracy}, {"sampled", r.sampled.size()},
                  {"written", r.written.size()}};
      }
      result["batch"] = batch.size();
      save_store(run, store, o->out);
      std::cout << result.dump() << std::endl;
      run.finish();
    });
  }
  {
    struct Opts {
      std::string store, pairs, glosses, pos, out;
      size_t dim = 16;
      bool no_knowledge = false;
      MatchTrainConfig tc;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("train-match", "Train the concept-item matching model");
    sub->add_option("--store", o->store)->required();
    sub->add_option("--pairs", o->pairs, "concept_id<TAB>item_id<TAB>0|1")->required();
    sub->add_option("--glosses", o->glosses, "word<TAB>gloss words");
    sub->add_option("--pos", o->pos, "POS lexicon TSV");
    sub->add_option("--dim", o->dim, "Word vector size");
    sub->add_flag("--no-knowledge", o->no_knowledge);
    sub->add_option("--epochs", o->tc.epochs);
    sub->add_option("--batch", o->tc.batch);
    sub->add_option("--lr", o->tc.lr);
    sub->add_option("--out", o->out)->required();
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      const ConceptStore store = load_store(run, o->store);
      const auto glosses = read_glosses(run, o->glosses);
      const PosLexicon pos = o->pos.empty() ? PosLexicon() : PosLexicon::load(run.input(o->pos));
      std::vector<std::string> classes;
      for (const auto &c : store.classes()) classes.push_back(c.id);
      auto f = make_match_featurizer(o->dim, glosses, pos, classes);
      const auto data = build_match_examples(read_pair_labels(run.input(o->pairs)), store, *f);
      MatchConfig mc;
      mc.use_knowledge = !o->no_knowledge;
      MatchModel m(mc, f->word_dim(), f->pos_tags(), f->knowledge_dim(), f->class_count(), run.seed());
      MatchTrainConfig tc = o->tc;
      tc.seed = run.seed();
      const auto losses = m.train(data, tc);
      write_json(o->out, {{"format", "econet.match_bundle"},
                          {"version", 1},
                          {"word_dim", o->dim},
                          {"glosses", glosses},
                          {"pos", pos.entries()},
                          {"classes", classes},
                          {"model", m.to_json()}});
      run.output(o->out);
      std::cout << json{{"examples", data.size()}, {"epoch_loss", losses}}.dump() << std::endl;
      run.finish();
    });
  }
  {
    struct Opts {
      std::string store, model, concepts, items, out, audit;
      double threshold = 0.5;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("associate", "Write item_ecommerce edges for pairs scoring above a threshold");
    sub->add_option("--store", o->store)->required();
    sub->add_option("--model", o->model)->required();
    sub->add_option("--concepts", o->concepts, "Concept ids, one per line; default all");
    sub->add_option("--items", o->items, "Item ids, one per line; default all");
    sub->add_option("--threshold", o->threshold);
    sub->add_option("--audit", o->audit, "Audit JSONL");
    sub->add_option("--out", o->out, "Store with the new edges")->required();
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      ConceptStore store = load_store(run, o->store);
      MatchBundle b = load_match(run, o->model);
      std::vector<std::string> all_c, all_i;
      for (const auto &c : store.ecommerce_concepts()) all_c.push_back(c.id);
      for (const auto &i : store.items()) all_i.push_back(i.id);
      const auto concepts = ids_or_all(run, o->concepts, all_c);
      const auto items = ids_or_all(run, o->items, all_i);
      if (!o->audit.empty()) write_text(o->audit, "");
      const AssociationResult r = associate(store, *b.model, *b.featurizer, concepts, items, o->threshold, o->audit);
      save_store(run, store, o->out);
      if (!o->audit.empty()) run.output(o->audit);
      std::cout << r.to_json().dump() << std::endl;
      run.finish();
    });
  }
  {
    struct Opts {
      std::string task, model, out;
      std::string tokens, tags;
      std::string test, hypernyms, embeddings;
      ClassifierResources res;
      std::string store, pairs;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("eval", "Metrics for a trained model on held-out data");
    sub->add_option("--task", o->task)->required()->check(CLI::IsMember({"tagger", "hypernym", "classifier", "match"}));
    sub->add_option("--model", o->model, "Checkpoint or bundle")->required();
    sub->add_option("--out", o->out, "JSON output (default: stdout)");
    sub->add_option("--tokens", o->tokens, "tagger");
    sub->add_option("--tags", o->tags, "tagger");
    sub->add_option("--test", o->test, "hypernym pairs or classifier TSV");
    sub->add_option("--hypernyms", o->hypernyms, "hypernym candidates");
    sub->add_option("--corpus", o->res.corpus, "classifier");
    sub->add_option("--patterns", o->res.patterns, "classifier");
    sub->add_option("--pos", o->res.pos, "classifier");
    sub->add_option("--glosses", o->res.glosses, "classifier");
    sub->add_option("--knowledge-dim", o->res.knowledge_dim, "classifier");
    sub->add_option("--store", o->store, "classifier and match");
    sub->add_option("--pairs", o->pairs, "match pairs");
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      auto need = [](const std::string &v, const char *flag) {
        if (v.empty()) throw ConfigError(std::string("eval needs ") + flag);
      };
      json metrics;
      if (o->task == "tagger") {
        need(o->tokens, "--tokens");
        need(o->tags, "--tags");
        const CrfTagger tagger = CrfTagger::load(run.input(o->model));
        const SpanMetrics m = evaluate(tagger, read_labeled_sentences(run, o->tokens, o->tags));
        metrics = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"gold", m.gold}};
      } else if (o->task == "hypernym") {
        need(o->test, "--test");
        const ProjectionModel model = ProjectionModel::load(run.input(o->model));
        const auto test = read_pairs(run.input(o->test));
        const auto candidates = hypernym_candidates(run, o->hypernyms, test);
        const auto gold = gold_from(test);
        std::vector<RankedHypernyms> rankings;
        for (const auto &[q, hs] : gold) rankings.push_back(rank(q, candidates, model));
        metrics = evaluate_rankings(rankings, gold).to_json();
      } else if (o->task == "classifier") {
        need(o->test, "--test");
        need(o->store, "--store");
        need(o->res.corpus, "--corpus");
        need(o->res.patterns, "--patterns");
        o->res.store = o->store;
        LoadedResources res = load_resources(run, o->res);
        ClassifierBundle b = load_classifier(run, o->model, res);
        std::vector<double> scores;
        std::vector<int> labels;
        for (const auto &c : read_labeled_candidates(run.input(o->test))) {
          scores.push_back(b.model.score(b.featurizer.featurize(c.tokens)));
          labels.push_back(c.label);
        }
        metrics = classification_metrics(scores, labels).to_json();
      } else {
        need(o->store, "--store");
        need(o->pairs, "--pairs");
        const ConceptStore store = load_store(run, o->store);
        MatchBundle b = load_match(run, o->model);
        std::vector<double> scores;
        std::vector<int> labels;
        std::vector<std::string> ids;
        for (const auto &ex : build_match_examples(read_pair_labels(run.input(o->pairs)), store, *b.featurizer)) {
          scores.push_back(b.model->score(ex.concept_side, ex.item));
          labels.push_back(ex.label);
          ids.push_back(ex.concept_id);
        }
        metrics = evaluate_matching(scores, labels, ids).to_json();
      }
      emit(run, o->out, metrics);
      run.finish();
    });
  }
}

}  // namespace econet::cli
