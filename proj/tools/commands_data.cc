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

// synth, ingest, stats, export, distant-sup, train-tagger, tag, mine.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "cli.h"
#include "econet/synthetic.h"
#include "econet/tagger.h"

namespace econet::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_embeddings(const std::string &path, const ConceptEmbeddings &e) {
  std::ostringstream ss;
  for (const auto &id : e.ids()) {
    ss << id << '\t';
    const auto row = e.row(id);
    for (size_t i = 0; i < row.size(); ++i) ss << (i ? " " : "") << fmt_double(row[i]);
    ss << '\n';
  }
  write_text(path, ss.str());
}

void write_pos(const std::string &path, const PosLexicon &pos) {
  std::ostringstream ss;
  for (const auto &[w, t] : pos.entries()) ss << w << '\t' << t << '\n';
  write_text(path, ss.str());
}

void write_candidates_tsv(const std::string &path, const std::vector<LabeledCandidate> &rows) {
  std::ostringstream ss;
  for (const auto &c : rows) ss << join_tokens(c.tokens, 0, c.tokens.size()) << '\t' << c.label << '\n';
  write_text(path, ss.str());
}

void write_match_pairs(const std::string &path, const std::vector<PairLabel> &pairs) {
  write_pair_labels(path, pairs);
}

struct SynthOpts {
  std::string kind;
  std::string out_dir;
  size_t size = 0;
};

void synth(Run &run, const SynthOpts &o) {
  fs::create_directories(o.out_dir);
  auto at = [&](const std::string &name) { return (fs::path(o.out_dir) / name).string(); };
  if (o.kind == "tagger") {
    synthetic::TaggerBenchmarkConfig c;
    c.seed = run.seed();
    if (o.size) c.sentences = o.size;
    auto b = synthetic::make_tagger_benchmark(c);
    save_store(run, b.store, at("store.jsonl"));
    write_token_file(at("corpus.tsv"), b.corpus);
    run.output(at("corpus.tsv"));
    std::vector<std::vector<std::string>> toks, tags;
    for (const auto &s : b.test) {
      toks.push_back(s.tokens);
      tags.push_back(s.tags);
    }
    write_token_file(at("test.tokens.tsv"), toks);
    write_token_file(at("test.tags.tsv"), tags);
    run.output(at("test.tokens.tsv"));
    run.output(at("test.tags.tsv"));
  } else if (o.kind == "hypernym") {
    synthetic::HypernymBenchmarkConfig c;
    c.seed = run.seed();
    if (o.size) c.train_hyponyms = o.size;
    auto b = synthetic::make_hypernym_benchmark(c);
    write_embeddings(at("embeddings.tsv"), b.embeddings);
    std::vector<LabeledPair> train, test;
    for (const auto &[p, h] : b.train) train.push_back({p, h, 1});
    for (const auto &[p, hs] : b.test_gold) {
      for (const auto &h : hs) test.push_back({p, h, 1});
    }
    write_pairs(at("train.pairs.tsv"), train);
    write_pairs(at("test.pairs.tsv"), test);
    std::ostringstream hs;
    for (const auto &h : b.hypernyms) hs << h << '\n';
    write_text(at("hypernyms.txt"), hs.str());
    for (const char *f : {"embeddings.tsv", "train.pairs.tsv", "test.pairs.tsv", "hypernyms.txt"}) run.output(at(f));
  } else if (o.kind == "classifier") {
    synthetic::ClassifierBenchmarkConfig c;
    c.seed = run.seed();
    if (o.size) c.train = o.size;
    auto b = synthetic::make_classifier_benchmark(c);
    save_store(run, b.store, at("store.jsonl"));
    json patterns = json::array();
    for (const auto &p : b.patterns) patterns.push_back(p.to_json());
    write_json(at("patterns.json"), patterns);
    write_token_file(at("corpus.tsv"), b.corpus);
    write_pos(at("pos.tsv"), b.pos);
    write_candidates_tsv(at("train.tsv"), b.train);
    write_candidates_tsv(at("test.tsv"), b.test);
    for (const char *f : {"patterns.json", "corpus.tsv", "pos.tsv", "train.tsv", "test.tsv"}) run.output(at(f));
  } else if (o.kind == "match") {
    synthetic::MatchBenchmarkConfig c;
    c.seed = run.seed();
    if (o.size) c.events = o.size;
    auto b = synthetic::make_match_benchmark(c);
    save_store(run, b.store, at("store.jsonl"));
    std::ostringstream gs;
    for (const auto &[k, words] : b.glosses) gs << k << '\t' << join_tokens(words, 0, words.size()) << '\n';
    write_text(at("glosses.tsv"), gs.str());
    write_pos(at("pos.tsv"), b.pos);
    write_match_pairs(at("train.pairs.tsv"), b.train);
    write_match_pairs(at("test.pairs.tsv"), b.test);
    std::vector<PairLabel> drift;
    for (const auto &p : b.test) {
      if (p.label == 0 || b.drift.count({p.concept_id, p.item_id})) drift.push_back(p);
    }
    write_match_pairs(at("drift.pairs.tsv"), drift);
    for (const char *f : {"glosses.tsv", "pos.tsv", "train.pairs.tsv", "test.pairs.tsv", "drift.pairs.tsv"}) {
      run.output(at(f));
    }
  } else {
    throw ConfigError("unknown synth kind: " + o.kind);
  }
}

std::vector<std::string> infer_domains(const std::vector<std::vector<std::string>> &tags) {
  std::set<std::string> out;
  for (const auto &row : tags) {
    for (const auto &cell : row) {
      std::stringstream ss(cell);
      for (std::string t; std::getline(ss, t, '|');) {
        if (t.size() > 2 && (t[0] == 'B' || t[0] == 'I') && t[1] == '-') out.insert(t.substr(2));
      }
    }
  }
  return {out.begin(), out.end()};
}

std::vector<LabeledSentence> read_labeled(Run &run, const std::string &tokens_path, const std::string &tags_path) {
  auto toks = read_token_file(run.input(tokens_path));
  auto tags = read_token_file(run.input(tags_path));
  if (toks.size() != tags.size()) throw ParseError(0, "token and tag files differ in line count");
  std::vector<LabeledSentence> out;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].size() != tags[i].size()) throw ParseError(i + 1, "token and tag counts differ");
    out.push_back({toks[i], tags[i]});
  }
  return out;
}

}  // namespace

std::vector<LabeledSentence> read_labeled_sentences(Run &run, const std::string &tokens, const std::string &tags) {
  return read_labeled(run, tokens, tags);
}

void add_data_commands(CLI::App &app, Globals &g) {
  {
    auto o = std::make_shared<SynthOpts>();
    auto *sub = app.add_subcommand("synth", "Write a synthetic benchmark (tagger, hypernym, classifier, match)");
    sub->add_option("--kind", o->kind)->required()->check(CLI::IsMember({"tagger", "hypernym", "classifier", "match"}));
    sub->add_option("--out-dir", o->out_dir)->required();
    sub->add_option("--size", o->size, "Main size knob; 0 keeps the default");
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      synth(run, *o);
      run.finish();
    });
  }
  {
    struct Opts {
      std::string store, schema, out;
      std::vector<std::string> in;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("ingest", "Merge JSONL node/edge files into a store and audit it");
    sub->add_option("--store", o->store, "Store file; created when missing")->required();
    sub->add_option("--in", o->in, "JSONL files in store export format")->required();
    sub->add_option("--schema", o->schema, "Schema relation JSON");
    sub->add_option("--out", o->out, "Output store (default: --store)");
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      ConceptStore store;
      if (fs::exists(o->store)) store = load_store(run, o->store);
      if (!o->schema.empty()) {
        auto schema = store.schema();
        for (const auto &s : load_schema(run.input(o->schema))) {
          if (std::find(schema.begin(), schema.end(), s) == schema.end()) schema.push_back(s);
        }
        store.set_schema(schema);
      }
      for (const auto &path : o->in) store.merge(ConceptStore::import_jsonl(run.input(path)));
      const auto problems = store.audit();
      if (!problems.empty()) throw InvariantError("audit failed: " + problems.front());
      save_store(run, store, o->out.empty() ? o->store : o->out);
      std::cout << store.stats().to_json().dump() << std::endl;
      run.finish();
    });
  }
  {
    struct Opts {
      std::string store, queries, out;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("stats", "Per-layer, per-domain and per-relation counts");
    sub->add_option("--store", o->store)->required();
    sub->add_option("--queries", o->queries, "Token file; adds query coverage");
    sub->add_option("--out", o->out, "JSON output (default: stdout)");
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      ConceptStore store = load_store(run, o->store);
      json j = store.stats().to_json();
      if (!o->queries.empty()) j["coverage"] = store.coverage(read_token_file(run.input(o->queries)));
      j["audit_problems"] = store.audit().size();
      if (o->out.empty()) {
        std::cout << j.dump(1) << std::endl;
      } else {
        write_json(o->out, j);
        run.output(o->out);
      }
      run.finish();
    });
  }
  {
    struct Opts {
      std::string store, out;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("export", "Re-export a store in canonical JSONL order");
    sub->add_option("--store", o->store)->required();
    sub->add_option("--out", o->out)->required();
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      ConceptStore store = load_store(run, o->store);
      const auto problems = store.audit();
      if (!problems.empty()) throw InvariantError("audit failed: " + problems.front());
      save_store(run, store, o->out);
      run.finish();
    });
  }
  {
    struct Opts {
      std::string store, corpus, out_tokens, out_tags, domains;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("distant-sup", "Label a corpus by unambiguous max-matching against the store");
    sub->add_option("--store", o->store)->required();
    sub->add_option("--corpus", o->corpus, "Token file")->required();
    sub->add_option("--out-tokens", o->out_tokens)->required();
    sub->add_option("--out-tags", o->out_tags)->required();
    sub->add_option("--domains", o->domains, "Comma list of domains to label; default all");
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      ConceptStore store = load_store(run, o->store);
      DistantSupervisionConfig cfg;
      for (const auto &d : split_list(o->domains)) cfg.domains.insert(d);
      const auto corpus = read_token_file(run.input(o->corpus));
      const auto labeled = distant_supervision(corpus, store, cfg);
      std::vector<std::vector<std::string>> toks, tags;
      for (const auto &s : labeled) {
        toks.push_back(s.tokens);
        tags.push_back(s.tags);
      }
      write_token_file(o->out_tokens, toks);
      write_token_file(o->out_tags, tags);
      run.output(o->out_tokens);
      run.output(o->out_tags);
      std::cout << json{{"sentences", corpus.size()}, {"kept", labeled.size()}}.dump() << std::endl;
      run.finish();
    });
  }
  {
    struct Opts {
      std::string tokens, tags, out, domains, pos;
      size_t epochs = 8, batch = 16, context_dim = 0;
      double lr = 0.01;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("train-tagger", "Train the fuzzy-CRF concept tagger");
    sub->add_option("--tokens", o->tokens)->required();
    sub->add_option("--tags", o->tags, "Parallel tag file; cells may list alternatives as B-x|B-y")->required();
    sub->add_option("--out", o->out)->required();
    sub->add_option("--domains", o->domains, "Comma list; default: domains seen in the tags");
    sub->add_option("--pos", o->pos, "POS lexicon TSV");
    sub->add_option("--epochs", o->epochs);
    sub->add_option("--batch", o->batch);
    sub->add_option("--lr", o->lr);
    sub->add_option("--context-dim", o->context_dim, "Textual context vector size; 0 disables it");
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      const auto data = read_labeled(run, o->tokens, o->tags);
      std::vector<std::vector<std::string>> tags;
      std::vector<std::vector<std::string>> corpus;
      for (const auto &s : data) {
        corpus.push_back(s.tokens);
        tags.push_back(s.tags);
      }
      std::vector<std::string> domains = split_list(o->domains);
      if (domains.empty()) domains = infer_domains(tags);
      if (domains.empty()) throw ConfigError("no domains given or found in the tags");
      PosLexicon pos = o->pos.empty() ? PosLexicon() : PosLexicon::load(run.input(o->pos));
      ScorerConfig sc;
      sc.context_dim = o->context_dim;
      CrfTagger tagger(LabelSet(domains), sc, Featurizer::build(corpus, pos, o->context_dim), run.seed());
      std::vector<TrainExample> ex;
      for (const auto &s : data) {
        ex.push_back({tagger.featurizer().featurize(s.tokens), parse_partial_tags(tagger.labels(), s.tags)});
      }
      const auto losses = tagger.train(ex, TrainConfig{o->epochs, o->batch, o->lr, run.seed()});
      tagger.save(o->out);
      run.output(o->out);
      std::cout << json{{"examples", ex.size()}, {"epoch_loss", losses}}.dump() << std::endl;
      run.finish();
    });
  }
  {
    struct Opts {
      std::string tagger, store, in, out;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("tag", "Link e-commerce concept phrases to primitive concepts");
    sub->add_option("--tagger", o->tagger)->required();
    sub->add_option("--store", o->store)->required();
    sub->add_option("--in", o->in, "One phrase per line")->required();
    sub->add_option("--out", o->out, "JSONL")->required();
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      const CrfTagger tagger = CrfTagger::load(run.input(o->tagger));
      const ConceptStore store = load_store(run, o->store);
      std::vector<json> rows;
      for (const auto &line : read_lines(run.input(o->in))) {
        const auto tokens = split_tokens(line);
        json links = json::array();
        for (const auto &l : tag_concept(tokens, tagger, store)) {
          json j{{"begin", l.begin}, {"end", l.end}, {"domain", l.domain}};
          j["primitive"] = l.primitive ? json(*l.primitive) : json(nullptr);
          links.push_back(j);
        }
        rows.push_back({{"phrase", join_tokens(tokens, 0, tokens.size())}, {"links", links}});
      }
      write_jsonl(o->out, rows);
      run.output(o->out);
      run.finish();
    });
  }
  {
    struct Opts {
      std::string tagger, corpus, out;
    };
    auto o = std::make_shared<Opts>();
    auto *sub = app.add_subcommand("mine", "Mine new primitive concept surfaces with a trained tagger");
    sub->add_option("--tagger", o->tagger)->required();
    sub->add_option("--corpus", o->corpus, "Token file")->required();
    sub->add_option("--out", o->out, "JSONL, awaiting review")->required();
    sub->callback([o, &g, sub] {
      Run run(g, *sub);
      const CrfTagger tagger = CrfTagger::load(run.input(o->tagger));
      std::vector<json> rows;
      for (const auto &m : mine_concepts(read_token_file(run.input(o->corpus)), tagger)) {
        rows.push_back({{"surface", m.surface}, {"domain", m.domain}, {"count", m.count}, {"status", m.status}});
      }
      write_jsonl(o->out, rows);
      run.output(o->out);
      run.finish();
    });
  }
}

}  // namespace econet::cli
