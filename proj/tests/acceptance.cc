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

// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
//
//   econet_acceptance [--only N] [--cli PATH] [--script PATH]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "econet/active_learning.h"
#include "econet/crf.h"
#include "econet/generation.h"
#include "econet/hypernym.h"
#include "econet/matching.h"
#include "econet/store.h"
#include "econet/synthetic.h"
#include "econet/tagger.h"
#include "json.hpp"

namespace econet {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Tolerances and limits.
constexpr double kCrfTol = 1e-8;
constexpr int kCrfInstances = 200;
constexpr double kGradTol = 1e-3;
constexpr double kGradEps = 1e-4;
constexpr int kGradInstances = 5;
constexpr double kTaggerF1 = 0.95;
constexpr double kHypernymMap = 0.40;
constexpr double kHypernymOverRandom = 4.0;
constexpr double kLabelShare = 0.70;
constexpr double kMapSlack = 0.01;
constexpr double kClassifierPrecision = 0.90;
constexpr double kMatchAuc = 0.90;
constexpr size_t kStoreNodes = 100000;
constexpr size_t kStoreEdges = 300000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << v;
  return ss.str();
}

// ---- 1: CRF against enumeration --------------------------------------------

struct Brute {
  double log_z = -INFINITY;
  double log_z_allowed = -INFINITY;
  std::vector<size_t> best;
  double best_score = -INFINITY;
};

double log_add(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

Brute enumerate_paths(const Tensor &e, const Tensor &t, const CrfMask &mask,
                      const std::vector<std::vector<size_t>> &allowed) {
  const size_t n = e.rows(), labels = e.cols();
  Brute out;
  std::vector<size_t> path(n, 0);
  for (;;) {
    bool ok = mask.start.empty() || mask.start[path[0]];
    for (size_t i = 1; ok && i < n; ++i) ok = mask.transition.empty() || mask.transition[path[i - 1] * labels + path[i]];
    if (ok) {
      double s = 0;
      for (size_t i = 0; i < n; ++i) s += e(i, path[i]) + (i ? t(path[i - 1], path[i]) : 0.0);
      out.log_z = log_add(out.log_z, s);
      bool in = true;
      for (size_t i = 0; in && i < n; ++i) in = std::count(allowed[i].begin(), allowed[i].end(), path[i]) > 0;
      if (in) out.log_z_allowed = log_add(out.log_z_allowed, s);
      if (s > out.best_score) {
        out.best_score = s;
        out.best = path;
      }
    }
    size_t pos = n;
    while (pos > 0) {
      --pos;
      if (++path[pos] < labels) break;
      path[pos] = 0;
      if (pos == 0) return out;
    }
  }
}

Outcome crf_oracle() {
  Rng rng(77);
  int checked = 0, bad = 0;
  double worst = 0;
  for (int rep = 0; checked < kCrfInstances + 40; ++rep) {
    const size_t n = 1 + rng.below(6), labels = 1 + rng.below(5);
    Tensor e({n, labels}), t({labels, labels});
    for (double &v : e.storage()) v = rng.uniform(-3, 3);
    for (double &v : t.storage()) v = rng.uniform(-3, 3);
    CrfMask mask;
    if (rep % 2) {
      mask.labels = labels;
      mask.start.assign(labels, 0);
      mask.transition.assign(labels * labels, 0);
      for (auto &v : mask.start) v = rng.bernoulli(0.7);
      for (auto &v : mask.transition) v = rng.bernoulli(0.7);
      const size_t keep = rng.below(labels);
      mask.start[keep] = 1;
      mask.transition[keep * labels + keep] = 1;
    }
    std::vector<std::vector<size_t>> sets(n);
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < labels; ++j)
        if (rng.bernoulli(0.5)) sets[i].push_back(j);
      if (sets[i].empty()) sets[i].push_back(rng.below(labels));
    }
    const Brute ref = enumerate_paths(e, t, mask, sets);
    if (ref.log_z_allowed == -INFINITY) continue;
    ++checked;
    const PartialLabeling allowed(sets);
    const double d1 = std::abs(log_partition(e, t, mask) - ref.log_z);
    const double d2 = std::abs(constrained_log_partition(e, t, allowed, mask) - ref.log_z_allowed);
    const double d3 = std::abs(fuzzy_nll(e, t, allowed, mask) - (ref.log_z - ref.log_z_allowed));
    const CrfPath v = viterbi(e, t, mask);
    const double d4 = std::abs(v.score - ref.best_score);
    worst = std::max({worst, d1, d2, d3, d4});
    if (d1 > kCrfTol || d2 > kCrfTol || d3 > kCrfTol || d4 > kCrfTol || v.labels != ref.best) ++bad;
  }
  return {checked >= kCrfInstances && bad == 0,
          std::to_string(checked) + " CRFs, max |diff| " + fmt(worst, 3) + ", mismatches " + std::to_string(bad)};
}

// ---- 2: gradients ----------------------------------------------------------

void randomize(ParameterSet &ps, Rng &rng, double scale) {
  for (const auto &name : ps.names())
    for (double &v : ps.mutable_value(name).storage()) v = rng.uniform(-scale, scale);
}

Outcome gradients() {
  std::map<std::string, double> worst;
  Rng rng(2026);

  // CRF tagger: emissions network and transitions.
  {
    auto bench = synthetic::make_tagger_benchmark({40, 3, 30, 5, 0.0, 4});
    Featurizer f = Featurizer::build(bench.corpus, PosLexicon({{"for", "ADP"}, {"the", "DET"}}), 3);
    ScorerConfig sc;
    sc.context_dim = 3;
    for (int rep = 0; rep < kGradInstances; ++rep) {
      CrfTagger tagger(LabelSet(bench.domains), sc, f, 100 + rep);
      randomize(tagger.params(), rng, 0.5);
      const auto &sent = bench.corpus[rng.below(bench.corpus.size())];
      std::vector<std::vector<size_t>> sets(sent.size());
      for (auto &s : sets) s = {0, tagger.labels().begin_label(rng.below(bench.domains.size()))};
      PartialLabeling allowed(std::move(sets));
      const EmissionInput x = f.featurize(sent);
      auto loss = [&](Graph &g) { return tagger.loss(g, x, allowed); };
      worst["crf"] = std::max(worst["crf"], grad_check(loss, tagger.params(), kGradEps, 8));
    }
  }

  // Projection model.
  {
    ConceptEmbeddings emb(6);
    const std::vector<std::string> ids{"a", "b", "c", "d", "e"};
    for (const auto &id : ids) {
      std::vector<double> v(6);
      for (double &x : v) x = rng.uniform(-1, 1);
      emb.set(id, v);
    }
    for (int rep = 0; rep < kGradInstances; ++rep) {
      ProjectionModel m(emb, 1 + rep % 4, rep);
      randomize(m.params(), rng, 1.0);
      std::vector<LabeledPair> pairs;
      for (int i = 0; i < 6; ++i) pairs.push_back({ids[rng.below(5)], ids[rng.below(5)], static_cast<int>(rng.below(2))});
      auto loss = [&](Graph &g) { return m.loss(g, pairs); };
      worst["projection"] = std::max(worst["projection"], grad_check(loss, m.params(), kGradEps));
    }
  }

  // Concept classifier, wide and deep.
  {
    std::vector<std::vector<std::string>> corpus{{"warm", "hat", "for", "hiking"}, {"rain", "coat", "for", "travel"}};
    WideFeatureExtractor wide(std::make_shared<BigramLm>(corpus), std::make_shared<WordPopularity>(corpus));
    auto fz = ConceptFeaturizer::build(corpus, PosLexicon({{"for", "ADP"}, {"the", "DET"}}), std::make_shared<HashVectorProvider>(6, "k"),
                                       wide);
    std::vector<ClassifierInput> xs{fz.featurize({"warm", "hat", "for", "hiking"}), fz.featurize({"coat"}),
                                    fz.featurize({"rain", "coat", "warm"})};
    std::vector<const ClassifierInput *> ptrs{&xs[0], &xs[1], &xs[2]};
    for (int rep = 0; rep < kGradInstances; ++rep) {
      ClassifierConfig c;
      c.use_wide = rep != 3;
      c.use_knowledge = rep != 4;
      ConceptClassifier m(c, fz.words().size(), fz.chars().size(), fz.pos().tag_count(), fz.knowledge_dim(), rep);
      randomize(m.params(), rng, 0.5);
      auto loss = [&](Graph &g) { return m.loss(g, ptrs, {1, 0, 1}); };
      worst["classifier"] = std::max(worst["classifier"], grad_check(loss, m.params(), kGradEps, 6));
    }
  }

  // Matching model.
  {
    auto words = std::make_shared<HashVectorProvider>(8, "w");
    auto know = std::make_shared<GlossKnowledgeProvider>(
        std::map<std::string, std::vector<std::string>>{{"barbecue", {"charcoal", "grill"}}}, words);
    MatchFeaturizer fz(words, know, PosLexicon({{"outdoor", "ADJ"}, {"barbecue", "NOUN"}}), {"Event", "Location"});
    std::vector<MatchExample> ex{
        {"c1", "i1", fz.concept_input({"outdoor", "barbecue"}, {"Location", "Event"}),
         fz.item_input({"charcoal", "grill", "bag"}), 1},
        {"c2", "i2", fz.concept_input({"barbecue"}), fz.item_input({"tent", "outdoor", "poles", "light"}), 0}};
    std::vector<const MatchExample *> batch{&ex[0], &ex[1]};
    for (int rep = 0; rep < kGradInstances; ++rep) {
      MatchConfig c;
      c.use_knowledge = rep != 2;
      MatchModel m(c, fz.word_dim(), fz.pos_tags(), fz.knowledge_dim(), fz.class_count(), rep);
      randomize(m.params(), rng, 0.5);
      auto loss = [&](Graph &g) { return m.loss(g, batch); };
      worst["match"] = std::max(worst["match"], grad_check(loss, m.params(), kGradEps, 6));
    }
  }

  bool ok = true;
  std::string detail = "max rel err:";
  for (const auto &[k, v] : worst) {
    ok = ok && v <= kGradTol;
    detail += " " + k + " " + fmt(v, 3);
  }
  return {ok, detail};
}

// ---- 3: tagger -------------------------------------------------------------

Outcome tagger() {
  const auto b = synthetic::make_tagger_benchmark({});
  const auto data = distant_supervision(b.corpus, b.store);
  std::set<std::vector<std::string>> kept;
  for (const auto &d : data) kept.insert(d.tokens);
  size_t ambiguous_kept = 0;
  for (size_t i : b.ambiguous) ambiguous_kept += kept.count(b.corpus[i]);

  Featurizer f = Featurizer::build(b.corpus, PosLexicon(), 0);
  CrfTagger t(LabelSet(b.domains), ScorerConfig{}, f, 1);
  std::vector<TrainExample> ex;
  for (const auto &s : data) ex.push_back({f.featurize(s.tokens), parse_partial_tags(t.labels(), s.tags)});
  t.train(ex, {4, 16, 0.01, 1});
  const SpanMetrics m = evaluate(t, b.test);
  return {m.f1 >= kTaggerF1 && !b.ambiguous.empty() && ambiguous_kept == 0,
          "span F1 " + fmt(m.f1) + " on " + std::to_string(m.gold) + " gold spans; ambiguous kept " +
              std::to_string(ambiguous_kept) + "/" + std::to_string(b.ambiguous.size())};
}

// ---- 4, 5: hypernyms -------------------------------------------------------

synthetic::HypernymBenchmarkConfig hypernym_config() {
  synthetic::HypernymBenchmarkConfig c;
  c.noise = 1.0;
  return c;
}

double test_map(const synthetic::HypernymBenchmark &b, const ProjectionModel &m) {
  std::vector<RankedHypernyms> rs;
  for (const auto &[q, gold] : b.test_gold) rs.push_back(rank(q, b.hypernyms, m));
  return evaluate_rankings(rs, b.test_gold).map;
}

double map_with_negatives(const synthetic::HypernymBenchmark &b, size_t ratio) {
  std::vector<LabeledPair> data;
  for (const auto &[p, h] : b.train) data.push_back({p, h, 1});
  const auto neg = negative_sample(b.train, ratio, b.vocabulary, 1);
  data.insert(data.end(), neg.begin(), neg.end());
  ProjectionModel m(b.embeddings, 4, 1);
  m.train(data, {30, 256, 0.02, 1});
  return test_map(b, m);
}

Outcome hypernym_trend() {
  const auto b = hypernym_config();
  const auto bench = synthetic::make_hypernym_benchmark(b);

  // (a) A random ranking of n candidates with one gold hypernym has
  // expected AP = H_n / n.
  const double trained = map_with_negatives(bench, 10);
  double random_map = 0;
  for (const auto &[q, gold] : bench.test_gold) {
    if (gold.size() != 1) return {false, "benchmark query with several gold hypernyms"};
    double h = 0;
    for (size_t r = 1; r <= bench.hypernyms.size(); ++r) h += 1.0 / r;
    random_map += h / bench.hypernyms.size();
  }
  random_map /= bench.test_gold.size();
  const bool a = trained >= kHypernymMap && trained >= kHypernymOverRandom * random_map;

  // (b) Labels needed to come within one MAP point of full supervision.
  std::map<std::string, int> truth;
  for (const auto &[p, h] : bench.train) truth[HypernymTask::sample_id(p, h)] = 1;
  for (const auto &n : negative_sample(bench.train, 10, bench.vocabulary, 7))
    truth.emplace(HypernymTask::sample_id(n.hyponym, n.hypernym), 0);
  std::vector<std::string> pool;
  std::vector<int> labels;
  for (const auto &[id, l] : truth) {
    pool.push_back(id);
    labels.push_back(l);
  }
  const ProjectionTrainConfig tc{20, 64, 0.02, 1};
  HypernymTask full(bench.embeddings, bench.hypernyms, bench.test_gold, 4, tc, 1);
  full.fit(pool, labels);
  const double full_map = full.metrics()["map"].get<double>();

  std::map<std::string, double> needed;
  std::string curve;
  for (const std::string strategy : {"random", "UCS"}) {
    double total = 0;
    for (uint64_t seed : {1, 2, 3}) {
      HypernymTask task(bench.embeddings, bench.hypernyms, bench.test_gold, 4, tc, 1);
      SimulatedOracle oracle(truth);
      ALConfig c;
      c.k = 50;
      c.alpha = 0.3;
      c.strategy = strategy;
      c.patience = 1000;
      c.seed = seed;
      const ALResult r = run_loop(task, oracle, pool, c);
      size_t reach = pool.size();
      for (const auto &h : r.history) {
        if (h.fs >= full_map - kMapSlack) {
          reach = h.labeled;
          break;
        }
      }
      total += static_cast<double>(reach);
      curve += " " + strategy + ":" + std::to_string(reach);
    }
    needed[strategy] = total / 3;
  }
  const double share = needed["UCS"] / needed["random"];
  const bool bb = share <= kLabelShare;
  return {a && bb, "(a) MAP " + fmt(trained) + " vs random " + fmt(random_map) + "; (b) full MAP " + fmt(full_map) +
                       ", labels needed" + curve + ", UCS/random " + fmt(share, 3)};
}

Outcome negative_ratio() {
  const auto bench = synthetic::make_hypernym_benchmark(hypernym_config());
  const double m1 = map_with_negatives(bench, 1), m100 = map_with_negatives(bench, 100);
  return {m100 >= m1, "MAP N=1 " + fmt(m1) + ", N=100 " + fmt(m100)};
}

// ---- 6: concept classifier -------------------------------------------------

Outcome classifier() {
  const auto b = synthetic::make_classifier_benchmark({});
  WideFeatureExtractor wide(std::make_shared<BigramLm>(b.corpus), std::make_shared<WordPopularity>(b.corpus),
                            b.patterns, std::make_shared<ConceptStore>(b.store));
  auto texts = b.corpus;
  for (const auto &c : b.train) texts.push_back(c.tokens);
  const auto fz = ConceptFeaturizer::build(texts, b.pos, std::make_shared<HashVectorProvider>(16, "knowledge"), wide);
  std::vector<ClassifierInput> xs, ts;
  std::vector<int> ys, tys;
  for (const auto &c : b.train) {
    xs.push_back(fz.featurize(c.tokens));
    ys.push_back(c.label);
  }
  for (const auto &c : b.test) {
    ts.push_back(fz.featurize(c.tokens));
    tys.push_back(c.label);
  }
  std::map<bool, double> precision;
  for (bool use_wide : {true, false}) {
    ClassifierConfig cc;
    cc.use_wide = use_wide;
    ConceptClassifier m(cc, fz.words().size(), fz.chars().size(), fz.pos().tag_count(), fz.knowledge_dim(), 3);
    m.train(xs, ys, {10, 16, 0.01, 1});
    // Precision at 0.5, counted here rather than through the library.
    size_t tp = 0, fp = 0;
    for (size_t i = 0; i < ts.size(); ++i) {
      if (m.score(ts[i]) >= 0.5) (tys[i] ? tp : fp) += 1;
    }
    precision[use_wide] = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
  }
  return {precision[true] >= kClassifierPrecision && precision[false] < precision[true],
          "precision " + fmt(precision[true]) + ", without wide " + fmt(precision[false])};
}

// ---- 7: matching -----------------------------------------------------------

// Mann-Whitney AUC over all positive/negative pairs.
double pairwise_auc(const std::vector<double> &s, const std::vector<int> &y) {
  double num = 0, pos = 0, neg = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    (y[i] ? pos : neg) += 1;
    if (!y[i]) continue;
    for (size_t j = 0; j < s.size(); ++j)
      if (!y[j]) num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
  }
  return num / (pos * neg);
}

// Mean over concepts of the positive share among the 10 best-scored items
// (fewer when a concept has fewer candidates).
double mean_p_at_10(const std::vector<double> &s, const std::vector<int> &y, const std::vector<std::string> &concept_ids) {
  std::map<std::string, std::vector<std::pair<double, int>>> by;
  for (size_t i = 0; i < s.size(); ++i) by[concept_ids[i]].push_back({s[i], y[i]});
  double total = 0;
  for (auto &[c, v] : by) {
    std::stable_sort(v.begin(), v.end(), [](auto &a, auto &b) { return a.first > b.first; });
    const size_t k = std::min<size_t>(10, v.size());
    double hits = 0;
    for (size_t i = 0; i < k; ++i) hits += v[i].second;
    total += hits / k;
  }
  return by.empty() ? 0 : total / by.size();
}

Outcome matching() {
  const auto b = synthetic::make_match_benchmark({});
  auto words = std::make_shared<HashVectorProvider>(16, "words");
  auto know = std::make_shared<GlossKnowledgeProvider>(b.glosses, words);
  std::vector<std::string> classes;
  for (const auto &c : b.store.classes()) classes.push_back(c.id);
  MatchFeaturizer fz(words, know, b.pos, classes);
  auto build = [&](const std::vector<PairLabel> &ps) {
    std::vector<MatchExample> out;
    for (const auto &p : ps) {
      out.push_back({p.concept_id, p.item_id, fz.concept_input(*b.store.find_ecommerce(p.concept_id), b.store),
                     fz.item_input(b.store.find_item(p.item_id)->tokens), p.label});
    }
    return out;
  };
  const auto train = build(b.train), test = build(b.test);
  std::map<bool, double> auc, drift_p10;
  for (bool k : {true, false}) {
    MatchConfig mc;
    mc.use_knowledge = k;
    MatchModel m(mc, fz.word_dim(), fz.pos_tags(), fz.knowledge_dim(), fz.class_count(), 1);
    m.train(train, MatchTrainConfig{});
    std::vector<double> s, ds;
    std::vector<int> y, dy;
    std::vector<std::string> dc;
    for (const auto &x : test) {
      const double v = m.score(x.concept_side, x.item);
      s.push_back(v);
      y.push_back(x.label);
      if (x.label == 0 || b.drift.count({x.concept_id, x.item_id})) {
        ds.push_back(v);
        dy.push_back(x.label);
        dc.push_back(x.concept_id);
      }
    }
    auc[k] = pairwise_auc(s, y);
    drift_p10[k] = mean_p_at_10(ds, dy, dc);
  }
  return {auc[true] >= kMatchAuc && drift_p10[true] > drift_p10[false],
          "AUC " + fmt(auc[true]) + "; drift P@10 " + fmt(drift_p10[true]) + " vs " + fmt(drift_p10[false]) +
              " without knowledge"};
}

// ---- 8: store --------------------------------------------------------------

std::string random_store_jsonl(Rng &rng) {
  ConceptStore roots;
  synthetic::add_domain_roots(roots);
  std::ostringstream out;
  std::vector<std::pair<std::string, std::string>> classes;  // id, domain
  std::vector<std::string> category_classes;
  for (const auto &c : roots.classes()) {
    out << json{{"kind", "class"}, {"id", c.id}, {"name", c.name}, {"domain", c.domain}}.dump() << '\n';
    classes.push_back({c.id, c.domain});
    if (c.domain == "Category") category_classes.push_back(c.id);
  }
  const size_t n_classes = 1000, n_prims = 40000, n_concepts = 30000;
  const size_t n_items = kStoreNodes - n_classes - n_prims - n_concepts;
  while (classes.size() < n_classes) {
    const auto parent = classes[rng.below(classes.size())];
    const std::string id = "c" + std::to_string(classes.size());
    out << json{{"kind", "class"}, {"id", id}, {"name", id}, {"domain", parent.second}, {"parent", parent.first}}.dump()
        << '\n';
    classes.push_back({id, parent.second});
    if (parent.second == "Category") category_classes.push_back(id);
  }
  for (size_t i = 0; i < n_prims; ++i) {
    std::set<std::string> cls{classes[rng.below(n_classes)].first};
    if (rng.bernoulli(0.5)) cls.insert(classes[rng.below(n_classes)].first);
    out << json{{"kind", "primitive"}, {"id", "p" + std::to_string(i)}, {"surface", "w" + std::to_string(i)},
                {"classes", cls}, {"aliases", json::array()}}
               .dump()
        << '\n';
  }
  for (size_t i = 0; i < n_concepts; ++i) {
    const size_t len = 2 + rng.below(2);
    json tokens = json::array(), links = json::array();
    for (size_t t = 0; t < len; ++t) {
      const size_t p = rng.below(n_prims);
      tokens.push_back("w" + std::to_string(p));
      links.push_back({{"begin", t}, {"end", t + 1}, {"primitive", "p" + std::to_string(p)}});
    }
    out << json{{"kind", "ecommerce"}, {"id", "e" + std::to_string(i)}, {"phrase", ""}, {"tokens", tokens},
                {"links", links}, {"status", "validated"}}
               .dump()
        << '\n';
  }
  for (size_t i = 0; i < n_items; ++i) {
    out << json{{"kind", "item"}, {"id", "i" + std::to_string(i)}, {"title", "item " + std::to_string(i)},
                {"tokens", {"item", std::to_string(i)}},
                {"category", category_classes[rng.below(category_classes.size())]}}
               .dump()
        << '\n';
  }
  for (size_t i = 0; i < 130000; ++i) {
    out << json{{"kind", "edge"}, {"relation", "item_ecommerce"}, {"src", "i" + std::to_string(rng.below(n_items))},
                {"dst", "e" + std::to_string(rng.below(n_concepts))}, {"weight", rng.uniform(0, 1)}}
               .dump()
        << '\n';
  }
  for (size_t i = 0; i < 20000; ++i) {
    out << json{{"kind", "edge"}, {"relation", "item_primitive"}, {"src", "i" + std::to_string(rng.below(n_items))},
                {"dst", "p" + std::to_string(rng.below(n_prims))}}
               .dump()
        << '\n';
  }
  for (size_t i = 0; i < 30000; ++i) {
    // Pointing from larger to smaller ids keeps isA_concept acyclic.
    const size_t a = 1 + rng.below(n_prims - 1);
    out << json{{"kind", "edge"}, {"relation", "isA_concept"}, {"src", "p" + std::to_string(a)},
                {"dst", "p" + std::to_string(rng.below(a))}}
               .dump()
        << '\n';
  }
  return out.str();
}

Outcome store_integrity() {
  Rng rng(8);
  std::istringstream in(random_store_jsonl(rng));
  const ConceptStore store = ConceptStore::import_jsonl(in);

  std::set<std::string> nodes;
  std::map<std::string, std::string> parent;
  for (const auto &c : store.classes()) {
    nodes.insert(c.id);
    if (c.parent) parent[c.id] = *c.parent;
  }
  for (const auto &p : store.primitives()) nodes.insert(p.id);
  for (const auto &e : store.ecommerce_concepts()) nodes.insert(e.id);
  for (const auto &i : store.items()) nodes.insert(i.id);
  const auto edges = store.edges();
  size_t dangling = 0;
  std::map<std::string, std::vector<std::string>> concept_up;
  for (const auto &e : edges) {
    dangling += !nodes.count(e.src) || !nodes.count(e.dst);
    if (e.relation == Relation::kIsAConcept) concept_up[e.src].push_back(e.dst);
  }
  // Class cycles: walk parent pointers at most |classes| steps.
  size_t class_cycles = 0;
  for (const auto &[c, p] : parent) {
    std::string cur = c;
    size_t steps = 0;
    while (parent.count(cur) && steps <= parent.size()) {
      cur = parent.at(cur);
      ++steps;
    }
    class_cycles += steps > parent.size();
  }
  // isA_concept cycles: iterative three-colour DFS.
  std::map<std::string, int> colour;
  size_t concept_cycles = 0;
  for (const auto &[root, ups] : concept_up) {
    if (colour[root]) continue;
    std::vector<std::pair<std::string, size_t>> stack{{root, 0}};
    colour[root] = 1;
    while (!stack.empty()) {
      auto &[node, next] = stack.back();
      const auto it = concept_up.find(node);
      if (it == concept_up.end() || next >= it->second.size()) {
        colour[node] = 2;
        stack.pop_back();
        continue;
      }
      const std::string child = it->second[next++];
      if (colour[child] == 1) ++concept_cycles;
      if (colour[child] == 0) {
        colour[child] = 1;
        stack.push_back({child, 0});
      }
    }
  }
  const auto problems = store.audit();

  std::ostringstream first, second;
  store.export_jsonl(first);
  std::istringstream back(first.str());
  ConceptStore::import_jsonl(back).export_jsonl(second);
  const bool identical = first.str() == second.str();

  const bool ok = nodes.size() == kStoreNodes && edges.size() >= kStoreEdges && dangling == 0 && class_cycles == 0 &&
                  concept_cycles == 0 && problems.empty() && identical;
  return {ok, std::to_string(nodes.size()) + " nodes, " + std::to_string(edges.size()) + " edges, audit problems " +
                  std::to_string(problems.size()) + ", dangling " + std::to_string(dangling) + ", cycles " +
                  std::to_string(class_cycles + concept_cycles) + ", round trip " +
                  (identical ? "byte-identical" : "differs")};
}

// ---- 9: determinism --------------------------------------------------------

std::map<std::string, std::string> manifests(const fs::path &root) {
  std::map<std::string, std::string> out;
  for (const auto &entry : fs::recursive_directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || name.size() < 14 || name.substr(name.size() - 14) != ".manifest.json") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(entry.path(), root).string()] = ss.str();
  }
  return out;
}

Outcome determinism(const std::string &cli, const std::string &script) {
  const fs::path work = fs::temp_directory_path() / "econet_acceptance_determinism";
  fs::remove_all(work);
  fs::create_directories(work / "second");
  const std::string a = "cd '" + work.string() + "' && '" + script + "' '" + cli + "' run_a 7 > log_a.txt 2>&1";
  const std::string b = "cd '" + (work / "second").string() + "' && '" + script + "' '" + cli + "' run_b 7 > log_b.txt 2>&1";
  if (std::system(a.c_str()) != 0 || std::system(b.c_str()) != 0) {
    return {false, "pipeline script failed, see " + work.string()};
  }
  const auto ma = manifests(work / "run_a"), mb = manifests(work / "second" / "run_b");
  size_t differ = 0;
  for (const auto &[k, v] : ma) differ += !mb.count(k) || mb.at(k) != v;
  const bool ok = !ma.empty() && ma.size() == mb.size() && differ == 0;
  if (ok) fs::remove_all(work);
  return {ok, std::to_string(ma.size()) + " manifests per run, " + std::to_string(differ) + " differ"};
}

// ---- 10: active learning loop contract -------------------------------------

Outcome loop_contract() {
  const auto b = synthetic::make_hypernym_benchmark({8, 10, 60, 20, 0.8, 5});
  std::map<std::string, int> truth;
  for (const auto &[p, h] : b.train) truth[HypernymTask::sample_id(p, h)] = 1;
  for (const auto &n : negative_sample(b.train, 4, b.vocabulary, 3))
    truth.emplace(HypernymTask::sample_id(n.hyponym, n.hypernym), 0);
  std::vector<std::string> pool;
  std::vector<int> all_labels;
  for (const auto &[id, l] : truth) {
    pool.push_back(id);
    all_labels.push_back(l);
  }
  const ProjectionTrainConfig tc{6, 32, 0.02, 1};

  size_t runs = 0, relabels = 0, stop_violations = 0;
  for (const std::string strategy : {"random", "US", "CS", "UCS"}) {
    for (size_t patience : {1, 2, 3}) {
      HypernymTask task(b.embeddings, b.hypernyms, b.test_gold, 2, tc, 9);
      SimulatedOracle oracle(truth);
      ALConfig c;
      c.k = 15;
      c.strategy = strategy;
      c.patience = patience;
      c.seed = patience;
      const ALResult r = run_loop(task, oracle, pool, c);
      ++runs;
      for (const auto &id : oracle.asked()) relabels += oracle.asked().count(id) > 1;
      relabels += std::set<std::string>(r.labeled_ids.begin(), r.labeled_ids.end()).size() != r.labeled_ids.size();
      // Best round: first strict maximum of fs. The loop ends exactly
      // `patience` rounds later unless the pool ran out first.
      size_t best = 0;
      for (size_t i = 1; i < r.history.size(); ++i)
        if (r.history[i].fs > r.history[best].fs) best = i;
      const bool exhausted = r.labeled_ids.size() == pool.size();
      const size_t last = r.history.size() - 1;
      const bool stop_ok = r.best_round == best && last - best <= patience && (exhausted || last - best == patience) &&
                           r.best_metric == r.history[best].fs;
      stop_violations += !stop_ok;
    }
  }

  HypernymTask one(b.embeddings, b.hypernyms, b.test_gold, 2, tc, 9);
  SimulatedOracle oracle(truth);
  ALConfig c;
  c.k = pool.size();
  const ALResult r = run_loop(one, oracle, pool, c);
  HypernymTask direct(b.embeddings, b.hypernyms, b.test_gold, 2, tc, 9);
  direct.fit(pool, all_labels);
  const bool degenerate = r.history.size() == 1 && r.labeled_ids == pool && oracle.asked().size() == pool.size() &&
                          one.snapshot() == direct.snapshot();

  return {relabels == 0 && stop_violations == 0 && degenerate,
          std::to_string(runs) + " loops, relabels " + std::to_string(relabels) + ", stop violations " +
              std::to_string(stop_violations) + ", K=|pool| " + (degenerate ? "one round, full supervision" : "differs")};
}

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;  // 0 = none
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace econet

int main(int argc, char **argv) {
  using namespace econet;
  int only = 0;
  std::string cli = ECONET_CLI_PATH, script = ECONET_PIPELINE_SCRIPT;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--only") only = std::atoi(argv[i + 1]);
    else if (flag == "--cli") cli = argv[i + 1];
    else if (flag == "--script") script = argv[i + 1];
  }

  const std::vector<Criterion> criteria{
      {1, "CRF matches path enumeration", 30, crf_oracle},
      {2, "gradient checks", 60, gradients},
      {3, "tagger end to end", 120, tagger},
      {4, "hypernym MAP and UCS label savings", 300, hypernym_trend},
      {5, "negative ratio sweep", 300, negative_ratio},
      {6, "concept classifier and wide ablation", 120, classifier},
      {7, "matching AUC and knowledge on drift", 300, matching},
      {8, "store integrity at 100k nodes", 60, store_integrity},
      {9, "pipeline determinism", 0, [&] { return determinism(cli, script); }},
      {10, "active learning loop contract", 0, loop_contract},
  };

  int failed = 0;
  for (const auto &c : criteria) {
    if (only && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_seconds > 0 && secs > c.limit_seconds) {
      o.pass = false;
      o.detail += "; over the " + fmt(c.limit_seconds) + " s limit";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << " (" << o.detail << "; "
              << fmt(secs, 3) << " s)" << std::endl;
  }
  return failed ? 1 : 0;
}
