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

#include <cmath>
#include <functional>

#include "doctest.h"
#include "econet/synthetic.h"
#include "econet/tagger.h"
#include "test_util.h"

namespace econet {
namespace {

using testing::random_tensor;

ScorerConfig small_scorer(size_t context_dim = 0) {
  ScorerConfig c;
  c.word_dim = 6;
  c.char_dim = 3;
  c.char_filters = 4;
  c.pos_dim = 2;
  c.hidden = 5;
  c.attention_dim = 3;
  c.context_dim = context_dim;
  return c;
}

std::vector<TrainExample> examples_from(const CrfTagger &t, const std::vector<LabeledSentence> &data) {
  std::vector<TrainExample> out;
  for (const auto &s : data) {
    out.push_back({t.featurizer().featurize(s.tokens), parse_partial_tags(t.labels(), s.tags)});
  }
  return out;
}

// Fixture store: outdoor (Location), barbecue (Event), red (Color),
// charcoal (Category), "village" in both Location and Style.
ConceptStore small_store() {
  ConceptStore s;
  synthetic::add_domain_roots(s);
  s.upsert(PrimitiveConcept{"p1", "outdoor", {"Location"}, {}});
  s.upsert(PrimitiveConcept{"p2", "barbecue", {"Event"}, {}});
  s.upsert(PrimitiveConcept{"p3", "red", {"Color"}, {}});
  s.upsert(PrimitiveConcept{"p4", "charcoal grill", {"Category"}, {}});
  s.upsert(PrimitiveConcept{"p5", "village", {"Location", "Style"}, {}});
  return s;
}

// Every way of covering the sentence with surfaces or skipped tokens.
void enumerate_segmentations(const std::vector<std::string> &toks,
                             const std::unordered_map<std::string, std::vector<std::string>> &dict, size_t max_len,
                             size_t i, size_t covered, size_t segments,
                             std::vector<std::pair<size_t, size_t>> &out) {
  if (i == toks.size()) {
    out.push_back({covered, segments});
    return;
  }
  enumerate_segmentations(toks, dict, max_len, i + 1, covered, segments, out);
  for (size_t len = 1; len <= max_len && i + len <= toks.size(); ++len) {
    auto it = dict.find(join_tokens(toks, i, i + len));
    if (it == dict.end()) continue;
    for (size_t d = 0; d < it->second.size(); ++d) {
      enumerate_segmentations(toks, dict, max_len, i + len, covered + len, segments + 1, out);
    }
  }
}

TEST_SUITE("tagger") {
  TEST_CASE("vocabulary orders by count and reserves unknown") {
    Vocabulary v = Vocabulary::build({{"b", "a", "b"}, {"c", "a", "b"}});
    CHECK(v.entries() == std::vector<std::string>{"<unk>", "b", "a", "c"});
    CHECK(v.id("zzz") == 0);
    CHECK(Vocabulary::from_json(v.to_json()).entries() == v.entries());
    CHECK(utf8_chars("a\xc3\xa9z").size() == 3);
    CHECK(utf8_chars("\xe4\xb9\xa1\xe6\x9d\x91").size() == 2);
  }

  TEST_CASE("partial tags parse alternatives") {
    LabelSet ls({"Location", "Style", "Category"});
    PartialLabeling p = parse_partial_tags(ls, {"B-Location|B-Style", "B-Category"});
    CHECK(p.at(0).size() == 2);
    CHECK(p.at(1).size() == 1);
    CHECK_THROWS(parse_partial_tags(ls, {"B-Nope"}));
  }

  TEST_CASE("dense scorer learns a separable corpus") {
    LabelSet ls({"A", "B"});
    ScorerConfig cfg;
    cfg.kind = "dense";
    cfg.feature_dim = ls.size();
    CrfTagger t(ls, cfg, Featurizer(), 3);
    Rng rng(21);
    auto make = [&](size_t n) {
      std::vector<std::pair<TrainExample, std::vector<size_t>>> out;
      for (size_t i = 0; i < n; ++i) {
        const size_t len = 2 + rng.below(5);
        std::vector<size_t> gold;
        while (gold.size() < len) {
          const size_t next = rng.below(ls.size());
          const bool ok = gold.empty() ? ls.valid_start(next) : ls.valid_transition(gold.back(), next);
          if (ok) gold.push_back(next);
        }
        EmissionInput x;
        x.tokens.assign(len, "w");
        Tensor f({len, ls.size()});
        for (size_t p = 0; p < len; ++p)
          for (size_t j = 0; j < ls.size(); ++j) f(p, j) = (gold[p] == j ? 1.0 : 0.0) + rng.uniform(-0.1, 0.1);
        x.features = f;
        out.push_back({{x, PartialLabeling::exact(gold)}, gold});
      }
      return out;
    };
    auto train = make(200), test = make(100);
    std::vector<TrainExample> data;
    for (auto &[ex, gold] : train) data.push_back(ex);
    auto history = t.train(data, {20, 8, 0.05, 1});
    CHECK(history.back() < history.front());
    size_t tp = 0, pred = 0, gold_n = 0;
    for (auto &[ex, gold] : test) {
      const CrfPath p = t.viterbi(ex.input);
      for (size_t i = 0; i < gold.size(); ++i) {
        if (p.labels[i] != 0) ++pred;
        if (gold[i] != 0) ++gold_n;
        if (gold[i] != 0 && p.labels[i] == gold[i]) ++tp;
      }
    }
    const double prec = double(tp) / double(pred), rec = double(tp) / double(gold_n);
    CHECK(2 * prec * rec / (prec + rec) >= 0.99);
  }

  TEST_CASE("singleton labels give the standard CRF gradient") {
    LabelSet ls({"A", "B"});
    ScorerConfig cfg;
    cfg.kind = "dense";
    cfg.feature_dim = 3;
    CrfTagger t(ls, cfg, Featurizer(), 5);
    Rng rng(2);
    t.params().mutable_value("crf.transitions") = random_tensor({5, 5}, rng);
    EmissionInput x;
    x.tokens.assign(4, "w");
    x.features = random_tensor({4, 3}, rng);
    const std::vector<size_t> gold{1, 2, 0, 3};
    Graph g(&t.params());
    Gradients grads = g.backward(t.loss(g, x, PartialLabeling::exact(gold)));
    // Standard CRF: d/dT = expected transition counts - gold counts.
    CrfMarginals m = crf_marginals(t.emissions(x), t.transitions(), t.mask());
    Tensor expect = m.edge;
    for (size_t i = 1; i < gold.size(); ++i) expect(gold[i - 1], gold[i]) -= 1.0;
    CHECK(testing::max_abs_diff(grads.at("crf.transitions"), expect) <= 1e-10);
  }

  TEST_CASE("zero epochs keep the initial parameters") {
    auto bench = synthetic::make_tagger_benchmark({40, 3, 50, 10, 0.0, 4});
    Featurizer f = Featurizer::build(bench.corpus, PosLexicon(), 0);
    CrfTagger a(LabelSet(bench.domains), small_scorer(), f, 9);
    CrfTagger b(LabelSet(bench.domains), small_scorer(), f, 9);
    CHECK(a.train({}, {0, 4, 0.01, 1}).empty());
    CHECK(a.params() == b.params());
    CHECK_THROWS_AS(a.train({}, {1, 4, 0.01, 1}), ContractError);
  }

  TEST_CASE("tagger gradients pass the finite-difference check") {
    auto bench = synthetic::make_tagger_benchmark({40, 3, 30, 5, 0.0, 6});
    PosLexicon pos({{"the", "DET"}, {"for", "ADP"}});
    for (size_t ctx : {size_t{0}, size_t{3}}) {
      Featurizer f = Featurizer::build(bench.corpus, pos, ctx);
      CrfTagger t(LabelSet(bench.domains), small_scorer(ctx), f, 17);
      Rng rng(ctx + 1);
      for (int rep = 0; rep < 5; ++rep) {
        const auto &sent = bench.corpus[rng.below(bench.corpus.size())];
        EmissionInput x = f.featurize(sent);
        // Fuzzy sets: each position allows O plus its decoded label set of B tags.
        std::vector<std::vector<size_t>> sets(sent.size());
        for (auto &s : sets) {
          s = {0, t.labels().begin_label(rng.below(bench.domains.size()))};
        }
        PartialLabeling allowed(std::move(sets));
        t.params().mutable_value("crf.transitions") = random_tensor({t.labels().size(), t.labels().size()}, rng);
        auto loss = [&](Graph &g) { return t.loss(g, x, allowed); };
        INFO("context " << ctx << " rep " << rep);
        CHECK(grad_check(loss, t.params(), 1e-4, 12) <= 1e-3);
      }
    }
  }

  TEST_CASE("distant supervision fixtures") {
    ConceptStore s = small_store();
    auto out = distant_supervision({{"outdoor", "barbecue"}}, s);
    REQUIRE(out.size() == 1);
    CHECK(out[0].tags == std::vector<std::string>{"B-Location", "B-Event"});
    CHECK(distant_supervision({{"village", "barbecue"}}, s).empty());
    CHECK(distant_supervision({{"outdoor", "unknownword"}}, s).empty());
    auto grill = distant_supervision({{"red", "charcoal", "grill", "for", "outdoor"}}, s);
    REQUIRE(grill.size() == 1);
    CHECK(grill[0].tags == std::vector<std::string>{"B-Color", "B-Category", "I-Category", "O", "B-Location"});
    ConceptStore empty;
    CHECK(distant_supervision({{"outdoor", "barbecue"}, {"the"}}, empty).empty());
  }

  TEST_CASE("max-match DP agrees with brute-force segmentation") {
    Rng rng(77);
    const std::vector<std::string> alphabet{"a", "b", "c", "d"};
    for (int rep = 0; rep < 150; ++rep) {
      std::unordered_map<std::string, std::vector<std::string>> dict;
      const size_t entries = 1 + rng.below(6);
      for (size_t e = 0; e < entries; ++e) {
        const size_t len = 1 + rng.below(3);
        std::vector<std::string> toks;
        for (size_t k = 0; k < len; ++k) toks.push_back(alphabet[rng.below(alphabet.size())]);
        auto &doms = dict[join_tokens(toks, 0, toks.size())];
        const std::string d = rng.bernoulli(0.5) ? "X" : "Y";
        if (std::find(doms.begin(), doms.end(), d) == doms.end()) doms.push_back(d);
      }
      std::vector<std::string> sent;
      const size_t n = 1 + rng.below(7);
      for (size_t k = 0; k < n; ++k) sent.push_back(alphabet[rng.below(alphabet.size())]);
      std::vector<std::pair<size_t, size_t>> all;
      enumerate_segmentations(sent, dict, 3, 0, 0, 0, all);
      size_t best_cov = 0, best_seg = SIZE_MAX, ways = 0;
      for (auto [c, s] : all) {
        if (c > best_cov || (c == best_cov && s < best_seg)) {
          best_cov = c;
          best_seg = s;
          ways = 0;
        }
        if (c == best_cov && s == best_seg) ++ways;
      }
      SegmentationResult r = max_match(sent, dict, 3);
      INFO("rep " << rep);
      CHECK(r.covered == best_cov);
      CHECK(r.segments == best_seg);
      CHECK(r.optimal_labelings == std::min<size_t>(ways, 2));
    }
  }

  TEST_CASE("span metrics") {
    std::vector<std::vector<Span>> gold{{{0, 1, "Color"}, {1, 3, "Category"}}};
    CHECK(span_prf(gold, gold).f1 == 1.0);
    SpanMetrics none = span_prf(gold, {{}});
    CHECK(none.recall == 0.0);
    CHECK(none.precision == 0.0);
    SpanMetrics half = span_prf(gold, {{{0, 1, "Color"}, {1, 2, "Category"}}});
    CHECK(half.precision == 0.5);
    CHECK(half.recall == 0.5);
  }

  // Shared small trained tagger for mining and concept tagging.
  struct Trained {
    synthetic::TaggerBenchmark bench;
    CrfTagger tagger;
  };

  Trained train_small() {
    auto bench = synthetic::make_tagger_benchmark({60, 4, 400, 60, 0.0, 8});
    auto data = distant_supervision(bench.corpus, bench.store);
    Featurizer f = Featurizer::build(bench.corpus, PosLexicon(), 0);
    CrfTagger t(LabelSet(bench.domains), small_scorer(), f, 1);
    t.train(examples_from(t, data), {6, 8, 0.03, 2});
    return {std::move(bench), std::move(t)};
  }

  TEST_CASE("mining, tagging and checkpoints on a trained tagger") {
    Trained tr = train_small();
    const CrfTagger &t = tr.tagger;
    SpanMetrics m = evaluate(t, tr.bench.test);
    CHECK(m.f1 >= 0.9);

    CHECK(mine_concepts({{"the", "and", "the"}}, t).empty());
    const auto &planted = tr.bench.test[0];
    auto spans = decode_spans(t.labels(), t.labels().parse(planted.tags));
    REQUIRE(!spans.empty());
    std::vector<std::vector<std::string>> twice{planted.tokens, planted.tokens};
    auto mined = mine_concepts(twice, t);
    const std::string surface = join_tokens(planted.tokens, spans[0].begin, spans[0].end);
    auto hit = std::find_if(mined.begin(), mined.end(), [&](const MinedConcept &c) {
      return c.surface == surface && c.domain == spans[0].domain;
    });
    REQUIRE(hit != mined.end());
    CHECK(hit->count % 2 == 0);
    CHECK(hit->status == "awaiting_review");

    // Concept tagging resolves decoded spans to primitive ids.
    auto links = tag_concept(planted.tokens, t, tr.bench.store);
    REQUIRE(!links.empty());
    for (const auto &l : links) {
      if (!l.primitive) continue;
      auto p = tr.bench.store.find_primitive(*l.primitive);
      CHECK(p->surface == join_tokens(planted.tokens, l.begin, l.end));
    }
    CHECK_THROWS(tag_concept({}, t, tr.bench.store));

    testing::TempDir dir("tagger");
    t.save(dir.file("t.json"));
    CrfTagger back = CrfTagger::load(dir.file("t.json"));
    CHECK(back.params() == t.params());
    for (const auto &s : tr.bench.test) CHECK(back.decode(s.tokens) == t.decode(s.tokens));
  }

  TEST_CASE("concept tagging links outdoor barbecue") {
    ConceptStore s = small_store();
    std::vector<std::vector<std::string>> corpus;
    const std::vector<std::vector<std::string>> shapes{{"outdoor", "barbecue"}, {"red", "charcoal", "grill"},
                                                       {"barbecue", "for", "outdoor"}, {"red", "barbecue"},
                                                       {"outdoor", "red", "charcoal", "grill"}};
    for (int i = 0; i < 20; ++i) corpus.insert(corpus.end(), shapes.begin(), shapes.end());
    auto data = distant_supervision(corpus, s);
    REQUIRE(data.size() == corpus.size());
    Featurizer f = Featurizer::build(corpus, PosLexicon(), 0);
    CrfTagger t(LabelSet({"Location", "Event", "Color", "Category"}), small_scorer(), f, 3);
    t.train(examples_from(t, data), {8, 4, 0.05, 1});
    auto links = tag_concept({"outdoor", "barbecue"}, t, s);
    REQUIRE(links.size() == 2);
    CHECK(links[0].domain == "Location");
    CHECK(links[0].primitive == std::optional<std::string>("p1"));
    CHECK(links[1].domain == "Event");
    CHECK(links[1].primitive == std::optional<std::string>("p2"));
    auto single = tag_concept({"red"}, t, s);
    REQUIRE(single.size() == 1);
    CHECK(single[0].primitive == std::optional<std::string>("p3"));
  }
}

}  // namespace
}  // namespace econet
