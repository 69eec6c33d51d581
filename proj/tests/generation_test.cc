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

#include "doctest.h"
#include "econet/generation.h"
#include "econet/synthetic.h"
#include "test_util.h"

namespace econet {
namespace {

std::vector<TaxonomyClass> fixture_classes() {
  return {{"Function", "Function", "Function", std::nullopt, 1}, {"Category", "Category", "Category", std::nullopt, 1},
          {"Event", "Event", "Event", std::nullopt, 1},          {"Color", "Color", "Color", std::nullopt, 1},
          {"Hat", "hat", "Category", "Category", 2}};
}

std::vector<PrimitiveConcept> fixture_primitives() {
  return {{"p1", "warm", {"Function"}, {}},
          {"p2", "hat", {"Hat"}, {}},
          {"p3", "traveling", {"Event"}, {}},
          {"p4", "hiking", {"Event"}, {}},
          {"p5", "rain coat", {"Category"}, {}}};
}

ConceptStore fixture_store(bool reversed = false) {
  ConceptStore s;
  for (const auto &c : fixture_classes()) s.upsert(c);
  auto prims = fixture_primitives();
  if (reversed) std::reverse(prims.begin(), prims.end());
  for (const auto &p : prims) s.upsert(p);
  return s;
}

class StubLm : public LanguageModel {
 public:
  double perplexity(const std::vector<std::string> &tokens) const override {
    return 1.0 + static_cast<double>(tokens.size());
  }
};

// Answers "good" with a fixed probability, independently per query.
class NoisyOracle : public Oracle {
 public:
  NoisyOracle(double p_good, uint64_t seed) : p_(p_good), rng_(seed) {}
  std::vector<int> label(const std::vector<std::string> &ids) override {
    std::vector<int> out;
    for (size_t i = 0; i < ids.size(); ++i) out.push_back(rng_.bernoulli(p_) ? 1 : 0);
    return out;
  }

 private:
  double p_;
  Rng rng_;
};

class DownOracle : public Oracle {
 public:
  std::vector<int> label(const std::vector<std::string> &) override { throw OracleError("no annotators"); }
};

struct SmallSetup {
  std::vector<std::vector<std::string>> corpus{{"warm", "hat", "for", "hiking"}, {"rain", "coat", "for", "traveling"}};
  WideFeatureExtractor wide{std::make_shared<BigramLm>(corpus), std::make_shared<WordPopularity>(corpus)};
  ConceptFeaturizer fz = ConceptFeaturizer::build(corpus, PosLexicon(), std::make_shared<HashVectorProvider>(4, "k"),
                                                  wide);
  ClassifierConfig cfg() const {
    ClassifierConfig c;
    c.char_dim = 3;
    c.char_filters = 4;
    c.word_dim = 4;
    c.pos_dim = 2;
    c.attention_dim = 3;
    c.wide_hidden = 4;
    c.wide_out = 3;
    c.mlp_hidden = 5;
    return c;
  }
  ConceptClassifier model(uint64_t seed, ClassifierConfig c) const {
    return ConceptClassifier(c, fz.words().size(), fz.chars().size(), fz.pos().tag_count(), fz.knowledge_dim(), seed);
  }
};

TEST_SUITE("generation") {
  TEST_CASE("pattern parsing") {
    auto p = GenerationPattern::parse("t1", "[Function] [Category] for [Event]");
    REQUIRE(p.slots().size() == 4);
    CHECK(p.slots()[0] == PatternSlot{true, "Function"});
    CHECK(p.slots()[2] == PatternSlot{false, "for"});
    CHECK(p.text() == "[Function] [Category] for [Event]");
    auto q = GenerationPattern::from_json(p.to_json());
    CHECK(q.id() == "t1");
    CHECK(q.slots() == p.slots());
    CHECK(GenerationPattern::from_json({{"id", "x"}, {"pattern", "[Color] shoes"}}).slots().size() == 2);
    CHECK_THROWS_AS(GenerationPattern::parse("bad", "just words"), ConfigError);
  }

  TEST_CASE("generation from patterns") {
    auto store = fixture_store();
    auto p = GenerationPattern::parse("t1", "[Function] [Category] for [Event]");
    auto out = generate_from_patterns({p}, store, 0);
    REQUIRE(out.size() == 4);
    CHECK(out[0].phrase == "warm hat for traveling");
    CHECK(out[1].phrase == "warm hat for hiking");
    CHECK(out[2].phrase == "warm rain coat for traveling");
    CHECK(out[0].source == "generated");
    CHECK(out[0].pattern_id == "t1");
    CHECK(out[2].links == std::vector<ConceptLink>{{0, 1, "p1"}, {1, 3, "p5"}, {4, 5, "p3"}});

    auto color = GenerationPattern::parse("t2", "[Color] [Category]");
    CHECK(generate_from_patterns({color}, store, 0).empty());
    auto limited = generate_from_patterns({p, color, GenerationPattern::parse("t3", "[Event] [Category]")}, store, 1);
    REQUIRE(limited.size() == 2);
    CHECK(limited[0].pattern_id == "t1");
    CHECK(limited[1].phrase == "traveling hat");
    CHECK_THROWS_AS(generate_from_patterns({GenerationPattern::parse("t4", "[Nope] x")}, store, 0), StoreError);

    // A phrase already produced by an earlier pattern is not repeated.
    auto dup = generate_from_patterns({p, GenerationPattern::parse("t5", "warm [Category] for [Event]")}, store, 0);
    CHECK(dup.size() == 4);
  }

  TEST_CASE("generation ignores store insertion order") {
    auto a = fixture_store(false), b = fixture_store(true);
    std::vector<GenerationPattern> ps{GenerationPattern::parse("t1", "[Function] [Category] for [Event]"),
                                      GenerationPattern::parse("t3", "[Event] [Category]")};
    auto x = generate_from_patterns(ps, a, 0), y = generate_from_patterns(ps, b, 0);
    REQUIRE(x.size() == y.size());
    for (size_t i = 0; i < x.size(); ++i) CHECK(x[i].to_json() == y[i].to_json());
  }

  TEST_CASE("pattern matching and primitive candidates") {
    auto store = fixture_store();
    auto p = GenerationPattern::parse("t1", "[Function] [Category] for [Event]");
    CHECK(matches_pattern(split_tokens("warm rain coat for hiking"), p, store));
    CHECK(!matches_pattern(split_tokens("warm hiking for hat"), p, store));
    CHECK(!matches_pattern(split_tokens("warm hat for"), p, store));
    auto prims = primitive_candidates(store);
    CHECK(prims.size() == 5);
    CHECK(prims[4].phrase == "rain coat");
    CHECK(prims[4].links == std::vector<ConceptLink>{{0, 2, "p5"}});
  }

  TEST_CASE("mining recovers planted collocations") {
    Rng rng(4);
    synthetic::WordFactory words(9);
    std::vector<std::string> filler;
    for (int i = 0; i < 60; ++i) filler.push_back(words.next());
    const std::vector<std::vector<std::string>> planted{
        {"sun", "hat"}, {"linen", "beach", "shirt"}, {"cold", "brew", "coffee", "maker"}};
    std::vector<std::vector<std::string>> corpus;
    for (int s = 0; s < 400; ++s) {
      std::vector<std::string> sent;
      for (int k = 0; k < 6; ++k) sent.push_back(filler[rng.below(filler.size())]);
      if (s % 4 == 0) {
        const auto &ph = planted[(s / 4) % planted.size()];
        sent.insert(sent.begin() + 3, ph.begin(), ph.end());
      }
      corpus.push_back(sent);
    }
    corpus.push_back({"rare", "pair"});
    MiningConfig cfg;
    auto out = mine_candidates(corpus, cfg);
    std::set<std::string> phrases;
    for (const auto &c : out) {
      phrases.insert(c.phrase);
      CHECK(c.tokens.size() >= 2);
      CHECK(c.source == "mined");
      REQUIRE(c.score.has_value());
    }
    for (const auto &ph : planted) CHECK(phrases.count(join_tokens(ph, 0, ph.size())) == 1);
    CHECK(phrases.count("rare pair") == 0);
    // Fragments of a planted phrase are folded into it.
    CHECK(phrases.count("linen beach") == 0);
    CHECK(phrases.count("brew coffee") == 0);
    for (size_t i = 1; i < out.size(); ++i) CHECK(*out[i - 1].score >= *out[i].score);

    cfg.min_tokens = 1;
    cfg.min_npmi = -1.0;
    bool unigram = false;
    for (const auto &c : mine_candidates(corpus, cfg)) unigram = unigram || c.tokens.size() == 1;
    CHECK(unigram);
  }

  TEST_CASE("wide features") {
    const std::vector<std::vector<std::string>> corpus{{"warm", "hat"}, {"warm", "coat"}, {"hat"}};
    auto store = std::make_shared<ConceptStore>(fixture_store());
    WideFeatureExtractor x(std::make_shared<StubLm>(), std::make_shared<WordPopularity>(corpus),
                           {GenerationPattern::parse("t", "[Function] [Category]")}, store);
    auto f = x.extract({"warm", "hat"});
    CHECK(f.word_count == 2);
    CHECK(f.char_count == 7);
    CHECK(f.lm_perplexity == 3.0);
    CHECK(f.pattern_match);
    auto v = f.vector();
    REQUIRE(v.size() == WideFeatures::kSize);
    CHECK(v[0] == doctest::Approx(std::log(8.0)));
    CHECK(v[2] == doctest::Approx(std::log(3.0) / 5.0));
    auto u = x.extract({"warm", "zebra"});
    CHECK(u.min_popularity == 0.0);
    CHECK(!u.pattern_match);
    CHECK(u.mean_popularity == doctest::Approx(WordPopularity(corpus)("warm") / 2));
    CHECK_THROWS_AS(x.extract({}), std::invalid_argument);
  }

  TEST_CASE("zero-weight classifier scores one half") {
    SmallSetup s;
    auto m = s.model(3, s.cfg());
    for (const auto &name : m.params().names()) {
      for (double &v : m.params().mutable_value(name).storage()) v = 0.0;
    }
    CHECK(m.score(s.fz.featurize({"warm", "hat"})) == 0.5);
    auto fresh = s.model(3, s.cfg());
    const double a = fresh.score(s.fz.featurize({"warm", "hat"}));
    CHECK(a > 0.0);
    CHECK(a < 1.0);
    CHECK(a == fresh.score(s.fz.featurize({"warm", "hat"})));
    CHECK_THROWS_AS(s.fz.featurize({}), std::invalid_argument);
  }

  TEST_CASE("classifier gradients pass the finite-difference check") {
    SmallSetup s;
    Rng rng(21);
    for (int rep = 0; rep < 5; ++rep) {
      auto c = s.cfg();
      c.use_wide = rep != 3;
      c.use_knowledge = rep != 4;
      auto m = s.model(rep, c);
      for (const auto &name : m.params().names()) {
        for (double &v : m.params().mutable_value(name).storage()) v = rng.uniform(-0.8, 0.8);
      }
      std::vector<ClassifierInput> xs{s.fz.featurize({"warm", "hat", "for", "hiking"}), s.fz.featurize({"coat"}),
                                      s.fz.featurize({"rain", "coat", "warm"})};
      std::vector<const ClassifierInput *> ptrs{&xs[0], &xs[1], &xs[2]};
      auto loss = [&](Graph &g) { return m.loss(g, ptrs, {1, 0, 1}); };
      INFO("rep " << rep);
      CHECK(grad_check(loss, m.params(), 1e-4, 6) <= 1e-3);
    }
  }

  TEST_CASE("classifier training") {
    SmallSetup s;
    std::vector<ClassifierInput> xs{s.fz.featurize({"warm", "hat"}), s.fz.featurize({"hat", "warm"}),
                                    s.fz.featurize({"rain", "coat"}), s.fz.featurize({"coat", "rain"})};
    const std::vector<int> ys{1, 0, 1, 0};
    auto m = s.model(5, s.cfg());
    const auto init = m.params().to_json();
    CHECK(m.train(xs, ys, {0, 4, 0.01, 1}).empty());
    CHECK(m.params().to_json() == init);
    CHECK_THROWS_AS(m.train(xs, {1, 1, 1, 1}, {3, 4, 0.01, 1}), ContractError);

    auto h = m.train(xs, ys, {60, 4, 0.02, 1});
    CHECK(h.back() < h.front());

    // Full-batch training on a doubled dataset reaches the same parameters.
    auto a = s.model(5, s.cfg()), b = s.model(5, s.cfg());
    a.train(xs, ys, {5, 4, 0.02, 1});
    auto xs2 = xs;
    xs2.insert(xs2.end(), xs.begin(), xs.end());
    auto ys2 = ys;
    ys2.insert(ys2.end(), ys.begin(), ys.end());
    b.train(xs2, ys2, {5, 8, 0.02, 1});
    for (const auto &x : xs) CHECK(a.score(x) == doctest::Approx(b.score(x)).epsilon(1e-9));

    auto c = ConceptClassifier::from_json(nlohmann::json::parse(m.to_json().dump()));
    for (const auto &x : xs) CHECK(c.score(x) == m.score(x));
    CHECK_THROWS_AS(ConceptClassifier::from_json({{"format", "other"}}), ConfigError);
  }

  TEST_CASE("labeled candidates TSV") {
    testing::TempDir dir("gen_tsv");
    {
      std::ofstream out(dir.file("l.tsv"));
      out << "warm hat\t1\nhat warm\t0\n";
    }
    auto l = read_labeled_candidates(dir.file("l.tsv"));
    REQUIRE(l.size() == 2);
    CHECK(l[0].tokens == std::vector<std::string>{"warm", "hat"});
    CHECK(l[1].label == 0);
    {
      std::ofstream out(dir.file("bad.tsv"));
      out << "warm hat\t1\nhat warm\tyes\n";
    }
    try {
      read_labeled_candidates(dir.file("bad.tsv"));
      FAIL("expected a parse error");
    } catch (const ParseError &e) {
      CHECK(e.line() == 2);
    }
  }

  TEST_CASE("classification metrics") {
    auto m = classification_metrics({0.9, 0.8, 0.3, 0.6, 0.1}, {1, 0, 1, 1, 0});
    CHECK(m.precision == doctest::Approx(2.0 / 3.0));
    CHECK(m.recall == doctest::Approx(2.0 / 3.0));
    CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(m.accuracy == doctest::Approx(0.6));
    CHECK(classification_metrics({0.1}, {1}).precision == 0.0);
    CHECK_THROWS_AS(classification_metrics({}, {}), std::invalid_argument);
  }

  TEST_CASE("qa gate decisions and writes") {
    auto store = fixture_store();
    auto batch = generate_from_patterns({GenerationPattern::parse("t1", "[Function] [Category] for [Event]")}, store, 0);
    std::map<std::string, int> truth;
    for (const auto &c : batch) truth[c.phrase] = 1;
    truth["warm hat for hiking"] = 0;

    SimulatedOracle strict(truth);
    auto r = qa_gate(batch, 1.0, 1.0, strict, 1, &store);
    CHECK(!r.accepted);
    CHECK(r.sampled.size() == 4);
    CHECK(r.accuracy == 0.75);
    CHECK(r.written.empty());
    CHECK(store.ecommerce_concepts().empty());

    SimulatedOracle o2(truth);
    r = qa_gate(batch, 1.0, 0.75, o2, 1, &store);
    CHECK(r.accepted);
    CHECK(r.labels.size() == 4);
    REQUIRE(r.written.size() == batch.size());
    auto e = store.find_ecommerce(ecommerce_id("warm hat for traveling"));
    REQUIRE(e.has_value());
    CHECK(e->status == ConceptStatus::kValidated);
    CHECK(e->links.size() == 3);

    // Small rates still ask about one candidate.
    SimulatedOracle o3(truth);
    CHECK(qa_gate(batch, 0.01, 0.5, o3, 2, nullptr).sampled.size() == 1);

    // Mined candidates are linked through surface lookup.
    ConceptStore fresh = fixture_store();
    CandidateConcept mined;
    mined.phrase = "warm rain coat";
    mined.tokens = split_tokens(mined.phrase);
    mined.source = "mined";
    SimulatedOracle o4({{"warm rain coat", 1}});
    qa_gate({mined}, 1.0, 1.0, o4, 1, &fresh);
    auto linked = fresh.find_ecommerce(ecommerce_id("warm rain coat"));
    REQUIRE(linked.has_value());
    CHECK(linked->links == std::vector<ConceptLink>{{0, 1, "p1"}, {1, 3, "p5"}});

    ConceptStore untouched = fixture_store();
    DownOracle down;
    CHECK_THROWS_AS(qa_gate(batch, 0.5, 0.5, down, 1, &untouched), OracleError);
    CHECK(untouched.ecommerce_concepts().empty());
    CHECK_THROWS_AS(qa_gate(batch, 0.0, 0.5, down, 1, nullptr), ConfigError);
    CHECK_THROWS_AS(qa_gate(batch, 1.5, 0.5, down, 1, nullptr), ConfigError);
  }

  TEST_CASE("qa gate acceptance follows the binomial tail") {
    std::vector<CandidateConcept> batch(100);
    for (size_t i = 0; i < batch.size(); ++i) batch[i].phrase = "c" + std::to_string(i);
    const double p = 0.8;
    const size_t n = 10, need = 8;  // threshold 0.8 on 10 samples
    double expected = 0;
    for (size_t k = need; k <= n; ++k) {
      expected += std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0)) * std::pow(p, k) *
                  std::pow(1 - p, n - k);
    }
    NoisyOracle oracle(p, 77);
    const int trials = 4000;
    int accepted = 0;
    for (int t = 0; t < trials; ++t) accepted += qa_gate(batch, 0.1, 0.8, oracle, t, nullptr).accepted;
    const double rate = static_cast<double>(accepted) / trials;
    const double sigma = std::sqrt(expected * (1 - expected) / trials);
    CHECK(std::abs(rate - expected) <= 4 * sigma);
  }

  TEST_CASE("ecommerce ids") {
    CHECK(ecommerce_id("warm hat") == ecommerce_id("warm hat"));
    CHECK(ecommerce_id("warm hat") != ecommerce_id("hat warm"));
    CHECK(ecommerce_id("x").size() == 17);
  }
}

}  // namespace
}  // namespace econet
