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

#include "econet/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace econet::synthetic {

namespace {

constexpr const char *kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
                                   "br", "st", "tr", "pl", "gr", "sh"};
constexpr const char *kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};

std::string pad_id(const std::string &prefix, size_t i) {
  std::string n = std::to_string(i);
  return prefix + std::string(n.size() < 5 ? 5 - n.size() : 0, '0') + n;
}

}  // namespace

std::string WordFactory::next() {
  while (true) {
    const size_t syllables = 2 + rng_.below(2);
    std::string w;
    for (size_t s = 0; s < syllables; ++s) {
      w += kOnsets[rng_.below(std::size(kOnsets))];
      w += kVowels[rng_.below(std::size(kVowels))];
    }
    if (used_.insert(w).second) return w;
  }
}

void add_domain_roots(ConceptStore &store) {
  for (auto d : kDomains) {
    const std::string name(d);
    store.upsert(TaxonomyClass{name, name, name, std::nullopt, 1});
  }
}

TaggerBenchmark make_tagger_benchmark(const TaggerBenchmarkConfig &cfg) {
  static const std::vector<std::string> kTaggerDomains = {"Category", "Color", "Location",
                                                          "Event",    "Style", "Material",
                                                          "Function", "Time",  "Brand"};
  if (cfg.domains == 0 || cfg.domains > kTaggerDomains.size()) throw ConfigError("tagger benchmark: 1..9 domains");
  if (cfg.vocab < 20) throw ConfigError("tagger benchmark: vocab must be at least 20");
  TaggerBenchmark b;
  b.domains.assign(kTaggerDomains.begin(), kTaggerDomains.begin() + static_cast<long>(cfg.domains));
  add_domain_roots(b.store);
  Rng rng(mix_seed(cfg.seed, "tagger.benchmark"));
  WordFactory words(mix_seed(cfg.seed, "tagger.words"));
  const DistantSupervisionConfig ds;
  for (const auto &s : ds.stopwords) words.reserve(s);
  const std::vector<std::string> stopwords(ds.stopwords.begin(), ds.stopwords.end());

  struct Surface {
    std::vector<std::string> tokens;
    std::string domain;
  };
  std::vector<Surface> regular;
  size_t next_id = 0;
  auto add_primitive = [&](const std::vector<std::string> &toks, std::set<std::string> classes) {
    b.store.upsert(PrimitiveConcept{pad_id("p", next_id++), join_tokens(toks, 0, toks.size()), std::move(classes), {}});
  };

  // Reserve ten surfaces for the ambiguity fixtures: six with two domains,
  // and two overlapping pairs "u v" / "v w".
  const size_t n_regular = cfg.vocab - 10;
  for (size_t i = 0; i < n_regular; ++i) {
    Surface s;
    s.domain = b.domains[i % b.domains.size()];
    s.tokens.push_back(words.next());
    if (rng.bernoulli(0.3)) s.tokens.push_back(words.next());
    add_primitive(s.tokens, {s.domain});
    regular.push_back(std::move(s));
  }
  std::vector<std::string> two_domain;
  for (size_t i = 0; i < 6; ++i) {
    const std::string w = words.next();
    const std::string d1 = b.domains[i % b.domains.size()], d2 = b.domains[(i + 1) % b.domains.size()];
    add_primitive({w}, {d1, d2});
    two_domain.push_back(w);
  }
  std::vector<std::vector<std::string>> overlaps;
  for (size_t i = 0; i < 2; ++i) {
    const std::string u = words.next(), v = words.next(), w = words.next();
    add_primitive({u, v}, {b.domains[i % b.domains.size()]});
    add_primitive({v, w}, {b.domains[(i + 2) % b.domains.size()]});
    overlaps.push_back({u, v, w});
  }

  auto make_sentence = [&](std::vector<std::string> &toks, std::vector<std::string> &tags) {
    const size_t k = 1 + rng.below(4);
    if (rng.bernoulli(0.3)) {
      toks.push_back(stopwords[rng.below(stopwords.size())]);
      tags.push_back("O");
    }
    for (size_t j = 0; j < k; ++j) {
      const Surface &s = regular[rng.below(regular.size())];
      for (size_t t = 0; t < s.tokens.size(); ++t) {
        toks.push_back(s.tokens[t]);
        tags.push_back((t == 0 ? "B-" : "I-") + s.domain);
      }
      if (j + 1 < k && rng.bernoulli(0.5)) {
        toks.push_back(stopwords[rng.below(stopwords.size())]);
        tags.push_back("O");
      }
    }
  };

  for (size_t i = 0; i < cfg.sentences; ++i) {
    std::vector<std::string> toks, tags;
    make_sentence(toks, tags);
    if (rng.bernoulli(cfg.ambiguous_rate)) {
      const size_t at = rng.below(toks.size() + 1);
      // Insert only at span boundaries so the rest of the sentence stays clean.
      size_t pos = at;
      while (pos < tags.size() && tags[pos].rfind("I-", 0) == 0) ++pos;
      std::vector<std::string> insert;
      if (rng.bernoulli(0.6)) {
        insert = {two_domain[rng.below(two_domain.size())]};
      } else {
        insert = overlaps[rng.below(overlaps.size())];
      }
      toks.insert(toks.begin() + static_cast<long>(pos), insert.begin(), insert.end());
      b.ambiguous.push_back(b.corpus.size());
    }
    b.corpus.push_back(std::move(toks));
  }
  for (size_t i = 0; i < cfg.test_sentences; ++i) {
    LabeledSentence s;
    make_sentence(s.tokens, s.tags);
    b.test.push_back(std::move(s));
  }
  return b;
}

namespace {

std::vector<double> unit_gaussian(Rng &rng, size_t d) {
  std::vector<double> v(d);
  double n = 0;
  for (double &x : v) {
    x = rng.normal();
    n += x * x;
  }
  n = std::sqrt(n);
  for (double &x : v) x /= n;
  return v;
}

// Rows of a random orthogonal matrix by Gram-Schmidt.
std::vector<std::vector<double>> random_orthogonal(Rng &rng, size_t d) {
  std::vector<std::vector<double>> q;
  while (q.size() < d) {
    std::vector<double> v = unit_gaussian(rng, d);
    for (const auto &u : q) {
      double dot = 0;
      for (size_t i = 0; i < d; ++i) dot += u[i] * v[i];
      for (size_t i = 0; i < d; ++i) v[i] -= dot * u[i];
    }
    double n = 0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n < 1e-6) continue;
    for (double &x : v) x /= n;
    q.push_back(std::move(v));
  }
  return q;
}

}  // namespace

HypernymBenchmark make_hypernym_benchmark(const HypernymBenchmarkConfig &cfg) {
  if (cfg.dim == 0 || cfg.hypernyms < 2) throw ConfigError("hypernym benchmark: dim >= 1 and hypernyms >= 2");
  Rng rng(mix_seed(cfg.seed, "hypernym.benchmark"));
  const size_t d = cfg.dim;
  HypernymBenchmark b;
  b.embeddings = ConceptEmbeddings(d);
  const auto m = random_orthogonal(rng, d);
  std::vector<std::vector<double>> hvec;
  for (size_t j = 0; j < cfg.hypernyms; ++j) {
    b.hypernyms.push_back(pad_id("h", j));
    hvec.push_back(unit_gaussian(rng, d));
    b.embeddings.set(b.hypernyms.back(), hvec.back());
  }
  b.vocabulary = b.hypernyms;
  const size_t total = cfg.train_hyponyms + cfg.test_hyponyms;
  for (size_t i = 0; i < total; ++i) {
    const size_t j = rng.below(cfg.hypernyms);
    const std::vector<double> g = unit_gaussian(rng, d);
    std::vector<double> p(d, 0.0);
    double n = 0;
    for (size_t r = 0; r < d; ++r) {
      for (size_t c = 0; c < d; ++c) p[r] += m[r][c] * hvec[j][c];
      p[r] += cfg.noise * g[r];
      n += p[r] * p[r];
    }
    n = std::sqrt(n);
    for (double &x : p) x /= n;
    const std::string id = pad_id("c", i);
    b.embeddings.set(id, p);
    b.vocabulary.push_back(id);
    if (i < cfg.train_hyponyms) {
      b.train.push_back({id, b.hypernyms[j]});
    } else {
      b.test_gold[id].insert(b.hypernyms[j]);
    }
  }
  return b;
}

ClassifierBenchmark make_classifier_benchmark(const ClassifierBenchmarkConfig &cfg) {
  if (cfg.words_per_class < 2) throw ConfigError("classifier benchmark: at least 2 words per class");
  if (!(cfg.incompatible_rate > 0.0 && cfg.incompatible_rate < 1.0)) {
    throw ConfigError("classifier benchmark: incompatible_rate must lie in (0, 1)");
  }
  static const std::vector<std::string> kClasses = {"Function", "Category", "Event", "Style", "Audience"};
  Rng rng(mix_seed(cfg.seed, "classifier.benchmark"));
  WordFactory factory(mix_seed(cfg.seed, "classifier.words"));
  factory.reserve("for");
  ClassifierBenchmark b;
  add_domain_roots(b.store);
  std::map<std::string, std::vector<std::string>> words;
  std::map<std::string, std::string> pos{{"for", "ADP"}};
  size_t next_id = 0;
  for (const auto &cls : kClasses) {
    for (size_t i = 0; i < cfg.words_per_class; ++i) {
      const std::string w = factory.next();
      words[cls].push_back(w);
      pos[w] = cls == "Function" || cls == "Style" ? "ADJ" : "NOUN";
      b.store.upsert(PrimitiveConcept{pad_id("p", next_id++), w, {cls}, {}});
    }
  }
  std::vector<std::string> fillers;
  for (size_t i = 0; i < 30; ++i) {
    fillers.push_back(factory.next());
    pos[fillers.back()] = "X";
  }
  b.pos = PosLexicon(pos);
  b.patterns = {GenerationPattern::parse("function-category-event", "[Function] [Category] for [Event]"),
                GenerationPattern::parse("style-category", "[Style] [Category]"),
                GenerationPattern::parse("category-audience", "[Category] for [Audience]")};

  // Both modifier classes sit right before a Category word.
  std::vector<std::pair<std::string, std::string>> bad_pairs;
  for (const std::string left : {"Function", "Style"}) {
    for (const auto &a : words[left]) {
      for (const auto &c : words["Category"]) {
        if (rng.bernoulli(cfg.incompatible_rate)) {
          b.incompatible.insert({a, c});
          bad_pairs.push_back({a, c});
        }
      }
    }
  }
  if (bad_pairs.empty()) throw ConfigError("classifier benchmark: empty incompatibility table");
  auto pick = [&](const std::string &cls) { return words[cls][rng.below(words[cls].size())]; };
  auto good = [&]() {
    const size_t p = rng.below(3);
    while (true) {
      const std::string c = pick("Category");
      if (p == 2) return std::vector<std::string>{c, "for", pick("Audience")};
      const std::string m = pick(p == 0 ? "Function" : "Style");
      if (b.incompatible.count({m, c})) continue;
      if (p == 0) return std::vector<std::string>{m, c, "for", pick("Event")};
      return std::vector<std::string>{m, c};
    }
  };
  auto bad = [&]() {
    if (rng.bernoulli(0.5)) {
      const auto &[m, c] = bad_pairs[rng.below(bad_pairs.size())];
      const bool is_function = std::find(words["Function"].begin(), words["Function"].end(), m) !=
                               words["Function"].end();
      if (is_function) return std::vector<std::string>{m, c, "for", pick("Event")};
      return std::vector<std::string>{m, c};
    }
    const auto g = good();
    auto t = g;
    while (t == g) rng.shuffle(t);
    return t;
  };

  for (size_t i = 0; i < cfg.corpus_sentences; ++i) {
    std::vector<std::string> sent;
    const size_t phrases = 1 + rng.below(2);
    for (size_t k = 0; k < phrases; ++k) {
      for (size_t f = 1 + rng.below(3); f > 0; --f) sent.push_back(fillers[rng.below(fillers.size())]);
      const auto g = good();
      sent.insert(sent.end(), g.begin(), g.end());
    }
    for (size_t f = 1 + rng.below(3); f > 0; --f) sent.push_back(fillers[rng.below(fillers.size())]);
    b.corpus.push_back(std::move(sent));
  }
  auto draw = [&](size_t n, std::vector<LabeledCandidate> &out) {
    for (size_t i = 0; i < n; ++i) {
      if (i % 2 == 0) {
        out.push_back({good(), 1});
      } else {
        out.push_back({bad(), 0});
      }
    }
  };
  draw(cfg.train, b.train);
  draw(cfg.test, b.test);
  return b;
}

MatchBenchmark make_match_benchmark(const MatchBenchmarkConfig &cfg) {
  if (cfg.events < 2 || cfg.test_events == 0 || cfg.test_events >= cfg.events) {
    throw ConfigError("match benchmark: need 0 < test_events < events");
  }
  if (cfg.modifiers == 0 || cfg.concepts_per_event == 0 || cfg.drift_items == 0) {
    throw ConfigError("match benchmark: modifiers, concepts and drift items must be positive");
  }
  constexpr size_t kAssoc = 4;
  Rng rng(mix_seed(cfg.seed, "match.benchmark"));
  WordFactory factory(mix_seed(cfg.seed, "match.words"));
  for (auto w : {"outdoor", "barbecue", "charcoal", "grill", "skewer", "tongs"}) factory.reserve(w);
  MatchBenchmark b;
  add_domain_roots(b.store);
  std::map<std::string, std::string> pos;
  size_t next_prim = 0, next_item = 0;
  auto primitive = [&](const std::string &w, const std::string &cls, const std::string &tag) {
    pos[w] = tag;
    const std::string id = pad_id("p", next_prim++);
    b.store.upsert(PrimitiveConcept{id, w, {cls}, {}});
    return id;
  };

  std::vector<std::string> modifiers{"outdoor"}, modifier_ids;
  while (modifiers.size() < cfg.modifiers) modifiers.push_back(factory.next());
  for (const auto &m : modifiers) modifier_ids.push_back(primitive(m, "Location", "ADJ"));
  std::vector<std::string> fillers;
  for (size_t i = 0; i < 40; ++i) {
    fillers.push_back(factory.next());
    pos[fillers.back()] = "X";
  }
  // Event 0 is the fixture and is held out.
  std::vector<std::string> events{"barbecue"}, event_ids;
  std::vector<std::vector<std::string>> assoc{{"charcoal", "grill", "skewer", "tongs"}};
  while (events.size() < cfg.events) {
    events.push_back(factory.next());
    std::vector<std::string> a;
    for (size_t k = 0; k < kAssoc; ++k) a.push_back(factory.next());
    assoc.push_back(a);
  }
  for (size_t e = 0; e < events.size(); ++e) {
    event_ids.push_back(primitive(events[e], "Event", "NOUN"));
    for (const auto &w : assoc[e]) primitive(w, "Category", "NOUN");
    b.glosses[events[e]] = assoc[e];
  }
  b.pos = PosLexicon(pos);

  auto filler = [&]() { return fillers[rng.below(fillers.size())]; };
  auto add_item = [&](std::vector<std::string> toks) {
    Item it;
    it.id = pad_id("i", next_item++);
    it.tokens = std::move(toks);
    it.title = join_tokens(it.tokens, 0, it.tokens.size());
    it.category = "Category";
    b.store.upsert(it);
    return it.id;
  };
  // Items per event; modifiers are sprinkled in at random.
  std::vector<std::vector<std::string>> direct(events.size()), drift(events.size());
  std::map<std::string, std::set<std::string>> item_modifiers;
  for (size_t e = 0; e < events.size(); ++e) {
    for (size_t k = 0; k < cfg.direct_items + cfg.drift_items; ++k) {
      const bool is_drift = k >= cfg.direct_items;
      std::vector<std::string> t;
      if (!is_drift) t.push_back(events[e]);
      std::vector<std::string> a = assoc[e];
      rng.shuffle(a);
      t.insert(t.end(), a.begin(), a.begin() + (is_drift ? 2 : 1));
      t.push_back(filler());
      if (rng.bernoulli(0.5)) t.push_back(filler());
      std::string mod;
      if (!(e == 0 && k == cfg.direct_items) && rng.bernoulli(0.4)) {
        mod = modifiers[rng.below(modifiers.size())];
        t.insert(t.begin() + static_cast<long>(rng.below(t.size() + 1)), mod);
      }
      rng.shuffle(t);
      const std::string id = add_item(t);
      if (!mod.empty()) item_modifiers[id].insert(mod);
      (is_drift ? drift : direct)[e].push_back(id);
    }
  }
  b.fixture_item = drift[0][0];

  auto add_concept = [&](const std::vector<std::string> &toks, const std::vector<std::string> &links) {
    ECommerceConcept c;
    c.phrase = join_tokens(toks, 0, toks.size());
    c.tokens = toks;
    c.id = ecommerce_id(c.phrase);
    c.status = ConceptStatus::kValidated;
    for (size_t i = 0; i < links.size(); ++i) c.links.push_back({i, i + 1, links[i]});
    return b.store.upsert(c);
  };
  b.fixture_primitive_concept = add_concept({"outdoor"}, {modifier_ids[0]});
  // Promoted modifiers match exactly the items that mention them. "outdoor"
  // itself stays out of training.
  for (size_t m = 1; m < modifiers.size(); ++m) {
    const std::string cid = add_concept({modifiers[m]}, {modifier_ids[m]});
    std::vector<std::string> with, without;
    for (const auto &[id, mods] : item_modifiers) {
      if (mods.count(modifiers[m])) with.push_back(id);
    }
    for (size_t e = 0; e < events.size(); ++e) {
      for (const auto *group : {&direct[e], &drift[e]}) {
        for (const auto &i : *group) {
          if (!item_modifiers[i].count(modifiers[m])) without.push_back(i);
        }
      }
    }
    rng.shuffle(with);
    rng.shuffle(without);
    for (size_t n = 0; n < cfg.negatives; ++n) {
      if (n < with.size()) b.train.push_back({cid, with[n], 1});
      b.train.push_back({cid, without[n], 0});
    }
  }

  const size_t train_events = cfg.events - cfg.test_events;
  for (size_t e = 0; e < events.size(); ++e) {
    // Held-out events are the fixture plus the tail of the list.
    const bool is_test = e == 0 || e > train_events;
    std::vector<size_t> mods(modifiers.size());
    std::iota(mods.begin(), mods.end(), 0);
    rng.shuffle(mods);
    if (e == 0) std::swap(mods[0], *std::find(mods.begin(), mods.end(), 0));
    for (size_t c = 0; c < cfg.concepts_per_event && c < mods.size(); ++c) {
      const std::string &mod = modifiers[mods[c]];
      const std::string cid = add_concept({mod, events[e]}, {modifier_ids[mods[c]], event_ids[e]});
      if (e == 0 && c == 0) b.fixture_concept = cid;
      auto &out = is_test ? b.test : b.train;
      for (const auto &i : direct[e]) out.push_back({cid, i, 1});
      for (const auto &i : drift[e]) {
        out.push_back({cid, i, 1});
        if (is_test) b.drift.insert({cid, i});
      }
      // Negatives from other events, preferring items that share the modifier.
      std::vector<std::string> shared, other;
      for (size_t f = 0; f < events.size(); ++f) {
        if (f == e) continue;
        for (const auto *group : {&direct[f], &drift[f]}) {
          for (const auto &i : *group) (item_modifiers[i].count(mod) ? shared : other).push_back(i);
        }
      }
      rng.shuffle(shared);
      rng.shuffle(other);
      for (size_t n = 0; n < cfg.negatives; ++n) {
        const bool from_shared = n % 2 == 0 && n / 2 < shared.size();
        out.push_back({cid, from_shared ? shared[n / 2] : other[n], 0});
      }
    }
  }
  return b;
}

}  // namespace econet::synthetic
