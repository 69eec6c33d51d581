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

// Seeded generators for the in-repo benchmarks. Each one plants a known
// ground truth so trained models can be scored against it.

#ifndef ECONET_SYNTHETIC_H_
#define ECONET_SYNTHETIC_H_

#include <map>
#include <set>
#include <string>
#include <vector>

#include "econet/generation.h"
#include "econet/hypernym.h"
#include "econet/matching.h"
#include "econet/random.h"
#include "econet/store.h"
#include "econet/tagger.h"
#include "econet/tensor.h"

namespace econet::synthetic {

// Distinct pronounceable lowercase words.
class WordFactory {
 public:
  explicit WordFactory(uint64_t seed) : rng_(seed) {}
  std::string next();
  // Marks words that must never be produced (stopwords, for instance).
  void reserve(const std::string &w) { used_.insert(w); }

 private:
  Rng rng_;
  std::set<std::string> used_;
};

// Adds the 20 domain roots to a store.
void add_domain_roots(ConceptStore &store);

struct TaggerBenchmark {
  std::vector<std::string> domains;
  ConceptStore store;
  std::vector<std::vector<std::string>> corpus;  // raw training sentences
  std::vector<size_t> ambiguous;                 // corpus indices built to be ambiguous
  std::vector<LabeledSentence> test;             // held-out gold
};

struct TaggerBenchmarkConfig {
  size_t vocab = 200;
  size_t domains = 6;
  size_t sentences = 2000;
  size_t test_sentences = 300;
  double ambiguous_rate = 0.1;
  uint64_t seed = 1;
};

TaggerBenchmark make_tagger_benchmark(const TaggerBenchmarkConfig &cfg);

// Linear hypernymy: hyponym p = normalize(M h + noise * g) with M orthogonal
// and h the embedding of its single gold hypernym.
struct HypernymBenchmark {
  ConceptEmbeddings embeddings;
  std::vector<std::string> hypernyms;   // candidate space, "h0000"-style ids
  std::vector<std::string> vocabulary;  // every concept id
  std::vector<std::pair<std::string, std::string>> train;
  std::map<std::string, std::set<std::string>> test_gold;
};

struct HypernymBenchmarkConfig {
  size_t dim = 16;
  size_t hypernyms = 40;
  size_t train_hyponyms = 300;
  size_t test_hyponyms = 100;
  double noise = 0.6;
  uint64_t seed = 1;
};

HypernymBenchmark make_hypernym_benchmark(const HypernymBenchmarkConfig &cfg);

// Concept classification: good candidates fill the patterns
// "[Function] [Category] for [Event]", "[Style] [Category]" and
// "[Category] for [Audience]" with compatible words. Bad ones either put a
// pair from the incompatibility table side by side or shuffle a good phrase.
// The corpus only ever shows compatible phrases.
struct ClassifierBenchmark {
  ConceptStore store;
  std::vector<GenerationPattern> patterns;
  std::vector<std::vector<std::string>> corpus;
  PosLexicon pos;
  std::set<std::pair<std::string, std::string>> incompatible;  // (left, right) surfaces
  std::vector<LabeledCandidate> train;
  std::vector<LabeledCandidate> test;
};

struct ClassifierBenchmarkConfig {
  size_t words_per_class = 8;
  double incompatible_rate = 0.3;
  size_t corpus_sentences = 3000;
  size_t train = 400;
  size_t test = 400;
  uint64_t seed = 1;
};

ClassifierBenchmark make_classifier_benchmark(const ClassifierBenchmarkConfig &cfg);

// Concept-item matching. Concepts are "modifier event" phrases linked to a
// Location and an Event primitive. Each event owns a set of associated item
// words, which is also its gloss. Direct items mention the event word; drift
// items only carry associated words. A pair is positive iff the item was made
// for the concept's event. Negatives come from other events and often share
// the concept's modifier. Test concepts use held-out events.
// The fixture concept is "outdoor barbecue"; "outdoor" alone is a promoted
// primitive, and the fixture item is a charcoal drift item.
struct MatchBenchmark {
  ConceptStore store;
  std::map<std::string, std::vector<std::string>> glosses;
  PosLexicon pos;
  std::vector<PairLabel> train;
  std::vector<PairLabel> test;
  std::set<std::pair<std::string, std::string>> drift;  // (concept, item) drift positives
  std::string fixture_concept, fixture_primitive_concept, fixture_item;
};

struct MatchBenchmarkConfig {
  size_t events = 50;
  size_t test_events = 10;
  size_t modifiers = 6;
  size_t concepts_per_event = 2;
  size_t direct_items = 4;
  size_t drift_items = 6;
  size_t negatives = 12;
  uint64_t seed = 1;
};

MatchBenchmark make_match_benchmark(const MatchBenchmarkConfig &cfg);

}  // namespace econet::synthetic

#endif  // ECONET_SYNTHETIC_H_
