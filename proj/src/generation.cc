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

#include "econet/generation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "econet/random.h"

namespace econet {

using nlohmann::json;

GenerationPattern::GenerationPattern(std::string id, std::vector<PatternSlot> slots)
    : id_(std::move(id)), slots_(std::move(slots)) {
  if (std::none_of(slots_.begin(), slots_.end(), [](const PatternSlot &s) { return s.is_class; })) {
    throw ConfigError("generation pattern '" + id_ + "' has no class slot");
  }
  for (const auto &s : slots_) {
    if (s.value.empty()) throw ConfigError("generation pattern '" + id_ + "' has an empty slot");
  }
}

GenerationPattern GenerationPattern::parse(const std::string &id, const std::string &text) {
  std::vector<PatternSlot> slots;
  for (const auto &tok : split_tokens(text)) {
    if (tok.size() >= 2 && tok.front() == '[' && tok.back() == ']') {
      slots.push_back({true, tok.substr(1, tok.size() - 2)});
    } else {
      slots.push_back({false, tok});
    }
  }
  return GenerationPattern(id, std::move(slots));
}

std::string GenerationPattern::text() const {
  std::string out;
  for (const auto &s : slots_) {
    if (!out.empty()) out += ' ';
    out += s.is_class ? "[" + s.value + "]" : s.value;
  }
  return out;
}

json GenerationPattern::to_json() const {
  json slots = json::array();
  for (const auto &s : slots_) slots.push_back(s.is_class ? json{{"class", s.value}} : json{{"literal", s.value}});
  return json{{"id", id_}, {"slots", slots}};
}

GenerationPattern GenerationPattern::from_json(const json &j) {
  const std::string id = j.at("id").get<std::string>();
  if (j.contains("pattern")) return parse(id, j.at("pattern").get<std::string>());
  std::vector<PatternSlot> slots;
  for (const auto &s : j.at("slots")) {
    if (s.contains("class")) {
      slots.push_back({true, s.at("class").get<std::string>()});
    } else {
      slots.push_back({false, s.at("literal").get<std::string>()});
    }
  }
  return GenerationPattern(id, std::move(slots));
}

std::vector<GenerationPattern> load_generation_patterns(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pattern file: " + path);
  std::vector<GenerationPattern> out;
  for (const auto &p : json::parse(in)) out.push_back(GenerationPattern::from_json(p));
  return out;
}

json CandidateConcept::to_json() const {
  json links_j = json::array();
  for (const auto &l : links) links_j.push_back({{"begin", l.begin}, {"end", l.end}, {"primitive", l.primitive}});
  json j{{"phrase", phrase}, {"tokens", tokens}, {"source", source}, {"links", links_j}};
  if (!pattern_id.empty()) j["pattern"] = pattern_id;
  if (score) j["score"] = *score;
  return j;
}

CandidateConcept CandidateConcept::from_json(const json &j) {
  CandidateConcept c;
  c.phrase = j.at("phrase").get<std::string>();
  c.tokens = j.contains("tokens") ? j.at("tokens").get<std::vector<std::string>>() : split_tokens(c.phrase);
  c.source = j.value("source", "mined");
  c.pattern_id = j.value("pattern", "");
  if (j.contains("links")) {
    for (const auto &l : j.at("links")) {
      c.links.push_back({l.at("begin").get<size_t>(), l.at("end").get<size_t>(), l.at("primitive").get<std::string>()});
    }
  }
  if (j.contains("score")) c.score = j.at("score").get<double>();
  return c;
}

namespace {

bool in_class(const PrimitiveConcept &p, const std::string &cls, const ConceptStore &store) {
  for (const auto &c : p.classes) {
    if (store.is_descendant_or_self(c, cls)) return true;
  }
  return false;
}

void require_class(const ConceptStore &store, const std::string &cls, const std::string &pattern) {
  if (!store.find_class(cls)) {
    throw DanglingReferenceError("generation pattern '" + pattern + "' references unknown class " + cls);
  }
}

}  // namespace

std::vector<CandidateConcept> generate_from_patterns(const std::vector<GenerationPattern> &patterns,
                                                     const ConceptStore &store, size_t limit) {
  const auto primitives = store.primitives();
  std::set<std::string> seen;
  std::vector<CandidateConcept> out;
  for (const auto &pattern : patterns) {
    const auto &slots = pattern.slots();
    std::vector<std::vector<const PrimitiveConcept *>> fillers(slots.size());
    bool empty = false;
    for (size_t s = 0; s < slots.size(); ++s) {
      if (!slots[s].is_class) continue;
      require_class(store, slots[s].value, pattern.id());
      for (const auto &p : primitives) {
        if (in_class(p, slots[s].value, store)) fillers[s].push_back(&p);
      }
      empty = empty || fillers[s].empty();
    }
    if (empty) continue;
    std::vector<size_t> odo(slots.size(), 0);
    size_t emitted = 0;
    while (limit == 0 || emitted < limit) {
      CandidateConcept c;
      c.source = "generated";
      c.pattern_id = pattern.id();
      std::set<std::string> used;
      bool repeat = false;
      for (size_t s = 0; s < slots.size(); ++s) {
        if (!slots[s].is_class) {
          c.tokens.push_back(slots[s].value);
          continue;
        }
        const PrimitiveConcept *p = fillers[s][odo[s]];
        repeat = repeat || !used.insert(p->id).second;
        const auto toks = split_tokens(p->surface);
        c.links.push_back({c.tokens.size(), c.tokens.size() + toks.size(), p->id});
        c.tokens.insert(c.tokens.end(), toks.begin(), toks.end());
      }
      c.phrase = join_tokens(c.tokens, 0, c.tokens.size());
      if (!repeat && seen.insert(c.phrase).second) {
        out.push_back(std::move(c));
        ++emitted;
      }
      // Advance the odometer; class slots only, last slot fastest.
      size_t s = slots.size();
      bool carry = true;
      while (carry && s > 0) {
        --s;
        if (!slots[s].is_class) continue;
        if (++odo[s] < fillers[s].size()) {
          carry = false;
        } else {
          odo[s] = 0;
        }
      }
      if (carry) break;
    }
  }
  return out;
}

std::vector<CandidateConcept> primitive_candidates(const ConceptStore &store) {
  std::vector<CandidateConcept> out;
  std::set<std::string> seen;
  for (const auto &p : store.primitives()) {
    if (!seen.insert(p.surface).second) continue;
    CandidateConcept c;
    c.phrase = p.surface;
    c.tokens = split_tokens(p.surface);
    c.source = "primitive";
    c.links.push_back({0, c.tokens.size(), p.id});
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

bool match_slots(const std::vector<std::string> &tokens, size_t pos, const std::vector<PatternSlot> &slots,
                 size_t si, size_t max_len, const ConceptStore &store) {
  if (si == slots.size()) return pos == tokens.size();
  if (pos >= tokens.size()) return false;
  const PatternSlot &s = slots[si];
  if (!s.is_class) return tokens[pos] == s.value && match_slots(tokens, pos + 1, slots, si + 1, max_len, store);
  for (size_t len = 1; len <= max_len && pos + len <= tokens.size(); ++len) {
    for (const auto &p : store.lookup_surface(join_tokens(tokens, pos, pos + len))) {
      if (in_class(p, s.value, store) && match_slots(tokens, pos + len, slots, si + 1, max_len, store)) return true;
    }
  }
  return false;
}

}  // namespace

bool matches_pattern(const std::vector<std::string> &tokens, const GenerationPattern &pattern,
                     const ConceptStore &store) {
  return match_slots(tokens, 0, pattern.slots(), 0, std::max<size_t>(1, store.max_surface_tokens()), store);
}

std::vector<CandidateConcept> mine_candidates(const std::vector<std::vector<std::string>> &corpus,
                                              const MiningConfig &cfg) {
  if (cfg.min_tokens == 0 || cfg.max_tokens < cfg.min_tokens) throw ConfigError("mining: bad n-gram range");
  std::unordered_map<std::string, size_t> counts;
  double total = 0;
  for (const auto &sent : corpus) {
    total += static_cast<double>(sent.size());
    for (size_t i = 0; i < sent.size(); ++i) {
      for (size_t n = 1; n <= cfg.max_tokens && i + n <= sent.size(); ++n) ++counts[join_tokens(sent, i, i + n)];
    }
  }
  if (total == 0) return {};
  auto prob = [&](const std::string &g) { return static_cast<double>(counts.at(g)) / total; };

  struct Scored {
    CandidateConcept c;
    size_t count;
    double score;
  };
  std::map<std::string, Scored> kept;
  for (const auto &[gram, count] : counts) {
    if (count < cfg.min_count) continue;
    const auto toks = split_tokens(gram);
    if (toks.size() < cfg.min_tokens) continue;
    if (cfg.stopwords.count(toks.front()) || cfg.stopwords.count(toks.back())) continue;
    double npmi = 1.0;
    if (toks.size() > 1) {
      const double pg = prob(gram);
      if (pg >= 1.0) continue;
      for (size_t s = 1; s < toks.size(); ++s) {
        const double pl = prob(join_tokens(toks, 0, s)), pr = prob(join_tokens(toks, s, toks.size()));
        npmi = std::min(npmi, std::log(pg / (pl * pr)) / -std::log(pg));
      }
    }
    if (npmi < cfg.min_npmi) continue;
    CandidateConcept c;
    c.phrase = gram;
    c.tokens = toks;
    c.source = "mined";
    kept[gram] = {std::move(c), count, static_cast<double>(count) * npmi};
  }
  // An n-gram that only ever occurs inside one longer kept n-gram is that
  // phrase's fragment.
  std::set<std::string> fragments;
  for (const auto &[gram, s] : kept) {
    const auto &t = s.c.tokens;
    for (size_t b = 0; b <= 1; ++b) {
      const size_t e = t.size() - (1 - b);
      if (e - b < cfg.min_tokens || e <= b) continue;
      auto it = kept.find(join_tokens(t, b, e));
      if (it != kept.end() && it->second.count == s.count) fragments.insert(it->first);
    }
  }
  std::vector<Scored> ranked;
  for (auto &[gram, s] : kept) {
    if (!fragments.count(gram)) ranked.push_back(std::move(s));
  }
  std::sort(ranked.begin(), ranked.end(), [](const Scored &a, const Scored &b) {
    if (a.score != b.score) return a.score > b.score;
    return a.c.phrase < b.c.phrase;
  });
  std::vector<CandidateConcept> out;
  for (auto &s : ranked) {
    s.c.score = s.score;
    out.push_back(std::move(s.c));
  }
  return out;
}

std::vector<double> WideFeatures::vector() const {
  return {std::log1p(static_cast<double>(char_count)),
          std::log1p(static_cast<double>(word_count)),
          std::log(std::max(lm_perplexity, 1.0)) / 5.0,
          mean_popularity,
          min_popularity,
          pattern_match ? 1.0 : 0.0};
}

json WideFeatures::to_json() const {
  return json{{"char_count", char_count},         {"word_count", word_count},
              {"lm_perplexity", lm_perplexity},   {"mean_popularity", mean_popularity},
              {"min_popularity", min_popularity}, {"pattern_match", pattern_match}};
}

WideFeatureExtractor::WideFeatureExtractor(std::shared_ptr<const LanguageModel> lm,
                                           std::shared_ptr<const WordPopularity> popularity,
                                           std::vector<GenerationPattern> patterns,
                                           std::shared_ptr<const ConceptStore> store)
    : lm_(std::move(lm)), popularity_(std::move(popularity)), patterns_(std::move(patterns)), store_(std::move(store)) {
  if (!lm_ || !popularity_) throw ConfigError("wide features need a language model and word popularity");
}

WideFeatures WideFeatureExtractor::extract(const std::vector<std::string> &tokens) const {
  if (tokens.empty()) throw std::invalid_argument("wide features: empty candidate");
  WideFeatures f;
  f.word_count = tokens.size();
  for (const auto &t : tokens) f.char_count += utf8_chars(t).size();
  f.lm_perplexity = lm_->perplexity(tokens);
  f.min_popularity = 1.0;
  for (const auto &t : tokens) {
    const double p = (*popularity_)(t);
    f.mean_popularity += p;
    f.min_popularity = std::min(f.min_popularity, p);
  }
  f.mean_popularity /= static_cast<double>(tokens.size());
  if (store_) {
    for (const auto &p : patterns_) {
      if (matches_pattern(tokens, p, *store_)) {
        f.pattern_match = true;
        break;
      }
    }
  }
  return f;
}

json ClassifierConfig::to_json() const {
  return json{{"char_dim", char_dim},       {"char_filters", char_filters}, {"char_window", char_window},
              {"word_dim", word_dim},       {"pos_dim", pos_dim},           {"attention_dim", attention_dim},
              {"wide_hidden", wide_hidden}, {"wide_out", wide_out},         {"mlp_hidden", mlp_hidden},
              {"use_wide", use_wide},       {"use_knowledge", use_knowledge}};
}

ClassifierConfig ClassifierConfig::from_json(const json &j) {
  ClassifierConfig c;
  c.char_dim = j.value("char_dim", c.char_dim);
  c.char_filters = j.value("char_filters", c.char_filters);
  c.char_window = j.value("char_window", c.char_window);
  c.word_dim = j.value("word_dim", c.word_dim);
  c.pos_dim = j.value("pos_dim", c.pos_dim);
  c.attention_dim = j.value("attention_dim", c.attention_dim);
  c.wide_hidden = j.value("wide_hidden", c.wide_hidden);
  c.wide_out = j.value("wide_out", c.wide_out);
  c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
  c.use_wide = j.value("use_wide", c.use_wide);
  c.use_knowledge = j.value("use_knowledge", c.use_knowledge);
  return c;
}

ConceptFeaturizer::ConceptFeaturizer(Vocabulary words, Vocabulary chars, PosLexicon pos,
                                     std::shared_ptr<const VectorProvider> knowledge, WideFeatureExtractor wide)
    : words_(std::move(words)),
      chars_(std::move(chars)),
      pos_(std::move(pos)),
      knowledge_(std::move(knowledge)),
      wide_(std::move(wide)) {
  if (!knowledge_) throw ConfigError("concept featurizer needs a knowledge provider");
}

ConceptFeaturizer ConceptFeaturizer::build(const std::vector<std::vector<std::string>> &texts, PosLexicon pos,
                                           std::shared_ptr<const VectorProvider> knowledge,
                                           WideFeatureExtractor wide) {
  std::vector<std::vector<std::string>> chars;
  for (const auto &t : texts) chars.push_back(utf8_chars(join_tokens(t, 0, t.size())));
  return ConceptFeaturizer(Vocabulary::build(texts), Vocabulary::build(chars), std::move(pos), std::move(knowledge),
                           std::move(wide));
}

ClassifierInput ConceptFeaturizer::featurize(const std::vector<std::string> &tokens) const {
  if (tokens.empty()) throw std::invalid_argument("classifier: empty candidate");
  ClassifierInput x;
  x.tokens = tokens;
  for (const auto &c : utf8_chars(join_tokens(tokens, 0, tokens.size()))) x.char_ids.push_back(chars_.id(c));
  for (const auto &t : tokens) {
    x.word_ids.push_back(words_.id(t));
    x.pos_ids.push_back(pos_.tag_id(t));
  }
  x.knowledge = knowledge_->rows(tokens);
  x.wide = Tensor::row(wide_.extract(tokens).vector());
  return x;
}

std::vector<LabeledCandidate> read_labeled_candidates(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open labeled candidates: " + path);
  std::vector<LabeledCandidate> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    const std::string label = tab == std::string::npos ? "" : line.substr(tab + 1);
    if (label != "0" && label != "1") throw ParseError(lineno, "expected phrase<TAB>0|1");
    auto toks = split_tokens(line.substr(0, tab));
    if (toks.empty()) throw ParseError(lineno, "empty phrase");
    out.push_back({std::move(toks), label == "1" ? 1 : 0});
  }
  return out;
}

ConceptClassifier::ConceptClassifier(ClassifierConfig cfg, size_t words, size_t chars, size_t pos_tags,
                                     size_t knowledge_dim, uint64_t seed)
    : cfg_(cfg), words_(words), chars_(chars), pos_tags_(pos_tags), knowledge_dim_(knowledge_dim) {
  if (cfg_.char_window % 2 == 0) throw ConfigError("classifier char window must be odd");
  const size_t cw = static_cast<size_t>(cfg_.char_window);
  const size_t dw = cfg_.word_dim + cfg_.pos_dim;
  add_glorot(params_, "cls.char_emb", {chars, cfg_.char_dim}, cfg_.char_dim, cfg_.char_dim, seed);
  add_glorot(params_, "cls.char_conv", {cw, cfg_.char_dim, cfg_.char_filters}, cw * cfg_.char_dim,
             cfg_.char_filters, seed);
  params_.add("cls.char_b", Tensor({1, cfg_.char_filters}));
  add_glorot(params_, "cls.word_emb", {words, cfg_.word_dim}, cfg_.word_dim, cfg_.word_dim, seed);
  add_glorot(params_, "cls.pos_emb", {pos_tags, cfg_.pos_dim}, cfg_.pos_dim, cfg_.pos_dim, seed);
  add_glorot(params_, "cls.w_q", {dw, cfg_.attention_dim}, dw, cfg_.attention_dim, seed);
  add_glorot(params_, "cls.w_k", {dw, cfg_.attention_dim}, dw, cfg_.attention_dim, seed);
  add_glorot(params_, "cls.w_v", {dw, dw}, dw, dw, seed);
  size_t deep = cfg_.char_filters + dw;
  if (cfg_.use_knowledge) {
    const size_t dk = knowledge_dim;
    add_glorot(params_, "cls.k_q", {dk, cfg_.attention_dim}, dk, cfg_.attention_dim, seed);
    add_glorot(params_, "cls.k_k", {dk, cfg_.attention_dim}, dk, cfg_.attention_dim, seed);
    add_glorot(params_, "cls.k_v", {dk, dk}, dk, dk, seed);
    deep += dk;
  }
  if (cfg_.use_wide) {
    add_glorot(params_, "cls.wide1", {WideFeatures::kSize, cfg_.wide_hidden}, WideFeatures::kSize, cfg_.wide_hidden,
               seed);
    params_.add("cls.wide1_b", Tensor({1, cfg_.wide_hidden}));
    add_glorot(params_, "cls.wide2", {cfg_.wide_hidden, cfg_.wide_out}, cfg_.wide_hidden, cfg_.wide_out, seed);
    params_.add("cls.wide2_b", Tensor({1, cfg_.wide_out}));
    deep += cfg_.wide_out;
  }
  add_glorot(params_, "cls.mlp1", {deep, cfg_.mlp_hidden}, deep, cfg_.mlp_hidden, seed);
  params_.add("cls.mlp1_b", Tensor({1, cfg_.mlp_hidden}));
  add_glorot(params_, "cls.mlp2", {cfg_.mlp_hidden, 1}, cfg_.mlp_hidden, 1, seed);
  params_.add("cls.mlp2_b", Tensor({1, 1}));
}

Var ConceptClassifier::logit(Graph &g, const ClassifierInput &x) const {
  using namespace ops;
  if (x.word_ids.empty()) throw std::invalid_argument("classifier: empty candidate");
  Var chars = gather_rows(g.param("cls.char_emb"), x.char_ids);
  Var c1 = mean_pool_over_time(
      tanh(add(conv1d(chars, g.param("cls.char_conv"), cfg_.char_window), g.param("cls.char_b"))));
  Var w = concat_cols({gather_rows(g.param("cls.word_emb"), x.word_ids), gather_rows(g.param("cls.pos_emb"), x.pos_ids)});
  Var w2 = add(w, self_attention(w, g.param("cls.w_q"), g.param("cls.w_k"), g.param("cls.w_v")));
  Var seq = w2;
  if (cfg_.use_knowledge) {
    Var k = g.constant(x.knowledge);
    Var k2 = add(k, self_attention(k, g.param("cls.k_q"), g.param("cls.k_k"), g.param("cls.k_v")));
    seq = concat_cols({w2, k2});
  }
  std::vector<Var> parts{c1, max_pool_over_time(seq)};
  if (cfg_.use_wide) {
    Var h = relu(add(matmul(g.constant(x.wide), g.param("cls.wide1")), g.param("cls.wide1_b")));
    parts.push_back(relu(add(matmul(h, g.param("cls.wide2")), g.param("cls.wide2_b"))));
  }
  Var z = relu(add(matmul(concat_cols(parts), g.param("cls.mlp1")), g.param("cls.mlp1_b")));
  return add(matmul(z, g.param("cls.mlp2")), g.param("cls.mlp2_b"));
}

double ConceptClassifier::score(const ClassifierInput &x) const {
  Graph g(&params_);
  const double z = logit(g, x).value().item();
  return 1.0 / (1.0 + std::exp(-z));
}

Var ConceptClassifier::loss(Graph &g, const std::vector<const ClassifierInput *> &xs,
                            const std::vector<int> &labels) const {
  using namespace ops;
  if (xs.empty() || xs.size() != labels.size()) throw ContractError("classifier loss: bad batch");
  std::vector<Var> zs;
  Tensor y({xs.size(), 1}), not_y({xs.size(), 1});
  for (size_t i = 0; i < xs.size(); ++i) {
    zs.push_back(logit(g, *xs[i]));
    y[i] = labels[i] ? 1.0 : 0.0;
    not_y[i] = 1.0 - y[i];
  }
  Var z = zs.size() == 1 ? zs[0] : concat_rows(zs);
  Var ll = add(mul(g.constant(y), log_sigmoid(z)), mul(g.constant(not_y), log_sigmoid(scale(z, -1.0))));
  return scale(sum(ll), -1.0 / static_cast<double>(xs.size()));
}

std::vector<double> ConceptClassifier::train(const std::vector<ClassifierInput> &xs, const std::vector<int> &labels,
                                             const ClassifierTrainConfig &cfg) {
  std::vector<double> history;
  if (cfg.epochs == 0) return history;
  if (xs.size() != labels.size()) throw ContractError("classifier: inputs and labels differ in length");
  const bool has_pos = std::count(labels.begin(), labels.end(), 1) > 0;
  const bool has_neg = std::count(labels.begin(), labels.end(), 0) > 0;
  if (!has_pos || !has_neg) throw ContractError("classifier: training data needs both classes");
  if (cfg.batch == 0) throw ConfigError("classifier: batch must be positive");
  Adam adam(cfg.lr);
  Rng rng(mix_seed(cfg.seed, "classifier.order"));
  std::vector<size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      const size_t end = std::min(order.size(), start + cfg.batch);
      std::vector<const ClassifierInput *> bx;
      std::vector<int> by;
      for (size_t k = start; k < end; ++k) {
        bx.push_back(&xs[order[k]]);
        by.push_back(labels[order[k]]);
      }
      Graph g(&params_);
      Var l = loss(g, bx, by);
      total += l.value().item() * static_cast<double>(bx.size());
      adam.step(params_, g.backward(l));
    }
    history.push_back(total / static_cast<double>(xs.size()));
  }
  return history;
}

json ConceptClassifier::to_json() const {
  return json{{"format", "econet.classifier"},
              {"version", 1},
              {"config", cfg_.to_json()},
              {"words", words_},
              {"chars", chars_},
              {"pos_tags", pos_tags_},
              {"knowledge_dim", knowledge_dim_},
              {"params", params_.to_json()}};
}

ConceptClassifier ConceptClassifier::from_json(const json &j) {
  if (j.value("format", "") != "econet.classifier") throw ConfigError("not a classifier checkpoint");
  ConceptClassifier c(ClassifierConfig::from_json(j.at("config")), j.at("words").get<size_t>(),
                      j.at("chars").get<size_t>(), j.at("pos_tags").get<size_t>(),
                      j.at("knowledge_dim").get<size_t>(), 0);
  c.params_ = ParameterSet::from_json(j.at("params"));
  return c;
}

json ClassificationMetrics::to_json() const {
  return json{{"precision", precision}, {"recall", recall}, {"f1", f1}, {"accuracy", accuracy}};
}

ClassificationMetrics classification_metrics(const std::vector<double> &scores, const std::vector<int> &labels,
                                             double threshold) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw std::invalid_argument("classification metrics: empty or mismatched inputs");
  }
  double tp = 0, fp = 0, fn = 0, correct = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    tp += pred && labels[i] == 1;
    fp += pred && labels[i] == 0;
    fn += !pred && labels[i] == 1;
    correct += pred == (labels[i] == 1);
  }
  ClassificationMetrics m;
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.accuracy = correct / static_cast<double>(scores.size());
  return m;
}

std::string ecommerce_id(const std::string &phrase) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "e%016llx", static_cast<unsigned long long>(fnv1a64(phrase)));
  return buf;
}

namespace {

// Longest surface match left to right; smallest primitive id per span.
std::vector<ConceptLink> greedy_links(const std::vector<std::string> &tokens, const ConceptStore &store) {
  std::vector<ConceptLink> out;
  const size_t max_len = std::max<size_t>(1, store.max_surface_tokens());
  for (size_t i = 0; i < tokens.size();) {
    size_t step = 1;
    for (size_t len = std::min(max_len, tokens.size() - i); len >= 1; --len) {
      auto hits = store.lookup_surface(join_tokens(tokens, i, i + len));
      if (hits.empty()) continue;
      out.push_back({i, i + len, hits.front().id});
      step = len;
      break;
    }
    i += step;
  }
  return out;
}

}  // namespace

QaResult qa_gate(const std::vector<CandidateConcept> &batch, double sample_rate, double accuracy_threshold,
                 Oracle &oracle, uint64_t seed, ConceptStore *store) {
  if (!(sample_rate > 0.0 && sample_rate <= 1.0)) throw ConfigError("qa gate: sample rate must lie in (0, 1]");
  if (batch.empty()) throw ConfigError("qa gate: empty batch");
  const size_t n = std::max<size_t>(1, static_cast<size_t>(std::floor(sample_rate * static_cast<double>(batch.size()))));
  std::vector<size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(mix_seed(seed, "qa_gate"));
  rng.shuffle(idx);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  QaResult r;
  for (size_t i : idx) r.sampled.push_back(batch[i].phrase);
  r.labels = oracle.label(r.sampled);
  if (r.labels.size() != r.sampled.size()) throw OracleError("qa gate: oracle returned the wrong number of labels");
  r.accuracy = static_cast<double>(std::count(r.labels.begin(), r.labels.end(), 1)) / static_cast<double>(n);
  r.accepted = r.accuracy >= accuracy_threshold;
  if (!r.accepted || store == nullptr) return r;
  std::vector<ECommerceConcept> nodes;
  for (const auto &c : batch) {
    ECommerceConcept e;
    e.phrase = c.phrase;
    e.tokens = c.tokens.empty() ? split_tokens(c.phrase) : c.tokens;
    e.id = ecommerce_id(join_tokens(e.tokens, 0, e.tokens.size()));
    e.status = ConceptStatus::kValidated;
    e.links = c.links.empty() ? greedy_links(e.tokens, *store) : c.links;
    if (e.links.empty()) throw InvariantError("qa gate: candidate '" + c.phrase + "' links no primitive concept");
    nodes.push_back(std::move(e));
  }
  for (const auto &e : nodes) r.written.push_back(store->upsert(e));
  return r;
}

}  // namespace econet
