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

#include "econet/tagger.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "econet/random.h"

namespace econet {

using nlohmann::json;

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>> &sequences, size_t min_count) {
  std::map<std::string, size_t> counts;
  for (const auto &seq : sequences)
    for (const auto &t : seq) ++counts[t];
  std::vector<std::pair<std::string, size_t>> sorted(counts.begin(), counts.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto &a, const auto &b) { return a.second > b.second; });
  Vocabulary v;
  for (const auto &[tok, c] : sorted) {
    if (c < min_count || tok == "<unk>") continue;
    v.ids_[tok] = v.entries_.size();
    v.entries_.push_back(tok);
  }
  return v;
}

size_t Vocabulary::id(const std::string &token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? 0 : it->second;
}

Vocabulary Vocabulary::from_json(const json &j) {
  Vocabulary v;
  v.entries_ = j.get<std::vector<std::string>>();
  if (v.entries_.empty() || v.entries_[0] != "<unk>") throw ConfigError("vocabulary must start with <unk>");
  for (size_t i = 1; i < v.entries_.size(); ++i) v.ids_[v.entries_[i]] = i;
  return v;
}

json ScorerConfig::to_json() const {
  return {{"kind", kind},         {"word_dim", word_dim}, {"char_dim", char_dim},
          {"char_filters", char_filters}, {"char_window", char_window}, {"pos_dim", pos_dim},
          {"hidden", hidden},     {"window", window},     {"context_dim", context_dim},
          {"attention_dim", attention_dim}, {"feature_dim", feature_dim}};
}

ScorerConfig ScorerConfig::from_json(const json &j) {
  ScorerConfig c;
  c.kind = j.value("kind", c.kind);
  c.word_dim = j.value("word_dim", c.word_dim);
  c.char_dim = j.value("char_dim", c.char_dim);
  c.char_filters = j.value("char_filters", c.char_filters);
  c.char_window = j.value("char_window", c.char_window);
  c.pos_dim = j.value("pos_dim", c.pos_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.window = j.value("window", c.window);
  c.context_dim = j.value("context_dim", c.context_dim);
  c.attention_dim = j.value("attention_dim", c.attention_dim);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  return c;
}

void ConvAttentionScorer::init(ParameterSet &ps, size_t labels, uint64_t seed) const {
  if (cfg_.window % 2 == 0 || cfg_.char_window % 2 == 0) throw ConfigError("tagger windows must be odd");
  const size_t cw = static_cast<size_t>(cfg_.char_window), w = static_cast<size_t>(cfg_.window);
  const size_t din = cfg_.word_dim + cfg_.char_filters + cfg_.pos_dim;
  const size_t dz = cfg_.hidden + cfg_.context_dim;
  add_glorot(ps, "tagger.word_emb", {words_, cfg_.word_dim}, cfg_.word_dim, cfg_.word_dim, seed);
  add_glorot(ps, "tagger.char_emb", {chars_, cfg_.char_dim}, cfg_.char_dim, cfg_.char_dim, seed);
  add_glorot(ps, "tagger.char_conv", {cw, cfg_.char_dim, cfg_.char_filters}, cw * cfg_.char_dim,
             cfg_.char_filters, seed);
  add_glorot(ps, "tagger.pos_emb", {pos_tags_, cfg_.pos_dim}, cfg_.pos_dim, cfg_.pos_dim, seed);
  add_glorot(ps, "tagger.conv", {w, din, cfg_.hidden}, w * din, cfg_.hidden, seed);
  ps.add("tagger.conv_b", Tensor({1, cfg_.hidden}));
  add_glorot(ps, "tagger.att_q", {dz, cfg_.attention_dim}, dz, cfg_.attention_dim, seed);
  add_glorot(ps, "tagger.att_k", {dz, cfg_.attention_dim}, dz, cfg_.attention_dim, seed);
  add_glorot(ps, "tagger.att_v", {dz, dz}, dz, dz, seed);
  add_glorot(ps, "tagger.out", {2 * dz, labels}, 2 * dz, labels, seed);
  ps.add("tagger.out_b", Tensor({1, labels}));
}

Var ConvAttentionScorer::emissions(Graph &g, const EmissionInput &x) const {
  if (x.size() == 0) throw ContractError("tagger: empty input");
  Var words = ops::gather_rows(g.param("tagger.word_emb"), x.word_ids);
  std::vector<Var> char_feats;
  char_feats.reserve(x.size());
  Var char_table = g.param("tagger.char_emb");
  Var char_kernel = g.param("tagger.char_conv");
  for (const auto &ids : x.char_ids) {
    Var c = ops::conv1d(ops::gather_rows(char_table, ids), char_kernel, cfg_.char_window);
    char_feats.push_back(ops::max_pool_over_time(c));
  }
  Var chars = ops::concat_rows(char_feats);
  Var pos = ops::gather_rows(g.param("tagger.pos_emb"), x.pos_ids);
  Var in = ops::concat_cols({words, chars, pos});
  Var h = ops::tanh(ops::add(ops::conv1d(in, g.param("tagger.conv"), cfg_.window), g.param("tagger.conv_b")));
  Var z = h;
  if (cfg_.context_dim > 0) z = ops::concat_cols({h, g.constant(x.context)});
  Var att = ops::self_attention(z, g.param("tagger.att_q"), g.param("tagger.att_k"), g.param("tagger.att_v"));
  return ops::add(ops::matmul(ops::concat_cols({z, att}), g.param("tagger.out")), g.param("tagger.out_b"));
}

void DenseFeatureScorer::init(ParameterSet &ps, size_t labels, uint64_t seed) const {
  add_glorot(ps, "dense.w", {feature_dim_, labels}, feature_dim_, labels, seed);
  ps.add("dense.b", Tensor({1, labels}));
}

Var DenseFeatureScorer::emissions(Graph &g, const EmissionInput &x) const {
  if (!x.features) throw ContractError("dense scorer: input has no features");
  if (x.features->cols() != feature_dim_) throw ShapeError("dense scorer: feature width mismatch");
  return ops::add(ops::matmul(g.constant(*x.features), g.param("dense.w")), g.param("dense.b"));
}

std::vector<std::string> utf8_chars(const std::string &token) {
  std::vector<std::string> out;
  for (size_t i = 0; i < token.size();) {
    const unsigned char c = static_cast<unsigned char>(token[i]);
    size_t len = 1;
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    len = std::min(len, token.size() - i);
    out.push_back(token.substr(i, len));
    i += len;
  }
  return out;
}

Featurizer Featurizer::build(const std::vector<std::vector<std::string>> &corpus, PosLexicon pos,
                             size_t context_dim) {
  std::vector<std::vector<std::string>> char_seqs;
  for (const auto &sent : corpus)
    for (const auto &t : sent) char_seqs.push_back(utf8_chars(t));
  return Featurizer(Vocabulary::build(corpus), Vocabulary::build(char_seqs), std::move(pos), context_dim);
}

EmissionInput Featurizer::featurize(const std::vector<std::string> &tokens) const {
  EmissionInput x;
  x.tokens = tokens;
  for (const auto &t : tokens) {
    x.word_ids.push_back(words_.id(t));
    std::vector<size_t> cs;
    for (const auto &c : utf8_chars(t)) cs.push_back(chars_.id(c));
    if (cs.empty()) cs.push_back(0);
    x.char_ids.push_back(std::move(cs));
    x.pos_ids.push_back(pos_.tag_id(t));
  }
  if (context_.dim() > 0 && !tokens.empty()) x.context = context_.rows(tokens);
  return x;
}

CrfTagger::CrfTagger(LabelSet labels, ScorerConfig cfg, Featurizer featurizer, uint64_t seed)
    : labels_(std::move(labels)), mask_(labels_.mask()), cfg_(cfg), featurizer_(std::move(featurizer)), seed_(seed) {
  if (cfg_.kind == "conv_attention") {
    if (cfg_.context_dim != featurizer_.context_dim()) {
      throw ConfigError("tagger: scorer and featurizer disagree on the context dimension");
    }
    scorer_ = std::make_unique<ConvAttentionScorer>(cfg_, featurizer_.words().size(), featurizer_.chars().size(),
                                                    featurizer_.pos().tag_count());
  } else if (cfg_.kind == "dense") {
    if (cfg_.feature_dim == 0) throw ConfigError("dense scorer needs feature_dim > 0");
    scorer_ = std::make_unique<DenseFeatureScorer>(cfg_.feature_dim);
  } else {
    throw ConfigError("unknown scorer kind: " + cfg_.kind);
  }
  scorer_->init(params_, labels_.size(), seed_);
  params_.add("crf.transitions", Tensor({labels_.size(), labels_.size()}));
}

Tensor CrfTagger::emissions(const EmissionInput &x) const {
  Graph g(&params_);
  return scorer_->emissions(g, x).value();
}

double CrfTagger::log_partition(const EmissionInput &x) const {
  return econet::log_partition(emissions(x), transitions(), mask_);
}

CrfPath CrfTagger::viterbi(const EmissionInput &x) const { return econet::viterbi(emissions(x), transitions(), mask_); }

std::vector<Span> CrfTagger::decode(const std::vector<std::string> &tokens) const {
  if (tokens.empty()) return {};
  return decode_spans(labels_, viterbi(featurizer_.featurize(tokens)).labels);
}

Var CrfTagger::loss(Graph &g, const EmissionInput &x, const PartialLabeling &allowed) const {
  Var e = scorer_->emissions(g, x);
  return fuzzy_nll_node(e, g.param("crf.transitions"), allowed, mask_);
}

std::vector<double> CrfTagger::train(const std::vector<TrainExample> &data, const TrainConfig &cfg) {
  std::vector<double> history;
  if (cfg.epochs == 0) return history;
  if (data.empty()) throw ContractError("tagger: empty training set");
  if (cfg.batch == 0) throw ConfigError("tagger: batch must be positive");
  for (const auto &ex : data) {
    if (ex.allowed.size() != ex.input.size()) throw ContractError("tagger: labeling length mismatch");
    ex.allowed.validate(labels_.size(), mask_);
  }
  Adam adam(cfg.lr);
  Rng rng(mix_seed(cfg.seed, "tagger.order"));
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      const size_t end = std::min(order.size(), start + cfg.batch);
      Gradients acc;
      for (size_t k = start; k < end; ++k) {
        const TrainExample &ex = data[order[k]];
        Graph g(&params_);
        Var l = loss(g, ex.input, ex.allowed);
        total += l.value().item();
        accumulate(acc, g.backward(l), 1.0 / static_cast<double>(end - start));
      }
      adam.step(params_, acc);
    }
    history.push_back(total / static_cast<double>(data.size()));
  }
  return history;
}

void CrfTagger::save(const std::string &path) const {
  json pos = featurizer_.pos().entries();
  json j{{"format", "econet.tagger"},
         {"version", 1},
         {"domains", labels_.domains()},
         {"scorer", cfg_.to_json()},
         {"words", featurizer_.words().to_json()},
         {"chars", featurizer_.chars().to_json()},
         {"pos", pos},
         {"seed", seed_},
         {"params", params_.to_json()}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write tagger checkpoint: " + path);
  out << j.dump() << '\n';
}

CrfTagger CrfTagger::load(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open tagger checkpoint: " + path);
  const json j = json::parse(in);
  if (j.value("format", "") != "econet.tagger") throw ConfigError(path + " is not a tagger checkpoint");
  ScorerConfig cfg = ScorerConfig::from_json(j.at("scorer"));
  Featurizer f(Vocabulary::from_json(j.at("words")), Vocabulary::from_json(j.at("chars")),
               PosLexicon(j.at("pos").get<std::map<std::string, std::string>>()), cfg.context_dim);
  CrfTagger t(LabelSet(j.at("domains").get<std::vector<std::string>>()), cfg, std::move(f),
              j.at("seed").get<uint64_t>());
  ParameterSet loaded = ParameterSet::from_json(j.at("params"));
  for (const auto &name : t.params_.names()) {
    if (!loaded.contains(name) || loaded.value(name).shape() != t.params_.value(name).shape()) {
      throw ConfigError("tagger checkpoint: parameter " + name + " missing or misshaped");
    }
  }
  t.params_ = std::move(loaded);
  return t;
}

std::vector<std::vector<std::string>> read_token_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, '\t');)
      if (!cell.empty()) cells.push_back(cell);
    if (!cells.empty()) rows.push_back(std::move(cells));
  }
  return rows;
}

void write_token_file(const std::string &path, const std::vector<std::vector<std::string>> &rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto &r : rows) {
    for (size_t i = 0; i < r.size(); ++i) out << (i ? "\t" : "") << r[i];
    out << '\n';
  }
}

PartialLabeling parse_partial_tags(const LabelSet &labels, const std::vector<std::string> &cells) {
  std::vector<std::vector<size_t>> sets;
  for (const auto &cell : cells) {
    std::vector<size_t> set;
    std::stringstream ss(cell);
    for (std::string tag; std::getline(ss, tag, '|');) {
      auto id = labels.find(tag);
      if (!id) throw std::invalid_argument("unknown tag: " + tag);
      set.push_back(*id);
    }
    sets.push_back(std::move(set));
  }
  return PartialLabeling(std::move(sets));
}

std::vector<MinedConcept> mine_concepts(const std::vector<std::vector<std::string>> &corpus,
                                        const CrfTagger &tagger) {
  std::map<std::pair<std::string, std::string>, size_t> counts;
  for (const auto &sent : corpus) {
    for (const Span &s : tagger.decode(sent)) ++counts[{join_tokens(sent, s.begin, s.end), s.domain}];
  }
  std::vector<MinedConcept> out;
  for (const auto &[key, c] : counts) out.push_back({key.first, key.second, c, "awaiting_review"});
  std::stable_sort(out.begin(), out.end(), [](const MinedConcept &a, const MinedConcept &b) { return a.count > b.count; });
  return out;
}

std::vector<TagLink> tag_concept(const std::vector<std::string> &phrase, const CrfTagger &tagger,
                                 const ConceptStore &store) {
  if (phrase.empty()) throw std::invalid_argument("tag_concept: empty phrase");
  std::vector<TagLink> out;
  for (const Span &s : tagger.decode(phrase)) {
    TagLink link{s.begin, s.end, s.domain, std::nullopt};
    for (const auto &p : store.lookup_surface(join_tokens(phrase, s.begin, s.end))) {
      const auto domains = store.domains_of(p.id);
      if (std::find(domains.begin(), domains.end(), s.domain) != domains.end()) {
        link.primitive = p.id;
        break;
      }
    }
    out.push_back(std::move(link));
  }
  return out;
}

SegmentationResult max_match(const std::vector<std::string> &tokens,
                             const std::unordered_map<std::string, std::vector<std::string>> &surface_domains,
                             size_t max_tokens) {
  const size_t n = tokens.size();
  struct Cell {
    bool reached = false;
    size_t covered = 0;
    size_t segments = 0;
    size_t ways = 0;  // saturating at 2
    size_t from = 0;
    std::string domain;  // empty for a skipped token
  };
  std::vector<Cell> best(n + 1);
  best[0] = {true, 0, 0, 1, 0, ""};
  auto relax = [&](size_t i, size_t j, size_t cov, size_t seg, size_t ways, const std::string &domain) {
    Cell &c = best[j];
    const bool better = !c.reached || cov > c.covered || (cov == c.covered && seg < c.segments);
    if (better) {
      c = {true, cov, seg, std::min<size_t>(ways, 2), i, domain};
    } else if (cov == c.covered && seg == c.segments) {
      c.ways = std::min<size_t>(c.ways + ways, 2);
    }
  };
  for (size_t i = 0; i < n; ++i) {
    const Cell cur = best[i];
    relax(i, i + 1, cur.covered, cur.segments, cur.ways, "");
    for (size_t len = 1; len <= max_tokens && i + len <= n; ++len) {
      auto it = surface_domains.find(join_tokens(tokens, i, i + len));
      if (it == surface_domains.end()) continue;
      for (const auto &d : it->second) relax(i, i + len, cur.covered + len, cur.segments + 1, cur.ways, d);
    }
  }
  SegmentationResult r;
  r.optimal_labelings = best[n].ways;
  r.covered = best[n].covered;
  r.segments = best[n].segments;
  r.tags.assign(n, "O");
  for (size_t j = n; j > 0;) {
    const Cell &c = best[j];
    if (!c.domain.empty()) {
      r.tags[c.from] = "B-" + c.domain;
      for (size_t k = c.from + 1; k < j; ++k) r.tags[k] = "I-" + c.domain;
    }
    j = c.from;
  }
  return r;
}

std::vector<LabeledSentence> distant_supervision(const std::vector<std::vector<std::string>> &corpus,
                                                 const ConceptStore &store, const DistantSupervisionConfig &cfg) {
  std::unordered_map<std::string, std::vector<std::string>> surface_domains;
  size_t max_tokens = 0;
  for (const auto &p : store.primitives()) {
    std::vector<std::string> domains;
    for (const auto &d : store.domains_of(p.id))
      if (cfg.domains.empty() || cfg.domains.count(d)) domains.push_back(d);
    if (domains.empty()) continue;
    std::vector<std::string> surfaces{p.surface};
    surfaces.insert(surfaces.end(), p.aliases.begin(), p.aliases.end());
    for (const auto &s : surfaces) {
      const auto toks = split_tokens(s);
      auto &entry = surface_domains[join_tokens(toks, 0, toks.size())];
      for (const auto &d : domains)
        if (std::find(entry.begin(), entry.end(), d) == entry.end()) entry.push_back(d);
      std::sort(entry.begin(), entry.end());
      max_tokens = std::max(max_tokens, toks.size());
    }
  }
  std::vector<LabeledSentence> out;
  for (const auto &sent : corpus) {
    if (sent.empty()) continue;
    SegmentationResult r = max_match(sent, surface_domains, max_tokens);
    if (r.optimal_labelings != 1 || r.segments == 0) continue;
    bool clean = true;
    for (size_t i = 0; i < sent.size() && clean; ++i) {
      if (r.tags[i] == "O" && !cfg.stopwords.count(sent[i])) clean = false;
    }
    if (clean) out.push_back({sent, std::move(r.tags)});
  }
  return out;
}

SpanMetrics span_prf(const std::vector<std::vector<Span>> &gold, const std::vector<std::vector<Span>> &predicted) {
  if (gold.size() != predicted.size()) throw std::invalid_argument("span_prf: sentence count mismatch");
  SpanMetrics m;
  for (size_t i = 0; i < gold.size(); ++i) {
    std::multiset<Span> g(gold[i].begin(), gold[i].end());
    m.gold += gold[i].size();
    m.predicted += predicted[i].size();
    for (const Span &s : predicted[i]) {
      auto it = g.find(s);
      if (it != g.end()) {
        ++m.true_positive;
        g.erase(it);
      }
    }
  }
  m.precision = m.predicted ? static_cast<double>(m.true_positive) / static_cast<double>(m.predicted) : 0.0;
  m.recall = m.gold ? static_cast<double>(m.true_positive) / static_cast<double>(m.gold) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

SpanMetrics evaluate(const CrfTagger &tagger, const std::vector<LabeledSentence> &gold) {
  std::vector<std::vector<Span>> g, p;
  for (const auto &s : gold) {
    g.push_back(decode_spans(tagger.labels(), tagger.labels().parse(s.tags)));
    p.push_back(tagger.decode(s.tokens));
  }
  return span_prf(g, p);
}

}  // namespace econet
