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

#include "econet/hypernym.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "econet/random.h"
#include "econet/store.h"

namespace econet {

using nlohmann::json;

HearstPattern HearstPattern::parse(const std::string &text) {
  HearstPattern p;
  p.text_ = text;
  p.tokens_ = split_tokens(text);
  const auto xs = std::count(p.tokens_.begin(), p.tokens_.end(), "X");
  const auto ys = std::count(p.tokens_.begin(), p.tokens_.end(), "Y");
  if (xs != 1 || ys != 1) throw ConfigError("hearst pattern needs exactly one X and one Y: '" + text + "'");
  if (p.tokens_.size() < 3) throw ConfigError("hearst pattern needs a literal between slots: '" + text + "'");
  return p;
}

std::vector<HearstPattern> default_hearst_patterns() {
  std::vector<HearstPattern> out;
  for (const char *t : {"Y such as X", "X is a kind of Y", "X is a type of Y", "X and other Y", "X or other Y",
                        "Y including X", "Y especially X"}) {
    out.push_back(HearstPattern::parse(t));
  }
  return out;
}

std::vector<HearstPattern> load_hearst_patterns(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pattern file: " + path);
  std::vector<HearstPattern> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (split_tokens(line).empty()) continue;
    out.push_back(HearstPattern::parse(line));
  }
  return out;
}

namespace {

std::optional<std::string> resolve_surface(const std::vector<std::string> &toks, size_t b, size_t e,
                                           const std::set<std::string> &surfaces) {
  std::string s = join_tokens(toks, b, e);
  if (surfaces.count(s)) return s;
  const std::string &last = toks[e - 1];
  const std::string prefix = e - 1 > b ? join_tokens(toks, b, e - 1) + " " : "";
  auto ends_with = [&](const char *suf) {
    const std::string x(suf);
    return last.size() > x.size() && last.compare(last.size() - x.size(), x.size(), x) == 0;
  };
  std::vector<std::string> singulars;
  if (ends_with("ies")) singulars.push_back(last.substr(0, last.size() - 3) + "y");
  if (ends_with("es")) singulars.push_back(last.substr(0, last.size() - 2));
  if (ends_with("s")) singulars.push_back(last.substr(0, last.size() - 1));
  for (const auto &w : singulars) {
    if (surfaces.count(prefix + w)) return prefix + w;
  }
  return std::nullopt;
}

struct Match {
  size_t begin, end;
  std::string x, y;
};

// Longest-first match of pattern tokens from sentence position pos.
bool match_from(const std::vector<std::string> &pat, size_t pi, const std::vector<std::string> &toks, size_t pos,
                size_t max_len, const std::set<std::string> &surfaces, Match &m) {
  if (pi == pat.size()) {
    m.end = pos;
    return true;
  }
  const std::string &p = pat[pi];
  if (p != "X" && p != "Y") {
    if (pos < toks.size() && toks[pos] == p) return match_from(pat, pi + 1, toks, pos + 1, max_len, surfaces, m);
    return false;
  }
  for (size_t len = std::min(max_len, toks.size() - std::min(pos, toks.size())); len >= 1; --len) {
    auto s = resolve_surface(toks, pos, pos + len, surfaces);
    if (!s) continue;
    (p == "X" ? m.x : m.y) = *s;
    if (match_from(pat, pi + 1, toks, pos + len, max_len, surfaces, m)) return true;
  }
  return false;
}

}  // namespace

std::vector<PatternPair> hearst_extract(const std::vector<std::vector<std::string>> &corpus,
                                        const std::vector<HearstPattern> &patterns,
                                        const std::set<std::string> &surfaces) {
  size_t max_len = 1;
  for (const auto &s : surfaces) max_len = std::max(max_len, split_tokens(s).size());
  std::map<std::pair<std::string, std::string>, size_t> counts;
  for (const auto &sent : corpus) {
    for (const auto &pattern : patterns) {
      std::vector<Match> found;
      for (size_t i = 0; i < sent.size(); ++i) {
        Match m{i, i, "", ""};
        if (match_from(pattern.tokens(), 0, sent, i, max_len, surfaces, m)) found.push_back(m);
      }
      // A match nested in another one is the same occurrence read with a
      // shorter slot filler.
      for (size_t a = 0; a < found.size(); ++a) {
        bool nested = false;
        for (size_t b = 0; b < found.size() && !nested; ++b) {
          if (a == b) continue;
          nested = found[b].begin <= found[a].begin && found[a].end <= found[b].end &&
                   (found[b].begin < found[a].begin || found[a].end < found[b].end || b < a);
        }
        if (!nested && found[a].x != found[a].y) ++counts[{found[a].x, found[a].y}];
      }
    }
  }
  std::vector<PatternPair> out;
  for (const auto &[k, c] : counts) out.push_back({k.first, k.second, c});
  return out;
}

std::vector<std::pair<std::string, std::string>> head_rule_extract(const std::set<std::string> &vocabulary) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto &s : vocabulary) {
    const auto toks = split_tokens(s);
    if (toks.size() < 2) continue;
    if (vocabulary.count(toks.back())) out.push_back({join_tokens(toks, 0, toks.size()), toks.back()});
  }
  return out;
}

ConceptEmbeddings ConceptEmbeddings::from_provider(const std::vector<std::string> &ids,
                                                   const VectorProvider &provider) {
  ConceptEmbeddings e(provider.dim());
  for (const auto &id : ids) e.set(id, provider.vector(id));
  return e;
}

ConceptEmbeddings ConceptEmbeddings::load(const std::string &path) {
  TableVectorProvider table = TableVectorProvider::load(path, "concept");
  std::ifstream in(path);
  ConceptEmbeddings e(table.dim());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::string id = line.substr(0, line.find('\t'));
    e.set(id, table.vector(id));
  }
  return e;
}

void ConceptEmbeddings::set(const std::string &id, const std::vector<double> &v) {
  if (dim_ == 0) dim_ = v.size();
  if (v.size() != dim_) {
    throw ShapeError("embedding for '" + id + "' has size " + std::to_string(v.size()) + ", expected " +
                     std::to_string(dim_));
  }
  auto it = index_.find(id);
  if (it != index_.end()) {
    std::copy(v.begin(), v.end(), data_.begin() + static_cast<long>(it->second * dim_));
    return;
  }
  index_[id] = ids_.size();
  ids_.push_back(id);
  data_.insert(data_.end(), v.begin(), v.end());
}

size_t ConceptEmbeddings::index(const std::string &id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("no embedding for concept '" + id + "'");
  return it->second;
}

std::span<const double> ConceptEmbeddings::row(const std::string &id) const {
  return std::span<const double>(data_).subspan(index(id) * dim_, dim_);
}

Tensor ConceptEmbeddings::gather(const std::vector<std::string> &ids) const {
  Tensor out({ids.size(), dim_});
  for (size_t i = 0; i < ids.size(); ++i) {
    auto r = row(ids[i]);
    std::copy(r.begin(), r.end(), &out(i, 0));
  }
  return out;
}

json ConceptEmbeddings::to_json() const { return json{{"dim", dim_}, {"ids", ids_}, {"data", data_}}; }

ConceptEmbeddings ConceptEmbeddings::from_json(const json &j) {
  ConceptEmbeddings e(j.at("dim").get<size_t>());
  const auto ids = j.at("ids").get<std::vector<std::string>>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != ids.size() * e.dim_) throw ConfigError("embedding table size mismatch");
  for (size_t i = 0; i < ids.size(); ++i) {
    e.set(ids[i], std::vector<double>(data.begin() + static_cast<long>(i * e.dim_),
                                      data.begin() + static_cast<long>((i + 1) * e.dim_)));
  }
  return e;
}

std::vector<LabeledPair> read_pairs(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pairs file: " + path);
  std::vector<LabeledPair> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, '\t');) cells.push_back(c);
    if (cells.size() != 3 || (cells[2] != "0" && cells[2] != "1")) {
      throw ParseError(lineno, "expected hyponym<TAB>hypernym<TAB>0|1");
    }
    out.push_back({cells[0], cells[1], cells[2] == "1" ? 1 : 0});
  }
  return out;
}

void write_pairs(const std::string &path, const std::vector<LabeledPair> &pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write pairs file: " + path);
  for (const auto &p : pairs) out << p.hyponym << '\t' << p.hypernym << '\t' << p.label << '\n';
}

ProjectionModel::ProjectionModel(ConceptEmbeddings embeddings, size_t slices, uint64_t seed)
    : embeddings_(std::move(embeddings)), slices_(slices) {
  if (slices == 0) throw ConfigError("projection model needs at least one slice");
  if (embeddings_.dim() == 0) throw ConfigError("projection model needs embeddings");
  const size_t d = embeddings_.dim();
  for (size_t k = 0; k < slices; ++k) {
    params_.add("T." + std::to_string(k), glorot_uniform({d, d}, d, d, mix_seed(seed, "T." + std::to_string(k))));
  }
  params_.add("W", glorot_uniform({1, slices}, slices, 1, mix_seed(seed, "W")));
  params_.add("b", Tensor({1, 1}));
}

double ProjectionModel::score(const std::string &hyponym, const std::string &hypernym) const {
  return score(std::vector<std::pair<std::string, std::string>>{{hyponym, hypernym}})[0];
}

std::vector<double> ProjectionModel::score(const std::vector<std::pair<std::string, std::string>> &pairs) const {
  const size_t d = embeddings_.dim();
  const Tensor &w = params_.value("W");
  const double b = params_.value("b").item();
  std::vector<const Tensor *> slices;
  for (size_t k = 0; k < slices_; ++k) slices.push_back(&params_.value("T." + std::to_string(k)));
  std::vector<double> out;
  out.reserve(pairs.size());
  std::vector<double> th(d);
  for (const auto &[hypo, hyper] : pairs) {
    auto p = embeddings_.row(hypo);
    auto h = embeddings_.row(hyper);
    double z = b;
    for (size_t k = 0; k < slices_; ++k) {
      const Tensor &t = *slices[k];
      double s = 0;
      for (size_t i = 0; i < d; ++i) {
        double r = 0;
        for (size_t j = 0; j < d; ++j) r += t(i, j) * h[j];
        s += p[i] * r;
      }
      z += w(0, k) * s;
    }
    out.push_back(1.0 / (1.0 + std::exp(-z)));
  }
  return out;
}

Var ProjectionModel::logits(Graph &g, const std::vector<std::string> &hypo,
                            const std::vector<std::string> &hyper) const {
  using namespace ops;
  const size_t d = embeddings_.dim();
  Var P = g.constant(embeddings_.gather(hypo));
  Var H = g.constant(embeddings_.gather(hyper));
  Var ones = g.constant(Tensor({d, 1}, 1.0));
  std::vector<Var> s;
  for (size_t k = 0; k < slices_; ++k) {
    s.push_back(matmul(mul(matmul(P, g.param("T." + std::to_string(k))), H), ones));
  }
  Var S = slices_ == 1 ? s[0] : concat_cols(s);
  return add(matmul(S, transpose(g.param("W"))), g.param("b"));
}

Var ProjectionModel::loss(Graph &g, const std::vector<LabeledPair> &pairs) const {
  using namespace ops;
  if (pairs.empty()) throw ContractError("projection loss: no pairs");
  std::vector<std::string> hypo, hyper;
  Tensor y({pairs.size(), 1}), not_y({pairs.size(), 1});
  for (size_t i = 0; i < pairs.size(); ++i) {
    hypo.push_back(pairs[i].hyponym);
    hyper.push_back(pairs[i].hypernym);
    y[i] = pairs[i].label ? 1.0 : 0.0;
    not_y[i] = 1.0 - y[i];
  }
  Var z = logits(g, hypo, hyper);
  Var ll = add(mul(g.constant(y), log_sigmoid(z)), mul(g.constant(not_y), log_sigmoid(scale(z, -1.0))));
  return scale(sum(ll), -1.0 / static_cast<double>(pairs.size()));
}

std::vector<double> ProjectionModel::train(const std::vector<LabeledPair> &data, const ProjectionTrainConfig &cfg) {
  std::vector<double> history;
  if (cfg.epochs == 0) return history;
  if (data.empty()) throw ContractError("projection model: empty training set");
  if (cfg.batch == 0) throw ConfigError("projection model: batch must be positive");
  Adam adam(cfg.lr);
  Rng rng(mix_seed(cfg.seed, "projection.order"));
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      const size_t end = std::min(order.size(), start + cfg.batch);
      std::vector<LabeledPair> batch;
      for (size_t k = start; k < end; ++k) batch.push_back(data[order[k]]);
      Graph g(&params_);
      Var l = loss(g, batch);
      total += l.value().item() * static_cast<double>(batch.size());
      adam.step(params_, g.backward(l));
    }
    history.push_back(total / static_cast<double>(data.size()));
  }
  return history;
}

json ProjectionModel::to_json() const {
  return json{{"format", "econet.projection"},
              {"version", 1},
              {"slices", slices_},
              {"embeddings", embeddings_.to_json()},
              {"params", params_.to_json()}};
}

ProjectionModel ProjectionModel::from_json(const json &j) {
  if (j.value("format", "") != "econet.projection") throw ConfigError("not a projection model checkpoint");
  ProjectionModel m(ConceptEmbeddings::from_json(j.at("embeddings")), j.at("slices").get<size_t>(), 0);
  m.params_ = ParameterSet::from_json(j.at("params"));
  return m;
}

void ProjectionModel::save(const std::string &path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model: " + path);
  out << to_json().dump() << '\n';
}

ProjectionModel ProjectionModel::load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model: " + path);
  return from_json(json::parse(in));
}

std::vector<LabeledPair> negative_sample(const std::vector<std::pair<std::string, std::string>> &positives,
                                         size_t ratio, const std::vector<std::string> &vocabulary, uint64_t seed) {
  if (ratio == 0) throw ConfigError("negative ratio must be at least 1");
  std::map<std::string, std::set<std::string>> known;
  for (const auto &[p, h] : positives) known[p].insert(h);
  Rng rng(mix_seed(seed, "negatives"));
  std::vector<LabeledPair> out;
  out.reserve(positives.size() * ratio);
  for (const auto &[p, h] : positives) {
    const auto &taken = known[p];
    size_t valid = 0;
    for (const auto &v : vocabulary) valid += (v != p && !taken.count(v));
    if (valid == 0) throw ConfigError("vocabulary too small to sample negatives for '" + p + "'");
    for (size_t r = 0; r < ratio; ++r) {
      while (true) {
        const std::string &c = vocabulary[rng.below(vocabulary.size())];
        if (c == p || taken.count(c)) continue;
        out.push_back({p, c, 0});
        break;
      }
    }
  }
  return out;
}

RankedHypernyms rank(const std::string &hyponym, const std::vector<std::string> &candidates,
                     const ProjectionModel &model) {
  RankedHypernyms r;
  r.hyponym = hyponym;
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto &c : candidates) {
    pairs.push_back({hyponym, c});
    if (c == hyponym) r.self_candidate = true;
  }
  const auto scores = model.score(pairs);
  for (size_t i = 0; i < candidates.size(); ++i) r.candidates.push_back({candidates[i], scores[i]});
  std::sort(r.candidates.begin(), r.candidates.end(), [](const auto &a, const auto &b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return r;
}

json RankingMetrics::to_json() const {
  return json{{"map", map}, {"mrr", mrr}, {"p_at_1", p_at_1}, {"queries", queries}};
}

RankingMetrics evaluate_rankings(const std::vector<RankedHypernyms> &rankings,
                                 const std::map<std::string, std::set<std::string>> &gold) {
  RankingMetrics m;
  for (const auto &r : rankings) {
    auto it = gold.find(r.hyponym);
    if (it == gold.end() || it->second.empty()) {
      throw std::invalid_argument("query '" + r.hyponym + "' has no gold hypernym");
    }
    double hits = 0, ap = 0, rr = 0;
    for (size_t i = 0; i < r.candidates.size(); ++i) {
      if (!it->second.count(r.candidates[i].first)) continue;
      hits += 1;
      ap += hits / static_cast<double>(i + 1);
      if (rr == 0) rr = 1.0 / static_cast<double>(i + 1);
    }
    m.map += ap / static_cast<double>(it->second.size());
    m.mrr += rr;
    m.p_at_1 += (!r.candidates.empty() && it->second.count(r.candidates[0].first)) ? 1.0 : 0.0;
    ++m.queries;
  }
  if (m.queries > 0) {
    const double n = static_cast<double>(m.queries);
    m.map /= n;
    m.mrr /= n;
    m.p_at_1 /= n;
  }
  return m;
}

}  // namespace econet
