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

#include "econet/matching.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "econet/checksum.h"
#include "econet/random.h"

namespace econet {

using nlohmann::json;

MatchFeaturizer::MatchFeaturizer(std::shared_ptr<const VectorProvider> words,
                                 std::shared_ptr<const VectorProvider> knowledge, PosLexicon pos,
                                 std::vector<std::string> classes)
    : words_(std::move(words)), knowledge_(std::move(knowledge)), pos_(std::move(pos)), classes_(std::move(classes)) {
  if (!words_ || !knowledge_) throw ConfigError("match featurizer needs word and knowledge providers");
  std::sort(classes_.begin(), classes_.end());
  classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
}

size_t MatchFeaturizer::class_id(const std::string &cls) const {
  auto it = std::lower_bound(classes_.begin(), classes_.end(), cls);
  if (it == classes_.end() || *it != cls) return 0;
  return static_cast<size_t>(it - classes_.begin()) + 1;
}

ConceptSideInput MatchFeaturizer::concept_input(const std::vector<std::string> &tokens,
                                                const std::vector<std::string> &classes) const {
  if (tokens.empty()) throw std::invalid_argument("matching: empty concept");
  ConceptSideInput x;
  x.tokens = tokens;
  x.words = words_->rows(tokens);
  x.knowledge = knowledge_->rows(tokens);
  for (const auto &t : tokens) x.pos_ids.push_back(pos_.tag_id(t));
  for (const auto &c : classes) x.class_ids.push_back(class_id(c));
  return x;
}

ConceptSideInput MatchFeaturizer::concept_input(const ECommerceConcept &cpt, const ConceptStore &store) const {
  std::vector<std::string> classes;
  for (const auto &link : cpt.links) {
    auto p = store.find_primitive(link.primitive);
    if (!p) throw DanglingReferenceError("concept " + cpt.id + " links unknown primitive " + link.primitive);
    classes.push_back(p->classes.empty() ? std::string() : *p->classes.begin());
  }
  return concept_input(cpt.tokens.empty() ? split_tokens(cpt.phrase) : cpt.tokens, classes);
}

ItemSideInput MatchFeaturizer::item_input(const std::vector<std::string> &tokens) const {
  if (tokens.empty()) throw std::invalid_argument("matching: empty item title");
  ItemSideInput x;
  x.tokens = tokens;
  x.words = words_->rows(tokens);
  for (const auto &t : tokens) x.pos_ids.push_back(pos_.tag_id(t));
  return x;
}

json MatchConfig::to_json() const {
  return json{{"pos_dim", pos_dim},     {"encoder_dim", encoder_dim}, {"window", window},
              {"attention_dim", attention_dim}, {"slices", slices}, {"channels1", channels1},
              {"channels2", channels2}, {"grid", grid},               {"pyramid_out", pyramid_out},
              {"mlp_hidden", mlp_hidden}, {"use_knowledge", use_knowledge}};
}

MatchConfig MatchConfig::from_json(const json &j) {
  MatchConfig c;
  c.pos_dim = j.value("pos_dim", c.pos_dim);
  c.encoder_dim = j.value("encoder_dim", c.encoder_dim);
  c.window = j.value("window", c.window);
  c.attention_dim = j.value("attention_dim", c.attention_dim);
  c.slices = j.value("slices", c.slices);
  c.channels1 = j.value("channels1", c.channels1);
  c.channels2 = j.value("channels2", c.channels2);
  c.grid = j.value("grid", c.grid);
  c.pyramid_out = j.value("pyramid_out", c.pyramid_out);
  c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
  c.use_knowledge = j.value("use_knowledge", c.use_knowledge);
  return c;
}

namespace {

std::string slice_name(const char *base, size_t k) { return std::string(base) + "." + std::to_string(k); }

}  // namespace

MatchModel::MatchModel(MatchConfig cfg, size_t word_dim, size_t pos_tags, size_t knowledge_dim, size_t classes,
                       uint64_t seed)
    : cfg_(cfg), word_dim_(word_dim), pos_tags_(pos_tags), knowledge_dim_(knowledge_dim), classes_(classes) {
  if (cfg_.window % 2 == 0 || cfg_.window < 1) throw ConfigError("matching: encoder window must be odd");
  if (cfg_.slices == 0 || cfg_.grid == 0) throw ConfigError("matching: slices and grid must be positive");
  if (word_dim == 0 || pos_tags == 0 || classes == 0) throw ConfigError("matching: empty input spaces");
  const size_t in = word_dim + cfg_.pos_dim;
  const size_t win = static_cast<size_t>(cfg_.window);
  const size_t e = cfg_.encoder_dim, a = cfg_.attention_dim;
  add_glorot(params_, "mt.pos_emb", {pos_tags, cfg_.pos_dim}, cfg_.pos_dim, cfg_.pos_dim, seed);
  add_glorot(params_, "mt.enc_w", {win, in, e}, win * in, e, seed);
  params_.add("mt.enc_w_b", Tensor({1, e}));
  add_glorot(params_, "mt.enc_t", {win, in, e}, win * in, e, seed);
  params_.add("mt.enc_t_b", Tensor({1, e}));
  add_glorot(params_, "mt.att_W1", {e, a}, e, a, seed);
  add_glorot(params_, "mt.att_W2", {e, a}, e, a, seed);
  add_glorot(params_, "mt.att_v", {a, 1}, a, 1, seed);
  if (cfg_.use_knowledge) {
    if (knowledge_dim == word_dim) {
      Tensor eye({knowledge_dim, word_dim});
      for (size_t i = 0; i < word_dim; ++i) eye(i, i) = 1.0;
      params_.add("mt.k_proj", eye);
    } else {
      add_glorot(params_, "mt.k_proj", {knowledge_dim, word_dim}, knowledge_dim, word_dim, seed);
    }
  }
  add_glorot(params_, "mt.cls_emb", {classes, in}, in, in, seed);
  for (size_t k = 0; k < cfg_.slices; ++k) {
    if (k == 0) {
      Tensor eye({in, in});
      for (size_t i = 0; i < in; ++i) eye(i, i) = 1.0;
      params_.add(slice_name("mt.pyr_W", k), eye);
    } else {
      add_glorot(params_, slice_name("mt.pyr_W", k), {in, in}, in, in, seed);
    }
    add_glorot(params_, slice_name("mt.pyr_c1", k), {cfg_.channels1, 1, 3, 3}, 9, 9 * cfg_.channels1, seed);
    add_glorot(params_, slice_name("mt.pyr_c2", k), {cfg_.channels2, cfg_.channels1, 3, 3}, 9 * cfg_.channels1,
               9 * cfg_.channels2, seed);
  }
  const size_t flat = cfg_.slices * cfg_.channels2 * cfg_.grid * cfg_.grid;
  add_glorot(params_, "mt.pyr_fc", {flat, cfg_.pyramid_out}, flat, cfg_.pyramid_out, seed);
  params_.add("mt.pyr_fc_b", Tensor({1, cfg_.pyramid_out}));
  const size_t joint = 2 * e + cfg_.pyramid_out;
  add_glorot(params_, "mt.mlp1", {joint, cfg_.mlp_hidden}, joint, cfg_.mlp_hidden, seed);
  params_.add("mt.mlp1_b", Tensor({1, cfg_.mlp_hidden}));
  add_glorot(params_, "mt.mlp2", {cfg_.mlp_hidden, 1}, cfg_.mlp_hidden, 1, seed);
  params_.add("mt.mlp2_b", Tensor({1, 1}));
}

Var MatchModel::embed(Graph &g, const Tensor &words, const std::vector<size_t> &pos_ids) const {
  if (words.rows() != pos_ids.size() || words.cols() != word_dim_) throw ShapeError("matching: bad word rows");
  return ops::concat_cols({g.constant(words), ops::gather_rows(g.param("mt.pos_emb"), pos_ids)});
}

AttentionPool MatchModel::attention_pool(Graph &g, Var w_enc, Var t_enc) const {
  using namespace ops;
  const size_t m = w_enc.value().rows(), l = t_enc.value().rows();
  if (m == 0 || l == 0) throw std::invalid_argument("attention_pool: empty sequence");
  Var a = matmul(w_enc, g.param("mt.att_W1"));
  Var b = matmul(t_enc, g.param("mt.att_W2"));
  std::vector<Var> rows;
  for (size_t i = 0; i < m; ++i) rows.push_back(add(b, gather_rows(a, {i})));
  Var pre = rows.size() == 1 ? rows[0] : concat_rows(rows);
  Var att = reshape(matmul(tanh(pre), g.param("mt.att_v")), {m, l});
  AttentionPool p;
  p.att = att;
  p.alpha_w = softmax(transpose(matmul(att, g.constant(Tensor({l, 1}, 1.0)))));
  p.alpha_t = softmax(matmul(g.constant(Tensor({1, m}, 1.0)), att));
  p.c = matmul(p.alpha_w, w_enc);
  p.i = matmul(p.alpha_t, t_enc);
  return p;
}

Var MatchModel::concept_rows(Graph &g, const ConceptSideInput &x) const {
  using namespace ops;
  if (x.tokens.empty()) throw std::invalid_argument("matching: empty concept");
  std::vector<Var> parts{embed(g, x.words, x.pos_ids)};
  if (cfg_.use_knowledge) {
    if (x.knowledge.rows() != x.tokens.size() || x.knowledge.cols() != knowledge_dim_) {
      throw ShapeError("matching: knowledge rows must align with concept tokens");
    }
    Var k = matmul(g.constant(x.knowledge), g.param("mt.k_proj"));
    parts.push_back(concat_cols({k, gather_rows(g.param("mt.pos_emb"), x.pos_ids)}));
  }
  if (!x.class_ids.empty()) {
    for (size_t c : x.class_ids) {
      if (c >= classes_) throw std::out_of_range("matching: class id out of range");
    }
    parts.push_back(gather_rows(g.param("mt.cls_emb"), x.class_ids));
  }
  return parts.size() == 1 ? parts[0] : concat_rows(parts);
}

Var MatchModel::match_matrices(Graph &g, Var kw, Var t) const {
  using namespace ops;
  const size_t n = kw.value().rows(), l = t.value().rows();
  Var tt = transpose(t);
  std::vector<Var> slices;
  for (size_t k = 0; k < cfg_.slices; ++k) slices.push_back(matmul(matmul(kw, g.param(slice_name("mt.pyr_W", k))), tt));
  Var stacked = slices.size() == 1 ? slices[0] : concat_rows(slices);
  return reshape(stacked, {cfg_.slices, n, l});
}

Var MatchModel::pyramid(Graph &g, Var matches) const {
  using namespace ops;
  const Tensor &mv = matches.value();
  const size_t n = mv.dim(1), l = mv.dim(2);
  Var flat = reshape(matches, {cfg_.slices * n, l});
  std::vector<Var> pooled;
  for (size_t k = 0; k < cfg_.slices; ++k) {
    std::vector<size_t> ids(n);
    std::iota(ids.begin(), ids.end(), k * n);
    Var mk = reshape(gather_rows(flat, ids), {1, n, l});
    Var h1 = relu(conv2d(mk, g.param(slice_name("mt.pyr_c1", k))));
    Var h2 = relu(conv2d(h1, g.param(slice_name("mt.pyr_c2", k))));
    pooled.push_back(max_pool_grid(h2, cfg_.grid, cfg_.grid));
  }
  Var ci = pooled.size() == 1 ? pooled[0] : concat_cols(pooled);
  return relu(add(matmul(ci, g.param("mt.pyr_fc")), g.param("mt.pyr_fc_b")));
}

Var MatchModel::logit(Graph &g, const ConceptSideInput &cpt, const ItemSideInput &item) const {
  using namespace ops;
  if (item.tokens.empty()) throw std::invalid_argument("matching: empty item title");
  Var w = embed(g, cpt.words, cpt.pos_ids);
  Var t = embed(g, item.words, item.pos_ids);
  Var w_enc = tanh(add(conv1d(w, g.param("mt.enc_w"), cfg_.window), g.param("mt.enc_w_b")));
  Var t_enc = tanh(add(conv1d(t, g.param("mt.enc_t"), cfg_.window), g.param("mt.enc_t_b")));
  AttentionPool ap = attention_pool(g, w_enc, t_enc);
  Var ci = pyramid(g, match_matrices(g, concept_rows(g, cpt), t));
  Var h = relu(add(matmul(concat_cols({ap.c, ap.i, ci}), g.param("mt.mlp1")), g.param("mt.mlp1_b")));
  return add(matmul(h, g.param("mt.mlp2")), g.param("mt.mlp2_b"));
}

double MatchModel::score(const ConceptSideInput &cpt, const ItemSideInput &item) const {
  Graph g(&params_);
  const double z = logit(g, cpt, item).value().item();
  return 1.0 / (1.0 + std::exp(-z));
}

Var MatchModel::loss(Graph &g, const std::vector<const MatchExample *> &batch) const {
  using namespace ops;
  if (batch.empty()) throw ContractError("matching loss: empty batch");
  std::vector<Var> zs;
  Tensor y({batch.size(), 1}), not_y({batch.size(), 1});
  for (size_t i = 0; i < batch.size(); ++i) {
    zs.push_back(logit(g, batch[i]->concept_side, batch[i]->item));
    y[i] = batch[i]->label ? 1.0 : 0.0;
    not_y[i] = 1.0 - y[i];
  }
  Var z = zs.size() == 1 ? zs[0] : concat_rows(zs);
  Var ll = add(mul(g.constant(y), log_sigmoid(z)), mul(g.constant(not_y), log_sigmoid(scale(z, -1.0))));
  return scale(sum(ll), -1.0 / static_cast<double>(batch.size()));
}

std::vector<double> MatchModel::train(const std::vector<MatchExample> &data, const MatchTrainConfig &cfg) {
  std::vector<double> history;
  if (cfg.epochs == 0) return history;
  bool pos = false, neg = false;
  for (const auto &x : data) (x.label ? pos : neg) = true;
  if (!pos || !neg) throw ContractError("matching: training data needs both classes");
  if (cfg.batch == 0) throw ConfigError("matching: batch must be positive");
  Adam adam(cfg.lr);
  Rng rng(mix_seed(cfg.seed, "matching.order"));
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      const size_t end = std::min(order.size(), start + cfg.batch);
      std::vector<const MatchExample *> batch;
      for (size_t k = start; k < end; ++k) batch.push_back(&data[order[k]]);
      Graph g(&params_);
      Var l = loss(g, batch);
      total += l.value().item() * static_cast<double>(batch.size());
      adam.step(params_, g.backward(l));
    }
    history.push_back(total / static_cast<double>(data.size()));
  }
  return history;
}

json MatchModel::to_json() const {
  return json{{"format", "econet.matcher"},    {"version", 1},
              {"config", cfg_.to_json()},      {"word_dim", word_dim_},
              {"pos_tags", pos_tags_},         {"knowledge_dim", knowledge_dim_},
              {"classes", classes_},           {"params", params_.to_json()}};
}

MatchModel MatchModel::from_json(const json &j) {
  if (j.value("format", "") != "econet.matcher") throw ConfigError("not a matcher checkpoint");
  MatchModel m(MatchConfig::from_json(j.at("config")), j.at("word_dim").get<size_t>(), j.at("pos_tags").get<size_t>(),
               j.at("knowledge_dim").get<size_t>(), j.at("classes").get<size_t>(), 0);
  m.params_ = ParameterSet::from_json(j.at("params"));
  return m;
}

std::string MatchModel::checksum() const { return sha256_hex(to_json().dump()); }

double roc_auc(const std::vector<double> &scores, const std::vector<int> &labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: size mismatch");
  std::vector<size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  double pos = 0, neg = 0, rank_sum = 0;
  for (size_t i = 0; i < idx.size();) {
    size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
    for (size_t k = i; k < j; ++k) {
      if (labels[idx[k]]) rank_sum += avg_rank;
    }
    i = j;
  }
  for (int l : labels) (l ? pos : neg) += 1;
  if (pos == 0 || neg == 0) throw std::invalid_argument("roc_auc: needs both classes");
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

json MatchMetrics::to_json() const {
  return json{{"auc", auc}, {"f1", f1}, {"p_at_10", p_at_10}, {"concepts", concepts}};
}

MatchMetrics evaluate_matching(const std::vector<double> &scores, const std::vector<int> &labels,
                               const std::vector<std::string> &concept_ids) {
  if (scores.empty() || scores.size() != labels.size() || scores.size() != concept_ids.size()) {
    throw std::invalid_argument("evaluate_matching: empty or mismatched inputs");
  }
  MatchMetrics m;
  m.auc = roc_auc(scores, labels);
  double tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= 0.5;
    tp += pred && labels[i];
    fp += pred && !labels[i];
    fn += !pred && labels[i];
  }
  m.f1 = tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
  std::map<std::string, std::vector<size_t>> groups;
  for (size_t i = 0; i < concept_ids.size(); ++i) groups[concept_ids[i]].push_back(i);
  double total = 0;
  for (auto &[id, rows] : groups) {
    std::stable_sort(rows.begin(), rows.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    const size_t top = std::min<size_t>(10, rows.size());
    double hits = 0;
    for (size_t r = 0; r < top; ++r) hits += labels[rows[r]];
    total += hits / static_cast<double>(top);
  }
  m.concepts = groups.size();
  m.p_at_10 = total / static_cast<double>(groups.size());
  return m;
}

std::vector<PairLabel> read_pair_labels(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pair file: " + path);
  std::vector<PairLabel> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto a = line.find('\t');
    const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos) throw ParseError(lineno, "expected concept<TAB>item<TAB>label");
    const std::string label = line.substr(b + 1);
    if (label != "0" && label != "1") throw ParseError(lineno, "label must be 0 or 1");
    out.push_back({line.substr(0, a), line.substr(a + 1, b - a - 1), label == "1"});
  }
  return out;
}

void write_pair_labels(const std::string &path, const std::vector<PairLabel> &pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write pair file: " + path);
  for (const auto &p : pairs) out << p.concept_id << '\t' << p.item_id << '\t' << p.label << '\n';
}

std::vector<MatchExample> build_match_examples(const std::vector<PairLabel> &pairs, const ConceptStore &store,
                                               const MatchFeaturizer &featurizer) {
  std::map<std::string, ConceptSideInput> concepts;
  std::map<std::string, ItemSideInput> items;
  std::vector<MatchExample> out;
  out.reserve(pairs.size());
  for (const auto &p : pairs) {
    auto c = concepts.find(p.concept_id);
    if (c == concepts.end()) {
      auto e = store.find_ecommerce(p.concept_id);
      if (!e) throw DanglingReferenceError("pair references unknown e-commerce concept " + p.concept_id);
      c = concepts.emplace(p.concept_id, featurizer.concept_input(*e, store)).first;
    }
    auto i = items.find(p.item_id);
    if (i == items.end()) {
      auto it = store.find_item(p.item_id);
      if (!it) throw DanglingReferenceError("pair references unknown item " + p.item_id);
      i = items.emplace(p.item_id, featurizer.item_input(it->tokens.empty() ? split_tokens(it->title) : it->tokens))
              .first;
    }
    out.push_back({p.concept_id, p.item_id, c->second, i->second, p.label});
  }
  return out;
}

json AssociationResult::to_json() const { return json{{"scored", scored}, {"written", written}, {"updated", updated}}; }

AssociationResult associate(ConceptStore &store, const MatchModel &model, const MatchFeaturizer &featurizer,
                            const std::vector<std::string> &concept_ids, const std::vector<std::string> &item_ids,
                            double threshold, const std::string &audit_log_path) {
  std::vector<std::pair<std::string, ConceptSideInput>> concepts;
  for (const auto &id : concept_ids) {
    auto c = store.find_ecommerce(id);
    if (!c) throw DanglingReferenceError("associate: unknown e-commerce concept " + id);
    concepts.emplace_back(id, featurizer.concept_input(*c, store));
  }
  std::vector<std::pair<std::string, ItemSideInput>> items;
  for (const auto &id : item_ids) {
    auto it = store.find_item(id);
    if (!it) throw DanglingReferenceError("associate: unknown item " + id);
    items.emplace_back(id, featurizer.item_input(it->tokens.empty() ? split_tokens(it->title) : it->tokens));
  }
  std::ofstream audit;
  if (!audit_log_path.empty()) {
    audit.open(audit_log_path, std::ios::app | std::ios::binary);
    if (!audit) throw std::runtime_error("cannot write audit log: " + audit_log_path);
  }
  const std::string checksum = model.checksum();
  AssociationResult r;
  for (const auto &[cid, cx] : concepts) {
    for (const auto &[iid, ix] : items) {
      const double s = model.score(cx, ix);
      ++r.scored;
      const bool keep = s >= threshold;
      if (keep) {
        auto old = store.find_edge(iid, cid, Relation::kItemECommerce);
        store.upsert_edge({iid, cid, Relation::kItemECommerce, "", s});
        if (!old) {
          ++r.written;
        } else if (old->weight != s) {
          ++r.updated;
        }
      }
      if (audit.is_open()) {
        audit << json{{"concept", cid}, {"item", iid}, {"score", s}, {"threshold", threshold},
                      {"associated", keep}, {"model", checksum}}.dump()
              << '\n';
      }
    }
  }
  return r;
}

}  // namespace econet
