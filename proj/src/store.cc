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

#include "econet/store.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>

namespace econet {

using nlohmann::json;

bool is_domain(std::string_view name) {
  return std::find(kDomains.begin(), kDomains.end(), name) != kDomains.end();
}

std::string_view to_string(ConceptStatus s) {
  switch (s) {
    case ConceptStatus::kCandidate: return "candidate";
    case ConceptStatus::kValidated: return "validated";
    case ConceptStatus::kRejected: return "rejected";
  }
  return "candidate";
}

ConceptStatus parse_status(std::string_view s) {
  if (s == "candidate") return ConceptStatus::kCandidate;
  if (s == "validated") return ConceptStatus::kValidated;
  if (s == "rejected") return ConceptStatus::kRejected;
  throw std::invalid_argument("unknown concept status: " + std::string(s));
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::kIsAClass: return "isA_class";
    case Relation::kInstanceOf: return "instanceOf";
    case Relation::kIsAConcept: return "isA_concept";
    case Relation::kSchemaRelation: return "schema_relation";
    case Relation::kConceptLink: return "concept_link";
    case Relation::kItemPrimitive: return "item_primitive";
    case Relation::kItemECommerce: return "item_ecommerce";
  }
  return "isA_concept";
}

Relation parse_relation(std::string_view s) {
  for (Relation r : {Relation::kIsAClass, Relation::kInstanceOf, Relation::kIsAConcept,
                     Relation::kSchemaRelation, Relation::kConceptLink, Relation::kItemPrimitive,
                     Relation::kItemECommerce}) {
    if (to_string(r) == s) return r;
  }
  throw std::invalid_argument("unknown relation: " + std::string(s));
}

std::vector<SchemaRelation> schema_from_json(const json &j) {
  std::vector<SchemaRelation> out;
  for (const auto &r : j.at("relations")) {
    out.push_back({r.at("name").get<std::string>(), r.at("src").get<std::string>(),
                   r.at("dst").get<std::string>()});
  }
  return out;
}

std::vector<SchemaRelation> load_schema(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema file: " + path);
  return schema_from_json(json::parse(in));
}

json StoreStats::to_json() const {
  return {{"nodes",
           {{"classes", classes}, {"primitive_concepts", primitives},
            {"ecommerce_concepts", ecommerce}, {"items", items}}},
          {"primitive_concepts_per_domain", primitives_per_domain},
          {"edges_per_relation", edges_per_relation}};
}

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string join_tokens(const std::vector<std::string> &tokens, size_t begin, size_t end) {
  std::string out;
  for (size_t i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += tokens[i];
  }
  return out;
}

ConceptStore::ConceptStore(const ConceptStore &other) {
  std::shared_lock lock(other.mu_);
  data_ = other.data_;
}

ConceptStore &ConceptStore::operator=(const ConceptStore &other) {
  if (this == &other) return *this;
  Data copy;
  {
    std::shared_lock lock(other.mu_);
    copy = other.data_;
  }
  std::unique_lock lock(mu_);
  data_ = std::move(copy);
  return *this;
}

void ConceptStore::set_schema(std::vector<SchemaRelation> schema) {
  std::unique_lock lock(mu_);
  std::sort(schema.begin(), schema.end(),
            [](const SchemaRelation &a, const SchemaRelation &b) { return a.name < b.name; });
  for (size_t i = 1; i < schema.size(); ++i) {
    if (schema[i].name == schema[i - 1].name)
      throw InvariantError("schema relation declared twice: " + schema[i].name);
  }
  data_.schema = std::move(schema);
}

std::vector<SchemaRelation> ConceptStore::schema() const {
  std::shared_lock lock(mu_);
  return data_.schema;
}

std::optional<ConceptStore::Kind> ConceptStore::kind_of(const std::string &id) const {
  auto it = data_.kinds.find(id);
  if (it == data_.kinds.end()) return std::nullopt;
  return it->second;
}

namespace {

const char *kind_name(int k) {
  static const char *names[] = {"taxonomy class", "primitive concept", "e-commerce concept", "item"};
  return names[k];
}

}  // namespace

void ConceptStore::check_id_kind(const std::string &id, Kind kind) const {
  if (id.empty()) throw InvariantError("empty id");
  auto k = kind_of(id);
  if (k && *k != kind) {
    throw TypeMismatchError("id " + id + " is already a " + kind_name(static_cast<int>(*k)) +
                            ", not a " + kind_name(static_cast<int>(kind)));
  }
}

bool ConceptStore::descends(const std::string &class_id, const std::string &ancestor) const {
  std::string cur = class_id;
  for (size_t steps = 0; steps <= data_.classes.size(); ++steps) {
    if (cur == ancestor) return true;
    auto it = data_.classes.find(cur);
    if (it == data_.classes.end() || !it->second.parent) return false;
    cur = *it->second.parent;
  }
  return false;
}

void ConceptStore::check_class(const TaxonomyClass &c) const {
  check_id_kind(c.id, Kind::kClass);
  auto existing = data_.classes.find(c.id);
  if (c.parent) {
    if (*c.parent == c.id || (existing != data_.classes.end() && descends(*c.parent, c.id))) {
      throw CycleError("class " + c.id + " -> " + *c.parent + " would close a cycle");
    }
    auto parent = data_.classes.find(*c.parent);
    if (parent == data_.classes.end()) {
      throw DanglingReferenceError("class " + c.id + ": unknown parent " + *c.parent);
    }
    if (!c.domain.empty() && c.domain != parent->second.domain) {
      throw InvariantError("class " + c.id + ": domain " + c.domain + " differs from parent domain " +
                           parent->second.domain);
    }
  } else {
    if (!is_domain(c.domain) || c.name != c.domain) {
      throw InvariantError("class " + c.id + " has no parent but is not one of the 20 domain roots");
    }
    for (const auto &[id, other] : data_.classes) {
      if (id != c.id && !other.parent && other.domain == c.domain) {
        throw InvariantError("domain " + c.domain + " already has root class " + id);
      }
    }
  }
  if (existing != data_.classes.end() && existing->second.parent != c.parent) {
    throw InvariantError("class " + c.id + " already has a different parent; multi-parent classes are not supported");
  }
}

std::string ConceptStore::upsert(const TaxonomyClass &c) {
  std::unique_lock lock(mu_);
  check_class(c);
  TaxonomyClass stored = c;
  if (c.parent) {
    const TaxonomyClass &parent = data_.classes.at(*c.parent);
    stored.domain = parent.domain;
    stored.depth = parent.depth + 1;
  } else {
    stored.depth = 1;
  }
  data_.classes[c.id] = stored;
  data_.kinds[c.id] = Kind::kClass;
  return c.id;
}

void ConceptStore::check_primitive(const PrimitiveConcept &p) const {
  check_id_kind(p.id, Kind::kPrimitive);
  if (split_tokens(p.surface).empty()) throw InvariantError("primitive " + p.id + ": empty surface");
  if (p.classes.empty()) throw InvariantError("primitive " + p.id + ": no classes");
  for (const auto &c : p.classes) {
    auto k = kind_of(c);
    if (!k) throw DanglingReferenceError("primitive " + p.id + ": unknown class " + c);
    if (*k != Kind::kClass) throw TypeMismatchError("primitive " + p.id + ": " + c + " is not a class");
  }
}

void ConceptStore::index_primitive(const PrimitiveConcept &p) {
  auto add = [&](const std::string &s) {
    const std::string key = join_tokens(split_tokens(s), 0, split_tokens(s).size());
    auto &ids = data_.surface_index[key];
    if (std::find(ids.begin(), ids.end(), p.id) == ids.end()) {
      ids.insert(std::lower_bound(ids.begin(), ids.end(), p.id), p.id);
    }
    data_.max_surface_tokens = std::max(data_.max_surface_tokens, split_tokens(s).size());
  };
  add(p.surface);
  for (const auto &a : p.aliases) add(a);
}

void ConceptStore::unindex_primitive(const PrimitiveConcept &p) {
  auto drop = [&](const std::string &s) {
    const auto toks = split_tokens(s);
    auto it = data_.surface_index.find(join_tokens(toks, 0, toks.size()));
    if (it == data_.surface_index.end()) return;
    std::erase(it->second, p.id);
    if (it->second.empty()) data_.surface_index.erase(it);
  };
  drop(p.surface);
  for (const auto &a : p.aliases) drop(a);
}

std::string ConceptStore::upsert(const PrimitiveConcept &p) {
  std::unique_lock lock(mu_);
  check_primitive(p);
  auto it = data_.primitives.find(p.id);
  if (it != data_.primitives.end()) {
    if (it->second == p) return p.id;
    unindex_primitive(it->second);
  }
  data_.primitives[p.id] = p;
  data_.kinds[p.id] = Kind::kPrimitive;
  index_primitive(p);
  return p.id;
}

void ConceptStore::check_ecommerce(const ECommerceConcept &e) const {
  check_id_kind(e.id, Kind::kECommerce);
  if (e.tokens.empty()) throw InvariantError("e-commerce concept " + e.id + ": no tokens");
  size_t last_end = 0;
  for (const auto &link : e.links) {
    if (link.begin >= link.end || link.end > e.tokens.size()) {
      throw InvariantError("e-commerce concept " + e.id + ": link span out of range");
    }
    if (link.begin < last_end) throw InvariantError("e-commerce concept " + e.id + ": overlapping link spans");
    last_end = link.end;
    auto k = kind_of(link.primitive);
    if (!k) throw DanglingReferenceError("e-commerce concept " + e.id + ": unknown primitive " + link.primitive);
    if (*k != Kind::kPrimitive) {
      throw TypeMismatchError("e-commerce concept " + e.id + ": " + link.primitive + " is not a primitive concept");
    }
  }
  if (e.status == ConceptStatus::kValidated && e.links.empty()) {
    throw InvariantError("e-commerce concept " + e.id + ": validated concepts need at least one link");
  }
}

std::string ConceptStore::upsert(const ECommerceConcept &e) {
  ECommerceConcept stored = e;
  if (stored.tokens.empty()) stored.tokens = split_tokens(stored.phrase);
  std::sort(stored.links.begin(), stored.links.end());
  std::unique_lock lock(mu_);
  check_ecommerce(stored);
  data_.ecommerce[e.id] = std::move(stored);
  data_.kinds[e.id] = Kind::kECommerce;
  return e.id;
}

void ConceptStore::check_item(const Item &item) const {
  check_id_kind(item.id, Kind::kItem);
  if (item.tokens.empty()) throw InvariantError("item " + item.id + ": empty title");
  auto k = kind_of(item.category);
  if (!k) throw DanglingReferenceError("item " + item.id + ": unknown category " + item.category);
  if (*k != Kind::kClass || data_.classes.at(item.category).domain != "Category") {
    throw TypeMismatchError("item " + item.id + ": " + item.category + " is not a Category class");
  }
}

std::string ConceptStore::upsert(const Item &item) {
  Item stored = item;
  if (stored.tokens.empty()) stored.tokens = split_tokens(stored.title);
  std::unique_lock lock(mu_);
  check_item(stored);
  data_.items[item.id] = std::move(stored);
  data_.kinds[item.id] = Kind::kItem;
  return item.id;
}

void ConceptStore::check_edge(const Edge &edge) const {
  auto need = [&](const std::string &id, Kind kind) {
    auto k = kind_of(id);
    if (!k) {
      throw DanglingReferenceError(std::string(to_string(edge.relation)) + " edge: unknown node " + id);
    }
    if (*k != kind) {
      throw TypeMismatchError(std::string(to_string(edge.relation)) + " edge: " + id + " is a " +
                              kind_name(static_cast<int>(*k)) + ", expected a " +
                              kind_name(static_cast<int>(kind)));
    }
  };
  if (edge.weight && !(*edge.weight >= 0.0 && *edge.weight <= 1.0)) {
    throw InvariantError("edge weight must lie in [0, 1]");
  }
  if (edge.relation != Relation::kSchemaRelation && !edge.name.empty()) {
    throw InvariantError("only schema relations carry a name");
  }
  switch (edge.relation) {
    case Relation::kIsAClass: need(edge.src, Kind::kClass); need(edge.dst, Kind::kClass); break;
    case Relation::kInstanceOf: need(edge.src, Kind::kPrimitive); need(edge.dst, Kind::kClass); break;
    case Relation::kConceptLink: need(edge.src, Kind::kECommerce); need(edge.dst, Kind::kPrimitive); break;
    case Relation::kIsAConcept:
    case Relation::kSchemaRelation:
      need(edge.src, Kind::kPrimitive);
      need(edge.dst, Kind::kPrimitive);
      break;
    case Relation::kItemPrimitive: need(edge.src, Kind::kItem); need(edge.dst, Kind::kPrimitive); break;
    case Relation::kItemECommerce: need(edge.src, Kind::kItem); need(edge.dst, Kind::kECommerce); break;
  }
  const bool derived = edge.relation == Relation::kIsAClass || edge.relation == Relation::kInstanceOf ||
                       edge.relation == Relation::kConceptLink;
  if (derived && edge.weight) throw InvariantError(std::string(to_string(edge.relation)) + " edges carry no weight");
  if (edge.relation == Relation::kIsAConcept && edge.src == edge.dst) {
    throw InvariantError("isA_concept self loop on " + edge.src);
  }
  if (edge.relation == Relation::kSchemaRelation) {
    auto decl = std::find_if(data_.schema.begin(), data_.schema.end(),
                             [&](const SchemaRelation &s) { return s.name == edge.name; });
    if (decl == data_.schema.end()) throw TypeMismatchError("undeclared schema relation: " + edge.name);
    auto typed = [&](const std::string &prim, const std::string &cls) {
      for (const auto &c : data_.primitives.at(prim).classes)
        if (descends(c, cls)) return true;
      return false;
    };
    if (!typed(edge.src, decl->src_class) || !typed(edge.dst, decl->dst_class)) {
      throw TypeMismatchError("schema relation " + edge.name + ": endpoint classes do not match " +
                              decl->src_class + " -> " + decl->dst_class);
    }
  }
}

void ConceptStore::upsert_edge(const Edge &edge) {
  std::unique_lock lock(mu_);
  check_edge(edge);
  switch (edge.relation) {
    case Relation::kIsAClass: {
      const TaxonomyClass &src = data_.classes.at(edge.src);
      if (src.parent == edge.dst) return;
      if (descends(edge.dst, edge.src)) {
        throw CycleError("isA_class " + edge.src + " -> " + edge.dst + " would close a cycle");
      }
      if (src.parent) {
        throw InvariantError("class " + edge.src + " already has parent " + *src.parent +
                             "; multi-parent classes are not supported");
      }
      throw InvariantError("class " + edge.src + " is a domain root and cannot take a parent");
    }
    case Relation::kInstanceOf: {
      PrimitiveConcept &p = data_.primitives.at(edge.src);
      p.classes.insert(edge.dst);
      return;
    }
    case Relation::kConceptLink: {
      const auto &links = data_.ecommerce.at(edge.src).links;
      const bool present = std::any_of(links.begin(), links.end(),
                                       [&](const ConceptLink &l) { return l.primitive == edge.dst; });
      if (!present) {
        throw InvariantError("concept_link edges need a token span; upsert " + edge.src + " with links instead");
      }
      return;
    }
    default:
      data_.edges[{edge.relation, edge.name, edge.src, edge.dst}] = edge.weight;
  }
}

std::optional<TaxonomyClass> ConceptStore::find_class(const std::string &id) const {
  std::shared_lock lock(mu_);
  auto it = data_.classes.find(id);
  if (it == data_.classes.end()) return std::nullopt;
  return it->second;
}

std::optional<PrimitiveConcept> ConceptStore::find_primitive(const std::string &id) const {
  std::shared_lock lock(mu_);
  auto it = data_.primitives.find(id);
  if (it == data_.primitives.end()) return std::nullopt;
  return it->second;
}

std::optional<ECommerceConcept> ConceptStore::find_ecommerce(const std::string &id) const {
  std::shared_lock lock(mu_);
  auto it = data_.ecommerce.find(id);
  if (it == data_.ecommerce.end()) return std::nullopt;
  return it->second;
}

std::optional<Item> ConceptStore::find_item(const std::string &id) const {
  std::shared_lock lock(mu_);
  auto it = data_.items.find(id);
  if (it == data_.items.end()) return std::nullopt;
  return it->second;
}

bool ConceptStore::contains(const std::string &id) const {
  std::shared_lock lock(mu_);
  return data_.kinds.count(id) > 0;
}

std::vector<std::string> ConceptStore::ancestors(const std::string &class_id) const {
  std::shared_lock lock(mu_);
  auto it = data_.classes.find(class_id);
  if (it == data_.classes.end()) throw std::out_of_range("unknown class: " + class_id);
  std::vector<std::string> out;
  while (it->second.parent) {
    out.push_back(*it->second.parent);
    it = data_.classes.find(*it->second.parent);
  }
  return out;
}

bool ConceptStore::is_descendant_or_self(const std::string &class_id, const std::string &ancestor) const {
  std::shared_lock lock(mu_);
  return descends(class_id, ancestor);
}

std::vector<PrimitiveConcept> ConceptStore::lookup_surface(const std::string &surface) const {
  std::shared_lock lock(mu_);
  const auto toks = split_tokens(surface);
  auto it = data_.surface_index.find(join_tokens(toks, 0, toks.size()));
  std::vector<PrimitiveConcept> out;
  if (it == data_.surface_index.end()) return out;
  for (const auto &id : it->second) out.push_back(data_.primitives.at(id));
  return out;
}

std::vector<std::string> ConceptStore::domains_of(const std::string &primitive_id) const {
  std::shared_lock lock(mu_);
  std::set<std::string> out;
  auto it = data_.primitives.find(primitive_id);
  if (it == data_.primitives.end()) throw std::out_of_range("unknown primitive: " + primitive_id);
  for (const auto &c : it->second.classes) out.insert(data_.classes.at(c).domain);
  return {out.begin(), out.end()};
}

namespace {

template <typename M>
std::vector<typename M::mapped_type> values_of(const M &m) {
  std::vector<typename M::mapped_type> out;
  out.reserve(m.size());
  for (const auto &[k, v] : m) out.push_back(v);
  return out;
}

}  // namespace

std::vector<TaxonomyClass> ConceptStore::classes() const {
  std::shared_lock lock(mu_);
  return values_of(data_.classes);
}

std::vector<PrimitiveConcept> ConceptStore::primitives() const {
  std::shared_lock lock(mu_);
  return values_of(data_.primitives);
}

std::vector<ECommerceConcept> ConceptStore::ecommerce_concepts() const {
  std::shared_lock lock(mu_);
  return values_of(data_.ecommerce);
}

std::vector<Item> ConceptStore::items() const {
  std::shared_lock lock(mu_);
  return values_of(data_.items);
}

std::vector<Edge> ConceptStore::edges_locked() const {
  std::map<EdgeKey, std::optional<double>> all = data_.edges;
  for (const auto &[id, c] : data_.classes)
    if (c.parent) all[{Relation::kIsAClass, "", id, *c.parent}] = std::nullopt;
  for (const auto &[id, p] : data_.primitives)
    for (const auto &c : p.classes) all[{Relation::kInstanceOf, "", id, c}] = std::nullopt;
  for (const auto &[id, e] : data_.ecommerce)
    for (const auto &l : e.links) all[{Relation::kConceptLink, "", id, l.primitive}] = std::nullopt;
  std::vector<Edge> out;
  out.reserve(all.size());
  for (const auto &[k, w] : all) out.push_back({k.src, k.dst, k.relation, k.name, w});
  return out;
}

std::vector<Edge> ConceptStore::edges() const {
  std::shared_lock lock(mu_);
  return edges_locked();
}

std::vector<Edge> ConceptStore::edges(Relation relation) const {
  std::vector<Edge> out;
  for (auto &e : edges())
    if (e.relation == relation) out.push_back(std::move(e));
  return out;
}

std::optional<Edge> ConceptStore::find_edge(const std::string &src, const std::string &dst,
                                            Relation relation, const std::string &name) const {
  std::shared_lock lock(mu_);
  auto it = data_.edges.find({relation, name, src, dst});
  if (it != data_.edges.end()) return Edge{src, dst, relation, name, it->second};
  for (const auto &e : edges_locked())
    if (e.relation == relation && e.src == src && e.dst == dst && e.name == name) return e;
  return std::nullopt;
}

size_t ConceptStore::max_surface_tokens() const {
  std::shared_lock lock(mu_);
  return data_.max_surface_tokens;
}

StoreStats ConceptStore::stats() const {
  std::shared_lock lock(mu_);
  StoreStats s;
  s.classes = data_.classes.size();
  s.primitives = data_.primitives.size();
  s.ecommerce = data_.ecommerce.size();
  s.items = data_.items.size();
  for (auto d : kDomains) s.primitives_per_domain[std::string(d)] = 0;
  for (const auto &[id, p] : data_.primitives) {
    std::set<std::string> domains;
    for (const auto &c : p.classes) domains.insert(data_.classes.at(c).domain);
    for (const auto &d : domains) ++s.primitives_per_domain[d];
  }
  for (Relation r : {Relation::kIsAClass, Relation::kInstanceOf, Relation::kIsAConcept,
                     Relation::kSchemaRelation, Relation::kConceptLink, Relation::kItemPrimitive,
                     Relation::kItemECommerce}) {
    s.edges_per_relation[std::string(to_string(r))] = 0;
  }
  for (const auto &e : edges_locked()) ++s.edges_per_relation[std::string(to_string(e.relation))];
  return s;
}

double ConceptStore::coverage(const std::vector<std::vector<std::string>> &queries) const {
  if (queries.empty()) throw std::invalid_argument("coverage: empty query list");
  std::shared_lock lock(mu_);
  double total = 0;
  for (size_t q = 0; q < queries.size(); ++q) {
    const auto &toks = queries[q];
    if (toks.empty()) throw std::invalid_argument("coverage: query " + std::to_string(q) + " is empty");
    std::vector<bool> covered(toks.size(), false);
    for (size_t i = 0; i < toks.size(); ++i) {
      for (size_t len = 1; len <= data_.max_surface_tokens && i + len <= toks.size(); ++len) {
        if (data_.surface_index.count(join_tokens(toks, i, i + len))) {
          std::fill(covered.begin() + static_cast<long>(i), covered.begin() + static_cast<long>(i + len), true);
        }
      }
    }
    total += static_cast<double>(std::count(covered.begin(), covered.end(), true)) /
             static_cast<double>(toks.size());
  }
  return total / static_cast<double>(queries.size());
}

std::vector<std::string> ConceptStore::audit() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> problems;
  auto report = [&](std::string s) { problems.push_back(std::move(s)); };
  std::map<std::string, size_t> roots;
  for (const auto &[id, c] : data_.classes) {
    if (!c.parent) {
      if (!is_domain(c.domain) || c.name != c.domain) report("class " + id + ": parentless non-domain class");
      if (++roots[c.domain] > 1) report("domain " + c.domain + ": more than one root");
      if (c.depth != 1) report("class " + id + ": root depth " + std::to_string(c.depth));
      continue;
    }
    auto p = data_.classes.find(*c.parent);
    if (p == data_.classes.end()) {
      report("class " + id + ": dangling parent " + *c.parent);
      continue;
    }
    if (p->second.domain != c.domain) report("class " + id + ": domain differs from parent");
    if (c.depth != p->second.depth + 1) report("class " + id + ": inconsistent depth");
    // A parent walk longer than the class count must loop.
    std::string cur = id;
    size_t steps = 0;
    while (true) {
      auto it = data_.classes.find(cur);
      if (it == data_.classes.end() || !it->second.parent) break;
      cur = *it->second.parent;
      if (++steps > data_.classes.size()) {
        report("class " + id + ": taxonomy cycle");
        break;
      }
    }
  }
  for (const auto &[id, p] : data_.primitives) {
    if (p.classes.empty()) report("primitive " + id + ": no classes");
    for (const auto &c : p.classes)
      if (!data_.classes.count(c)) report("primitive " + id + ": dangling class " + c);
  }
  for (const auto &[id, e] : data_.ecommerce) {
    size_t last_end = 0;
    for (const auto &l : e.links) {
      if (!data_.primitives.count(l.primitive)) report("e-commerce concept " + id + ": dangling link " + l.primitive);
      if (l.begin >= l.end || l.end > e.tokens.size() || l.begin < last_end) {
        report("e-commerce concept " + id + ": bad link span");
      }
      last_end = l.end;
    }
    if (e.status == ConceptStatus::kValidated && e.links.empty()) {
      report("e-commerce concept " + id + ": validated without links");
    }
  }
  for (const auto &[id, item] : data_.items) {
    auto c = data_.classes.find(item.category);
    if (c == data_.classes.end()) {
      report("item " + id + ": dangling category " + item.category);
    } else if (c->second.domain != "Category") {
      report("item " + id + ": category outside the Category domain");
    }
  }
  for (const auto &[key, weight] : data_.edges) {
    auto src = kind_of(key.src), dst = kind_of(key.dst);
    const std::string tag = std::string(to_string(key.relation)) + " " + key.src + " -> " + key.dst;
    if (!src || !dst) {
      report(tag + ": dangling endpoint");
      continue;
    }
    Kind want_src = Kind::kPrimitive, want_dst = Kind::kPrimitive;
    if (key.relation == Relation::kItemPrimitive) want_src = Kind::kItem;
    if (key.relation == Relation::kItemECommerce) {
      want_src = Kind::kItem;
      want_dst = Kind::kECommerce;
    }
    if (*src != want_src || *dst != want_dst) report(tag + ": endpoint types");
    if (weight && !(*weight >= 0 && *weight <= 1)) report(tag + ": weight out of range");
  }
  for (const auto &[id, kind] : data_.kinds) {
    bool present = false;
    switch (kind) {
      case Kind::kClass: present = data_.classes.count(id) > 0; break;
      case Kind::kPrimitive: present = data_.primitives.count(id) > 0; break;
      case Kind::kECommerce: present = data_.ecommerce.count(id) > 0; break;
      case Kind::kItem: present = data_.items.count(id) > 0; break;
    }
    if (!present) report("id index entry without node: " + id);
  }
  return problems;
}

void ConceptStore::export_jsonl(std::ostream &out) const {
  std::shared_lock lock(mu_);
  for (const auto &s : data_.schema) {
    out << json{{"kind", "schema"}, {"name", s.name}, {"src", s.src_class}, {"dst", s.dst_class}}.dump() << '\n';
  }
  for (const auto &[id, c] : data_.classes) {
    json j{{"kind", "class"}, {"id", id}, {"name", c.name}, {"domain", c.domain}};
    if (c.parent) j["parent"] = *c.parent;
    out << j.dump() << '\n';
  }
  for (const auto &[id, p] : data_.primitives) {
    out << json{{"kind", "primitive"}, {"id", id}, {"surface", p.surface}, {"classes", p.classes},
                {"aliases", p.aliases}}.dump()
        << '\n';
  }
  for (const auto &[id, e] : data_.ecommerce) {
    json links = json::array();
    for (const auto &l : e.links) links.push_back({{"begin", l.begin}, {"end", l.end}, {"primitive", l.primitive}});
    out << json{{"kind", "ecommerce"}, {"id", id}, {"phrase", e.phrase}, {"tokens", e.tokens},
                {"status", to_string(e.status)}, {"links", links}}.dump()
        << '\n';
  }
  for (const auto &[id, item] : data_.items) {
    out << json{{"kind", "item"}, {"id", id}, {"title", item.title}, {"tokens", item.tokens},
                {"category", item.category}}.dump()
        << '\n';
  }
  for (const auto &[key, weight] : data_.edges) {
    json j{{"kind", "edge"}, {"relation", to_string(key.relation)}, {"src", key.src}, {"dst", key.dst}};
    if (!key.name.empty()) j["name"] = key.name;
    if (weight) j["weight"] = *weight;
    out << j.dump() << '\n';
  }
}

void ConceptStore::export_jsonl(const std::string &path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write store file: " + path);
  export_jsonl(out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

ConceptStore ConceptStore::import_jsonl(std::istream &in) {
  ConceptStore store;
  std::vector<SchemaRelation> schema;
  std::map<std::string, std::pair<size_t, TaxonomyClass>> classes;
  std::vector<std::pair<size_t, PrimitiveConcept>> primitives;
  std::vector<std::pair<size_t, ECommerceConcept>> ecommerce;
  std::vector<std::pair<size_t, Item>> items;
  std::vector<std::pair<size_t, Edge>> edges;

  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "schema") {
        schema.push_back({j.at("name"), j.at("src"), j.at("dst")});
      } else if (kind == "class") {
        TaxonomyClass c{j.at("id"), j.at("name"), j.at("domain"), std::nullopt, 1};
        if (j.contains("parent")) c.parent = j.at("parent").get<std::string>();
        if (!classes.emplace(c.id, std::make_pair(lineno, c)).second) throw ParseError(lineno, "duplicate class " + c.id);
      } else if (kind == "primitive") {
        primitives.push_back({lineno, PrimitiveConcept{j.at("id"), j.at("surface"), j.at("classes"),
                                                       j.value("aliases", std::set<std::string>{})}});
      } else if (kind == "ecommerce") {
        ECommerceConcept e{j.at("id"), j.at("phrase"), j.at("tokens"), parse_status(j.at("status").get<std::string>()), {}};
        for (const auto &l : j.at("links")) e.links.push_back({l.at("begin"), l.at("end"), l.at("primitive")});
        ecommerce.push_back({lineno, std::move(e)});
      } else if (kind == "item") {
        items.push_back({lineno, Item{j.at("id"), j.at("title"), j.at("tokens"), j.at("category")}});
      } else if (kind == "edge") {
        Edge e{j.at("src"), j.at("dst"), parse_relation(j.at("relation").get<std::string>()),
               j.value("name", std::string()), std::nullopt};
        if (j.contains("weight")) e.weight = j.at("weight").get<double>();
        edges.push_back({lineno, std::move(e)});
      } else {
        throw ParseError(lineno, "unknown kind " + kind);
      }
    } catch (const ParseError &) {
      throw;
    } catch (const std::exception &e) {
      throw ParseError(lineno, e.what());
    }
  }

  auto guarded = [](size_t ln, const std::function<void()> &f) {
    try {
      f();
    } catch (const ParseError &) {
      throw;
    } catch (const std::exception &e) {
      throw ParseError(ln, e.what());
    }
  };
  guarded(0, [&] { store.set_schema(schema); });

  // Parents first, whatever the file order.
  std::set<std::string> visiting;
  std::function<void(const std::string &)> insert_class = [&](const std::string &id) {
    auto &[ln, c] = classes.at(id);
    if (store.data_.classes.count(id)) return;
    if (!visiting.insert(id).second) throw ParseError(ln, "taxonomy cycle through class " + id);
    if (c.parent && classes.count(*c.parent)) insert_class(*c.parent);
    guarded(ln, [&] { store.upsert(c); });
    visiting.erase(id);
  };
  for (const auto &[id, entry] : classes) insert_class(id);
  for (const auto &[ln, p] : primitives) guarded(ln, [&] { store.upsert(p); });
  for (const auto &[ln, e] : ecommerce) guarded(ln, [&] { store.upsert(e); });
  for (const auto &[ln, item] : items) guarded(ln, [&] { store.upsert(item); });
  for (const auto &[ln, e] : edges) guarded(ln, [&] { store.upsert_edge(e); });
  return store;
}

ConceptStore ConceptStore::import_jsonl(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open store file: " + path);
  return import_jsonl(in);
}

void ConceptStore::merge(const ConceptStore &other) {
  if (this == &other) return;
  Data src;
  {
    std::shared_lock lock(other.mu_);
    src = other.data_;
  }
  std::vector<SchemaRelation> schema = this->schema();
  for (const auto &s : src.schema) {
    if (std::find(schema.begin(), schema.end(), s) == schema.end()) schema.push_back(s);
  }
  set_schema(std::move(schema));
  std::vector<const TaxonomyClass *> classes;
  for (const auto &[id, c] : src.classes) classes.push_back(&c);
  std::stable_sort(classes.begin(), classes.end(),
                   [](const TaxonomyClass *a, const TaxonomyClass *b) { return a->depth < b->depth; });
  for (const auto *c : classes) upsert(*c);
  for (const auto &[id, p] : src.primitives) upsert(p);
  for (const auto &[id, e] : src.ecommerce) upsert(e);
  for (const auto &[id, item] : src.items) upsert(item);
  for (const auto &[key, weight] : src.edges) upsert_edge(Edge{key.src, key.dst, key.relation, key.name, weight});
}

bool ConceptStore::operator==(const ConceptStore &other) const {
  if (this == &other) return true;
  std::shared_lock a(mu_);
  std::shared_lock b(other.mu_);
  return data_.schema == other.data_.schema && data_.classes == other.data_.classes &&
         data_.primitives == other.data_.primitives && data_.ecommerce == other.data_.ecommerce &&
         data_.items == other.data_.items && data_.edges == other.data_.edges;
}

}  // namespace econet
