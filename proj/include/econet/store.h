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

// The four-layer concept net: taxonomy classes, primitive concepts,
// e-commerce concepts and items, plus typed edges between them.
//
// Ids live in one namespace shared by all node kinds. Three relations are
// carried by node fields rather than stored separately:
//
//   isA_class    TaxonomyClass.parent
//   instanceOf   PrimitiveConcept.classes
//   concept_link ECommerceConcept.links
//
// They still appear in edges(), stats() and audit(). The remaining relations
// (isA_concept, schema_relation, item_primitive, item_ecommerce) are stored
// edges and may carry a weight in [0, 1].

#ifndef ECONET_STORE_H_
#define ECONET_STORE_H_

#include <array>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "json.hpp"

namespace econet {

// First-level taxonomy classes.
inline constexpr std::array<std::string_view, 20> kDomains = {
    "Audience", "Brand",    "Color",    "Design",  "Event",   "Function", "Category",
    "IP",       "Material", "Modifier", "Nature",  "Organization", "Pattern", "Location",
    "Quantity", "Shape",    "Smell",    "Style",   "Taste",   "Time"};
bool is_domain(std::string_view name);

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DanglingReferenceError : public StoreError {
 public:
  using StoreError::StoreError;
};
class TypeMismatchError : public StoreError {
 public:
  using StoreError::StoreError;
};
class CycleError : public StoreError {
 public:
  using StoreError::StoreError;
};
class InvariantError : public StoreError {
 public:
  using StoreError::StoreError;
};
class ParseError : public StoreError {
 public:
  ParseError(size_t line, const std::string &what)
      : StoreError("line " + std::to_string(line) + ": " + what), line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

struct TaxonomyClass {
  std::string id;
  std::string name;
  std::string domain;
  std::optional<std::string> parent;
  int depth = 1;  // filled in by the store
  bool operator==(const TaxonomyClass &) const = default;
};

struct PrimitiveConcept {
  std::string id;
  std::string surface;
  std::set<std::string> classes;
  std::set<std::string> aliases;
  bool operator==(const PrimitiveConcept &) const = default;
};

enum class ConceptStatus { kCandidate, kValidated, kRejected };
std::string_view to_string(ConceptStatus s);
ConceptStatus parse_status(std::string_view s);

struct ConceptLink {
  size_t begin = 0;  // token span [begin, end)
  size_t end = 0;
  std::string primitive;
  auto operator<=>(const ConceptLink &) const = default;
};

struct ECommerceConcept {
  std::string id;
  std::string phrase;
  std::vector<std::string> tokens;  // whitespace split of phrase when empty
  ConceptStatus status = ConceptStatus::kCandidate;
  std::vector<ConceptLink> links;
  bool operator==(const ECommerceConcept &) const = default;
};

struct Item {
  std::string id;
  std::string title;
  std::vector<std::string> tokens;
  std::string category;  // a class under the Category domain
  bool operator==(const Item &) const = default;
};

enum class Relation {
  kIsAClass,
  kInstanceOf,
  kIsAConcept,
  kSchemaRelation,
  kConceptLink,
  kItemPrimitive,
  kItemECommerce,
};
std::string_view to_string(Relation r);
Relation parse_relation(std::string_view s);

struct Edge {
  std::string src;
  std::string dst;
  Relation relation = Relation::kIsAConcept;
  std::string name;  // schema relations only
  std::optional<double> weight;
  bool operator==(const Edge &) const = default;
};

// Declared schema relations; endpoints must be primitive concepts with a
// class at or below the declared class.
struct SchemaRelation {
  std::string name;
  std::string src_class;
  std::string dst_class;
  bool operator==(const SchemaRelation &) const = default;
};

// {"relations": [{"name": "suitable_when", "src": "Category", "dst": "Time"}]}
std::vector<SchemaRelation> load_schema(const std::string &path);
std::vector<SchemaRelation> schema_from_json(const nlohmann::json &j);

struct StoreStats {
  size_t classes = 0;
  size_t primitives = 0;
  size_t ecommerce = 0;
  size_t items = 0;
  std::map<std::string, size_t> primitives_per_domain;  // all 20 domains present
  std::map<std::string, size_t> edges_per_relation;     // all relations present
  nlohmann::json to_json() const;
  bool operator==(const StoreStats &) const = default;
};

std::vector<std::string> split_tokens(std::string_view text);
std::string join_tokens(const std::vector<std::string> &tokens, size_t begin, size_t end);

class ConceptStore {
 public:
  ConceptStore() = default;
  ConceptStore(const ConceptStore &other);
  ConceptStore &operator=(const ConceptStore &other);

  void set_schema(std::vector<SchemaRelation> schema);
  std::vector<SchemaRelation> schema() const;

  // Insert or replace. Identical payloads are no-ops; the changed payload
  // must still satisfy every invariant, otherwise nothing is written.
  // A class may not change its parent or domain once inserted.
  std::string upsert(const TaxonomyClass &c);
  std::string upsert(const PrimitiveConcept &p);
  std::string upsert(const ECommerceConcept &e);
  std::string upsert(const Item &item);
  void upsert_edge(const Edge &edge);

  std::optional<TaxonomyClass> find_class(const std::string &id) const;
  std::optional<PrimitiveConcept> find_primitive(const std::string &id) const;
  std::optional<ECommerceConcept> find_ecommerce(const std::string &id) const;
  std::optional<Item> find_item(const std::string &id) const;
  bool contains(const std::string &id) const;

  // Parent chain up to the domain root, nearest first.
  std::vector<std::string> ancestors(const std::string &class_id) const;
  bool is_descendant_or_self(const std::string &class_id, const std::string &ancestor) const;

  // Primitive concepts whose surface or alias equals `surface`, by id.
  std::vector<PrimitiveConcept> lookup_surface(const std::string &surface) const;
  // Domains of a primitive concept (sorted, distinct).
  std::vector<std::string> domains_of(const std::string &primitive_id) const;

  std::vector<TaxonomyClass> classes() const;
  std::vector<PrimitiveConcept> primitives() const;
  std::vector<ECommerceConcept> ecommerce_concepts() const;
  std::vector<Item> items() const;
  // Stored and derived edges in canonical order.
  std::vector<Edge> edges() const;
  std::vector<Edge> edges(Relation relation) const;
  std::optional<Edge> find_edge(const std::string &src, const std::string &dst, Relation relation,
                                const std::string &name = "") const;
  size_t max_surface_tokens() const;

  StoreStats stats() const;

  // Mean over queries of the fraction of tokens covered by some
  // surface/alias occurrence. Throws std::invalid_argument on an empty list.
  double coverage(const std::vector<std::vector<std::string>> &queries) const;

  // Full scan; returns human-readable violations (empty when consistent).
  std::vector<std::string> audit() const;

  // One JSON object per line with a "kind" field; schema relations first,
  // then classes, primitives, e-commerce concepts, items and stored edges,
  // each group sorted by id.
  void export_jsonl(std::ostream &out) const;
  void export_jsonl(const std::string &path) const;
  static ConceptStore import_jsonl(std::istream &in);
  static ConceptStore import_jsonl(const std::string &path);

  // Upserts every node and stored edge of `other`, parents first. Schema
  // relations are unioned.
  void merge(const ConceptStore &other);

  bool operator==(const ConceptStore &other) const;

 private:
  enum class Kind { kClass, kPrimitive, kECommerce, kItem };
  struct EdgeKey {
    Relation relation;
    std::string name;
    std::string src;
    std::string dst;
    auto operator<=>(const EdgeKey &) const = default;
  };
  struct Data {
    std::vector<SchemaRelation> schema;
    std::map<std::string, TaxonomyClass> classes;
    std::map<std::string, PrimitiveConcept> primitives;
    std::map<std::string, ECommerceConcept> ecommerce;
    std::map<std::string, Item> items;
    std::map<EdgeKey, std::optional<double>> edges;
    std::unordered_map<std::string, Kind> kinds;
    std::unordered_map<std::string, std::vector<std::string>> surface_index;
    size_t max_surface_tokens = 0;
  };

  std::optional<Kind> kind_of(const std::string &id) const;
  void check_id_kind(const std::string &id, Kind kind) const;
  void check_class(const TaxonomyClass &c) const;
  void check_primitive(const PrimitiveConcept &p) const;
  void check_ecommerce(const ECommerceConcept &e) const;
  void check_item(const Item &item) const;
  void check_edge(const Edge &edge) const;
  bool descends(const std::string &class_id, const std::string &ancestor) const;
  std::vector<Edge> edges_locked() const;
  void index_primitive(const PrimitiveConcept &p);
  void unindex_primitive(const PrimitiveConcept &p);

  mutable std::shared_mutex mu_;
  Data data_;
};

}  // namespace econet

#endif  // ECONET_STORE_H_
