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

#include <atomic>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "econet/random.h"
#include "econet/store.h"
#include "test_util.h"

namespace econet {
namespace {

TaxonomyClass root(const std::string &domain) { return {domain, domain, domain, std::nullopt, 1}; }
TaxonomyClass child(const std::string &id, const std::string &parent) { return {id, id, "", parent, 1}; }

// Clothing fixture: Category > Clothing > {Dress, Pants}, plus a few domains.
ConceptStore fixture() {
  ConceptStore s;
  for (const char *d : {"Category", "Color", "Location", "Event", "Function", "Time"}) s.upsert(root(d));
  s.upsert(child("Clothing", "Category"));
  s.upsert(child("Dress", "Clothing"));
  s.upsert(child("Pants", "Clothing"));
  s.upsert(PrimitiveConcept{"p_red", "red", {"Color"}, {}});
  s.upsert(PrimitiveConcept{"p_pants", "pants", {"Pants"}, {"trousers"}});
  s.upsert(PrimitiveConcept{"p_cargo", "cargo pants", {"Pants"}, {}});
  s.upsert(PrimitiveConcept{"p_outdoor", "outdoor", {"Location"}, {}});
  s.upsert(PrimitiveConcept{"p_bbq", "barbecue", {"Event"}, {}});
  return s;
}

TEST_SUITE("store") {
  TEST_CASE("upsert is idempotent") {
    ConceptStore s = fixture();
    const size_t before = s.stats().classes;
    s.upsert(child("Dress", "Clothing"));
    CHECK(s.stats().classes == before);
    s.upsert(PrimitiveConcept{"p_red", "red", {"Color"}, {}});
    CHECK(s.stats().primitives == 5);
  }

  TEST_CASE("references are checked") {
    ConceptStore s = fixture();
    CHECK_THROWS_AS(s.upsert_edge({"p_red", "missing", Relation::kIsAConcept, "", std::nullopt}),
                    DanglingReferenceError);
    CHECK_THROWS_AS(s.upsert(child("Orphan", "Nowhere")), DanglingReferenceError);
    CHECK_THROWS_AS(s.upsert(PrimitiveConcept{"p_x", "x", {"Nowhere"}, {}}), DanglingReferenceError);
    CHECK_THROWS_AS(s.upsert_edge({"p_red", "Color", Relation::kIsAConcept, "", std::nullopt}), TypeMismatchError);
    CHECK_THROWS_AS(s.upsert(PrimitiveConcept{"Color", "x", {"Color"}, {}}), TypeMismatchError);
    CHECK_THROWS_AS(s.upsert(Item{"i1", "red dress", {}, "Color"}), TypeMismatchError);
    CHECK_THROWS_AS(s.upsert(TaxonomyClass{"Misc", "Misc", "Misc", std::nullopt, 1}), InvariantError);
    CHECK_THROWS_AS(s.upsert_edge({"p_red", "p_red", Relation::kIsAConcept, "", std::nullopt}), InvariantError);
    CHECK_THROWS_AS(s.upsert_edge({"p_cargo", "p_pants", Relation::kIsAConcept, "", 1.5}), InvariantError);
    CHECK(s.audit().empty());
  }

  TEST_CASE("validated concepts need links and spans must be sane") {
    ConceptStore s = fixture();
    CHECK_THROWS_AS(s.upsert(ECommerceConcept{"ec1", "outdoor barbecue", {}, ConceptStatus::kValidated, {}}),
                    InvariantError);
    CHECK_THROWS_AS(s.upsert(ECommerceConcept{"ec1", "outdoor barbecue", {}, ConceptStatus::kCandidate,
                                              {{0, 3, "p_outdoor"}}}),
                    InvariantError);
    CHECK_THROWS_AS(s.upsert(ECommerceConcept{"ec1", "outdoor barbecue", {}, ConceptStatus::kCandidate,
                                              {{0, 2, "p_outdoor"}, {1, 2, "p_bbq"}}}),
                    InvariantError);
    s.upsert(ECommerceConcept{"ec1", "outdoor barbecue", {}, ConceptStatus::kValidated,
                              {{1, 2, "p_bbq"}, {0, 1, "p_outdoor"}}});
    auto ec = s.find_ecommerce("ec1");
    REQUIRE(ec);
    CHECK(ec->tokens == std::vector<std::string>{"outdoor", "barbecue"});
    CHECK(ec->links.front().primitive == "p_outdoor");
    CHECK(s.edges(Relation::kConceptLink).size() == 2);
    CHECK_NOTHROW(s.upsert_edge({"ec1", "p_bbq", Relation::kConceptLink, "", std::nullopt}));
    CHECK_THROWS_AS(s.upsert_edge({"ec1", "p_red", Relation::kConceptLink, "", std::nullopt}), InvariantError);
  }

  TEST_CASE("ancestors") {
    ConceptStore s = fixture();
    CHECK(s.ancestors("Category").empty());
    CHECK(s.ancestors("Dress") == std::vector<std::string>{"Clothing", "Category"});
    CHECK(s.find_class("Dress")->depth == 3);
    CHECK(s.find_class("Dress")->domain == "Category");
    CHECK_THROWS(s.ancestors("Nope"));
  }

  // Random forest over the domain roots, shared by the oracle tests below.
  struct RandomTree {
    ConceptStore store;
    std::map<std::string, std::string> parent;
    std::vector<std::string> ids;
  };

  RandomTree random_tree(uint64_t seed, size_t n) {
    RandomTree t;
    Rng rng(seed);
    for (auto d : kDomains) {
      t.store.upsert(root(std::string(d)));
      t.ids.push_back(std::string(d));
    }
    for (size_t i = 0; i < n; ++i) {
      const std::string id = "c" + std::to_string(i);
      const std::string p = t.ids[rng.below(t.ids.size())];
      t.store.upsert(child(id, p));
      t.parent[id] = p;
      t.ids.push_back(id);
    }
    return t;
  }

  TEST_CASE("ancestors match a parent-pointer walk") {
    RandomTree t = random_tree(7, 300);
    for (const auto &id : t.ids) {
      std::vector<std::string> expect;
      for (auto it = t.parent.find(id); it != t.parent.end(); it = t.parent.find(it->second)) {
        expect.push_back(it->second);
      }
      CHECK(t.store.ancestors(id) == expect);
      CHECK(t.store.find_class(id)->depth == static_cast<int>(expect.size()) + 1);
    }
  }

  TEST_CASE("cycle-closing isA_class edges are rejected") {
    RandomTree t = random_tree(11, 120);
    std::map<std::string, std::vector<std::string>> children;
    for (const auto &[c, p] : t.parent) children[p].push_back(c);
    // DFS down from src: the edge src -> dst closes a cycle iff dst is src
    // or lies below it.
    auto below = [&](const std::string &src, const std::string &dst) {
      std::vector<std::string> stack{src};
      while (!stack.empty()) {
        std::string cur = stack.back();
        stack.pop_back();
        if (cur == dst) return true;
        for (const auto &c : children[cur]) stack.push_back(c);
      }
      return false;
    };
    Rng rng(3);
    int cycles = 0;
    for (int rep = 0; rep < 400; ++rep) {
      const std::string a = t.ids[rng.below(t.ids.size())], b = t.ids[rng.below(t.ids.size())];
      Edge e{a, b, Relation::kIsAClass, "", std::nullopt};
      if (t.parent.count(a) && t.parent.at(a) == b) {
        CHECK_NOTHROW(t.store.upsert_edge(e));
      } else if (below(a, b)) {
        ++cycles;
        CHECK_THROWS_AS(t.store.upsert_edge(e), CycleError);
      } else {
        CHECK_THROWS_AS(t.store.upsert_edge(e), InvariantError);
      }
    }
    CHECK(cycles > 0);
    CHECK(t.store.audit().empty());
  }

  TEST_CASE("stats") {
    ConceptStore empty;
    StoreStats z = empty.stats();
    CHECK(z.classes + z.primitives + z.ecommerce + z.items == 0);
    for (const auto &[k, v] : z.primitives_per_domain) CHECK(v == 0);
    CHECK(z.primitives_per_domain.size() == 20);

    ConceptStore s = fixture();
    s.upsert(PrimitiveConcept{"p_blue", "blue", {"Color"}, {}});
    s.upsert(PrimitiveConcept{"p_green", "green", {"Color"}, {}});
    StoreStats st = s.stats();
    CHECK(st.primitives_per_domain.at("Color") == 3);
    CHECK(st.primitives_per_domain.at("Category") == 2);
    CHECK(st.edges_per_relation.at("isA_class") == 3);
    CHECK(st.edges_per_relation.at("instanceOf") == 7);
  }

  TEST_CASE("coverage") {
    ConceptStore s = fixture();
    CHECK(s.coverage({{"red", "pants"}}) == 1.0);
    CHECK(s.coverage({{"blue", "hat"}}) == 0.0);
    CHECK(s.coverage({{"red", "hat"}}) == 0.5);
    CHECK(s.coverage({{"cargo", "pants"}, {"nothing", "here"}}) == 0.5);
    CHECK(s.coverage({{"trousers"}}) == 1.0);
    CHECK_THROWS_AS(s.coverage({}), std::invalid_argument);
  }

  TEST_CASE("schema relations are type checked") {
    ConceptStore s = fixture();
    s.set_schema({{"suitable_when", "Category", "Time"}});
    s.upsert(PrimitiveConcept{"p_summer", "summer", {"Time"}, {}});
    s.upsert_edge({"p_pants", "p_summer", Relation::kSchemaRelation, "suitable_when", std::nullopt});
    CHECK_THROWS_AS(s.upsert_edge({"p_red", "p_summer", Relation::kSchemaRelation, "suitable_when", std::nullopt}),
                    TypeMismatchError);
    CHECK_THROWS_AS(s.upsert_edge({"p_pants", "p_summer", Relation::kSchemaRelation, "undeclared", std::nullopt}),
                    TypeMismatchError);
  }

  TEST_CASE("lookup by surface returns every id sorted") {
    ConceptStore s = fixture();
    s.upsert(PrimitiveConcept{"p_a_red", "red", {"Color"}, {}});
    auto hits = s.lookup_surface("red");
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].id == "p_a_red");
    CHECK(s.lookup_surface("trousers").at(0).id == "p_pants");
    s.upsert(PrimitiveConcept{"p_pants", "pants", {"Pants"}, {}});
    CHECK(s.lookup_surface("trousers").empty());
  }

  TEST_CASE("export and import round trip") {
    ConceptStore s = fixture();
    s.set_schema({{"suitable_when", "Category", "Time"}});
    s.upsert(PrimitiveConcept{"p_summer", "summer", {"Time"}, {}});
    s.upsert(ECommerceConcept{"ec1", "outdoor barbecue", {}, ConceptStatus::kValidated,
                              {{0, 1, "p_outdoor"}, {1, 2, "p_bbq"}}});
    s.upsert(Item{"i1", "charcoal briquettes", {}, "Category"});
    s.upsert_edge({"i1", "ec1", Relation::kItemECommerce, "", 0.8125});
    s.upsert_edge({"p_cargo", "p_pants", Relation::kIsAConcept, "", std::nullopt});
    s.upsert_edge({"p_pants", "p_summer", Relation::kSchemaRelation, "suitable_when", std::nullopt});
    std::ostringstream first;
    s.export_jsonl(first);
    std::istringstream in(first.str());
    ConceptStore back = ConceptStore::import_jsonl(in);
    CHECK(back == s);
    std::ostringstream second;
    back.export_jsonl(second);
    CHECK(first.str() == second.str());

    ConceptStore empty;
    std::ostringstream e;
    empty.export_jsonl(e);
    std::istringstream ein(e.str());
    CHECK(ConceptStore::import_jsonl(ein) == empty);
  }

  TEST_CASE("merge into an empty store reproduces the source") {
    ConceptStore src = fixture();
    src.upsert_edge({"p_cargo", "p_pants", Relation::kIsAConcept, "", 0.5});
    ConceptStore dst;
    dst.merge(src);
    CHECK(dst == src);
    dst.merge(src);
    CHECK(dst == src);

    ConceptStore extra;
    extra.upsert(root("Category"));
    extra.upsert(child("Shoes", "Category"));
    extra.upsert(PrimitiveConcept{"p_boot", "boot", {"Shoes"}, {}});
    dst.merge(extra);
    CHECK(dst.stats().primitives == 6);
    CHECK(dst.audit().empty());

    ConceptStore clash;
    clash.upsert(root("Color"));
    clash.upsert(PrimitiveConcept{"Dress", "dress", {"Color"}, {}});
    CHECK_THROWS_AS(dst.merge(clash), TypeMismatchError);
  }

  TEST_CASE("malformed lines report their line number") {
    ConceptStore s = fixture();
    std::ostringstream out;
    s.export_jsonl(out);
    std::vector<std::string> lines;
    std::istringstream split(out.str());
    for (std::string l; std::getline(split, l);) lines.push_back(l);
    lines[3] = "{\"kind\": \"class\", \"id\": ";
    std::string joined;
    for (const auto &l : lines) joined += l + "\n";
    std::istringstream bad(joined);
    try {
      ConceptStore::import_jsonl(bad);
      FAIL("expected ParseError");
    } catch (const ParseError &e) {
      CHECK(e.line() == 4);
    }
  }

  TEST_CASE("updating edge weights is idempotent") {
    ConceptStore s = fixture();
    s.upsert(ECommerceConcept{"ec1", "outdoor barbecue", {}, ConceptStatus::kCandidate, {}});
    s.upsert(Item{"i1", "charcoal", {}, "Clothing"});
    s.upsert_edge({"i1", "ec1", Relation::kItemECommerce, "", 0.5});
    s.upsert_edge({"i1", "ec1", Relation::kItemECommerce, "", 0.7});
    CHECK(s.edges(Relation::kItemECommerce).size() == 1);
    CHECK(*s.find_edge("i1", "ec1", Relation::kItemECommerce)->weight == 0.7);
  }

  TEST_CASE("readers run alongside a writer") {
    ConceptStore s = fixture();
    std::atomic<bool> done{false};
    std::atomic<int> bad{0};
    std::thread reader([&] {
      while (!done) {
        if (!s.audit().empty()) ++bad;
        s.stats();
      }
    });
    for (int i = 0; i < 300; ++i) {
      s.upsert(PrimitiveConcept{"p" + std::to_string(i), "w" + std::to_string(i), {"Color"}, {}});
    }
    done = true;
    reader.join();
    CHECK(bad == 0);
    CHECK(s.stats().primitives == 305);
  }
}

}  // namespace
}  // namespace econet
