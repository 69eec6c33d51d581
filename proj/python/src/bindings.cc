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

// econet._core: the store, CRF routines, trained-model inference and the
// hypernym active-learning loop.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "econet/active_learning.h"
#include "econet/crf.h"
#include "econet/hypernym.h"
#include "econet/store.h"
#include "econet/synthetic.h"
#include "econet/tagger.h"
#include "json.hpp"

namespace py = pybind11;

namespace econet {
namespace {

using json = nlohmann::json;
using Matrix = std::vector<std::vector<double>>;

py::object to_py(const json &j) {
  switch (j.type()) {
    case json::value_t::null: return py::none();
    case json::value_t::boolean: return py::bool_(j.get<bool>());
    case json::value_t::number_integer: return py::int_(j.get<int64_t>());
    case json::value_t::number_unsigned: return py::int_(j.get<uint64_t>());
    case json::value_t::number_float: return py::float_(j.get<double>());
    case json::value_t::string: return py::str(j.get<std::string>());
    case json::value_t::array: {
      py::list out;
      for (const auto &v : j) out.append(to_py(v));
      return out;
    }
    case json::value_t::object: {
      py::dict out;
      for (auto it = j.begin(); it != j.end(); ++it) out[py::str(it.key())] = to_py(it.value());
      return out;
    }
    default: return py::none();
  }
}

Tensor to_tensor(const Matrix &m, const char *what) {
  if (m.empty() || m[0].empty()) throw ConfigError(std::string(what) + " must be a non-empty matrix");
  Tensor t({m.size(), m[0].size()});
  for (size_t i = 0; i < m.size(); ++i) {
    if (m[i].size() != m[0].size()) throw ConfigError(std::string(what) + " rows differ in length");
    for (size_t j = 0; j < m[i].size(); ++j) t(i, j) = m[i][j];
  }
  return t;
}

CrfMask mask_for(const std::vector<std::string> &domains, size_t labels) {
  if (domains.empty()) return {};
  CrfMask m = LabelSet(domains).mask();
  if (m.labels != labels) throw ConfigError("emission width does not match 1 + 2 * len(domains)");
  return m;
}

class CallbackOracle : public Oracle {
 public:
  explicit CallbackOracle(std::function<std::vector<int>(const std::vector<std::string> &)> fn) : fn_(std::move(fn)) {}
  std::vector<int> label(const std::vector<std::string> &ids) override {
    auto out = fn_(ids);
    if (out.size() != ids.size()) throw OracleError("oracle returned " + std::to_string(out.size()) + " labels for " +
                                                    std::to_string(ids.size()) + " ids");
    return out;
  }

 private:
  std::function<std::vector<int>(const std::vector<std::string> &)> fn_;
};

}  // namespace
}  // namespace econet

PYBIND11_MODULE(_core, m) {
  using namespace econet;
  m.doc() = "E-commerce concept net toolkit";

  auto store_error = py::register_exception<StoreError>(m, "StoreError");
  py::register_exception<ParseError>(m, "ParseError", store_error.ptr());
  py::register_exception<ContractError>(m, "ContractError");
  py::register_exception<OracleError>(m, "OracleError");
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<ConceptStore>(m, "ConceptStore")
      .def(py::init<>())
      .def_static("load", py::overload_cast<const std::string &>(&ConceptStore::import_jsonl), py::arg("path"))
      .def_static(
          "loads",
          [](const std::string &text) {
            std::istringstream in(text);
            return ConceptStore::import_jsonl(in);
          },
          py::arg("text"))
      .def("save", py::overload_cast<const std::string &>(&ConceptStore::export_jsonl, py::const_), py::arg("path"))
      .def("dumps",
           [](const ConceptStore &s) {
             std::ostringstream out;
             s.export_jsonl(out);
             return out.str();
           })
      .def("stats", [](const ConceptStore &s) { return to_py(s.stats().to_json()); })
      .def("audit", &ConceptStore::audit)
      .def("merge", &ConceptStore::merge, py::arg("other"))
      .def("contains", &ConceptStore::contains, py::arg("id"))
      .def("ancestors", &ConceptStore::ancestors, py::arg("class_id"))
      .def(
          "lookup_surface",
          [](const ConceptStore &s, const std::string &surface) {
            std::vector<std::string> ids;
            for (const auto &p : s.lookup_surface(surface)) ids.push_back(p.id);
            return ids;
          },
          py::arg("surface"))
      .def("__eq__", &ConceptStore::operator==);

  m.def(
      "log_partition",
      [](const Matrix &e, const Matrix &t, const std::vector<std::string> &domains) {
        const Tensor et = to_tensor(e, "emissions");
        return log_partition(et, to_tensor(t, "transitions"), mask_for(domains, et.cols()));
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("domains") = std::vector<std::string>{},
      "log Z over all label paths; with domains, only valid IOB paths.");
  m.def(
      "fuzzy_nll",
      [](const Matrix &e, const Matrix &t, const std::vector<std::vector<size_t>> &allowed,
         const std::vector<std::string> &domains) {
        const Tensor et = to_tensor(e, "emissions");
        return fuzzy_nll(et, to_tensor(t, "transitions"), PartialLabeling(allowed), mask_for(domains, et.cols()));
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("allowed"),
      py::arg("domains") = std::vector<std::string>{});
  m.def(
      "viterbi",
      [](const Matrix &e, const Matrix &t, const std::vector<std::string> &domains) {
        const Tensor et = to_tensor(e, "emissions");
        const CrfPath p = viterbi(et, to_tensor(t, "transitions"), mask_for(domains, et.cols()));
        return py::make_tuple(p.labels, p.score);
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("domains") = std::vector<std::string>{});
  m.def("iob_labels", [](const std::vector<std::string> &domains) {
    LabelSet ls(domains);
    std::vector<std::string> out;
    for (size_t i = 0; i < ls.size(); ++i) out.push_back(ls.name(i));
    return out;
  });

  m.def(
      "distant_supervision",
      [](const std::vector<std::vector<std::string>> &corpus, const ConceptStore &store) {
        std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> out;
        for (auto &s : distant_supervision(corpus, store)) out.emplace_back(std::move(s.tokens), std::move(s.tags));
        return out;
      },
      py::arg("corpus"), py::arg("store"));

  py::class_<CrfTagger>(m, "Tagger")
      .def_static("load", &CrfTagger::load, py::arg("path"))
      .def(
          "decode",
          [](const CrfTagger &t, const std::vector<std::string> &tokens) {
            std::vector<std::tuple<size_t, size_t, std::string>> out;
            for (const auto &s : t.decode(tokens)) out.emplace_back(s.begin, s.end, s.domain);
            return out;
          },
          py::arg("tokens"))
      .def_property_readonly("domains", [](const CrfTagger &t) { return t.labels().domains(); });

  py::class_<ProjectionModel>(m, "HypernymModel")
      .def_static("load", &ProjectionModel::load, py::arg("path"))
      .def("score", py::overload_cast<const std::string &, const std::string &>(&ProjectionModel::score, py::const_),
           py::arg("hyponym"), py::arg("hypernym"))
      .def(
          "rank",
          [](const ProjectionModel &model, const std::string &hyponym, const std::vector<std::string> &candidates) {
            return rank(hyponym, candidates, model).candidates;
          },
          py::arg("hyponym"), py::arg("candidates"))
      .def_property_readonly("slices", &ProjectionModel::slices);

  py::class_<synthetic::HypernymBenchmark>(m, "HypernymBenchmark")
      .def_readonly("hypernyms", &synthetic::HypernymBenchmark::hypernyms)
      .def_readonly("vocabulary", &synthetic::HypernymBenchmark::vocabulary)
      .def_readonly("train", &synthetic::HypernymBenchmark::train)
      .def_readonly("test_gold", &synthetic::HypernymBenchmark::test_gold)
      .def(
          "pool",
          [](const synthetic::HypernymBenchmark &b, size_t negatives, uint64_t seed) {
            std::map<std::string, int> truth;
            for (const auto &[p, h] : b.train) truth[HypernymTask::sample_id(p, h)] = 1;
            for (const auto &n : negative_sample(b.train, negatives, b.vocabulary, seed)) {
              truth.emplace(HypernymTask::sample_id(n.hyponym, n.hypernym), 0);
            }
            return truth;
          },
          py::arg("negatives") = 3, py::arg("seed") = 1, "Sample id -> gold label, positives plus sampled negatives.");

  m.def(
      "hypernym_benchmark",
      [](size_t dim, size_t hypernyms, size_t train_hyponyms, size_t test_hyponyms, double noise, uint64_t seed) {
        return synthetic::make_hypernym_benchmark({dim, hypernyms, train_hyponyms, test_hyponyms, noise, seed});
      },
      py::arg("dim") = 16, py::arg("hypernyms") = 40, py::arg("train_hyponyms") = 300, py::arg("test_hyponyms") = 100,
      py::arg("noise") = 0.6, py::arg("seed") = 1);

  m.def(
      "run_hypernym_loop",
      [](const synthetic::HypernymBenchmark &b, const std::vector<std::string> &pool,
         std::function<std::vector<int>(const std::vector<std::string> &)> oracle, const std::string &strategy,
         size_t k, double alpha, size_t patience, size_t max_rounds, uint64_t seed, size_t slices, size_t epochs) {
        ALConfig cfg;
        cfg.strategy = strategy;
        cfg.k = k;
        cfg.alpha = alpha;
        cfg.patience = patience;
        cfg.max_rounds = max_rounds;
        cfg.seed = seed;
        HypernymTask task(b.embeddings, b.hypernyms, b.test_gold, slices, {epochs, 64, 0.02, seed}, seed);
        CallbackOracle o(std::move(oracle));
        const ALResult r = run_loop(task, o, pool, cfg);
        json history = json::array();
        for (const auto &h : r.history) history.push_back(h.to_json());
        return to_py({{"history", history},
                      {"labeled_ids", r.labeled_ids},
                      {"labels", r.labels},
                      {"best_round", r.best_round},
                      {"best_metric", r.best_metric},
                      {"stop_round", r.stop_round}});
      },
      py::arg("benchmark"), py::arg("pool"), py::arg("oracle"), py::arg("strategy") = "UCS", py::arg("k") = 50,
      py::arg("alpha") = 0.3, py::arg("patience") = 3, py::arg("max_rounds") = 0, py::arg("seed") = 1,
      py::arg("slices") = 4, py::arg("epochs") = 10,
      "Algorithm-1 loop; oracle(ids) returns one 0/1 label per id.");
}
