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

// Linear-chain CRF inference. A label path y over a sentence of length n has
// score
//
//   s(y) = sum_t E[t][y_t] + sum_{t>0} T[y_{t-1}][y_t]
//
// where E is the [n x L] emission matrix and T the [L x L] transition matrix.
// Paths that cross a masked transition (or start on a masked label) do not
// exist. The fuzzy likelihood scores the set of paths consistent with a
// partial annotation against the set of all paths:
//
//   nll = log sum_{all y} exp s(y) - log sum_{y consistent} exp s(y)

#ifndef ECONET_CRF_H_
#define ECONET_CRF_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "econet/autodiff.h"
#include "econet/tensor.h"

namespace econet {

// Structural constraints on label paths. An empty mask allows everything.
struct CrfMask {
  size_t labels = 0;
  std::vector<uint8_t> transition;  // labels * labels, row = previous label
  std::vector<uint8_t> start;       // labels

  bool empty() const { return transition.empty() && start.empty(); }
  bool allows(size_t from, size_t to) const {
    return transition.empty() || transition[from * labels + to] != 0;
  }
  bool allows_start(size_t label) const { return start.empty() || start[label] != 0; }
  // True when the label sequence respects the start and transition masks.
  bool allows_path(std::span<const size_t> path) const;
};

// Per-position sets of admissible labels.
class PartialLabeling {
 public:
  PartialLabeling() = default;
  explicit PartialLabeling(std::vector<std::vector<size_t>> allowed);

  static PartialLabeling full(size_t length, size_t labels);
  static PartialLabeling exact(std::span<const size_t> path);

  size_t size() const { return allowed_.size(); }
  const std::vector<size_t> &at(size_t t) const { return allowed_[t]; }
  bool contains(size_t t, size_t label) const;
  bool admits(std::span<const size_t> path) const;
  // Whether every position admits every one of `labels` labels.
  bool is_full(size_t labels) const;
  // Throws ContractError unless a mask-respecting path exists through the sets.
  void validate(size_t labels, const CrfMask &mask) const;

 private:
  std::vector<std::vector<size_t>> allowed_;
};

// IOB inventory over a list of domains: label 0 is O, then B-d and I-d for
// each domain d in order.
class LabelSet {
 public:
  explicit LabelSet(std::vector<std::string> domains);

  size_t size() const { return names_.size(); }
  const std::vector<std::string> &domains() const { return domains_; }
  const std::string &name(size_t label) const { return names_.at(label); }
  std::optional<size_t> find(std::string_view name) const;
  std::optional<size_t> find_domain(std::string_view domain) const;

  static constexpr size_t kOutside = 0;
  size_t begin_label(size_t domain) const { return 1 + 2 * domain; }
  size_t inside_label(size_t domain) const { return 2 + 2 * domain; }
  bool is_begin(size_t label) const { return label != kOutside && label % 2 == 1; }
  bool is_inside(size_t label) const { return label != kOutside && label % 2 == 0; }
  size_t domain_of(size_t label) const { return (label - 1) / 2; }

  // I-x may only follow B-x or I-x and may not open a sentence.
  bool valid_transition(size_t from, size_t to) const;
  bool valid_start(size_t label) const { return !is_inside(label); }
  bool valid_sequence(std::span<const size_t> labels) const;
  CrfMask mask() const;

  std::vector<size_t> parse(const std::vector<std::string> &tags) const;
  std::vector<std::string> render(std::span<const size_t> labels) const;

  bool operator==(const LabelSet &other) const { return domains_ == other.domains_; }

 private:
  std::vector<std::string> domains_;
  std::vector<std::string> names_;
};

// Typed token span [begin, end).
struct Span {
  size_t begin = 0;
  size_t end = 0;
  std::string domain;
  auto operator<=>(const Span &) const = default;
};

// Maximal B-x I-x* runs. A stray I-x opens a new span (conlleval convention).
std::vector<Span> decode_spans(const LabelSet &labels, std::span<const size_t> path);

struct CrfPath {
  std::vector<size_t> labels;
  double score = 0.0;
};

double path_score(const Tensor &emissions, const Tensor &transitions,
                  std::span<const size_t> path);

// Forward algorithm in log space over every mask-respecting path.
double log_partition(const Tensor &emissions, const Tensor &transitions,
                     const CrfMask &mask = {});

// Forward algorithm restricted to the allowed sets; throws ContractError when
// no path survives.
double constrained_log_partition(const Tensor &emissions, const Tensor &transitions,
                                 const PartialLabeling &allowed, const CrfMask &mask = {});

double fuzzy_nll(const Tensor &emissions, const Tensor &transitions,
                 const PartialLabeling &allowed, const CrfMask &mask = {});

// Highest-scoring path. Among equal scores the lexicographically smallest
// label sequence wins (lowest label at the leftmost divergence). The reported
// score is path_score() of the returned path.
CrfPath viterbi(const Tensor &emissions, const Tensor &transitions, const CrfMask &mask = {},
                const PartialLabeling *allowed = nullptr);

struct CrfMarginals {
  double log_z = 0.0;
  Tensor node;  // [n x L], P(y_t = j)
  Tensor edge;  // [L x L], sum_t P(y_{t-1} = i, y_t = j)
};

// Forward-backward marginals, optionally restricted to the allowed sets.
CrfMarginals crf_marginals(const Tensor &emissions, const Tensor &transitions,
                           const CrfMask &mask = {}, const PartialLabeling *allowed = nullptr);

// Graph node for the fuzzy negative log-likelihood. Gradients are the
// difference of unconstrained and constrained expectations.
Var fuzzy_nll_node(Var emissions, Var transitions, const PartialLabeling &allowed,
                   const CrfMask &mask = {});

}  // namespace econet

#endif  // ECONET_CRF_H_
