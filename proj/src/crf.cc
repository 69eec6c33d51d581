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

#include "econet/crf.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace econet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Accumulates log(sum exp(x_i)) over terms that may be -inf.
class LogSum {
 public:
  void add(double x) {
    if (x == kNegInf) return;
    if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
  }
  double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

void check_shapes(const Tensor &emissions, const Tensor &transitions) {
  if (emissions.rank() != 2 || emissions.rows() == 0) {
    throw ShapeError("crf: emissions must be a non-empty [n x L] matrix, got " +
                     shape_string(emissions.shape()));
  }
  const size_t L = emissions.cols();
  if (transitions.rank() != 2 || transitions.rows() != L || transitions.cols() != L) {
    throw ShapeError("crf: transitions " + shape_string(transitions.shape()) +
                     " do not match emissions " + shape_string(emissions.shape()));
  }
}

// n x L admissibility table.
std::vector<uint8_t> admissible(size_t n, size_t L, const PartialLabeling *allowed) {
  if (allowed == nullptr) return std::vector<uint8_t>(n * L, 1);
  if (allowed->size() != n) {
    throw ShapeError("crf: partial labeling length " + std::to_string(allowed->size()) +
                     " does not match sentence length " + std::to_string(n));
  }
  std::vector<uint8_t> ok(n * L, 0);
  for (size_t t = 0; t < n; ++t) {
    for (size_t j : allowed->at(t)) {
      if (j >= L) throw ContractError("crf: label id " + std::to_string(j) + " out of range");
      ok[t * L + j] = 1;
    }
  }
  return ok;
}

Tensor forward_table(const Tensor &E, const Tensor &T, const CrfMask &mask,
                     const std::vector<uint8_t> &ok) {
  const size_t n = E.rows(), L = E.cols();
  Tensor alpha({n, L}, kNegInf);
  for (size_t j = 0; j < L; ++j) {
    if (ok[j] && mask.allows_start(j)) alpha(0, j) = E(0, j);
  }
  for (size_t t = 1; t < n; ++t) {
    for (size_t j = 0; j < L; ++j) {
      if (!ok[t * L + j]) continue;
      LogSum acc;
      for (size_t i = 0; i < L; ++i) {
        if (alpha(t - 1, i) == kNegInf || !mask.allows(i, j)) continue;
        acc.add(alpha(t - 1, i) + T(i, j));
      }
      const double v = acc.value();
      if (v != kNegInf) alpha(t, j) = v + E(t, j);
    }
  }
  return alpha;
}

Tensor backward_table(const Tensor &E, const Tensor &T, const CrfMask &mask,
                      const std::vector<uint8_t> &ok) {
  const size_t n = E.rows(), L = E.cols();
  Tensor beta({n, L}, kNegInf);
  for (size_t i = 0; i < L; ++i) {
    if (ok[(n - 1) * L + i]) beta(n - 1, i) = 0.0;
  }
  for (size_t t = n - 1; t-- > 0;) {
    for (size_t i = 0; i < L; ++i) {
      if (!ok[t * L + i]) continue;
      LogSum acc;
      for (size_t j = 0; j < L; ++j) {
        if (beta(t + 1, j) == kNegInf || !mask.allows(i, j)) continue;
        acc.add(T(i, j) + E(t + 1, j) + beta(t + 1, j));
      }
      beta(t, i) = acc.value();
    }
  }
  return beta;
}

double final_log_sum(const Tensor &alpha) {
  LogSum acc;
  const size_t last = alpha.rows() - 1;
  for (size_t j = 0; j < alpha.cols(); ++j) acc.add(alpha(last, j));
  return acc.value();
}

}  // namespace

bool CrfMask::allows_path(std::span<const size_t> path) const {
  if (path.empty()) return true;
  if (!allows_start(path[0])) return false;
  for (size_t t = 1; t < path.size(); ++t) {
    if (!allows(path[t - 1], path[t])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// PartialLabeling

PartialLabeling::PartialLabeling(std::vector<std::vector<size_t>> allowed)
    : allowed_(std::move(allowed)) {
  for (size_t t = 0; t < allowed_.size(); ++t) {
    auto &s = allowed_[t];
    if (s.empty()) {
      throw ContractError("partial labeling: empty label set at position " + std::to_string(t));
    }
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
}

PartialLabeling PartialLabeling::full(size_t length, size_t labels) {
  std::vector<size_t> all(labels);
  for (size_t j = 0; j < labels; ++j) all[j] = j;
  return PartialLabeling(std::vector<std::vector<size_t>>(length, all));
}

PartialLabeling PartialLabeling::exact(std::span<const size_t> path) {
  std::vector<std::vector<size_t>> sets;
  sets.reserve(path.size());
  for (size_t y : path) sets.push_back({y});
  return PartialLabeling(std::move(sets));
}

bool PartialLabeling::contains(size_t t, size_t label) const {
  return std::binary_search(allowed_[t].begin(), allowed_[t].end(), label);
}

bool PartialLabeling::admits(std::span<const size_t> path) const {
  if (path.size() != allowed_.size()) return false;
  for (size_t t = 0; t < path.size(); ++t) {
    if (!contains(t, path[t])) return false;
  }
  return true;
}

bool PartialLabeling::is_full(size_t labels) const {
  for (const auto &s : allowed_) {
    if (s.size() != labels) return false;
  }
  return true;
}

void PartialLabeling::validate(size_t labels, const CrfMask &mask) const {
  if (allowed_.empty()) throw ContractError("partial labeling: empty sentence");
  std::vector<uint8_t> reach(labels, 0);
  for (size_t j : allowed_[0]) {
    if (j >= labels) throw ContractError("partial labeling: label " + std::to_string(j) + " out of range");
    reach[j] = mask.allows_start(j);
  }
  for (size_t t = 1; t < allowed_.size(); ++t) {
    std::vector<uint8_t> next(labels, 0);
    for (size_t j : allowed_[t]) {
      if (j >= labels) throw ContractError("partial labeling: label " + std::to_string(j) + " out of range");
      for (size_t i = 0; i < labels; ++i) {
        if (reach[i] && mask.allows(i, j)) {
          next[j] = 1;
          break;
        }
      }
    }
    reach.swap(next);
  }
  if (std::none_of(reach.begin(), reach.end(), [](uint8_t r) { return r != 0; })) {
    throw ContractError("partial labeling admits no valid label path");
  }
}

// ---------------------------------------------------------------------------
// LabelSet

LabelSet::LabelSet(std::vector<std::string> domains) : domains_(std::move(domains)) {
  names_.push_back("O");
  for (const auto &d : domains_) {
    names_.push_back("B-" + d);
    names_.push_back("I-" + d);
  }
}

std::optional<size_t> LabelSet::find(std::string_view name) const {
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::optional<size_t> LabelSet::find_domain(std::string_view domain) const {
  for (size_t i = 0; i < domains_.size(); ++i) {
    if (domains_[i] == domain) return i;
  }
  return std::nullopt;
}

bool LabelSet::valid_transition(size_t from, size_t to) const {
  if (!is_inside(to)) return true;
  return from != kOutside && domain_of(from) == domain_of(to);
}

bool LabelSet::valid_sequence(std::span<const size_t> labels) const {
  for (size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] >= size()) return false;
    if (t == 0 ? !valid_start(labels[t]) : !valid_transition(labels[t - 1], labels[t])) {
      return false;
    }
  }
  return true;
}

CrfMask LabelSet::mask() const {
  CrfMask m;
  const size_t L = size();
  m.labels = L;
  m.transition.assign(L * L, 0);
  m.start.assign(L, 0);
  for (size_t j = 0; j < L; ++j) {
    m.start[j] = valid_start(j);
    for (size_t i = 0; i < L; ++i) m.transition[i * L + j] = valid_transition(i, j);
  }
  return m;
}

std::vector<size_t> LabelSet::parse(const std::vector<std::string> &tags) const {
  std::vector<size_t> out;
  out.reserve(tags.size());
  for (const auto &t : tags) {
    auto id = find(t);
    if (!id) throw std::invalid_argument("unknown tag: " + t);
    out.push_back(*id);
  }
  return out;
}

std::vector<std::string> LabelSet::render(std::span<const size_t> labels) const {
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (size_t l : labels) out.push_back(name(l));
  return out;
}

std::vector<Span> decode_spans(const LabelSet &labels, std::span<const size_t> path) {
  std::vector<Span> spans;
  for (size_t t = 0; t < path.size(); ++t) {
    const size_t y = path[t];
    if (y == LabelSet::kOutside) continue;
    const size_t d = labels.domain_of(y);
    const bool continues = labels.is_inside(y) && !spans.empty() && spans.back().end == t &&
                           spans.back().domain == labels.domains()[d];
    if (continues) {
      spans.back().end = t + 1;
    } else {
      spans.push_back(Span{t, t + 1, labels.domains()[d]});
    }
  }
  return spans;
}

// ---------------------------------------------------------------------------
// Inference

double path_score(const Tensor &emissions, const Tensor &transitions,
                  std::span<const size_t> path) {
  check_shapes(emissions, transitions);
  if (path.size() != emissions.rows()) throw ShapeError("path_score: path length mismatch");
  double s = 0.0;
  for (size_t t = 0; t < path.size(); ++t) {
    s += emissions(t, path[t]);
    if (t > 0) s += transitions(path[t - 1], path[t]);
  }
  return s;
}

double log_partition(const Tensor &emissions, const Tensor &transitions, const CrfMask &mask) {
  check_shapes(emissions, transitions);
  const auto ok = admissible(emissions.rows(), emissions.cols(), nullptr);
  const double z = final_log_sum(forward_table(emissions, transitions, mask, ok));
  if (z == kNegInf) throw ContractError("crf: mask admits no label path");
  return z;
}

double constrained_log_partition(const Tensor &emissions, const Tensor &transitions,
                                 const PartialLabeling &allowed, const CrfMask &mask) {
  check_shapes(emissions, transitions);
  const auto ok = admissible(emissions.rows(), emissions.cols(), &allowed);
  const double z = final_log_sum(forward_table(emissions, transitions, mask, ok));
  if (z == kNegInf) throw ContractError("crf: partial labeling admits no valid label path");
  return z;
}

double fuzzy_nll(const Tensor &emissions, const Tensor &transitions,
                 const PartialLabeling &allowed, const CrfMask &mask) {
  const double num = constrained_log_partition(emissions, transitions, allowed, mask);
  const double den = log_partition(emissions, transitions, mask);
  // The constrained sum ranges over a subset of paths; clamp rounding noise.
  return std::max(0.0, den - num);
}

CrfPath viterbi(const Tensor &emissions, const Tensor &transitions, const CrfMask &mask,
                const PartialLabeling *allowed) {
  check_shapes(emissions, transitions);
  const size_t n = emissions.rows(), L = emissions.cols();
  const auto ok = admissible(n, L, allowed);
  // best[t][i]: best score of a suffix starting with label i at position t.
  Tensor best({n, L}, kNegInf);
  for (size_t i = 0; i < L; ++i) {
    if (ok[(n - 1) * L + i]) best(n - 1, i) = emissions(n - 1, i);
  }
  for (size_t t = n - 1; t-- > 0;) {
    for (size_t i = 0; i < L; ++i) {
      if (!ok[t * L + i]) continue;
      double m = kNegInf;
      for (size_t j = 0; j < L; ++j) {
        if (best(t + 1, j) == kNegInf || !mask.allows(i, j)) continue;
        m = std::max(m, transitions(i, j) + best(t + 1, j));
      }
      if (m != kNegInf) best(t, i) = emissions(t, i) + m;
    }
  }
  CrfPath path;
  path.labels.reserve(n);
  double top = kNegInf;
  size_t arg = L;
  for (size_t j = 0; j < L; ++j) {
    if (!mask.allows_start(j) || best(0, j) == kNegInf) continue;
    if (best(0, j) > top) {
      top = best(0, j);
      arg = j;
    }
  }
  if (arg == L) throw ContractError("viterbi: no valid label path");
  path.labels.push_back(arg);
  for (size_t t = 1; t < n; ++t) {
    const size_t prev = path.labels.back();
    double m = kNegInf;
    size_t a = L;
    for (size_t j = 0; j < L; ++j) {
      if (best(t, j) == kNegInf || !mask.allows(prev, j)) continue;
      const double v = transitions(prev, j) + best(t, j);
      if (v > m) {
        m = v;
        a = j;
      }
    }
    path.labels.push_back(a);
  }
  path.score = path_score(emissions, transitions, path.labels);
  return path;
}

CrfMarginals crf_marginals(const Tensor &emissions, const Tensor &transitions,
                           const CrfMask &mask, const PartialLabeling *allowed) {
  check_shapes(emissions, transitions);
  const size_t n = emissions.rows(), L = emissions.cols();
  const auto ok = admissible(n, L, allowed);
  const Tensor alpha = forward_table(emissions, transitions, mask, ok);
  const Tensor beta = backward_table(emissions, transitions, mask, ok);
  CrfMarginals m;
  m.log_z = final_log_sum(alpha);
  if (m.log_z == kNegInf) throw ContractError("crf: no valid label path");
  m.node = Tensor({n, L}, 0.0);
  m.edge = Tensor({L, L}, 0.0);
  for (size_t t = 0; t < n; ++t) {
    for (size_t j = 0; j < L; ++j) {
      if (alpha(t, j) == kNegInf || beta(t, j) == kNegInf) continue;
      m.node(t, j) = std::exp(alpha(t, j) + beta(t, j) - m.log_z);
    }
  }
  for (size_t t = 1; t < n; ++t) {
    for (size_t i = 0; i < L; ++i) {
      if (alpha(t - 1, i) == kNegInf) continue;
      for (size_t j = 0; j < L; ++j) {
        if (beta(t, j) == kNegInf || !ok[t * L + j] || !mask.allows(i, j)) continue;
        m.edge(i, j) += std::exp(alpha(t - 1, i) + transitions(i, j) + emissions(t, j) +
                                 beta(t, j) - m.log_z);
      }
    }
  }
  return m;
}

Var fuzzy_nll_node(Var emissions, Var transitions, const PartialLabeling &allowed,
                   const CrfMask &mask) {
  const Tensor &E = emissions.value();
  const Tensor &T = transitions.value();
  CrfMarginals full = crf_marginals(E, T, mask, nullptr);
  CrfMarginals cons = crf_marginals(E, T, mask, &allowed);
  const double nll = full.log_z - cons.log_z;
  // d nll / dE = P_full(y_t = j) - P_cons(y_t = j); likewise for edges.
  Tensor dE = std::move(full.node);
  for (size_t i = 0; i < dE.size(); ++i) dE[i] -= cons.node[i];
  Tensor dT = std::move(full.edge);
  for (size_t i = 0; i < dT.size(); ++i) dT[i] -= cons.edge[i];
  return emissions.graph()->add_node(
      "crf_fuzzy_nll", Tensor::scalar(nll), {emissions, transitions},
      [dE = std::move(dE), dT = std::move(dT)](BackwardContext &ctx) {
        const double g = ctx.out_grad()[0];
        if (Tensor *ge = ctx.grad(0)) {
          for (size_t i = 0; i < dE.size(); ++i) (*ge)[i] += g * dE[i];
        }
        if (Tensor *gt = ctx.grad(1)) {
          for (size_t i = 0; i < dT.size(); ++i) (*gt)[i] += g * dT[i];
        }
      });
}

}  // namespace econet
