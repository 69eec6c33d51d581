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

// Reverse-mode automatic differentiation over a small closed set of tensor
// ops. A Graph records nodes in creation order; since an op can only consume
// nodes that already exist, creation order is a topological order and the
// backward sweep is a single reverse pass.

#ifndef ECONET_AUTODIFF_H_
#define ECONET_AUTODIFF_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "econet/tensor.h"
#include "json.hpp"

namespace econet {

class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Named leaf tensors. Trainable entries receive gradients; frozen entries
// (pretrained embeddings, for instance) are treated as constants.
class ParameterSet {
 public:
  void add(const std::string &name, Tensor value, bool trainable = true);
  bool contains(const std::string &name) const { return entries_.count(name) > 0; }
  const Tensor &value(const std::string &name) const;
  Tensor &mutable_value(const std::string &name);
  bool trainable(const std::string &name) const;
  void set_trainable(const std::string &name, bool trainable);
  std::vector<std::string> names() const;
  size_t size() const { return entries_.size(); }
  size_t total_values() const;

  // Checkpoint layout:
  //   {"format": "econet.params", "version": 1,
  //    "parameters": [{"name", "shape", "trainable", "data"}, ...]}
  // Entries are sorted by name, so a reload followed by a re-export
  // reproduces the file byte for byte.
  nlohmann::json to_json() const;
  static ParameterSet from_json(const nlohmann::json &j);
  void save(const std::string &path) const;
  static ParameterSet load(const std::string &path);

  bool operator==(const ParameterSet &other) const;

 private:
  struct Entry {
    Tensor value;
    bool trainable = true;
    bool operator==(const Entry &) const = default;
  };
  std::map<std::string, Entry> entries_;
};

using Gradients = std::map<std::string, Tensor>;

class Graph;

// Handle to a graph node.
class Var {
 public:
  Var() = default;
  Var(Graph *graph, int id) : graph_(graph), id_(id) {}
  Graph *graph() const { return graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }
  const Tensor &value() const;

 private:
  Graph *graph_ = nullptr;
  int id_ = -1;
};

// Seen by an op's backward closure: the output value and gradient, and
// per-input values and gradient accumulators. grad(i) is null when input i
// does not lead to a trainable leaf.
class BackwardContext {
 public:
  const Tensor &out() const;
  const Tensor &out_grad() const;
  const Tensor &in(size_t i) const;
  Tensor *grad(size_t i);

 private:
  friend class Graph;
  BackwardContext(Graph *g, int node) : g_(g), node_(node) {}
  Graph *g_;
  int node_;
};

class Graph {
 public:
  using BackwardFn = std::function<void(BackwardContext &)>;

  explicit Graph(const ParameterSet *params = nullptr) : params_(params) {}
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  Var constant(Tensor value);
  // Leaf bound to a named entry of the parameter set. Repeated calls with the
  // same name return the same node.
  Var param(const std::string &name);

  // Registers an op node. Used by the built-in ops and by modules that supply
  // their own exact gradients (the CRF likelihood, for instance).
  Var add_node(const char *op, Tensor value, const std::vector<Var> &inputs, BackwardFn backward);

  const Tensor &value(Var v) const { return nodes_[static_cast<size_t>(v.id())].value; }
  const char *op(Var v) const { return nodes_[static_cast<size_t>(v.id())].op; }
  size_t size() const { return nodes_.size(); }
  const ParameterSet *params() const { return params_; }

  // Reverse sweep from a scalar loss. Returns gradients for every trainable
  // parameter reached by the graph.
  Gradients backward(Var loss);

 private:
  friend class BackwardContext;
  struct Node {
    const char *op;
    Tensor value;
    std::vector<int> inputs;
    BackwardFn backward;
    std::string param;
    bool needs_grad = false;
    Tensor grad;
  };
  Tensor *grad_slot(int id);

  const ParameterSet *params_;
  std::vector<Node> nodes_;
  std::map<std::string, int> param_nodes_;
  int current_ = -1;
};

inline const Tensor &Var::value() const { return graph_->value(*this); }

namespace ops {

// [m x k] * [k x n].
Var matmul(Var a, Var b);
// seq [len x d], kernel [window x d x d_out]; zero padding of (window-1)/2 on
// both ends keeps the output length equal to len.
Var conv1d(Var seq, Var kernel, int window);

Var tanh(Var x);
Var sigmoid(Var x);
Var relu(Var x);
// Same shape, or b a single row broadcast over the rows of a.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double c);
Var concat_cols(const std::vector<Var> &parts);
Var concat_rows(const std::vector<Var> &parts);
// [len x d] -> [1 x d].
Var max_pool_over_time(Var x);
Var mean_pool_over_time(Var x);
// Row-wise; logsumexp maps [n x m] to [n x 1].
Var softmax(Var x);
Var logsumexp(Var x);

// Data movement; these carry no arithmetic.
Var transpose(Var x);
Var gather_rows(Var table, const std::vector<size_t> &ids);
Var reshape(Var x, Shape shape);
Var sum(Var x);

// x [c_in x h x w], kernel [c_out x c_in x kh x kw], odd kernel sizes, zero
// padding keeps h x w. Output [c_out x h x w].
Var conv2d(Var x, Var kernel);
// x [c x h x w] -> [1 x c*gh*gw]; adaptive max pooling onto a gh x gw grid.
Var max_pool_grid(Var x, size_t gh, size_t gw);

// Scaled dot-product self-attention, single head:
//   softmax(Q K^T / sqrt(d)) V with Q = x Wq, K = x Wk, V = x Wv.
Var self_attention(Var x, Var wq, Var wk, Var wv);

// log(sigmoid(z)) elementwise on a column, composed as -logsumexp([0, -z]).
Var log_sigmoid(Var z);

}  // namespace ops

// Max over trainable parameters of |analytic - numeric| / max(|a|, |n|, 1e-7)
// using central differences. Parameters are restored afterwards.
// max_entries_per_param limits the check to the first entries of each tensor
// (0 checks everything).
double grad_check(const std::function<Var(Graph &)> &loss_fn, ParameterSet &params, double eps,
                  size_t max_entries_per_param = 0);

// p <- p - lr * g for every gradient entry.
void sgd_step(ParameterSet &params, const Gradients &grads, double lr);

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(ParameterSet &params, const Gradients &grads);
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

// Adds a glorot-initialized entry seeded by (seed, name).
void add_glorot(ParameterSet &params, const std::string &name, Shape shape, size_t fan_in, size_t fan_out,
                uint64_t seed);

// Accumulates g into acc (acc += scale * g) key by key.
void accumulate(Gradients &acc, const Gradients &g, double scale = 1.0);

}  // namespace econet

#endif  // ECONET_AUTODIFF_H_
