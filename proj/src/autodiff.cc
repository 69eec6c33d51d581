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

#include "econet/autodiff.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "econet/random.h"

namespace econet {

// ---------------------------------------------------------------------------
// ParameterSet

void ParameterSet::add(const std::string &name, Tensor value, bool trainable) {
  if (!value.all_finite()) throw ContractError("non-finite initial value for " + name);
  entries_[name] = Entry{std::move(value), trainable};
}

const Tensor &ParameterSet::value(const std::string &name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second.value;
}

Tensor &ParameterSet::mutable_value(const std::string &name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second.value;
}

bool ParameterSet::trainable(const std::string &name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second.trainable;
}

void ParameterSet::set_trainable(const std::string &name, bool trainable) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter: " + name);
  it->second.trainable = trainable;
}

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto &[name, _] : entries_) out.push_back(name);
  return out;
}

size_t ParameterSet::total_values() const {
  size_t n = 0;
  for (const auto &[_, e] : entries_) n += e.value.size();
  return n;
}

bool ParameterSet::operator==(const ParameterSet &other) const { return entries_ == other.entries_; }

nlohmann::json ParameterSet::to_json() const {
  nlohmann::json params = nlohmann::json::array();
  for (const auto &[name, e] : entries_) {
    nlohmann::json p;
    p["name"] = name;
    p["shape"] = e.value.shape();
    p["trainable"] = e.trainable;
    p["data"] = e.value.storage();
    params.push_back(std::move(p));
  }
  nlohmann::json j;
  j["format"] = "econet.params";
  j["version"] = 1;
  j["parameters"] = std::move(params);
  return j;
}

ParameterSet ParameterSet::from_json(const nlohmann::json &j) {
  if (j.value("format", "") != "econet.params") {
    throw std::runtime_error("not an econet parameter checkpoint");
  }
  ParameterSet ps;
  for (const auto &p : j.at("parameters")) {
    Tensor t(p.at("shape").get<Shape>(), p.at("data").get<std::vector<double>>());
    ps.add(p.at("name").get<std::string>(), std::move(t), p.value("trainable", true));
  }
  return ps;
}

void ParameterSet::save(const std::string &path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json().dump() << '\n';
}

ParameterSet ParameterSet::load(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return from_json(nlohmann::json::parse(in));
}

// ---------------------------------------------------------------------------
// Graph

const Tensor &BackwardContext::out() const { return g_->nodes_[static_cast<size_t>(node_)].value; }
const Tensor &BackwardContext::out_grad() const {
  return g_->nodes_[static_cast<size_t>(node_)].grad;
}
const Tensor &BackwardContext::in(size_t i) const {
  const int id = g_->nodes_[static_cast<size_t>(node_)].inputs[i];
  return g_->nodes_[static_cast<size_t>(id)].value;
}
Tensor *BackwardContext::grad(size_t i) {
  const int id = g_->nodes_[static_cast<size_t>(node_)].inputs[i];
  return g_->grad_slot(id);
}

Tensor *Graph::grad_slot(int id) {
  Node &n = nodes_[static_cast<size_t>(id)];
  if (!n.needs_grad) return nullptr;
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return &n.grad;
}

Var Graph::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::param(const std::string &name) {
  auto it = param_nodes_.find(name);
  if (it != param_nodes_.end()) return Var(this, it->second);
  if (params_ == nullptr) throw ContractError("graph has no parameter set; cannot bind " + name);
  Node n;
  n.op = "param";
  n.value = params_->value(name);
  n.param = name;
  n.needs_grad = params_->trainable(name);
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_[name] = id;
  return Var(this, id);
}

Var Graph::add_node(const char *op, Tensor value, const std::vector<Var> &inputs,
                    BackwardFn backward) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var &v : inputs) {
    if (v.graph() != this) throw ContractError(std::string(op) + ": input from a different graph");
    n.inputs.push_back(v.id());
    if (nodes_[static_cast<size_t>(v.id())].needs_grad) n.needs_grad = true;
  }
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Gradients Graph::backward(Var loss) {
  if (loss.graph() != this) throw ContractError("loss belongs to a different graph");
  Node &root = nodes_[static_cast<size_t>(loss.id())];
  if (root.value.size() != 1) {
    throw ContractError("backward requires a scalar loss, got " + shape_string(root.value.shape()));
  }
  if (root.needs_grad) {
    root.grad = Tensor(root.value.shape(), 1.0);
    for (int id = loss.id(); id >= 0; --id) {
      Node &n = nodes_[static_cast<size_t>(id)];
      if (!n.needs_grad || n.grad.empty() || !n.backward) continue;
      BackwardContext ctx(this, id);
      n.backward(ctx);
    }
  }
  Gradients out;
  for (const auto &[name, id] : param_nodes_) {
    const Node &n = nodes_[static_cast<size_t>(id)];
    if (!n.needs_grad) continue;
    out[name] = n.grad.empty() ? Tensor(n.value.shape(), 0.0) : n.grad;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ops

namespace ops {
namespace {

void require(bool ok, const std::string &msg) {
  if (!ok) throw ShapeError(msg);
}

void require_rank2(const Tensor &t, const char *op) {
  require(t.rank() == 2, std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

template <typename F, typename D>
Var unary(const char *name, Var x, F f, D dfdx) {
  const Tensor &xv = x.value();
  Tensor out(xv.shape());
  for (size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return x.graph()->add_node(name, std::move(out), {x}, [dfdx](BackwardContext &ctx) {
    Tensor *gx = ctx.grad(0);
    if (!gx) return;
    const Tensor &g = ctx.out_grad();
    const Tensor &y = ctx.out();
    const Tensor &xin = ctx.in(0);
    for (size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * dfdx(xin[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor &av = a.value();
  const Tensor &bv = b.value();
  require(av.rank() == 2 && bv.rank() == 2 && av.cols() == bv.rows(),
          "matmul: dimension mismatch " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  const size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out({m, n});
  for (size_t i = 0; i < m; ++i) {
    double *orow = &out(i, 0);
    for (size_t p = 0; p < k; ++p) {
      const double aip = av(i, p);
      if (aip == 0.0) continue;
      const double *brow = &bv(p, 0);
      for (size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return a.graph()->add_node("matmul", std::move(out), {a, b}, [m, k, n](BackwardContext &ctx) {
    const Tensor &g = ctx.out_grad();
    const Tensor &A = ctx.in(0);
    const Tensor &B = ctx.in(1);
    if (Tensor *ga = ctx.grad(0)) {
      for (size_t i = 0; i < m; ++i) {
        for (size_t p = 0; p < k; ++p) {
          double s = 0;
          for (size_t j = 0; j < n; ++j) s += g(i, j) * B(p, j);
          (*ga)(i, p) += s;
        }
      }
    }
    if (Tensor *gb = ctx.grad(1)) {
      for (size_t i = 0; i < m; ++i) {
        for (size_t p = 0; p < k; ++p) {
          const double aip = A(i, p);
          if (aip == 0.0) continue;
          for (size_t j = 0; j < n; ++j) (*gb)(p, j) += aip * g(i, j);
        }
      }
    }
  });
}

Var conv1d(Var seq, Var kernel, int window) {
  if (window <= 0 || window % 2 == 0) {
    throw ConfigError("conv1d: window must be a positive odd integer, got " + std::to_string(window));
  }
  const Tensor &x = seq.value();
  const Tensor &K = kernel.value();
  require_rank2(x, "conv1d");
  require(K.rank() == 3 && K.dim(0) == static_cast<size_t>(window) && K.dim(1) == x.cols(),
          "conv1d: kernel " + shape_string(K.shape()) + " does not fit window " +
              std::to_string(window) + " over input " + shape_string(x.shape()));
  const size_t len = x.rows(), d = x.cols(), dout = K.dim(2);
  const long half = (window - 1) / 2;
  Tensor out({len, dout});
  for (size_t p = 0; p < len; ++p) {
    for (long t = 0; t < window; ++t) {
      const long src = static_cast<long>(p) + t - half;
      if (src < 0 || src >= static_cast<long>(len)) continue;
      for (size_t i = 0; i < d; ++i) {
        const double xv = x(static_cast<size_t>(src), i);
        if (xv == 0.0) continue;
        const double *krow = &K[(static_cast<size_t>(t) * d + i) * dout];
        for (size_t o = 0; o < dout; ++o) out(p, o) += xv * krow[o];
      }
    }
  }
  return seq.graph()->add_node(
      "conv1d", std::move(out), {seq, kernel}, [len, d, dout, window, half](BackwardContext &ctx) {
        const Tensor &g = ctx.out_grad();
        const Tensor &X = ctx.in(0);
        const Tensor &Kv = ctx.in(1);
        Tensor *gx = ctx.grad(0);
        Tensor *gk = ctx.grad(1);
        for (size_t p = 0; p < len; ++p) {
          for (long t = 0; t < window; ++t) {
            const long src = static_cast<long>(p) + t - half;
            if (src < 0 || src >= static_cast<long>(len)) continue;
            const size_t s = static_cast<size_t>(src);
            for (size_t i = 0; i < d; ++i) {
              const size_t base = (static_cast<size_t>(t) * d + i) * dout;
              if (gx) {
                double acc = 0;
                for (size_t o = 0; o < dout; ++o) acc += g(p, o) * Kv[base + o];
                (*gx)(s, i) += acc;
              }
              if (gk) {
                const double xv = X(s, i);
                for (size_t o = 0; o < dout; ++o) (*gk)[base + o] += xv * g(p, o);
              }
            }
          }
        }
      });
}

Var tanh(Var x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var x) {
  return unary(
      "relu", x, [](double v) { return v > 0 ? v : 0.0; },
      [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Var add(Var a, Var b) {
  const Tensor &av = a.value();
  const Tensor &bv = b.value();
  const bool broadcast = av.shape() != bv.shape();
  if (broadcast) {
    require(av.rank() == 2 && bv.rank() == 2 && bv.rows() == 1 && bv.cols() == av.cols(),
            "add: incompatible shapes " + shape_string(av.shape()) + " and " +
                shape_string(bv.shape()));
  }
  Tensor out = av;
  if (broadcast) {
    for (size_t r = 0; r < av.rows(); ++r)
      for (size_t c = 0; c < av.cols(); ++c) out(r, c) += bv(0, c);
  } else {
    for (size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  }
  return a.graph()->add_node("add", std::move(out), {a, b}, [broadcast](BackwardContext &ctx) {
    const Tensor &g = ctx.out_grad();
    if (Tensor *ga = ctx.grad(0)) {
      for (size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (Tensor *gb = ctx.grad(1)) {
      if (broadcast) {
        for (size_t r = 0; r < g.rows(); ++r)
          for (size_t c = 0; c < g.cols(); ++c) (*gb)(0, c) += g(r, c);
      } else {
        for (size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i];
      }
    }
  });
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var mul(Var a, Var b) {
  const Tensor &av = a.value();
  const Tensor &bv = b.value();
  require(av.shape() == bv.shape(),
          "mul: shape mismatch " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
  Tensor out = av;
  for (size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.graph()->add_node("mul", std::move(out), {a, b}, [](BackwardContext &ctx) {
    const Tensor &g = ctx.out_grad();
    if (Tensor *ga = ctx.grad(0)) {
      const Tensor &B = ctx.in(1);
      for (size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * B[i];
    }
    if (Tensor *gb = ctx.grad(1)) {
      const Tensor &A = ctx.in(0);
      for (size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * A[i];
    }
  });
}

Var scale(Var x, double c) {
  Tensor out = x.value();
  for (double &v : out.storage()) v *= c;
  return x.graph()->add_node("scale", std::move(out), {x}, [c](BackwardContext &ctx) {
    Tensor *gx = ctx.grad(0);
    if (!gx) return;
    const Tensor &g = ctx.out_grad();
    for (size_t i = 0; i < g.size(); ++i) (*gx)[i] += c * g[i];
  });
}

Var concat_cols(const std::vector<Var> &parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const size_t rows = parts[0].value().rows();
  std::vector<size_t> widths;
  size_t total = 0;
  for (const Var &p : parts) {
    const Tensor &t = p.value();
    require_rank2(t, "concat_cols");
    require(t.rows() == rows, "concat_cols: row mismatch " + shape_string(parts[0].value().shape()) +
                                  " vs " + shape_string(t.shape()));
    widths.push_back(t.cols());
    total += t.cols();
  }
  Tensor out({rows, total});
  size_t off = 0;
  for (const Var &p : parts) {
    const Tensor &t = p.value();
    for (size_t r = 0; r < rows; ++r)
      for (size_t c = 0; c < t.cols(); ++c) out(r, off + c) = t(r, c);
    off += t.cols();
  }
  return parts[0].graph()->add_node(
      "concat_cols", std::move(out), parts, [widths, rows](BackwardContext &ctx) {
        const Tensor &g = ctx.out_grad();
        size_t off = 0;
        for (size_t k = 0; k < widths.size(); ++k) {
          if (Tensor *gk = ctx.grad(k)) {
            for (size_t r = 0; r < rows; ++r)
              for (size_t c = 0; c < widths[k]; ++c) (*gk)(r, c) += g(r, off + c);
          }
          off += widths[k];
        }
      });
}

Var concat_rows(const std::vector<Var> &parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const size_t cols = parts[0].value().cols();
  std::vector<size_t> heights;
  std::vector<double> data;
  for (const Var &p : parts) {
    const Tensor &t = p.value();
    require_rank2(t, "concat_rows");
    require(t.cols() == cols, "concat_rows: column mismatch " +
                                  shape_string(parts[0].value().shape()) + " vs " +
                                  shape_string(t.shape()));
    heights.push_back(t.rows());
    data.insert(data.end(), t.storage().begin(), t.storage().end());
  }
  const size_t rows = data.size() / cols;
  return parts[0].graph()->add_node(
      "concat_rows", Tensor({rows, cols}, std::move(data)), parts,
      [heights, cols](BackwardContext &ctx) {
        const Tensor &g = ctx.out_grad();
        size_t off = 0;
        for (size_t k = 0; k < heights.size(); ++k) {
          const size_t n = heights[k] * cols;
          if (Tensor *gk = ctx.grad(k)) {
            for (size_t i = 0; i < n; ++i) (*gk)[i] += g[off + i];
          }
          off += n;
        }
      });
}

Var max_pool_over_time(Var x) {
  const Tensor &xv = x.value();
  require_rank2(xv, "max_pool_over_time");
  const size_t len = xv.rows(), d = xv.cols();
  Tensor out({1, d});
  std::vector<size_t> arg(d, 0);
  for (size_t c = 0; c < d; ++c) {
    double best = xv(0, c);
    for (size_t r = 1; r < len; ++r) {
      if (xv(r, c) > best) {
        best = xv(r, c);
        arg[c] = r;
      }
    }
    out(0, c) = best;
  }
  return x.graph()->add_node("max_pool_over_time", std::move(out), {x},
                             [arg](BackwardContext &ctx) {
                               Tensor *gx = ctx.grad(0);
                               if (!gx) return;
                               const Tensor &g = ctx.out_grad();
                               for (size_t c = 0; c < arg.size(); ++c) (*gx)(arg[c], c) += g(0, c);
                             });
}

Var mean_pool_over_time(Var x) {
  const Tensor &xv = x.value();
  require_rank2(xv, "mean_pool_over_time");
  const size_t len = xv.rows(), d = xv.cols();
  Tensor out({1, d});
  for (size_t r = 0; r < len; ++r)
    for (size_t c = 0; c < d; ++c) out(0, c) += xv(r, c);
  for (size_t c = 0; c < d; ++c) out(0, c) /= static_cast<double>(len);
  return x.graph()->add_node("mean_pool_over_time", std::move(out), {x},
                             [len, d](BackwardContext &ctx) {
                               Tensor *gx = ctx.grad(0);
                               if (!gx) return;
                               const Tensor &g = ctx.out_grad();
                               const double inv = 1.0 / static_cast<double>(len);
                               for (size_t r = 0; r < len; ++r)
                                 for (size_t c = 0; c < d; ++c) (*gx)(r, c) += g(0, c) * inv;
                             });
}

Var softmax(Var x) {
  const Tensor &xv = x.value();
  require_rank2(xv, "softmax");
  const size_t n = xv.rows(), m = xv.cols();
  Tensor out({n, m});
  for (size_t r = 0; r < n; ++r) {
    double mx = xv(r, 0);
    for (size_t c = 1; c < m; ++c) mx = std::max(mx, xv(r, c));
    double z = 0;
    for (size_t c = 0; c < m; ++c) {
      out(r, c) = std::exp(xv(r, c) - mx);
      z += out(r, c);
    }
    for (size_t c = 0; c < m; ++c) out(r, c) /= z;
  }
  return x.graph()->add_node("softmax", std::move(out), {x}, [n, m](BackwardContext &ctx) {
    Tensor *gx = ctx.grad(0);
    if (!gx) return;
    const Tensor &g = ctx.out_grad();
    const Tensor &y = ctx.out();
    for (size_t r = 0; r < n; ++r) {
      double dot = 0;
      for (size_t c = 0; c < m; ++c) dot += g(r, c) * y(r, c);
      for (size_t c = 0; c < m; ++c) (*gx)(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Var logsumexp(Var x) {
  const Tensor &xv = x.value();
  require_rank2(xv, "logsumexp");
  const size_t n = xv.rows(), m = xv.cols();
  Tensor out({n, 1});
  for (size_t r = 0; r < n; ++r) {
    double mx = xv(r, 0);
    for (size_t c = 1; c < m; ++c) mx = std::max(mx, xv(r, c));
    double z = 0;
    for (size_t c = 0; c < m; ++c) z += std::exp(xv(r, c) - mx);
    out(r, 0) = mx + std::log(z);
  }
  return x.graph()->add_node("logsumexp", std::move(out), {x}, [n, m](BackwardContext &ctx) {
    Tensor *gx = ctx.grad(0);
    if (!gx) return;
    const Tensor &g = ctx.out_grad();
    const Tensor &X = ctx.in(0);
    const Tensor &y = ctx.out();
    for (size_t r = 0; r < n; ++r)
      for (size_t c = 0; c < m; ++c) (*gx)(r, c) += g(r, 0) * std::exp(X(r, c) - y(r, 0));
  });
}

Var transpose(Var x) {
  const Tensor &xv = x.value();
  require_rank2(xv, "transpose");
  const size_t n = xv.rows(), m = xv.cols();
  Tensor out({m, n});
  for (size_t r = 0; r < n; ++r)
    for (size_t c = 0; c < m; ++c) out(c, r) = xv(r, c);
  return x.graph()->add_node("transpose", std::move(out), {x}, [n, m](BackwardContext &ctx) {
    Tensor *gx = ctx.grad(0);
    if (!gx) return;
    const Tensor &g = ctx.out_grad();
    for (size_t r = 0; r < n; ++r)
      for (size_t c = 0; c < m; ++c) (*gx)(r, c) += g(c, r);
  });
}

Var gather_rows(Var table, const std::vector<size_t> &ids) {
  const Tensor &t = table.value();
  require_rank2(t, "gather_rows");
  require(!ids.empty(), "gather_rows: empty id list");
  const size_t d = t.cols();
  Tensor out({ids.size(), d});
  for (size_t r = 0; r < ids.size(); ++r) {
    require(ids[r] < t.rows(), "gather_rows: row " + std::to_string(ids[r]) + " out of range for " +
                                   shape_string(t.shape()));
    std::copy_n(&t(ids[r], 0), d, &out(r, 0));
  }
  return table.graph()->add_node("gather_rows", std::move(out), {table},
                                 [ids, d](BackwardContext &ctx) {
                                   Tensor *gt = ctx.grad(0);
                                   if (!gt) return;
                                   const Tensor &g = ctx.out_grad();
                                   for (size_t r = 0; r < ids.size(); ++r)
                                     for (size_t c = 0; c < d; ++c) (*gt)(ids[r], c) += g(r, c);
                                 });
}

Var reshape(Var x, Shape shape) {
  const Tensor &xv = x.value();
  require(shape_product(shape) == xv.size(),
          "reshape: " + shape_string(xv.shape()) + " cannot become " + shape_string(shape));
  Tensor out(std::move(shape), xv.storage());
  return x.graph()->add_node("reshape", std::move(out), {x}, [](BackwardContext &ctx) {
    Tensor *gx = ctx.grad(0);
    if (!gx) return;
    const Tensor &g = ctx.out_grad();
    for (size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
  });
}

Var sum(Var x) {
  double s = 0;
  for (double v : x.value().storage()) s += v;
  return x.graph()->add_node("sum", Tensor::scalar(s), {x}, [](BackwardContext &ctx) {
    Tensor *gx = ctx.grad(0);
    if (!gx) return;
    const double g = ctx.out_grad()[0];
    for (double &v : gx->storage()) v += g;
  });
}

Var conv2d(Var x, Var kernel) {
  const Tensor &X = x.value();
  const Tensor &K = kernel.value();
  require(X.rank() == 3, "conv2d: input must be [c x h x w], got " + shape_string(X.shape()));
  require(K.rank() == 4 && K.dim(1) == X.dim(0),
          "conv2d: kernel " + shape_string(K.shape()) + " does not fit input " +
              shape_string(X.shape()));
  const size_t cin = X.dim(0), h = X.dim(1), w = X.dim(2);
  const size_t cout = K.dim(0), kh = K.dim(2), kw = K.dim(3);
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw ConfigError("conv2d: kernel sizes must be odd, got " + shape_string(K.shape()));
  }
  const long ph = static_cast<long>(kh / 2), pw = static_cast<long>(kw / 2);
  auto xi = [=](size_t c, size_t r, size_t q) { return (c * h + r) * w + q; };
  auto ki = [=](size_t o, size_t c, size_t a, size_t b) { return ((o * cin + c) * kh + a) * kw + b; };
  Tensor out({cout, h, w});
  for (size_t o = 0; o < cout; ++o)
    for (size_t c = 0; c < cin; ++c)
      for (size_t a = 0; a < kh; ++a)
        for (size_t b = 0; b < kw; ++b) {
          const double kv = K[ki(o, c, a, b)];
          for (size_t r = 0; r < h; ++r) {
            const long sr = static_cast<long>(r) + static_cast<long>(a) - ph;
            if (sr < 0 || sr >= static_cast<long>(h)) continue;
            for (size_t q = 0; q < w; ++q) {
              const long sq = static_cast<long>(q) + static_cast<long>(b) - pw;
              if (sq < 0 || sq >= static_cast<long>(w)) continue;
              out[(o * h + r) * w + q] += kv * X[xi(c, static_cast<size_t>(sr), static_cast<size_t>(sq))];
            }
          }
        }
  return x.graph()->add_node(
      "conv2d", std::move(out), {x, kernel},
      [=](BackwardContext &ctx) {
        const Tensor &g = ctx.out_grad();
        const Tensor &Xv = ctx.in(0);
        const Tensor &Kv = ctx.in(1);
        Tensor *gx = ctx.grad(0);
        Tensor *gk = ctx.grad(1);
        for (size_t o = 0; o < cout; ++o)
          for (size_t c = 0; c < cin; ++c)
            for (size_t a = 0; a < kh; ++a)
              for (size_t b = 0; b < kw; ++b) {
                const size_t kidx = ki(o, c, a, b);
                double kacc = 0;
                for (size_t r = 0; r < h; ++r) {
                  const long sr = static_cast<long>(r) + static_cast<long>(a) - ph;
                  if (sr < 0 || sr >= static_cast<long>(h)) continue;
                  for (size_t q = 0; q < w; ++q) {
                    const long sq = static_cast<long>(q) + static_cast<long>(b) - pw;
                    if (sq < 0 || sq >= static_cast<long>(w)) continue;
                    const double gv = g[(o * h + r) * w + q];
                    const size_t xidx = xi(c, static_cast<size_t>(sr), static_cast<size_t>(sq));
                    if (gx) (*gx)[xidx] += gv * Kv[kidx];
                    kacc += gv * Xv[xidx];
                  }
                }
                if (gk) (*gk)[kidx] += kacc;
              }
      });
}

Var max_pool_grid(Var x, size_t gh, size_t gw) {
  const Tensor &X = x.value();
  require(X.rank() == 3, "max_pool_grid: input must be [c x h x w], got " + shape_string(X.shape()));
  if (gh == 0 || gw == 0) throw ConfigError("max_pool_grid: grid must be positive");
  const size_t c = X.dim(0), h = X.dim(1), w = X.dim(2);
  auto bin = [](size_t i, size_t n, size_t g) {
    size_t lo = (i * n) / g;
    size_t hi = ((i + 1) * n + g - 1) / g;
    if (hi <= lo) hi = lo + 1;
    return std::pair<size_t, size_t>{lo, std::min(hi, n)};
  };
  Tensor out({1, c * gh * gw});
  std::vector<size_t> arg(c * gh * gw);
  for (size_t ch = 0; ch < c; ++ch)
    for (size_t i = 0; i < gh; ++i)
      for (size_t j = 0; j < gw; ++j) {
        const auto [r0, r1] = bin(i, h, gh);
        const auto [q0, q1] = bin(j, w, gw);
        double best = -std::numeric_limits<double>::infinity();
        size_t best_idx = 0;
        for (size_t r = r0; r < r1; ++r)
          for (size_t q = q0; q < q1; ++q) {
            const size_t idx = (ch * h + r) * w + q;
            if (X[idx] > best) {
              best = X[idx];
              best_idx = idx;
            }
          }
        const size_t o = (ch * gh + i) * gw + j;
        out[o] = best;
        arg[o] = best_idx;
      }
  return x.graph()->add_node("max_pool_grid", std::move(out), {x}, [arg](BackwardContext &ctx) {
    Tensor *gx = ctx.grad(0);
    if (!gx) return;
    const Tensor &g = ctx.out_grad();
    for (size_t o = 0; o < arg.size(); ++o) (*gx)[arg[o]] += g[o];
  });
}

Var self_attention(Var x, Var wq, Var wk, Var wv) {
  Var q = matmul(x, wq);
  Var k = matmul(x, wk);
  Var v = matmul(x, wv);
  const double inv = 1.0 / std::sqrt(static_cast<double>(k.value().cols()));
  Var scores = scale(matmul(q, transpose(k)), inv);
  return matmul(softmax(scores), v);
}

Var log_sigmoid(Var z) {
  const Tensor &zv = z.value();
  require(zv.rank() == 2 && zv.cols() == 1, "log_sigmoid: expected a column, got " +
                                                 shape_string(zv.shape()));
  Var zeros = z.graph()->constant(Tensor({zv.rows(), 1}, 0.0));
  return scale(logsumexp(concat_cols({zeros, scale(z, -1.0)})), -1.0);
}

}  // namespace ops

// ---------------------------------------------------------------------------
// Training utilities

double grad_check(const std::function<Var(Graph &)> &loss_fn, ParameterSet &params, double eps,
                  size_t max_entries_per_param) {
  if (!(eps > 0)) throw ConfigError("grad_check: eps must be positive");
  Gradients analytic;
  {
    Graph g(&params);
    Var loss = loss_fn(g);
    analytic = g.backward(loss);
  }
  auto eval = [&]() {
    Graph g(&params);
    return loss_fn(g).value().item();
  };
  double worst = 0.0;
  for (auto &[name, grad] : analytic) {
    Tensor &p = params.mutable_value(name);
    const size_t n = max_entries_per_param ? std::min(max_entries_per_param, p.size()) : p.size();
    for (size_t i = 0; i < n; ++i) {
      const double orig = p[i];
      p[i] = orig + eps;
      const double fp = eval();
      p[i] = orig - eps;
      const double fm = eval();
      p[i] = orig;
      const double numeric = (fp - fm) / (2 * eps);
      const double a = grad[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-7});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

void sgd_step(ParameterSet &params, const Gradients &grads, double lr) {
  if (!(lr > 0)) throw ConfigError("sgd_step: lr must be positive");
  for (const auto &[name, g] : grads) {
    Tensor &p = params.mutable_value(name);
    for (size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
  }
}

void Adam::step(ParameterSet &params, const Gradients &grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto &[name, g] : grads) {
    Tensor &p = params.mutable_value(name);
    auto [mit, mnew] = m_.try_emplace(name, Tensor(p.shape(), 0.0));
    auto [vit, vnew] = v_.try_emplace(name, Tensor(p.shape(), 0.0));
    Tensor &m = mit->second;
    Tensor &v = vit->second;
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1 - beta2_) * g[i] * g[i];
      p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

void accumulate(Gradients &acc, const Gradients &g, double scale) {
  for (const auto &[name, t] : g) {
    auto it = acc.find(name);
    if (it == acc.end()) {
      Tensor c = t;
      if (scale != 1.0)
        for (double &v : c.storage()) v *= scale;
      acc.emplace(name, std::move(c));
    } else {
      for (size_t i = 0; i < t.size(); ++i) it->second[i] += scale * t[i];
    }
  }
}

void add_glorot(ParameterSet &params, const std::string &name, Shape shape, size_t fan_in, size_t fan_out,
                uint64_t seed) {
  params.add(name, glorot_uniform(std::move(shape), fan_in, fan_out, mix_seed(seed, name)));
}

}  // namespace econet
