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

#include <cmath>

#include "doctest.h"
#include "econet/autodiff.h"
#include "test_util.h"

namespace econet {
namespace {

using testing::max_abs_diff;
using testing::random_tensor;

Tensor naive_matmul(const Tensor &a, const Tensor &b) {
  Tensor out({a.rows(), b.cols()});
  for (size_t i = 0; i < a.rows(); ++i)
    for (size_t j = 0; j < b.cols(); ++j) {
      double s = 0;
      for (size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

Tensor naive_conv1d(const Tensor &x, const Tensor &kernel, int window) {
  const size_t len = x.rows(), d = x.cols(), dout = kernel.dim(2);
  const int half = (window - 1) / 2;
  Tensor out({len, dout});
  for (size_t p = 0; p < len; ++p)
    for (size_t o = 0; o < dout; ++o) {
      double s = 0;
      for (int t = 0; t < window; ++t) {
        const long src = static_cast<long>(p) + t - half;
        if (src < 0 || src >= static_cast<long>(len)) continue;
        for (size_t i = 0; i < d; ++i) {
          s += x(static_cast<size_t>(src), i) * kernel[(static_cast<size_t>(t) * d + i) * dout + o];
        }
      }
      out(p, o) = s;
    }
  return out;
}

TEST_SUITE("tensor") {
  TEST_CASE("matmul fixed examples") {
    Graph g;
    Var id = g.constant(Tensor::identity(2));
    Var m = g.constant(Tensor::matrix({{1, 2}, {3, 4}}));
    CHECK(ops::matmul(id, m).value() == Tensor::matrix({{1, 2}, {3, 4}}));
    Var e = g.constant(Tensor::matrix({{1, 0}}));
    Var col = g.constant(Tensor::matrix({{2}, {3}}));
    CHECK(ops::matmul(e, col).value() == Tensor::matrix({{2}}));
  }

  TEST_CASE("matmul matches triple loop") {
    Rng rng(11);
    for (int rep = 0; rep < 10; ++rep) {
      Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
      Graph g;
      Tensor got = ops::matmul(g.constant(a), g.constant(b)).value();
      CHECK(max_abs_diff(got, naive_matmul(a, b)) <= 1e-12);
    }
  }

  TEST_CASE("matmul shape error names both shapes") {
    Graph g;
    Var a = g.constant(Tensor({2, 3}));
    Var b = g.constant(Tensor({2, 3}));
    try {
      ops::matmul(a, b);
      FAIL("expected ShapeError");
    } catch (const ShapeError &e) {
      CHECK(std::string(e.what()).find("[2x3] x [2x3]") != std::string::npos);
    }
  }

  TEST_CASE("conv1d fixed examples") {
    Graph g;
    Tensor x = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}});
    Tensor ident({1, 2, 2}, {1, 0, 0, 1});
    CHECK(ops::conv1d(g.constant(x), g.constant(ident), 1).value() == x);

    Tensor seq({3, 1}, {1, 2, 3});
    Tensor ones({3, 1, 1}, 1.0);
    CHECK(ops::conv1d(g.constant(seq), g.constant(ones), 3).value() == Tensor({3, 1}, {3, 6, 5}));
  }

  TEST_CASE("conv1d matches nested loops") {
    Rng rng(5);
    for (int window : {1, 3, 5}) {
      Tensor x = random_tensor({6, 3}, rng), k = random_tensor({size_t(window), 3, 4}, rng);
      Graph g;
      Tensor got = ops::conv1d(g.constant(x), g.constant(k), window).value();
      CHECK(max_abs_diff(got, naive_conv1d(x, k, window)) <= 1e-12);
    }
  }

  TEST_CASE("conv1d rejects even windows") {
    Graph g;
    Var x = g.constant(Tensor({3, 1}, 1.0));
    Var k = g.constant(Tensor({2, 1, 1}, 1.0));
    CHECK_THROWS_AS(ops::conv1d(x, k, 2), ConfigError);
  }

  TEST_CASE("elementwise semantics") {
    Graph g;
    CHECK(ops::sigmoid(g.constant(Tensor::scalar(0))).value().item() == doctest::Approx(0.5));
    CHECK(ops::max_pool_over_time(g.constant(Tensor::matrix({{1, 5}, {3, 2}}))).value() ==
          Tensor::matrix({{3, 5}}));
    Tensor sm = ops::softmax(g.constant(Tensor::matrix({{0.7, 0.7, 0.7}}))).value();
    for (double v : sm.storage()) CHECK(v == doctest::Approx(1.0 / 3.0));
    CHECK(ops::mean_pool_over_time(g.constant(Tensor::matrix({{1, 5}, {3, 2}}))).value() ==
          Tensor::matrix({{2, 3.5}}));
    CHECK(ops::relu(g.constant(Tensor::matrix({{-1, 2}}))).value() == Tensor::matrix({{0, 2}}));
    CHECK_THROWS_AS(ops::add(g.constant(Tensor({2, 2})), g.constant(Tensor({3, 2}))), ShapeError);
    CHECK_THROWS_AS(ops::mul(g.constant(Tensor({2, 2})), g.constant(Tensor({1, 2}))), ShapeError);
  }

  TEST_CASE("logsumexp is shift invariant and overflow safe") {
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
      Tensor x = random_tensor({1, 5}, rng, 3.0);
      const double c = rng.uniform(-500, 500);
      Tensor shifted = x;
      for (double &v : shifted.storage()) v += c;
      Graph g;
      const double a = ops::logsumexp(g.constant(x)).value().item();
      const double b = ops::logsumexp(g.constant(shifted)).value().item();
      CHECK(std::abs(b - (a + c)) <= 1e-10);
    }
    Graph g;
    CHECK(std::isfinite(ops::logsumexp(g.constant(Tensor::matrix({{1000, 1000}}))).value().item()));
  }

  TEST_CASE("backward on trivial graphs") {
    ParameterSet ps;
    ps.add("x", Tensor::scalar(3.0));
    {
      Graph g(&ps);
      Var x = g.param("x");
      Gradients grads = g.backward(x);
      CHECK(grads.at("x").item() == 1.0);
    }
    ParameterSet ps2;
    ps2.add("w", Tensor::scalar(0.0));
    Graph g(&ps2);
    Var loss = ops::sigmoid(ops::matmul(g.param("w"), g.constant(Tensor::scalar(1.0))));
    CHECK(g.backward(loss).at("w").item() == doctest::Approx(0.25));
  }

  TEST_CASE("backward rejects non-scalar loss and skips frozen leaves") {
    ParameterSet ps;
    ps.add("w", Tensor({2, 2}, 1.0));
    ps.add("frozen", Tensor({2, 2}, 1.0), false);
    Graph g(&ps);
    Var y = ops::mul(g.param("w"), g.param("frozen"));
    CHECK_THROWS_AS(g.backward(y), ContractError);
    Graph g2(&ps);
    Gradients grads = g2.backward(ops::sum(ops::mul(g2.param("w"), g2.param("frozen"))));
    CHECK(grads.count("w") == 1);
    CHECK(grads.count("frozen") == 0);
  }

  // One loss builder per op; each is checked on several random instances.
  struct OpCase {
    const char *name;
    std::function<void(ParameterSet &, Rng &)> init;
    std::function<Var(Graph &)> loss;
  };

  std::vector<OpCase> op_cases() {
    auto weighted_sum = [](Graph &g, Var y) {
      // Fixed random weights make every output entry matter.
      Rng r(99);
      Tensor w = random_tensor(y.value().shape(), r);
      return ops::sum(ops::mul(y, g.constant(std::move(w))));
    };
    std::vector<OpCase> cases;
    cases.push_back({"matmul",
                     [](ParameterSet &ps, Rng &r) {
                       ps.add("a", random_tensor({3, 4}, r));
                       ps.add("b", random_tensor({4, 2}, r));
                     },
                     [=](Graph &g) { return weighted_sum(g, ops::matmul(g.param("a"), g.param("b"))); }});
    cases.push_back({"conv1d",
                     [](ParameterSet &ps, Rng &r) {
                       ps.add("x", random_tensor({5, 3}, r));
                       ps.add("k", random_tensor({3, 3, 2}, r));
                     },
                     [=](Graph &g) { return weighted_sum(g, ops::conv1d(g.param("x"), g.param("k"), 3)); }});
    cases.push_back({"tanh", [](ParameterSet &ps, Rng &r) { ps.add("x", random_tensor({3, 3}, r)); },
                     [=](Graph &g) { return weighted_sum(g, ops::tanh(g.param("x"))); }});
    cases.push_back({"sigmoid", [](ParameterSet &ps, Rng &r) { ps.add("x", random_tensor({3, 3}, r)); },
                     [=](Graph &g) { return weighted_sum(g, ops::sigmoid(g.param("x"))); }});
    cases.push_back({"relu", [](ParameterSet &ps, Rng &r) { ps.add("x", random_tensor({3, 3}, r)); },
                     [=](Graph &g) { return weighted_sum(g, ops::relu(g.param("x"))); }});
    cases.push_back({"add_broadcast",
                     [](ParameterSet &ps, Rng &r) {
                       ps.add("x", random_tensor({3, 2}, r));
                       ps.add("b", random_tensor({1, 2}, r));
                     },
                     [=](Graph &g) { return weighted_sum(g, ops::add(g.param("x"), g.param("b"))); }});
    cases.push_back({"mul",
                     [](ParameterSet &ps, Rng &r) {
                       ps.add("x", random_tensor({2, 3}, r));
                       ps.add("y", random_tensor({2, 3}, r));
                     },
                     [=](Graph &g) { return weighted_sum(g, ops::mul(g.param("x"), g.param("y"))); }});
    cases.push_back({"sub_scale",
                     [](ParameterSet &ps, Rng &r) {
                       ps.add("x", random_tensor({2, 3}, r));
                       ps.add("y", random_tensor({2, 3}, r));
                     },
                     [=](Graph &g) { return weighted_sum(g, ops::scale(ops::sub(g.param("x"), g.param("y")), -1.5)); }});
    cases.push_back({"concat",
                     [](ParameterSet &ps, Rng &r) {
                       ps.add("x", random_tensor({2, 3}, r));
                       ps.add("y", random_tensor({2, 1}, r));
                     },
                     [=](Graph &g) {
                       Var c = ops::concat_cols({g.param("x"), g.param("y")});
                       Var d = ops::concat_cols({g.param("y"), g.param("x")});
                       return weighted_sum(g, ops::concat_rows({c, d}));
                     }});
    cases.push_back({"max_pool_over_time",
                     [](ParameterSet &ps, Rng &r) { ps.add("x", random_tensor({4, 3}, r)); },
                     [=](Graph &g) { return weighted_sum(g, ops::max_pool_over_time(g.param("x"))); }});
    cases.push_back({"mean_pool_over_time",
                     [](ParameterSet &ps, Rng &r) { ps.add("x", random_tensor({4, 3}, r)); },
                     [=](Graph &g) { return weighted_sum(g, ops::mean_pool_over_time(g.param("x"))); }});
    cases.push_back({"softmax", [](ParameterSet &ps, Rng &r) { ps.add("x", random_tensor({2, 4}, r)); },
                     [=](Graph &g) { return weighted_sum(g, ops::softmax(g.param("x"))); }});
    cases.push_back({"logsumexp", [](ParameterSet &ps, Rng &r) { ps.add("x", random_tensor({3, 4}, r)); },
                     [=](Graph &g) { return weighted_sum(g, ops::logsumexp(g.param("x"))); }});
    cases.push_back({"gather_transpose_reshape",
                     [](ParameterSet &ps, Rng &r) { ps.add("t", random_tensor({4, 3}, r)); },
                     [=](Graph &g) {
                       Var rows = ops::gather_rows(g.param("t"), {2, 0, 2});
                       return weighted_sum(g, ops::reshape(ops::transpose(rows), {1, 9}));
                     }});
    cases.push_back({"conv2d_pool",
                     [](ParameterSet &ps, Rng &r) {
                       ps.add("x", random_tensor({2, 5, 3}, r));
                       ps.add("k", random_tensor({3, 2, 3, 3}, r));
                     },
                     [=](Graph &g) {
                       return weighted_sum(g, ops::max_pool_grid(ops::conv2d(g.param("x"), g.param("k")), 4, 4));
                     }});
    cases.push_back({"self_attention",
                     [](ParameterSet &ps, Rng &r) {
                       ps.add("x", random_tensor({4, 3}, r));
                       ps.add("q", random_tensor({3, 2}, r));
                       ps.add("k", random_tensor({3, 2}, r));
                       ps.add("v", random_tensor({3, 3}, r));
                     },
                     [=](Graph &g) {
                       return weighted_sum(g, ops::self_attention(g.param("x"), g.param("q"), g.param("k"), g.param("v")));
                     }});
    cases.push_back({"log_sigmoid", [](ParameterSet &ps, Rng &r) { ps.add("z", random_tensor({4, 1}, r, 3.0)); },
                     [=](Graph &g) { return weighted_sum(g, ops::log_sigmoid(g.param("z"))); }});
    return cases;
  }

  TEST_CASE("every op passes the finite-difference check") {
    for (const OpCase &c : op_cases()) {
      for (uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed * 7919);
        ParameterSet ps;
        c.init(ps, rng);
        const double err = grad_check(c.loss, ps, 1e-4);
        INFO(c.name << " seed " << seed);
        CHECK(err <= 1e-3);
      }
    }
  }

  TEST_CASE("random composite graphs pass the finite-difference check") {
    for (uint64_t seed = 1; seed <= 8; ++seed) {
      Rng rng(seed);
      ParameterSet ps;
      ps.add("x", random_tensor({4, 3}, rng));
      ps.add("w", random_tensor({3, 3}, rng));
      std::vector<int> plan;
      for (int i = 0; i < 5; ++i) plan.push_back(static_cast<int>(rng.below(6)));
      auto loss = [plan](Graph &g) {
        Var h = g.param("x");
        for (int step : plan) {
          switch (step) {
            case 0: h = ops::matmul(h, g.param("w")); break;
            case 1: h = ops::tanh(h); break;
            case 2: h = ops::sigmoid(h); break;
            case 3: h = ops::softmax(h); break;
            case 4: h = ops::add(h, ops::mul(h, h)); break;
            default: h = ops::scale(h, 0.5); break;
          }
        }
        Rng r(4242);
        return ops::sum(ops::mul(h, g.constant(random_tensor(h.value().shape(), r))));
      };
      INFO("seed " << seed);
      CHECK(grad_check(loss, ps, 1e-4) <= 1e-3);
    }
  }

  TEST_CASE("grad_check edge cases") {
    ParameterSet ps;
    ps.add("w", Tensor::row({0.3, -0.7, 1.1}));
    auto constant_loss = [](Graph &g) {
      g.param("w");
      return g.constant(Tensor::scalar(2.5));
    };
    CHECK(grad_check(constant_loss, ps, 1e-4) == 0.0);
    auto linear = [](Graph &g) {
      return ops::matmul(g.param("w"), g.constant(Tensor({3, 1}, {2.0, -1.0, 0.5})));
    };
    CHECK(grad_check(linear, ps, 1e-4) <= 1e-9);
    const Tensor before = ps.value("w");
    grad_check(linear, ps, 1e-4);
    CHECK(ps.value("w") == before);
    CHECK_THROWS_AS(grad_check(linear, ps, 0.0), ConfigError);
  }

  TEST_CASE("sgd_step") {
    ParameterSet ps;
    ps.add("p", Tensor::scalar(1.0));
    Gradients g{{"p", Tensor::scalar(1.0)}};
    sgd_step(ps, g, 0.1);
    CHECK(ps.value("p").item() == doctest::Approx(0.9));
    sgd_step(ps, {{"p", Tensor::scalar(0.0)}}, 0.1);
    CHECK(ps.value("p").item() == doctest::Approx(0.9));

    ParameterSet a, b;
    a.add("p", Tensor::row({1.0, -2.0}));
    b.add("p", Tensor::row({1.0, -2.0}));
    Gradients fixed{{"p", Tensor::row({0.25, 0.5})}};
    sgd_step(a, fixed, 0.1);
    sgd_step(a, fixed, 0.1);
    sgd_step(b, fixed, 0.2);
    CHECK(max_abs_diff(a.value("p"), b.value("p")) <= 1e-15);
  }

  TEST_CASE("checkpoint round trip is byte stable") {
    testing::TempDir dir("ckpt");
    Rng rng(1);
    ParameterSet ps;
    ps.add("b", random_tensor({1, 3}, rng));
    ps.add("a.weights", random_tensor({2, 2, 2}, rng), false);
    ps.save(dir.file("one.json"));
    ParameterSet back = ParameterSet::load(dir.file("one.json"));
    CHECK(back == ps);
    back.save(dir.file("two.json"));
    CHECK(testing::read_file(dir.file("one.json")) == testing::read_file(dir.file("two.json")));
  }

  TEST_CASE("initialization is seeded") {
    Tensor a = glorot_uniform({4, 5}, 4, 5, 17);
    Tensor b = glorot_uniform({4, 5}, 4, 5, 17);
    CHECK(a == b);
    const double r = std::sqrt(6.0 / 9.0);
    for (double v : a.storage()) CHECK(std::abs(v) <= r);
  }
}

}  // namespace
}  // namespace econet
