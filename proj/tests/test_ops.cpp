/* Copyright 2026 The mcreplay Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <doctest.h>

#include <cmath>
#include <vector>

#include "mcreplay/error.hpp"
#include "mcreplay/graph.hpp"
#include "mcreplay/ops.hpp"
#include "support.hpp"

using namespace mcreplay;
using testing::op_gradient_error;
using testing::random_tensor;

namespace {

constexpr double kGradTol = 1e-6;

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

}  // namespace

TEST_SUITE("tensor-core") {

TEST_CASE("tensor shape checks") {
  CHECK(shape_size({3, 4, 5}) == 60);
  CHECK(shape_string({3, 4}) == "[3x4]");
  CHECK_THROWS_AS(Tensor<double>(Shape{2, 2}, std::vector<double>{1, 2, 3}), Error);
  Tensor<double> t(Shape{2, 3}, 1.5);
  t.reshape({3, 2});
  CHECK(t.dim(0) == 3);
  try {
    t.reshape({4, 2});
    FAIL("reshape should throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimension);
  }
}

TEST_CASE("conv1d_valid aligns out[t] with the newest sample") {
  Graph<double> g;
  const Var s = g.constant(Tensor<double>{1, 2, 3, 4, 5});
  const Var k = g.constant(Tensor<double>{1, 10, 100});
  const Var y = conv1d_valid(g, s, k);
  REQUIRE(g.shape(y) == Shape{3});
  // out[0] = 1*3 + 10*2 + 100*1
  CHECK(g.data(y)[0] == doctest::Approx(123));
  CHECK(g.data(y)[1] == doctest::Approx(234));
  CHECK(g.data(y)[2] == doctest::Approx(345));
}

TEST_CASE("conv1d_valid of an impulse returns the kernel") {
  Graph<double> g;
  Tensor<double> impulse(Shape{7});
  impulse[3] = 1.0;
  const Var y = conv1d_valid(g, g.constant(impulse), g.constant(Tensor<double>{4, 5, 6, 7}));
  // Width 4; impulse at index 3 hits kernel[n] at t = 3 - (3 - n) = n.
  for (std::size_t t = 0; t < 4; ++t) CHECK(g.data(y)[t] == doctest::Approx(4.0 + t));
}

TEST_CASE("conv1d_valid rejects a kernel longer than the signal") {
  Graph<double> g;
  CHECK_THROWS_AS(conv1d_valid(g, g.constant(Tensor<double>{1, 2}),
                               g.constant(Tensor<double>{1, 2, 3})),
                  Error);
}

TEST_CASE("op gradients match central differences") {
  Rng rng(5);
  SUBCASE("conv1d_valid") {
    CHECK(op_gradient_error([](auto& g, const auto& v) { return conv1d_valid(g, v[0], v[1]); },
                            {random_tensor({17}, rng), random_tensor({5}, rng)}) < kGradTol);
  }
  SUBCASE("filter_and_sum") {
    CHECK(op_gradient_error([](auto& g, const auto& v) { return filter_and_sum(g, v[0], v[1]); },
                            {random_tensor({2, 3, 12}, rng), random_tensor({3, 4, 5}, rng)}) <
          kGradTol);
  }
  SUBCASE("max_pool") {
    CHECK(op_gradient_error([](auto& g, const auto& v) { return max_pool(g, v[0], 3, 3); },
                            {random_tensor({4, 10}, rng)}) < kGradTol);
  }
  SUBCASE("global_max_pool") {
    CHECK(op_gradient_error([](auto& g, const auto& v) { return global_max_pool(g, v[0]); },
                            {random_tensor({3, 9}, rng)}) < kGradTol);
  }
  SUBCASE("relu") {
    CHECK(op_gradient_error([](auto& g, const auto& v) { return relu(g, v[0]); },
                            {random_tensor({20}, rng)}) < kGradTol);
  }
  SUBCASE("linear on rows") {
    CHECK(op_gradient_error([](auto& g, const auto& v) { return linear(g, v[0], v[1], v[2]); },
                            {random_tensor({3, 6}, rng), random_tensor({4, 6}, rng),
                             random_tensor({4}, rng)}) < kGradTol);
  }
  SUBCASE("multi_map_conv") {
    CHECK(op_gradient_error(
              [](auto& g, const auto& v) { return multi_map_conv(g, v[0], v[1], v[2]); },
              {random_tensor({2, 11}, rng), random_tensor({3, 4}, rng), random_tensor({3}, rng)}) <
          kGradTol);
  }
  SUBCASE("reshape, row and slice") {
    CHECK(op_gradient_error(
              [](auto& g, const auto& v) {
                const Var r = reshape(g, v[0], {4, 6});
                return slice(g, row(g, r, 2), 1, 4);
              },
              {random_tensor({2, 12}, rng)}) < kGradTol);
  }
  SUBCASE("lstm_cell") {
    CHECK(op_gradient_error(
              [](auto& g, const auto& v) {
                const LstmState s = lstm_cell(g, v[0], v[1], v[2], v[3], v[4], v[5]);
                return slice(g, reshape(g, s.c, {3}), 0, 3);
              },
              {random_tensor({5}, rng), random_tensor({3}, rng), random_tensor({3}, rng),
               random_tensor({12, 5}, rng, 0.5), random_tensor({12, 3}, rng, 0.5),
               random_tensor({12}, rng, 0.5)}) < kGradTol);
  }
  SUBCASE("lstm_layer") {
    CHECK(op_gradient_error(
              [](auto& g, const auto& v) { return lstm_layer(g, v[0], v[1], v[2], v[3]); },
              {random_tensor({4, 5}, rng), random_tensor({12, 5}, rng, 0.5),
               random_tensor({12, 3}, rng, 0.5), random_tensor({12}, rng, 0.5)}) < kGradTol);
  }
  SUBCASE("softmax_cross_entropy") {
    CHECK(op_gradient_error(
              [](auto& g, const auto& v) { return softmax_cross_entropy(g, v[0], 1, 0.7); },
              {random_tensor({2}, rng)}) < kGradTol);
  }
}

TEST_CASE("lstm_cell follows the gate equations") {
  Rng rng(8);
  const auto x = random_tensor({3}, rng), h = random_tensor({2}, rng), c = random_tensor({2}, rng);
  const auto wx = random_tensor({8, 3}, rng), wh = random_tensor({8, 2}, rng);
  const auto b = random_tensor({8}, rng);
  Graph<double> g;
  const LstmState s = lstm_cell(g, g.constant(x), g.constant(h), g.constant(c), g.constant(wx),
                                g.constant(wh), g.constant(b));
  for (std::size_t j = 0; j < 2; ++j) {
    double a[4];
    for (std::size_t gate = 0; gate < 4; ++gate) {
      const std::size_t r = gate * 2 + j;
      a[gate] = b[r];
      for (std::size_t k = 0; k < 3; ++k) a[gate] += wx.at(r, k) * x[k];
      for (std::size_t k = 0; k < 2; ++k) a[gate] += wh.at(r, k) * h[k];
    }
    const double c_new = sigmoid(a[1]) * c[j] + sigmoid(a[0]) * std::tanh(a[2]);
    CHECK(g.data(s.c)[j] == doctest::Approx(c_new).epsilon(1e-12));
    CHECK(g.data(s.h)[j] == doctest::Approx(sigmoid(a[3]) * std::tanh(c_new)).epsilon(1e-12));
  }
}

TEST_CASE("lstm_layer equals chained cells") {
  Rng rng(9);
  const auto x = random_tensor({5, 4}, rng);
  const auto wx = random_tensor({12, 4}, rng), wh = random_tensor({12, 3}, rng);
  const auto b = random_tensor({12}, rng);
  Graph<double> g;
  const Var vx = g.constant(x), vwx = g.constant(wx), vwh = g.constant(wh), vb = g.constant(b);
  const Var fused = lstm_layer(g, vx, vwx, vwh, vb);
  LstmState s{g.constant(Tensor<double>(Shape{3})), g.constant(Tensor<double>(Shape{3}))};
  for (std::size_t t = 0; t < 5; ++t) {
    s = lstm_cell(g, row(g, vx, t), s.h, s.c, vwx, vwh, vb);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(g.data(fused)[t * 3 + j] == doctest::Approx(g.data(s.h)[j]).epsilon(1e-14));
    }
  }
}

TEST_CASE("max_pool routes ties to the lowest index") {
  Graph<double> g;
  const Var x = g.input(Tensor<double>{2, 2, 1, 5, 5, 5});
  const Var y = max_pool(g, x, 3, 3);
  g.backward(y);
  const std::vector<double> expected{1, 0, 0, 1, 0, 0};
  for (std::size_t i = 0; i < 6; ++i) CHECK(g.grad(x)[i] == expected[i]);
}

TEST_CASE("relu subgradient at zero is zero") {
  Graph<double> g;
  const Var x = g.input(Tensor<double>{-1, 0, 2});
  g.backward(relu(g, x));
  CHECK(g.grad(x)[0] == 0.0);
  CHECK(g.grad(x)[1] == 0.0);
  CHECK(g.grad(x)[2] == 1.0);
}

TEST_CASE("softmax_cross_entropy value and weight") {
  Graph<double> g;
  const Var l = softmax_cross_entropy(g, g.constant(Tensor<double>{0.0, std::log(3.0)}), 0, 2.0);
  CHECK(g.data(l)[0] == doctest::Approx(2.0 * std::log(4.0)));
  CHECK_THROWS_AS(softmax_cross_entropy(g, g.constant(Tensor<double>{0.0, 1.0}), 2, 1.0), Error);
}

TEST_CASE("backward visits nodes in reverse creation order") {
  Graph<double> g;
  const Var a = g.input(Tensor<double>{1, -2, 3});
  const Var b = relu(g, a);
  const Var c = reshape(g, b, {3});
  const Var d = weighted_sum(g, c, Tensor<double>{1, 1, 1});
  g.backward(d);
  const std::vector<std::size_t> expected{d.id, c.id, b.id};
  CHECK(g.backward_trace() == expected);
}

TEST_CASE("shared parameters accumulate gradients from every use") {
  Graph<double> g;
  const Var a = g.input(Tensor<double>{2.0});
  const Var twice = linear(g, a, reshape(g, a, {1, 1}), g.constant(Tensor<double>{0.0}));
  g.backward(twice);
  // d(a*a)/da = 2a
  CHECK(g.grad(a)[0] == doctest::Approx(4.0));
}

TEST_CASE("parameter gradients land in the external sink") {
  const Tensor<double> w{1.0, 2.0};
  std::vector<double> sink(2, 10.0);
  Graph<double> g;
  const Var p = g.parameter(TensorView<const double>{w.shape(), w.values()}, sink);
  g.backward(weighted_sum(g, p, Tensor<double>{3.0, 4.0}));
  CHECK(sink[0] == 13.0);
  CHECK(sink[1] == 14.0);
}

TEST_CASE("float graph agrees with double graph") {
  Rng rng(3);
  const auto x = random_tensor({2, 3, 40}, rng), h = random_tensor({3, 4, 9}, rng, 0.3);
  Graph<double> gd;
  const Var yd = filter_and_sum(gd, gd.constant(x), gd.constant(h));
  Tensor<float> xf(x.shape()), hf(h.shape());
  for (std::size_t i = 0; i < x.size(); ++i) xf[i] = static_cast<float>(x[i]);
  for (std::size_t i = 0; i < h.size(); ++i) hf[i] = static_cast<float>(h[i]);
  Graph<float> gf;
  const Var yf = filter_and_sum(gf, gf.constant(xf), gf.constant(hf));
  for (std::size_t i = 0; i < gd.size(yd); ++i) {
    CHECK(gf.data(yf)[i] == doctest::Approx(gd.data(yd)[i]).epsilon(1e-4));
  }
}

TEST_CASE("grad_check reports the worst coordinate") {
  const std::vector<double> theta{1.0, 2.0};
  const std::vector<double> analytic{2.0, 5.0};  // second one is wrong
  const std::vector<std::size_t> coords{0, 1};
  const auto r = grad_check(
      [](std::span<const double> t) { return t[0] * t[0] + t[1] * t[1]; }, theta, analytic,
      coords, 1e-5);
  CHECK(r.checked == 2);
  CHECK(r.worst_coordinate == 1);
  CHECK(r.max_relative_error == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(relative_error(0.0, 0.0) == 0.0);
}

}  // TEST_SUITE
