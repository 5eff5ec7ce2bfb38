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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mcreplay/graph.hpp"
#include "mcreplay/grad_check.hpp"
#include "mcreplay/ops.hpp"
#include "mcreplay/rng.hpp"
#include "mcreplay/tensor.hpp"

namespace testing {

using mcreplay::Graph;
using mcreplay::Shape;
using mcreplay::Tensor;
using mcreplay::Var;

inline Tensor<double> random_tensor(Shape shape, mcreplay::Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (double& v : t.storage()) v = scale * rng.normal();
  return t;
}

// Builds a scalar from the inputs through the op under test. The scalar is a
// fixed random projection of the op output so every output element matters.
using Builder = std::function<Var(Graph<double>&, const std::vector<Var>&)>;

// Max relative error between backward() and central differences over every
// input coordinate.
inline double op_gradient_error(const Builder& build, const std::vector<Tensor<double>>& inputs,
                                std::uint64_t seed = 99, double eps = 1e-6) {
  Tensor<double> projection;
  auto evaluate = [&](const std::vector<Tensor<double>>& xs, std::vector<double>* grads) {
    Graph<double> g;
    std::vector<Var> vars;
    for (const auto& x : xs) vars.push_back(g.input(x));
    const Var out = build(g, vars);
    if (projection.empty()) {
      mcreplay::Rng rng(seed);
      projection = random_tensor(g.shape(out), rng);
    }
    const Var loss = mcreplay::weighted_sum(g, out, projection);
    if (grads != nullptr) {
      g.backward(loss);
      for (const Var v : vars) {
        auto d = g.grad(v);
        grads->insert(grads->end(), d.begin(), d.end());
      }
    }
    return g.data(loss)[0];
  };

  std::vector<double> theta, analytic;
  for (const auto& x : inputs) theta.insert(theta.end(), x.values().begin(), x.values().end());
  evaluate(inputs, &analytic);

  auto f = [&](std::span<const double> flat) {
    std::vector<Tensor<double>> xs = inputs;
    std::size_t k = 0;
    for (auto& x : xs) {
      for (double& v : x.storage()) v = flat[k++];
    }
    return evaluate(xs, nullptr);
  };
  std::vector<std::size_t> coords(theta.size());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  return mcreplay::grad_check(f, theta, analytic, coords, eps).max_relative_error;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    mcreplay::Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
    path_ = std::filesystem::temp_directory_path() /
            ("mcreplay_" + tag + "_" + std::to_string(rng.next_u64() % 1000000007));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
