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

#include "mcreplay/graph.hpp"

#include <algorithm>

namespace mcreplay {

template <typename T>
Var Graph<T>::constant(Tensor<T> value) {
  check(value.all_finite(), ErrorCode::kNumeric, "non-finite constant");
  Node node;
  node.op = "constant";
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Graph<T>::input(Tensor<T> value) {
  check(value.all_finite(), ErrorCode::kNumeric, "non-finite input");
  Node node;
  node.op = "input";
  node.requires_grad = true;
  node.grad.assign(value.size(), T(0));
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Graph<T>::parameter(TensorView<const T> value, std::span<T> grad_sink) {
  check(value.values.size() == shape_size(value.shape), ErrorCode::kDimension,
        "parameter view does not match its shape");
  check(grad_sink.empty() || grad_sink.size() == value.values.size(),
        ErrorCode::kDimension, "gradient sink size mismatch");
  for (const T v : value.values) {
    check(std::isfinite(v), ErrorCode::kNumeric, "non-finite parameter");
  }
  Node node;
  node.op = "parameter";
  node.bound = value;
  node.is_bound = true;
  node.sink = grad_sink;
  node.requires_grad = !grad_sink.empty();
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Graph<T>::record(const char* op, Tensor<T> value,
                     std::initializer_list<Var> parents, BackwardFn backward) {
  if (!value.all_finite()) {
    fail(ErrorCode::kNumeric, std::string("non-finite value produced by ") + op);
  }
  Node node;
  node.op = op;
  node.requires_grad = std::any_of(parents.begin(), parents.end(),
                                   [&](Var p) { return nodes_[p.id].requires_grad; });
  if (node.requires_grad) {
    node.grad.assign(value.size(), T(0));
    node.backward = std::move(backward);
  }
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

template <typename T>
void Graph<T>::backward(Var root) {
  check(root.valid() && root.id < nodes_.size(), ErrorCode::kInput,
        "backward from an invalid node");
  trace_.clear();
  Node& top = nodes_[root.id];
  if (!top.requires_grad) return;
  for (T& g : top.grad_span()) g += T(1);
  for (std::size_t id = root.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || !node.backward) continue;
    trace_.push_back(id);
    node.backward(*this, Var{id});
  }
}

template class Graph<float>;
template class Graph<double>;
template class Graph<long double>;

}  // namespace mcreplay
