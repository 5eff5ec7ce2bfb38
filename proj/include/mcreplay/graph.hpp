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

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mcreplay/tensor.hpp"

namespace mcreplay {

// Handle to a node of a Graph. Ids are assigned in creation order, which is
// also a topological order because nodes can only reference earlier nodes.
struct Var {
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = kInvalid;
  bool valid() const { return id != kInvalid; }
};

// Tape for reverse-mode differentiation. One graph per forward pass; nodes
// are never removed.
template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph<T>&, Var self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf without gradient (data).
  Var constant(Tensor<T> value);

  // Leaf whose gradient is kept in the graph and readable via grad().
  Var input(Tensor<T> value);

  // Leaf bound to externally owned storage. If grad_sink is non-empty the
  // gradient is accumulated into it during backward().
  Var parameter(TensorView<const T> value, std::span<T> grad_sink = {});

  // Records an op result. The node requires a gradient when any parent does;
  // backward is only invoked for such nodes.
  Var record(const char* op, Tensor<T> value, std::initializer_list<Var> parents,
             BackwardFn backward);

  const Shape& shape(Var v) const { return nodes_[v.id].shape(); }
  std::span<const T> data(Var v) const { return nodes_[v.id].data(); }
  std::size_t size(Var v) const { return nodes_[v.id].data().size(); }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  const char* op_name(Var v) const { return nodes_[v.id].op; }

  // Gradient buffer of a node; empty when the node does not require one.
  std::span<T> grad(Var v) { return nodes_[v.id].grad_span(); }
  std::span<const T> grad(Var v) const { return nodes_[v.id].grad_span(); }

  // Seeds d(root)/d(root) = 1 for every element of root and propagates to all
  // requires-grad ancestors in exact reverse creation order.
  void backward(Var root);

  std::size_t node_count() const { return nodes_.size(); }

  // Node ids whose backward ran during the last backward(), in call order.
  const std::vector<std::size_t>& backward_trace() const { return trace_; }

 private:
  struct Node {
    const char* op = "";
    Tensor<T> owned;
    TensorView<const T> bound;
    bool is_bound = false;
    bool requires_grad = false;
    AlignedVector<T> grad;
    std::span<T> sink;
    BackwardFn backward;

    const Shape& shape() const { return is_bound ? bound.shape : owned.shape(); }
    std::span<const T> data() const {
      return is_bound ? bound.values : owned.values();
    }
    std::span<T> grad_span() { return is_bound ? sink : std::span<T>(grad); }
    std::span<const T> grad_span() const {
      return is_bound ? std::span<const T>(sink) : std::span<const T>(grad);
    }
  };

  std::vector<Node> nodes_;
  std::vector<std::size_t> trace_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace mcreplay
