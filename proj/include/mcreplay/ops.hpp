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

#include "mcreplay/graph.hpp"

namespace mcreplay {

// Differentiable ops over Graph<T>. All convolutions are "valid" (no
// padding) and use true-convolution orientation:
//
//   out[t] = sum_{n=0}^{N-1} kernel[n] * signal[t + N - 1 - n],  t < T - N + 1
//
// so out[t] is aligned with the most recent input sample t + N - 1.

template <typename T>
Var conv1d_valid(Graph<T>& g, Var signal, Var kernel);

// Multichannel filter-and-sum over a stack of frames.
//   frames [F x C x M], bank [C x P x N]  ->  [F x P x (M - N + 1)]
//   out[f,p,:] = sum_c conv1d_valid(frames[f,c,:], bank[c,p,:])
template <typename T>
Var filter_and_sum(Graph<T>& g, Var frames, Var bank);

// Max pooling along the last axis; ties route the gradient to the lowest
// index. Output last dim is (L - window) / stride + 1.
template <typename T>
Var max_pool(Graph<T>& g, Var x, std::size_t window, std::size_t stride);

// Pools the whole last axis and drops it: [..., L] -> [...].
template <typename T>
Var global_max_pool(Graph<T>& g, Var x);

// Subgradient at 0 is 0.
template <typename T>
Var relu(Graph<T>& g, Var x);

// x [in] or [R x in], weight [out x in], bias [out].
template <typename T>
Var linear(Graph<T>& g, Var x, Var weight, Var bias);

// Single-input-map convolution across the last axis of each row.
//   x [R x L], kernels [K x W], bias [K]  ->  [R x K x (L - W + 1)]
template <typename T>
Var multi_map_conv(Graph<T>& g, Var x, Var kernels, Var bias);

template <typename T>
Var reshape(Graph<T>& g, Var x, Shape shape);

// Row r of a [R x D] tensor as a [D] tensor.
template <typename T>
Var row(Graph<T>& g, Var x, std::size_t r);

// Contiguous slice [offset, offset + length) of a flattened tensor.
template <typename T>
Var slice(Graph<T>& g, Var x, std::size_t offset, std::size_t length);

// sum_i weights[i] * x[i]; weights are constants.
template <typename T>
Var weighted_sum(Graph<T>& g, Var x, const Tensor<T>& weights);

struct LstmState {
  Var h;
  Var c;
};

// Standard LSTM cell without peepholes. Gate blocks in weight rows are
// ordered input, forget, candidate, output:
//   a = Wx x + Wh h + b;  i = s(a_i), f = s(a_f), g = tanh(a_g), o = s(a_o)
//   c' = f * c + i * g;   h' = o * tanh(c')
// wx [4H x in], wh [4H x H], b [4H].
template <typename T>
LstmState lstm_cell(Graph<T>& g, Var x, Var h_prev, Var c_prev, Var wx, Var wh,
                    Var b);

// Runs lstm_cell over the rows of x [F x in] from zero state and returns all
// hidden states [F x H]. Same math as chaining lstm_cell, fused for speed.
template <typename T>
Var lstm_layer(Graph<T>& g, Var x, Var wx, Var wh, Var b);

// loss = -weight * log softmax(logits)[target]; returns a [1] tensor.
template <typename T>
Var softmax_cross_entropy(Graph<T>& g, Var logits, std::size_t target,
                          T weight);

}  // namespace mcreplay
