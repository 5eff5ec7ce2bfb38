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
#include <cstdint>
#include <ostream>

#include "mcreplay/graph.hpp"
#include "mcreplay/tensor.hpp"

namespace mcreplay {

// Learnable filter-and-sum front end. Each (channel, filter) pair owns its
// own FIR taps; steering delays are not modelled separately and end up in
// the taps.
template <typename T>
struct FilterBank {
  Tensor<T> h;  // C x P x N

  std::size_t channels() const { return h.dim(0); }
  std::size_t filters() const { return h.dim(1); }
  std::size_t taps() const { return h.dim(2); }
};

template <typename T>
struct FrontEndOutput {
  Tensor<T> y;  // P x (M - N + 1), before pooling
  Tensor<T> z;  // P, relu(max over time of y)
};

// Filter length scaled with the frame length, N = round(M * 630 / 882);
// 882 -> 630 and 320 -> 229.
std::size_t filter_length_for(std::size_t frame_length);

// Uniform in [-a, a] with a = sqrt(6 / (C * N + P)).
template <typename T>
FilterBank<T> init_bank(std::size_t channels, std::size_t filters, std::size_t taps,
                        std::uint64_t seed);

// x is one frame [C x M].
template <typename T>
FrontEndOutput<T> forward_frame(const Tensor<T>& x, const FilterBank<T>& bank);

// Bank whose every channel carries g / C. On inputs with identical channels
// it reproduces the single-channel front end with g.
template <typename T>
FilterBank<T> single_channel_equivalence_bank(const FilterBank<T>& g,
                                              std::size_t channels);

// Graph form over all frames: frames [F x C x M], bank [C x P x N] -> z [F x P].
template <typename T>
Var frontend(Graph<T>& g, Var frames, Var bank);

// Writes y [P x W] as text, one filter per line, for inspection as a
// time-frequency map. First line: "# P W".
template <typename T>
void write_time_frequency_map(std::ostream& out, const Tensor<T>& y);

}  // namespace mcreplay
