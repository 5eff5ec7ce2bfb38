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

#include "mcreplay/frontend.hpp"

#include <cmath>
#include <iomanip>

#include "mcreplay/ops.hpp"
#include "mcreplay/rng.hpp"

namespace mcreplay {

std::size_t filter_length_for(std::size_t frame_length) {
  check(frame_length >= 2, ErrorCode::kConfig, "frame length too short");
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(frame_length) * 630.0 / 882.0));
}

template <typename T>
FilterBank<T> init_bank(std::size_t channels, std::size_t filters, std::size_t taps,
                        std::uint64_t seed) {
  check(channels >= 1 && filters >= 1 && taps >= 1, ErrorCode::kConfig,
        "filter bank dimensions must be positive");
  const double a = std::sqrt(6.0 / static_cast<double>(channels * taps + filters));
  FilterBank<T> bank{Tensor<T>(Shape{channels, filters, taps})};
  Rng rng(seed);
  for (T& v : bank.h.values()) v = static_cast<T>(rng.uniform(-a, a));
  return bank;
}

template <typename T>
Var frontend(Graph<T>& g, Var frames, Var bank) {
  return relu(g, global_max_pool(g, filter_and_sum(g, frames, bank)));
}

template <typename T>
FrontEndOutput<T> forward_frame(const Tensor<T>& x, const FilterBank<T>& bank) {
  check(x.rank() == 2, ErrorCode::kDimension, "frame must be [C x M]");
  check(x.dim(0) == bank.channels(), ErrorCode::kDimension,
        "frame has " + std::to_string(x.dim(0)) + " channels, bank expects " +
            std::to_string(bank.channels()));
  Graph<T> g;
  Tensor<T> framed(Shape{1, x.dim(0), x.dim(1)}, x.storage());
  Var frames = g.constant(std::move(framed));
  Var h = g.parameter(TensorView<const T>{bank.h.shape(), bank.h.values()});
  Var y = filter_and_sum(g, frames, h);
  Var z = relu(g, global_max_pool(g, y));
  const std::size_t np = bank.filters();
  const std::size_t width = g.shape(y)[2];
  auto yd = g.data(y);
  auto zd = g.data(z);
  return FrontEndOutput<T>{Tensor<T>(Shape{np, width}, std::vector<T>(yd.begin(), yd.end())),
                           Tensor<T>(Shape{np}, std::vector<T>(zd.begin(), zd.end()))};
}

template <typename T>
FilterBank<T> single_channel_equivalence_bank(const FilterBank<T>& g,
                                              std::size_t channels) {
  check(g.channels() == 1, ErrorCode::kDimension,
        "equivalence bank expects a single-channel bank");
  check(channels >= 1, ErrorCode::kConfig, "channel count must be positive");
  if (channels == 1) return g;
  const std::size_t per = g.h.size();
  FilterBank<T> out{Tensor<T>(Shape{channels, g.filters(), g.taps()})};
  const T inv = T(1) / static_cast<T>(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < per; ++i) out.h[c * per + i] = g.h[i] * inv;
  }
  return out;
}

template <typename T>
void write_time_frequency_map(std::ostream& out, const Tensor<T>& y) {
  check(y.rank() == 2, ErrorCode::kDimension, "time-frequency map must be [P x W]");
  out << "# " << y.dim(0) << ' ' << y.dim(1) << '\n';
  out << std::setprecision(9);
  for (std::size_t p = 0; p < y.dim(0); ++p) {
    for (std::size_t t = 0; t < y.dim(1); ++t) {
      if (t) out << ' ';
      out << y.at(p, t);
    }
    out << '\n';
  }
}

#define MCREPLAY_INSTANTIATE_FRONTEND(T)                                           \
  template FilterBank<T> init_bank<T>(std::size_t, std::size_t, std::size_t,       \
                                      std::uint64_t);                              \
  template FrontEndOutput<T> forward_frame<T>(const Tensor<T>&, const FilterBank<T>&); \
  template FilterBank<T> single_channel_equivalence_bank<T>(const FilterBank<T>&,  \
                                                            std::size_t);          \
  template Var frontend<T>(Graph<T>&, Var, Var);                                   \
  template void write_time_frequency_map<T>(std::ostream&, const Tensor<T>&);

MCREPLAY_INSTANTIATE_FRONTEND(float)
MCREPLAY_INSTANTIATE_FRONTEND(double)
MCREPLAY_INSTANTIATE_FRONTEND(long double)

#undef MCREPLAY_INSTANTIATE_FRONTEND

}  // namespace mcreplay
