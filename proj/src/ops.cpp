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

#include "mcreplay/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

namespace mcreplay {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using VecMap = Eigen::Map<Vec<T>>;
template <typename T>
using ConstVecMap = Eigen::Map<const Vec<T>>;

void expect_rank(const Shape& s, std::size_t rank, const char* what) {
  check(s.size() == rank, ErrorCode::kDimension,
        std::string(what) + ": expected rank " + std::to_string(rank) +
            ", got " + shape_string(s));
}

// out[t] += sum_j krev[j] * sig[t + j] for t < width. Taps are consumed four
// at a time to cut traffic on out.
template <typename T>
void correlate_accumulate(T* __restrict out, std::size_t width,
                          const T* __restrict sig, const T* __restrict krev,
                          std::size_t taps) {
  std::size_t j = 0;
  for (; j + 4 <= taps; j += 4) {
    const T k0 = krev[j], k1 = krev[j + 1], k2 = krev[j + 2], k3 = krev[j + 3];
    const T* s = sig + j;
    for (std::size_t t = 0; t < width; ++t) {
      out[t] += k0 * s[t] + k1 * s[t + 1] + k2 * s[t + 2] + k3 * s[t + 3];
    }
  }
  for (; j < taps; ++j) {
    const T k = krev[j];
    const T* s = sig + j;
    for (std::size_t t = 0; t < width; ++t) out[t] += k * s[t];
  }
}

// Read-only [rows x cols] view with element (j, t) = x[j + t].
template <typename T>
Eigen::Map<const RowMat<T>, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>
toeplitz_view(const T* x, std::size_t rows, std::size_t cols) {
  return Eigen::Map<const RowMat<T>, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>(
      x, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols),
      Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(1, 1));
}

template <typename T>
void axpy(T* __restrict y, T a, const T* __restrict x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// Activates the packed gate pre-activations [i f g o] in place.
template <typename T>
void activate_gates(T* a, std::size_t hidden) {
  for (std::size_t k = 0; k < hidden; ++k) a[k] = sigmoid(a[k]);
  for (std::size_t k = hidden; k < 2 * hidden; ++k) a[k] = sigmoid(a[k]);
  for (std::size_t k = 2 * hidden; k < 3 * hidden; ++k) a[k] = std::tanh(a[k]);
  for (std::size_t k = 3 * hidden; k < 4 * hidden; ++k) a[k] = sigmoid(a[k]);
}

// Given activated gates, previous cell state and the upstream gradients of
// (h, c), writes gate pre-activation gradients and the gradient wrt c_prev.
template <typename T>
void lstm_cell_backward(const T* act, const T* c_prev, const T* tanh_c,
                        const T* dh, const T* dc_in, std::size_t hidden,
                        T* da, T* dc_prev) {
  const T* i = act;
  const T* f = act + hidden;
  const T* gg = act + 2 * hidden;
  const T* o = act + 3 * hidden;
  for (std::size_t k = 0; k < hidden; ++k) {
    const T dc = dc_in[k] + dh[k] * o[k] * (T(1) - tanh_c[k] * tanh_c[k]);
    da[k] = dc * gg[k] * i[k] * (T(1) - i[k]);
    da[hidden + k] = dc * c_prev[k] * f[k] * (T(1) - f[k]);
    da[2 * hidden + k] = dc * i[k] * (T(1) - gg[k] * gg[k]);
    da[3 * hidden + k] = dh[k] * tanh_c[k] * o[k] * (T(1) - o[k]);
    dc_prev[k] = dc * f[k];
  }
}

}  // namespace

template <typename T>
Var conv1d_valid(Graph<T>& g, Var signal, Var kernel) {
  expect_rank(g.shape(signal), 1, "conv1d_valid signal");
  expect_rank(g.shape(kernel), 1, "conv1d_valid kernel");
  const std::size_t len = g.size(signal);
  const std::size_t taps = g.size(kernel);
  check(taps >= 1 && len >= taps, ErrorCode::kDimension,
        "conv1d_valid: need T >= N >= 1, got T=" + std::to_string(len) +
            " N=" + std::to_string(taps));
  const std::size_t width = len - taps + 1;
  AlignedVector<T> krev(g.data(kernel).rbegin(), g.data(kernel).rend());
  Tensor<T> out(Shape{width});
  correlate_accumulate(out.data(), width, g.data(signal).data(), krev.data(),
                       taps);
  return g.record(
      "conv1d_valid", std::move(out), {signal, kernel},
      [signal, kernel, width, taps, krev = std::move(krev)](Graph<T>& gr, Var self) {
        auto dout = gr.grad(self);
        if (gr.requires_grad(signal)) {
          auto ds = gr.grad(signal);
          for (std::size_t t = 0; t < width; ++t) {
            if (dout[t] != T(0)) axpy(ds.data() + t, dout[t], krev.data(), taps);
          }
        }
        if (gr.requires_grad(kernel)) {
          auto dk = gr.grad(kernel);
          auto s = gr.data(signal);
          for (std::size_t n = 0; n < taps; ++n) {
            const T* sig = s.data() + (taps - 1 - n);
            T acc = 0;
            for (std::size_t t = 0; t < width; ++t) acc += dout[t] * sig[t];
            dk[n] += acc;
          }
        }
      });
}

template <typename T>
Var filter_and_sum(Graph<T>& g, Var frames, Var bank) {
  expect_rank(g.shape(frames), 3, "filter_and_sum frames");
  expect_rank(g.shape(bank), 3, "filter_and_sum bank");
  const std::size_t nf = g.shape(frames)[0];
  const std::size_t nc = g.shape(frames)[1];
  const std::size_t m = g.shape(frames)[2];
  const std::size_t np = g.shape(bank)[1];
  const std::size_t taps = g.shape(bank)[2];
  check(g.shape(bank)[0] == nc, ErrorCode::kDimension,
        "filter_and_sum: frame has " + std::to_string(nc) +
            " channels but bank has " + std::to_string(g.shape(bank)[0]));
  check(taps >= 1 && m >= taps, ErrorCode::kDimension,
        "filter_and_sum: filter length exceeds frame length");
  const std::size_t width = m - taps + 1;

  // Reversed taps turn the convolution into a forward correlation.
  AlignedVector<T> hrev(nc * np * taps);
  {
    auto h = g.data(bank);
    for (std::size_t cp = 0; cp < nc * np; ++cp) {
      std::reverse_copy(h.begin() + cp * taps, h.begin() + (cp + 1) * taps,
                        hrev.begin() + cp * taps);
    }
  }
  Tensor<T> out(Shape{nf, np, width});
  auto x = g.data(frames);
  for (std::size_t f = 0; f < nf; ++f) {
    MatMap<T> y(out.data() + f * np * width, np, width);
    for (std::size_t c = 0; c < nc; ++c) {
      // Row p of H holds the reversed taps of filter p; the Toeplitz view
      // has element (j, t) = x[t + j].
      Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>> h(
          hrev.data() + c * np * taps, np, taps, Eigen::OuterStride<>(taps));
      y.noalias() += h * toeplitz_view(x.data() + (f * nc + c) * m, taps, width);
    }
  }
  return g.record(
      "filter_and_sum", std::move(out), {frames, bank},
      [=, hrev = std::move(hrev)](Graph<T>& gr, Var self) {
        auto dy = gr.grad(self);
        auto xs = gr.data(frames);
        // Only nonzero upstream entries contribute; after a max-pool that is
        // one entry per (frame, filter).
        if (gr.requires_grad(bank)) {
          AlignedVector<T> dhrev(nc * np * taps, T(0));
          for (std::size_t f = 0; f < nf; ++f) {
            for (std::size_t p = 0; p < np; ++p) {
              const T* d = dy.data() + (f * np + p) * width;
              for (std::size_t t = 0; t < width; ++t) {
                if (d[t] == T(0)) continue;
                for (std::size_t c = 0; c < nc; ++c) {
                  axpy(dhrev.data() + (c * np + p) * taps, d[t],
                       xs.data() + (f * nc + c) * m + t, taps);
                }
              }
            }
          }
          auto dh = gr.grad(bank);
          for (std::size_t cp = 0; cp < nc * np; ++cp) {
            for (std::size_t n = 0; n < taps; ++n) {
              dh[cp * taps + n] += dhrev[cp * taps + taps - 1 - n];
            }
          }
        }
        if (gr.requires_grad(frames)) {
          auto dx = gr.grad(frames);
          for (std::size_t f = 0; f < nf; ++f) {
            for (std::size_t p = 0; p < np; ++p) {
              const T* d = dy.data() + (f * np + p) * width;
              for (std::size_t t = 0; t < width; ++t) {
                if (d[t] == T(0)) continue;
                for (std::size_t c = 0; c < nc; ++c) {
                  axpy(dx.data() + (f * nc + c) * m + t, d[t],
                       hrev.data() + (c * np + p) * taps, taps);
                }
              }
            }
          }
        }
      });
}

template <typename T>
Var max_pool(Graph<T>& g, Var x, std::size_t window, std::size_t stride) {
  const Shape& in_shape = g.shape(x);
  check(!in_shape.empty(), ErrorCode::kDimension, "max_pool on a scalar");
  const std::size_t len = in_shape.back();
  check(window >= 1 && stride >= 1, ErrorCode::kDimension,
        "max_pool: window and stride must be positive");
  check(window <= len, ErrorCode::kDimension,
        "max_pool: window " + std::to_string(window) + " exceeds length " +
            std::to_string(len));
  const std::size_t rows = g.size(x) / len;
  const std::size_t out_len = (len - window) / stride + 1;
  Shape out_shape = in_shape;
  out_shape.back() = out_len;
  Tensor<T> out(out_shape);
  std::vector<std::size_t> arg(rows * out_len);
  auto xs = g.data(x);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = xs.data() + r * len;
    for (std::size_t k = 0; k < out_len; ++k) {
      std::size_t best = k * stride;
      for (std::size_t i = best + 1; i < k * stride + window; ++i) {
        if (src[i] > src[best]) best = i;
      }
      out[r * out_len + k] = src[best];
      arg[r * out_len + k] = r * len + best;
    }
  }
  return g.record("max_pool", std::move(out), {x},
                  [x, arg = std::move(arg)](Graph<T>& gr, Var self) {
                    auto d = gr.grad(self);
                    auto dx = gr.grad(x);
                    for (std::size_t i = 0; i < arg.size(); ++i) dx[arg[i]] += d[i];
                  });
}

template <typename T>
Var global_max_pool(Graph<T>& g, Var x) {
  const Shape in_shape = g.shape(x);
  check(!in_shape.empty(), ErrorCode::kDimension, "global_max_pool on a scalar");
  Var pooled = max_pool(g, x, in_shape.back(), in_shape.back());
  Shape out_shape(in_shape.begin(), in_shape.end() - 1);
  if (out_shape.empty()) out_shape.push_back(1);
  return reshape(g, pooled, out_shape);
}

template <typename T>
Var relu(Graph<T>& g, Var x) {
  auto xs = g.data(x);
  Tensor<T> out(g.shape(x));
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i] > T(0) ? xs[i] : T(0);
  return g.record("relu", std::move(out), {x}, [x](Graph<T>& gr, Var self) {
    auto d = gr.grad(self);
    auto xs = gr.data(x);
    auto dx = gr.grad(x);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (xs[i] > T(0)) dx[i] += d[i];
    }
  });
}

template <typename T>
Var linear(Graph<T>& g, Var x, Var weight, Var bias) {
  const Shape& xs = g.shape(x);
  expect_rank(g.shape(weight), 2, "linear weight");
  expect_rank(g.shape(bias), 1, "linear bias");
  check(xs.size() == 1 || xs.size() == 2, ErrorCode::kDimension,
        "linear: input must be [in] or [rows x in]");
  const std::size_t rows = xs.size() == 1 ? 1 : xs[0];
  const std::size_t in = xs.back();
  const std::size_t out_dim = g.shape(weight)[0];
  check(g.shape(weight)[1] == in && g.size(bias) == out_dim,
        ErrorCode::kDimension,
        "linear: shape mismatch, x " + shape_string(xs) + ", W " +
            shape_string(g.shape(weight)) + ", b " + shape_string(g.shape(bias)));
  Tensor<T> out(xs.size() == 1 ? Shape{out_dim} : Shape{rows, out_dim});
  {
    ConstMatMap<T> X(g.data(x).data(), rows, in);
    ConstMatMap<T> W(g.data(weight).data(), out_dim, in);
    ConstVecMap<T> b(g.data(bias).data(), out_dim);
    MatMap<T> Y(out.data(), rows, out_dim);
    Y.noalias() = X * W.transpose();
    Y.rowwise() += b.transpose();
  }
  return g.record(
      "linear", std::move(out), {x, weight, bias},
      [=](Graph<T>& gr, Var self) {
        ConstMatMap<T> dY(gr.grad(self).data(), rows, out_dim);
        if (gr.requires_grad(x)) {
          ConstMatMap<T> W(gr.data(weight).data(), out_dim, in);
          MatMap<T> dX(gr.grad(x).data(), rows, in);
          dX.noalias() += dY * W;
        }
        if (gr.requires_grad(weight)) {
          ConstMatMap<T> X(gr.data(x).data(), rows, in);
          MatMap<T> dW(gr.grad(weight).data(), out_dim, in);
          dW.noalias() += dY.transpose() * X;
        }
        if (gr.requires_grad(bias)) {
          VecMap<T> db(gr.grad(bias).data(), out_dim);
          db += dY.colwise().sum().transpose();
        }
      });
}

template <typename T>
Var multi_map_conv(Graph<T>& g, Var x, Var kernels, Var bias) {
  expect_rank(g.shape(x), 2, "multi_map_conv input");
  expect_rank(g.shape(kernels), 2, "multi_map_conv kernels");
  expect_rank(g.shape(bias), 1, "multi_map_conv bias");
  const std::size_t rows = g.shape(x)[0];
  const std::size_t len = g.shape(x)[1];
  const std::size_t maps = g.shape(kernels)[0];
  const std::size_t taps = g.shape(kernels)[1];
  check(g.size(bias) == maps, ErrorCode::kDimension,
        "multi_map_conv: bias/kernel count mismatch");
  check(taps >= 1 && len >= taps, ErrorCode::kDimension,
        "multi_map_conv: kernel width " + std::to_string(taps) +
            " exceeds input length " + std::to_string(len));
  const std::size_t width = len - taps + 1;
  AlignedVector<T> krev(maps * taps);
  {
    auto k = g.data(kernels);
    for (std::size_t q = 0; q < maps; ++q) {
      std::reverse_copy(k.begin() + q * taps, k.begin() + (q + 1) * taps,
                        krev.begin() + q * taps);
    }
  }
  Tensor<T> out(Shape{rows, maps, width});
  auto xs = g.data(x);
  auto bs = g.data(bias);
  ConstMatMap<T> kr(krev.data(), maps, taps);
  for (std::size_t r = 0; r < rows; ++r) {
    MatMap<T> y(out.data() + r * maps * width, maps, width);
    y.colwise() = ConstVecMap<T>(bs.data(), maps);
    y.noalias() += kr * toeplitz_view(xs.data() + r * len, taps, width);
  }
  return g.record(
      "multi_map_conv", std::move(out), {x, kernels, bias},
      [=, krev = std::move(krev)](Graph<T>& gr, Var self) {
        auto dy = gr.grad(self);
        auto xs = gr.data(x);
        if (gr.requires_grad(x)) {
          auto dx = gr.grad(x);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t q = 0; q < maps; ++q) {
              const T* d = dy.data() + (r * maps + q) * width;
              for (std::size_t t = 0; t < width; ++t) {
                if (d[t] != T(0)) {
                  axpy(dx.data() + r * len + t, d[t], krev.data() + q * taps, taps);
                }
              }
            }
          }
        }
        if (gr.requires_grad(kernels)) {
          auto dk = gr.grad(kernels);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t q = 0; q < maps; ++q) {
              const T* d = dy.data() + (r * maps + q) * width;
              for (std::size_t n = 0; n < taps; ++n) {
                const T* sig = xs.data() + r * len + (taps - 1 - n);
                T acc = 0;
                for (std::size_t t = 0; t < width; ++t) acc += d[t] * sig[t];
                dk[q * taps + n] += acc;
              }
            }
          }
        }
        if (gr.requires_grad(bias)) {
          auto db = gr.grad(bias);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t q = 0; q < maps; ++q) {
              const T* d = dy.data() + (r * maps + q) * width;
              T acc = 0;
              for (std::size_t t = 0; t < width; ++t) acc += d[t];
              db[q] += acc;
            }
          }
        }
      });
}

template <typename T>
Var reshape(Graph<T>& g, Var x, Shape shape) {
  check(shape_size(shape) == g.size(x), ErrorCode::kDimension,
        "reshape: cannot view " + shape_string(g.shape(x)) + " as " +
            shape_string(shape));
  auto xs = g.data(x);
  Tensor<T> out(std::move(shape), AlignedVector<T>(xs.begin(), xs.end()));
  return g.record("reshape", std::move(out), {x}, [x](Graph<T>& gr, Var self) {
    auto d = gr.grad(self);
    auto dx = gr.grad(x);
    for (std::size_t i = 0; i < d.size(); ++i) dx[i] += d[i];
  });
}

template <typename T>
Var row(Graph<T>& g, Var x, std::size_t r) {
  expect_rank(g.shape(x), 2, "row");
  check(r < g.shape(x)[0], ErrorCode::kDimension, "row index out of range");
  const std::size_t d = g.shape(x)[1];
  return reshape(g, slice(g, x, r * d, d), Shape{d});
}

template <typename T>
Var slice(Graph<T>& g, Var x, std::size_t offset, std::size_t length) {
  check(offset + length <= g.size(x) && length > 0, ErrorCode::kDimension,
        "slice out of range");
  auto xs = g.data(x);
  Tensor<T> out(Shape{length},
                AlignedVector<T>(xs.begin() + offset, xs.begin() + offset + length));
  return g.record("slice", std::move(out), {x},
                  [x, offset](Graph<T>& gr, Var self) {
                    auto d = gr.grad(self);
                    auto dx = gr.grad(x);
                    for (std::size_t i = 0; i < d.size(); ++i) dx[offset + i] += d[i];
                  });
}

template <typename T>
Var weighted_sum(Graph<T>& g, Var x, const Tensor<T>& weights) {
  check(weights.size() == g.size(x), ErrorCode::kDimension,
        "weighted_sum: weight count mismatch");
  auto xs = g.data(x);
  T acc = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) acc += weights[i] * xs[i];
  return g.record("weighted_sum", Tensor<T>(Shape{1}, std::vector<T>{acc}), {x},
                  [x, w = weights](Graph<T>& gr, Var self) {
                    const T d = gr.grad(self)[0];
                    auto dx = gr.grad(x);
                    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += d * w[i];
                  });
}

template <typename T>
LstmState lstm_cell(Graph<T>& g, Var x, Var h_prev, Var c_prev, Var wx, Var wh,
                    Var b) {
  expect_rank(g.shape(x), 1, "lstm_cell x");
  const std::size_t in = g.size(x);
  const std::size_t hidden = g.size(h_prev);
  check(g.size(c_prev) == hidden && g.shape(wx) == Shape{4 * hidden, in} &&
            g.shape(wh) == Shape{4 * hidden, hidden} && g.size(b) == 4 * hidden,
        ErrorCode::kDimension,
        "lstm_cell: inconsistent shapes (x " + shape_string(g.shape(x)) +
            ", h " + shape_string(g.shape(h_prev)) + ", c " +
            shape_string(g.shape(c_prev)) + ", Wx " + shape_string(g.shape(wx)) +
            ", Wh " + shape_string(g.shape(wh)) + ")");
  AlignedVector<T> act(4 * hidden);
  {
    VecMap<T> a(act.data(), 4 * hidden);
    a = ConstVecMap<T>(g.data(b).data(), 4 * hidden);
    a.noalias() += ConstMatMap<T>(g.data(wx).data(), 4 * hidden, in) *
                   ConstVecMap<T>(g.data(x).data(), in);
    a.noalias() += ConstMatMap<T>(g.data(wh).data(), 4 * hidden, hidden) *
                   ConstVecMap<T>(g.data(h_prev).data(), hidden);
  }
  activate_gates(act.data(), hidden);
  AlignedVector<T> tanh_c(hidden);
  Tensor<T> out(Shape{2 * hidden});
  auto cp = g.data(c_prev);
  for (std::size_t k = 0; k < hidden; ++k) {
    const T c = act[hidden + k] * cp[k] + act[k] * act[2 * hidden + k];
    tanh_c[k] = std::tanh(c);
    out[hidden + k] = c;
    out[k] = act[3 * hidden + k] * tanh_c[k];
  }
  Var packed = g.record(
      "lstm_cell", std::move(out), {x, h_prev, c_prev, wx, wh, b},
      [=, act = std::move(act), tanh_c = std::move(tanh_c)](Graph<T>& gr, Var self) {
        auto d = gr.grad(self);
        AlignedVector<T> da(4 * hidden), dcp(hidden);
        lstm_cell_backward(act.data(), gr.data(c_prev).data(), tanh_c.data(),
                           d.data(), d.data() + hidden, hidden, da.data(),
                           dcp.data());
        ConstVecMap<T> dA(da.data(), 4 * hidden);
        if (gr.requires_grad(c_prev)) {
          auto dc = gr.grad(c_prev);
          for (std::size_t k = 0; k < hidden; ++k) dc[k] += dcp[k];
        }
        if (gr.requires_grad(x)) {
          VecMap<T>(gr.grad(x).data(), in).noalias() +=
              ConstMatMap<T>(gr.data(wx).data(), 4 * hidden, in).transpose() * dA;
        }
        if (gr.requires_grad(h_prev)) {
          VecMap<T>(gr.grad(h_prev).data(), hidden).noalias() +=
              ConstMatMap<T>(gr.data(wh).data(), 4 * hidden, hidden).transpose() * dA;
        }
        if (gr.requires_grad(wx)) {
          MatMap<T>(gr.grad(wx).data(), 4 * hidden, in).noalias() +=
              dA * ConstVecMap<T>(gr.data(x).data(), in).transpose();
        }
        if (gr.requires_grad(wh)) {
          MatMap<T>(gr.grad(wh).data(), 4 * hidden, hidden).noalias() +=
              dA * ConstVecMap<T>(gr.data(h_prev).data(), hidden).transpose();
        }
        if (gr.requires_grad(b)) {
          VecMap<T>(gr.grad(b).data(), 4 * hidden) += dA;
        }
      });
  return LstmState{slice(g, packed, 0, hidden), slice(g, packed, hidden, hidden)};
}

template <typename T>
Var lstm_layer(Graph<T>& g, Var x, Var wx, Var wh, Var b) {
  expect_rank(g.shape(x), 2, "lstm_layer x");
  const std::size_t steps = g.shape(x)[0];
  const std::size_t in = g.shape(x)[1];
  const std::size_t hidden = g.size(b) / 4;
  check(steps >= 1 && g.size(b) == 4 * hidden && hidden >= 1 &&
            g.shape(wx) == Shape{4 * hidden, in} &&
            g.shape(wh) == Shape{4 * hidden, hidden},
        ErrorCode::kDimension,
        "lstm_layer: inconsistent shapes (x " + shape_string(g.shape(x)) +
            ", Wx " + shape_string(g.shape(wx)) + ", Wh " +
            shape_string(g.shape(wh)) + ", b " + shape_string(g.shape(b)) + ")");
  const std::size_t gates = 4 * hidden;
  AlignedVector<T> act(steps * gates);
  AlignedVector<T> cells(steps * hidden);
  AlignedVector<T> tanh_c(steps * hidden);
  Tensor<T> out(Shape{steps, hidden});
  {
    MatMap<T> A(act.data(), steps, gates);
    ConstMatMap<T> X(g.data(x).data(), steps, in);
    ConstMatMap<T> Wx(g.data(wx).data(), gates, in);
    ConstMatMap<T> Wh(g.data(wh).data(), gates, hidden);
    A.noalias() = X * Wx.transpose();
    A.rowwise() += ConstVecMap<T>(g.data(b).data(), gates).transpose();
    for (std::size_t t = 0; t < steps; ++t) {
      T* a = act.data() + t * gates;
      if (t > 0) {
        VecMap<T>(a, gates).noalias() +=
            Wh * ConstVecMap<T>(out.data() + (t - 1) * hidden, hidden);
      }
      activate_gates(a, hidden);
      for (std::size_t k = 0; k < hidden; ++k) {
        const T prev = t > 0 ? cells[(t - 1) * hidden + k] : T(0);
        const T c = a[hidden + k] * prev + a[k] * a[2 * hidden + k];
        cells[t * hidden + k] = c;
        tanh_c[t * hidden + k] = std::tanh(c);
        out[t * hidden + k] = a[3 * hidden + k] * tanh_c[t * hidden + k];
      }
    }
  }
  return g.record(
      "lstm_layer", std::move(out), {x, wx, wh, b},
      [=, act = std::move(act), cells = std::move(cells),
       tanh_c = std::move(tanh_c)](Graph<T>& gr, Var self) {
        auto dout = gr.grad(self);
        auto hs = gr.data(self);
        ConstMatMap<T> Wh(gr.data(wh).data(), gates, hidden);
        AlignedVector<T> dA(steps * gates);
        AlignedVector<T> dh(hidden), dc(hidden, T(0)), dc_prev(hidden);
        AlignedVector<T> dh_next(hidden, T(0));
        const AlignedVector<T> zeros(hidden, T(0));
        for (std::size_t t = steps; t-- > 0;) {
          for (std::size_t k = 0; k < hidden; ++k) {
            dh[k] = dout[t * hidden + k] + dh_next[k];
          }
          const T* c_prev = t > 0 ? cells.data() + (t - 1) * hidden : zeros.data();
          T* da = dA.data() + t * gates;
          lstm_cell_backward(act.data() + t * gates, c_prev,
                             tanh_c.data() + t * hidden, dh.data(), dc.data(),
                             hidden, da, dc_prev.data());
          dc.swap(dc_prev);
          if (t > 0) {
            VecMap<T>(dh_next.data(), hidden).noalias() =
                Wh.transpose() * ConstVecMap<T>(da, gates);
          }
        }
        ConstMatMap<T> dAm(dA.data(), steps, gates);
        if (gr.requires_grad(wh) && steps > 1) {
          ConstMatMap<T> Hprev(hs.data(), steps - 1, hidden);
          MatMap<T>(gr.grad(wh).data(), gates, hidden).noalias() +=
              dAm.bottomRows(steps - 1).transpose() * Hprev;
        }
        if (gr.requires_grad(wx)) {
          MatMap<T>(gr.grad(wx).data(), gates, in).noalias() +=
              dAm.transpose() * ConstMatMap<T>(gr.data(x).data(), steps, in);
        }
        if (gr.requires_grad(b)) {
          VecMap<T>(gr.grad(b).data(), gates) += dAm.colwise().sum().transpose();
        }
        if (gr.requires_grad(x)) {
          MatMap<T>(gr.grad(x).data(), steps, in).noalias() +=
              dAm * ConstMatMap<T>(gr.data(wx).data(), gates, in);
        }
      });
}

template <typename T>
Var softmax_cross_entropy(Graph<T>& g, Var logits, std::size_t target, T weight) {
  expect_rank(g.shape(logits), 1, "softmax_cross_entropy logits");
  auto z = g.data(logits);
  const std::size_t k = z.size();
  check(target < k, ErrorCode::kInput, "softmax_cross_entropy: target out of range");
  check(std::isfinite(weight), ErrorCode::kNumeric, "non-finite class weight");
  for (const T v : z) {
    check(std::isfinite(v), ErrorCode::kNumeric, "non-finite logits");
  }
  const T m = *std::max_element(z.begin(), z.end());
  T denom = 0;
  for (const T v : z) denom += std::exp(v - m);
  const T log_denom = std::log(denom);
  AlignedVector<T> prob(k);
  for (std::size_t i = 0; i < k; ++i) prob[i] = std::exp(z[i] - m) / denom;
  const T loss = -weight * (z[target] - m - log_denom);
  return g.record("softmax_cross_entropy", Tensor<T>(Shape{1}, std::vector<T>{loss}),
                  {logits},
                  [=, prob = std::move(prob)](Graph<T>& gr, Var self) {
                    const T d = gr.grad(self)[0];
                    auto dz = gr.grad(logits);
                    for (std::size_t i = 0; i < k; ++i) {
                      const T onehot = i == target ? T(1) : T(0);
                      dz[i] += d * weight * (prob[i] - onehot);
                    }
                  });
}

#define MCREPLAY_INSTANTIATE_OPS(T)                                              \
  template Var conv1d_valid<T>(Graph<T>&, Var, Var);                             \
  template Var filter_and_sum<T>(Graph<T>&, Var, Var);                           \
  template Var max_pool<T>(Graph<T>&, Var, std::size_t, std::size_t);            \
  template Var global_max_pool<T>(Graph<T>&, Var);                               \
  template Var relu<T>(Graph<T>&, Var);                                          \
  template Var linear<T>(Graph<T>&, Var, Var, Var);                              \
  template Var multi_map_conv<T>(Graph<T>&, Var, Var, Var);                      \
  template Var reshape<T>(Graph<T>&, Var, Shape);                                \
  template Var row<T>(Graph<T>&, Var, std::size_t);                              \
  template Var slice<T>(Graph<T>&, Var, std::size_t, std::size_t);               \
  template Var weighted_sum<T>(Graph<T>&, Var, const Tensor<T>&);                \
  template LstmState lstm_cell<T>(Graph<T>&, Var, Var, Var, Var, Var, Var);      \
  template Var lstm_layer<T>(Graph<T>&, Var, Var, Var, Var);                     \
  template Var softmax_cross_entropy<T>(Graph<T>&, Var, std::size_t, T);

MCREPLAY_INSTANTIATE_OPS(float)
MCREPLAY_INSTANTIATE_OPS(double)
MCREPLAY_INSTANTIATE_OPS(long double)

#undef MCREPLAY_INSTANTIATE_OPS

}  // namespace mcreplay
