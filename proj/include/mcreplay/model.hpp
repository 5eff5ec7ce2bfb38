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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mcreplay/audio.hpp"
#include "mcreplay/frontend.hpp"
#include "mcreplay/grad_check.hpp"
#include "mcreplay/graph.hpp"

namespace mcreplay {

// single: first listed channel only. dummy: first listed channel replicated
// to the multichannel width. multichannel: every listed channel in order.
enum class ModelMode { kSingle = 0, kDummyMultichannel = 1, kMultichannel = 2 };

const char* model_mode_name(ModelMode mode);
ModelMode parse_model_mode(std::string_view text);

struct ModelConfig {
  ModelMode mode = ModelMode::kMultichannel;
  std::vector<int> channel_order;  // 1-based source channels
  int sample_rate = 44100;
  std::size_t filters = 64;        // P, per channel
  std::size_t freq_maps = 256;
  std::size_t freq_kernel = 8;
  std::size_t freq_pool = 3;
  std::size_t embed_dim = 256;
  std::size_t lstm_hidden = 832;
  std::size_t lstm_layers = 3;
  double segment_seconds = 1.0;
  SegmentPosition segment_position = SegmentPosition::kBeginning;

  // Number of channels fed to the front end.
  std::size_t input_channels() const;
  std::size_t frame_length() const { return frame_length_for(sample_rate); }
  std::size_t filter_length() const { return filter_length_for(frame_length()); }
  std::size_t frontend_width() const { return frame_length() - filter_length() + 1; }
  std::size_t freq_conv_width() const { return filters - freq_kernel + 1; }
  // A pool wider than what is left covers all of it.
  std::size_t freq_pooled_width() const;
  std::size_t embed_input() const { return freq_maps * freq_pooled_width(); }

  // Throws kConfig when the layer chain does not fit together.
  void validate() const;
};

// Model config from a full channel order and a mode. Single mode keeps only
// the first channel; dummy mode keeps the width of the order.
ModelConfig make_model_config(ModelMode mode, std::vector<int> channel_order,
                              int sample_rate, std::size_t filters);

struct ParamSlot {
  std::string name;
  Shape shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// All trainable tensors in one contiguous buffer; the buffer is the flat
// view used by the optimizer and the gradient checker.
template <typename T>
class ParamSet {
 public:
  std::size_t add(std::string name, Shape shape);

  const std::vector<ParamSlot>& slots() const { return slots_; }
  std::size_t size() const { return values_.size(); }
  std::size_t find(std::string_view name) const;

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  std::span<T> slice(std::size_t slot) {
    return std::span<T>(values_).subspan(slots_[slot].offset, slots_[slot].size);
  }
  std::span<const T> slice(std::size_t slot) const {
    return std::span<const T>(values_).subspan(slots_[slot].offset, slots_[slot].size);
  }
  TensorView<const T> view(std::size_t slot) const {
    return TensorView<const T>{slots_[slot].shape, slice(slot)};
  }

 private:
  std::vector<ParamSlot> slots_;
  AlignedVector<T> values_;
};

template <typename T>
struct ModelParams {
  ModelConfig config;
  ParamSet<T> params;

  std::size_t bank = 0;
  std::size_t freq_kernels = 0;
  std::size_t freq_bias = 0;
  std::size_t fc_weight = 0;
  std::size_t fc_bias = 0;
  std::vector<std::array<std::size_t, 3>> lstm;  // wx, wh, b per layer
  std::size_t head_weight = 0;
  std::size_t head_bias = 0;

  std::size_t parameter_count() const { return params.size(); }
  FilterBank<T> filter_bank() const;
  void set_filter_bank(const FilterBank<T>& bank);

  std::vector<T> flatten() const {
    return std::vector<T>(params.values().begin(), params.values().end());
  }
  void unflatten(std::span<const T> flat);
};

// Zero-initialized parameters with the layout implied by config.
template <typename T>
ModelParams<T> build_model(const ModelConfig& config);

// Front end as init_bank; other weights uniform with a = sqrt(6 / (fan_in +
// fan_out)); LSTM forget-gate bias 1, other biases 0.
template <typename T>
void init_model(ModelParams<T>& model, std::uint64_t seed);

template <typename T>
ModelParams<T> make_model(const ModelConfig& config, std::uint64_t seed) {
  ModelParams<T> m = build_model<T>(config);
  init_model(m, seed);
  return m;
}

// Hash of every parameter shape plus the layer hyperparameters. Mode and
// channel order are not part of it.
std::uint64_t architecture_hash(const std::vector<ParamSlot>& slots);

template <typename T>
std::uint64_t architecture_hash(const ModelParams<T>& model) {
  return architecture_hash(model.params.slots());
}

template <typename T>
struct BoundModel {
  Var bank, freq_kernels, freq_bias, fc_weight, fc_bias, head_weight, head_bias;
  std::vector<std::array<Var, 3>> lstm;
};

// Binds parameters into g. When grads is non-empty (same layout as the
// parameters) gradients accumulate into it on backward.
template <typename T>
BoundModel<T> bind_model(Graph<T>& g, const ModelParams<T>& model,
                         std::span<T> grads = {});

// z [F x P] -> o [F x embed_dim]: freq conv, pool, flatten, FC, ReLU.
template <typename T>
Var frame_embed(Graph<T>& g, Var z, const BoundModel<T>& m,
                const ModelConfig& config);

// o [F x embed_dim] -> logits [2] from the last frame of the last LSTM layer.
template <typename T>
Var sequence_classify(Graph<T>& g, Var o_seq, const BoundModel<T>& m);

// frames [F x C x M] -> logits [2].
template <typename T>
Var model_logits(Graph<T>& g, Var frames, const BoundModel<T>& m,
                 const ModelConfig& config);

// Convenience forms without a caller-owned graph.
template <typename T>
std::vector<T> frame_embed(const Tensor<T>& z, const ModelParams<T>& model);
template <typename T>
std::array<T, 2> sequence_classify(const Tensor<T>& o_seq, const ModelParams<T>& model);
template <typename T>
std::array<T, 2> logits(const Tensor<T>& frames, const ModelParams<T>& model);

// Weighted cross-entropy of one clip; gradients are added into grads.
template <typename T>
T loss_and_gradient(const Tensor<T>& frames, Label label, T class_weight,
                    const ModelParams<T>& model, std::span<T> grads);

// Forward-only form of the weighted cross-entropy.
template <typename T>
T loss_value(const Tensor<T>& frames, Label label, T class_weight, const ModelParams<T>& model);

// Small configuration that exercises every layer: 4 channels at 16 kHz,
// P = 8, three LSTM layers, five frames of input.
ModelConfig grad_check_config();

struct ModelGradCheck {
  GradCheckReport report;
  std::size_t parameters = 0;
  double loss = 0.0;
};

// Finite-difference check of the full model loss in double precision on a
// seeded random input and initialization. Coordinates are drawn without
// replacement, at least one from every parameter tensor.
ModelGradCheck model_grad_check(const ModelConfig& config, std::size_t coordinates,
                                std::uint64_t seed, double eps = 1e-5);

// softmax(logits)[replayed]
template <typename T>
double replay_probability(const std::array<T, 2>& logits);

// Channel selection, replication and segment selection for the model mode.
AudioClip prepare_input(const AudioClip& clip, const ModelConfig& config);

template <typename T>
Tensor<T> prepare_frames(const AudioClip& clip, const ModelConfig& config) {
  return frame<T>(prepare_input(clip, config)).frames;
}

// Probability that the clip is a replay.
template <typename T>
double score(const AudioClip& clip, const ModelParams<T>& model);

enum class Precision { kFloat32 = 0, kFloat64 = 1 };
const char* precision_name(Precision p);
Precision parse_precision(std::string_view text);

using AnyModel = std::variant<ModelParams<float>, ModelParams<double>>;

// Binary container, little-endian:
//   "MCRPARAM" u32 version u32 mode u32 C u32 P u32 N u32 precision
//   u32 sample_rate u32 freq_maps u32 freq_kernel u32 freq_pool u32 embed_dim
//   u32 lstm_hidden u32 lstm_layers f64 segment_seconds u32 segment_position
//   u32 order_len i32 order[order_len]
//   u32 tensor_count, per tensor: u32 name_len, name, u32 rank,
//   u64 dims[rank], f64 values[prod(dims)]
template <typename T>
std::string serialize_model(const ModelParams<T>& model);
template <typename T>
void save_model(const std::filesystem::path& path, const ModelParams<T>& model);
AnyModel deserialize_model(std::string_view bytes);
AnyModel load_model(const std::filesystem::path& path);

}  // namespace mcreplay
