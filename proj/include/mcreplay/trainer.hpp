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
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mcreplay/evaluation.hpp"
#include "mcreplay/manifest.hpp"
#include "mcreplay/model.hpp"

namespace mcreplay {

// Key names match the config file keys one to one.
struct TrainConfig {
  std::size_t batch_size = 64;
  double lr_init = 1e-5;
  std::size_t warmup_epochs = 20;
  double warmup_multiplier = 10.0;
  std::size_t decay_interval = 20;
  double decay_factor = 0.5;
  std::size_t max_epochs = 100;
  double weight_decay = 1e-3;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string early_stop_metric = "dev_eer";
  std::size_t patience = 10;
  double grad_clip = 5.0;  // global gradient norm; 0 disables
  double dev_fraction = 0.1;  // of core clips when the manifest has no dev split

  // Model and input.
  std::size_t filters = 64;
  std::size_t freq_maps = 256;
  std::size_t embed_dim = 256;
  std::size_t lstm_hidden = 832;
  std::size_t lstm_layers = 3;
  std::vector<int> channels;  // empty: the device's ablation order, else 1..C
  double segment_seconds = 1.0;
  SegmentPosition segment_position = SegmentPosition::kBeginning;
  Precision precision = Precision::kFloat32;

  // Execution.
  std::size_t threads = 1;
  bool determinism = true;

  // Recipes.
  ModelMode mode = ModelMode::kMultichannel;  // train
  std::vector<int> ablation_order;             // ablate-channels; empty: preset order
  std::vector<std::size_t> sweep_filters{8, 16, 32, 64, 128};
  std::vector<double> segment_lengths{0.5, 1.0, 1.5};
  std::vector<SegmentPosition> segment_positions{SegmentPosition::kBeginning,
                                                 SegmentPosition::kMiddle};

  void validate() const;
};

// key = value lines; '#' starts a comment. Unknown keys are an error.
TrainConfig parse_train_config(std::string_view text);
TrainConfig load_train_config(const std::filesystem::path& path);
void apply_override(TrainConfig& config, std::string_view key, std::string_view value);
// "key=value" form.
void apply_override(TrainConfig& config, std::string_view assignment);
// Value of one key in the canonical text form.
std::string config_value(const TrainConfig& config, std::string_view key);
// Canonical text with every key, in declaration order.
std::string format_train_config(const TrainConfig& config);
// FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const TrainConfig& config);

struct ClassWeights {
  double genuine = 0.5;
  double replayed = 0.5;
  double operator[](Label label) const { return label == Label::kGenuine ? genuine : replayed; }
};

// Normalized reciprocal class frequencies.
ClassWeights class_weights(std::size_t n_genuine, std::size_t n_replayed);

// Linear warm-up from lr_init to warmup_multiplier * lr_init over
// warmup_epochs, then multiplied by decay_factor every decay_interval epochs.
double lr_at(std::size_t epoch, const TrainConfig& config);

template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::uint64_t step = 0;
};

// One ADAM update with decoupled weight decay. Throws kNumeric, leaving
// params and state untouched, when a gradient is not finite.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, double lr,
               double weight_decay);

// Scales grads so their global L2 norm is at most max_norm; returns the
// norm before clipping.
template <typename T>
double clip_gradient(std::span<T> grads, double max_norm);

// Prepared model inputs for one split.
template <typename T>
struct Dataset {
  std::vector<std::string> ids;
  std::vector<Label> labels;
  std::vector<Tensor<T>> frames;

  std::size_t size() const { return labels.size(); }
  std::size_t count(Label label) const;
};

struct SplitPlan {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> dev;
  std::vector<ManifestEntry> eval;
};

// Uses the train and dev splits when present, otherwise partitions the core
// split with a seeded shuffle. Throws kInput when train or dev ends up empty.
SplitPlan plan_splits(const Manifest& manifest, double dev_fraction, std::uint64_t seed);

// Loaded clips of one manifest split, kept as audio so several model
// configurations can share one load.
struct ClipSet {
  std::vector<AudioClip> clips;
  std::vector<std::string> ids;
};

ClipSet load_clips(const Manifest& manifest, const std::vector<ManifestEntry>& entries,
                   std::size_t threads = 1);

template <typename T>
Dataset<T> prepare_dataset(const ClipSet& clips, const ModelConfig& config);

// Model config implied by the training config and the corpus; the channel
// order defaults to the device preset's ablation order when known.
ModelConfig model_config_for(const TrainConfig& train, ModelMode mode, const ClipSet& clips);

template <typename T>
std::vector<double> score_dataset(const ModelParams<T>& model, const Dataset<T>& data,
                                  std::size_t threads = 1);

template <typename T>
double dataset_eer(const ModelParams<T>& model, const Dataset<T>& data, std::size_t threads = 1);

struct EpochRecord {
  std::size_t epoch = 0;
  std::uint64_t step = 0;  // optimizer steps completed
  double loss = 0.0;       // mean weighted loss over the epoch
  double lr = 0.0;
  double dev_eer = 0.0;
  bool improved = false;
};

std::string format_epoch_record(const EpochRecord& record);

template <typename T>
struct TrainResult {
  ModelParams<T> best;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_dev_eer = 1.0;
};

// Mini-batch training with dev-EER early stopping. Each record is also
// written to log_sink, one JSON object per line, when given.
template <typename T>
TrainResult<T> train(const Dataset<T>& train_set, const Dataset<T>& dev_set,
                     const ModelConfig& model_config, const TrainConfig& config,
                     std::uint64_t seed, std::ostream* log_sink = nullptr);

struct SeedRun {
  std::uint64_t seed = 0;
  double eval_eer = 0.0;
  double best_dev_eer = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs = 0;
  std::size_t parameters = 0;
  std::uint64_t architecture = 0;
};

struct MultiSeedResult {
  std::vector<SeedRun> runs;
  double mean_eer = 0.0;
  double std_eer = 0.0;
};

// Called after each seed with the trained model and its eval scores, so
// callers can persist checkpoints, logs and score files.
template <typename T>
using SeedCallback = std::function<void(const SeedRun&, const TrainResult<T>&, const ScoreSet&)>;

template <typename T>
MultiSeedResult multi_seed(const Dataset<T>& train_set, const Dataset<T>& dev_set,
                           const Dataset<T>& eval_set, const ModelConfig& model_config,
                           const TrainConfig& config, const SeedCallback<T>& on_seed = {});

}  // namespace mcreplay
