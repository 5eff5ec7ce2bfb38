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
#include <map>
#include <string>
#include <vector>

#include "mcreplay/evaluation.hpp"
#include "mcreplay/trainer.hpp"

namespace mcreplay {

struct ExperimentInputs {
  ClipSet train;
  ClipSet dev;
  ClipSet eval;
  TrainConfig config;
  std::filesystem::path output_dir;  // empty: no per-run artifacts
};

// Loads the train, dev and eval clips named by the manifest. The dev split
// comes from the manifest or from a partition seeded by the first seed.
ExperimentInputs load_experiment_inputs(const Manifest& manifest, const TrainConfig& config,
                                        std::filesystem::path output_dir = {});

// Trains and evaluates model configurations over every configured seed.
// Configurations already run are served from memory, so recipes that share
// cells (ablation prefix 1 and NN-Single, for example) train them once.
class ExperimentRunner {
 public:
  explicit ExperimentRunner(ExperimentInputs inputs);

  const TrainConfig& config() const { return inputs_.config; }
  // Model configuration for a mode with the corpus defaults.
  ModelConfig model_config(ModelMode mode) const;
  // The full channel order used for the multichannel model.
  std::vector<int> default_order() const;
  std::size_t available_channels() const;

  const MultiSeedResult& run(const ModelConfig& model_config);
  ReportRow row(const std::string& name, const ModelConfig& model_config);

  std::size_t trained_runs() const { return trained_; }

 private:
  template <typename T>
  MultiSeedResult run_typed(const ModelConfig& model_config, const std::string& key);

  ExperimentInputs inputs_;
  std::map<std::string, MultiSeedResult> cache_;
  std::size_t trained_ = 0;
};

// Stable text key for a model configuration, used for caching and run
// directory names.
std::string run_key(const ModelConfig& config);

// NN-Single, NN-Dummy-Multichannel and NN-Multichannel on the same seeds.
// Throws kDimension if the parameter counts break the expected relation.
ExperimentReport dummy_comparison(ExperimentRunner& runner);

// One model per prefix of order; the 1-channel prefix is NN-Single.
ExperimentReport channel_ablation(ExperimentRunner& runner, const std::vector<int>& order);

// Multichannel models for each P, rows sorted by P. P < 8 is rejected.
ExperimentReport filter_sweep(ExperimentRunner& runner, std::vector<std::size_t> filters);

std::vector<std::size_t> default_filter_sweep();

// Multichannel models for each (length, position) cell on shared seeds.
ExperimentReport segment_ablation(ExperimentRunner& runner, const std::vector<double>& lengths,
                                  const std::vector<SegmentPosition>& positions);

}  // namespace mcreplay
