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

#include <string>

#include "mcreplay/synth.hpp"
#include "mcreplay/trainer.hpp"

namespace testing {

// Short 16 kHz clips from the d2 array, alternating labels.
inline mcreplay::ClipSet tiny_clips(std::size_t n, std::size_t first_speaker, std::uint64_t seed) {
  mcreplay::CorpusConfig corpus;
  corpus.sample_rate = 16000;
  corpus.min_duration_s = 0.3;
  corpus.max_duration_s = 0.3;
  mcreplay::ClipSet set;
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = i % 2 ? mcreplay::Label::kReplayed : mcreplay::Label::kGenuine;
    set.clips.push_back(mcreplay::generate_clip(i, label, first_speaker + i / 4, corpus, seed));
    set.ids.push_back("clip" + std::to_string(first_speaker) + "_" + std::to_string(i));
  }
  return set;
}

// Small enough to train a few epochs in well under a second.
inline mcreplay::TrainConfig tiny_train_config() {
  mcreplay::TrainConfig c;
  c.filters = 8;
  c.freq_maps = 4;
  c.embed_dim = 8;
  c.lstm_hidden = 8;
  c.lstm_layers = 1;
  c.segment_seconds = 0.2;
  c.batch_size = 4;
  c.lr_init = 1e-3;
  c.warmup_epochs = 1;
  c.decay_interval = 2;
  c.max_epochs = 3;
  c.patience = 3;
  c.seeds = {1, 2};
  return c;
}

}  // namespace testing
