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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mcreplay/tensor.hpp"

namespace mcreplay {

enum class Label { kGenuine = 0, kReplayed = 1 };

const char* label_name(Label label);
Label parse_label(std::string_view text);

inline constexpr std::size_t kMaxChannels = 8;
inline constexpr double kFrameDuration = 0.020;

// Multichannel waveform, channel-major, samples in [-1, 1).
struct AudioClip {
  std::vector<std::vector<double>> channels;
  int sample_rate = 0;
  int bit_depth = 16;
  Label label = Label::kGenuine;
  std::string device_id;
  std::string speaker_id;
  std::string source_path;

  std::size_t num_channels() const { return channels.size(); }
  std::size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
};

// Throws kInput on broken invariants (ragged channels, channel count, range).
// Returns a warning string for non-preset sample rates, empty otherwise.
std::string validate_clip(const AudioClip& clip);

// RIFF/WAVE integer PCM, 16 or 32 bit, 1-8 channels. Samples are scaled by
// 1 / 2^(bits - 1). IEEE-float and compressed codecs are rejected.
AudioClip load_wav(const std::filesystem::path& path);
AudioClip parse_wav(std::string_view bytes, const std::string& source = "<memory>");

// Quantizes with round-to-nearest and clamps to the integer range.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);
std::string encode_wav(const AudioClip& clip);

enum class SegmentPosition { kBeginning, kMiddle };
const char* segment_position_name(SegmentPosition position);
SegmentPosition parse_segment_position(std::string_view text);

// Window of round(length_s * fs) samples starting at 0 (beginning) or at
// (T - L) / 2 (middle). Short clips are zero-padded at the end.
AudioClip select_segment(const AudioClip& clip, double length_s,
                         SegmentPosition position);

// round(0.020 * sample_rate)
std::size_t frame_length_for(int sample_rate);

template <typename T>
struct FrameBatch {
  Tensor<T> frames;  // F x C x M
  std::size_t frame_length = 0;
  double frame_duration = kFrameDuration;
  Label label = Label::kGenuine;
  std::string speaker_id;
  std::string device_id;
  std::string source_path;

  std::size_t num_frames() const { return frames.empty() ? 0 : frames.dim(0); }
};

// Non-overlapping 20 ms frames; the tail shorter than one frame is dropped.
template <typename T>
FrameBatch<T> frame(const AudioClip& segment);

// count copies of channel 1.
AudioClip replicate_channels(const AudioClip& clip, std::size_t count);

// 1-based channel indices; order is preserved and repeats are allowed.
AudioClip select_channels(const AudioClip& clip, const std::vector<int>& indices);

}  // namespace mcreplay
