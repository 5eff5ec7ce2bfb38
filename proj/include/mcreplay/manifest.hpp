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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mcreplay/audio.hpp"

namespace mcreplay {

// "core" entries have not yet been divided into train and dev; the trainer
// partitions them 90/10 with a seeded shuffle.
enum class Split { kTrain, kDev, kEval, kCore };

const char* split_name(Split split);
Split parse_split(std::string_view text);

// One line of the dataset manifest (JSON Lines). Field names:
//   path, label, device, speaker, environment, split
struct ManifestEntry {
  std::string path;
  Label label = Label::kGenuine;
  std::string device;
  std::string speaker;
  std::string environment;
  Split split = Split::kTrain;
};

struct Manifest {
  std::filesystem::path base_dir;  // relative paths resolve against this
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const ManifestEntry& entry) const;
  std::vector<ManifestEntry> in_split(Split split) const;
};

Manifest read_manifest(const std::filesystem::path& path);
Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
std::string format_manifest_line(const ManifestEntry& entry);

// Loads the entry's audio and copies its metadata onto the clip.
AudioClip load_entry(const Manifest& manifest, const ManifestEntry& entry);

}  // namespace mcreplay
