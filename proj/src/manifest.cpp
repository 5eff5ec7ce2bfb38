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

#include "mcreplay/manifest.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mcreplay {

const char* split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kEval: return "eval";
    case Split::kCore: return "core";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "dev") return Split::kDev;
  if (text == "eval") return Split::kEval;
  if (text == "core") return Split::kCore;
  fail(ErrorCode::kParse, "unknown split '" + std::string(text) + "'");
}

std::filesystem::path Manifest::resolve(const ManifestEntry& entry) const {
  const std::filesystem::path p(entry.path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<ManifestEntry> Manifest::in_split(Split split) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.split == split) out.push_back(e);
  }
  return out;
}

Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  Manifest manifest;
  manifest.base_dir = base_dir;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.path = j.at("path").get<std::string>();
      e.label = parse_label(j.at("label").get<std::string>());
      e.device = j.value("device", "");
      e.speaker = j.value("speaker", "");
      e.environment = j.value("environment", "");
      e.split = parse_split(j.at("split").get<std::string>());
      manifest.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorCode::kParse, "manifest line " + std::to_string(lineno) + ": " + ex.what());
    } catch (const Error& ex) {
      fail(ErrorCode::kParse, "manifest line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return manifest;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  check(static_cast<bool>(in), ErrorCode::kIo, "cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

std::string format_manifest_line(const ManifestEntry& e) {
  nlohmann::ordered_json j;
  j["path"] = e.path;
  j["label"] = label_name(e.label);
  j["device"] = e.device;
  j["speaker"] = e.speaker;
  j["environment"] = e.environment;
  j["split"] = split_name(e.split);
  return j.dump();
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path);
  check(static_cast<bool>(out), ErrorCode::kIo, "cannot write manifest " + path.string());
  for (const auto& e : manifest.entries) out << format_manifest_line(e) << '\n';
  check(static_cast<bool>(out), ErrorCode::kIo, "write failed for " + path.string());
}

AudioClip load_entry(const Manifest& manifest, const ManifestEntry& entry) {
  AudioClip clip = load_wav(manifest.resolve(entry));
  clip.label = entry.label;
  clip.device_id = entry.device;
  clip.speaker_id = entry.speaker;
  clip.source_path = entry.path;
  return clip;
}

}  // namespace mcreplay
