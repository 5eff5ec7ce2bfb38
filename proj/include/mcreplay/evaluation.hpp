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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcreplay/audio.hpp"

namespace mcreplay {

struct ScoreEntry {
  std::string clip;
  double score = 0.0;  // replay probability
  Label label = Label::kGenuine;
};

struct ScoreSet {
  std::vector<ScoreEntry> entries;
  std::string model_id;
  std::string split;
  std::vector<int> channel_order;
  std::size_t filters = 0;
  double input_seconds = 0.0;
};

// Equal error rate. Thresholds sweep every distinct score plus +infinity;
// FAR(t) is the fraction of replayed clips scoring below t and FRR(t) the
// fraction of genuine clips scoring at or above t. The result is the first
// crossing of FAR and FRR, linearly interpolated between the two bracketing
// operating points when no threshold hits it exactly.
double eer(std::span<const double> scores, std::span<const Label> labels);
double eer(const ScoreSet& set);

struct OperatingPoint {
  double threshold;  // +inf for the last point
  double far;
  double frr;
};

// The ROC operating points visited by eer(), in threshold order.
std::vector<OperatingPoint> operating_points(std::span<const double> scores,
                                             std::span<const Label> labels);

// One JSON object per line: {"clip": ..., "score": ..., "label": ...}.
void write_scores(const std::filesystem::path& path, const ScoreSet& set);
ScoreSet read_scores(const std::filesystem::path& path);

// (base - candidate) / base; positive means the candidate is better.
double relative_improvement(double base_eer, double candidate_eer);

struct ReportRow {
  std::string name;
  std::string mode;
  std::vector<int> channel_order;
  std::size_t filters = 0;
  double segment_seconds = 0.0;
  std::string segment_position;
  std::size_t parameters = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> eers;  // one per seed, same order
  double mean_eer = 0.0;
  double std_eer = 0.0;      // sample standard deviation, 0 for one seed
  std::optional<double> improvement;  // relative to the report baseline
};

struct ExperimentReport {
  std::string experiment;
  std::string baseline;  // row name the improvements refer to, may be empty
  std::string version;
  std::string config_hash;
  std::vector<ReportRow> rows;

  const ReportRow& row(const std::string& name) const;
  // Fills mean, std and improvement for every row.
  void finalize();
};

// Mean and sample standard deviation.
std::pair<double, double> mean_and_std(std::span<const double> values);

std::string format_report_table(const ExperimentReport& report);
// A header record followed by one record per row, JSON Lines.
std::string format_report_records(const ExperimentReport& report);
void write_report(const std::filesystem::path& dir, const ExperimentReport& report);

}  // namespace mcreplay
