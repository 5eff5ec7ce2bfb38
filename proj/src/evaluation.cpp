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

#include "mcreplay/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mcreplay/error.hpp"

namespace mcreplay {
namespace {

using Json = nlohmann::ordered_json;

struct Counts {
  double threshold;
  std::int64_t replayed_below;  // replayed with score < threshold
  std::int64_t genuine_at_or_above;
};

std::vector<Counts> sweep(std::span<const double> scores, std::span<const Label> labels,
                          std::int64_t& n_genuine, std::int64_t& n_replayed) {
  check(scores.size() == labels.size(), ErrorCode::kDimension,
        "score and label counts differ");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  n_genuine = n_replayed = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    check(std::isfinite(scores[i]), ErrorCode::kNumeric, "non-finite score");
    (labels[i] == Label::kGenuine ? n_genuine : n_replayed) += 1;
  }
  check(n_genuine > 0 && n_replayed > 0, ErrorCode::kInput,
        "EER needs at least one genuine and one replayed score");
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<Counts> points;
  std::int64_t replayed_below = 0, genuine_below = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double value = scores[order[i]];
    points.push_back({value, replayed_below, n_genuine - genuine_below});
    for (; i < order.size() && scores[order[i]] == value; ++i) {
      (labels[order[i]] == Label::kGenuine ? genuine_below : replayed_below) += 1;
    }
  }
  points.push_back({std::numeric_limits<double>::infinity(), n_replayed, 0});
  return points;
}

}  // namespace

std::vector<OperatingPoint> operating_points(std::span<const double> scores,
                                             std::span<const Label> labels) {
  std::int64_t ng = 0, nr = 0;
  std::vector<OperatingPoint> out;
  for (const Counts& c : sweep(scores, labels, ng, nr)) {
    out.push_back({c.threshold, static_cast<double>(c.replayed_below) / nr,
                   static_cast<double>(c.genuine_at_or_above) / ng});
  }
  return out;
}

double eer(std::span<const double> scores, std::span<const Label> labels) {
  std::int64_t ng = 0, nr = 0;
  const std::vector<Counts> points = sweep(scores, labels, ng, nr);
  // Scaled difference (FAR - FRR) * ng * nr, exact in integers.
  const auto diff = [&](const Counts& c) {
    return c.replayed_below * ng - c.genuine_at_or_above * nr;
  };
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::int64_t d2 = diff(points[i]);
    if (d2 < 0) continue;
    if (d2 == 0 || i == 0) return static_cast<double>(points[i].replayed_below) / nr;
    const std::int64_t d1 = diff(points[i - 1]);
    const std::int64_t r1 = points[i - 1].replayed_below;
    const std::int64_t r2 = points[i].replayed_below;
    return static_cast<double>(r1 * d2 - r2 * d1) / static_cast<double>(nr * (d2 - d1));
  }
  return 1.0;  // unreachable: the last point has FAR = 1, FRR = 0
}

double eer(const ScoreSet& set) {
  std::vector<double> scores;
  std::vector<Label> labels;
  for (const ScoreEntry& e : set.entries) {
    scores.push_back(e.score);
    labels.push_back(e.label);
  }
  return eer(scores, labels);
}

void write_scores(const std::filesystem::path& path, const ScoreSet& set) {
  std::ofstream out(path, std::ios::binary);
  check(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  for (const ScoreEntry& e : set.entries) {
    Json j;
    j["clip"] = e.clip;
    j["score"] = e.score;
    j["label"] = label_name(e.label);
    out << j.dump() << '\n';
  }
  check(static_cast<bool>(out), ErrorCode::kIo, "write failed for " + path.string());
}

ScoreSet read_scores(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  check(static_cast<bool>(in), ErrorCode::kIo, "cannot read " + path.string());
  ScoreSet set;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      set.entries.push_back({j.at("clip").get<std::string>(), j.at("score").get<double>(),
                             parse_label(j.at("label").get<std::string>())});
    } catch (const Json::exception& e) {
      fail(ErrorCode::kParse, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return set;
}

double relative_improvement(double base_eer, double candidate_eer) {
  check(base_eer > 0, ErrorCode::kInput, "relative improvement needs a non-zero baseline EER");
  return (base_eer - candidate_eer) / base_eer;
}

std::pair<double, double> mean_and_std(std::span<const double> values) {
  check(!values.empty(), ErrorCode::kInput, "no values to average");
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

const ReportRow& ExperimentReport::row(const std::string& name) const {
  for (const ReportRow& r : rows) {
    if (r.name == name) return r;
  }
  fail(ErrorCode::kInput, "report has no row named '" + name + "'");
}

void ExperimentReport::finalize() {
  for (ReportRow& r : rows) {
    std::tie(r.mean_eer, r.std_eer) = mean_and_std(r.eers);
  }
  if (baseline.empty()) return;
  const double base = row(baseline).mean_eer;
  for (ReportRow& r : rows) {
    if (base > 0) {
      r.improvement = relative_improvement(base, r.mean_eer);
    } else {
      r.improvement.reset();
    }
  }
}

namespace {

std::string order_string(const std::vector<int>& order) {
  std::string s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(order[i]);
  }
  return s;
}

}  // namespace

std::string format_report_table(const ExperimentReport& report) {
  std::ostringstream out;
  out << "experiment: " << report.experiment << '\n';
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %-13s %-15s %4s %8s %9s %9s %8s %10s\n", "row", "mode",
                "channels", "P", "segment", "EER(%)", "std(%)", "rel(%)", "params");
  out << line;
  for (const ReportRow& r : report.rows) {
    char rel[32] = "-";
    if (r.improvement) std::snprintf(rel, sizeof rel, "%+.1f", 100.0 * *r.improvement);
    char seg[32];
    std::snprintf(seg, sizeof seg, "%.2g/%c", r.segment_seconds,
                  r.segment_position.empty() ? '?' : r.segment_position[0]);
    std::snprintf(line, sizeof line, "%-24s %-13s %-15s %4zu %8s %9.2f %9.2f %8s %10zu\n",
                  r.name.c_str(), r.mode.c_str(), order_string(r.channel_order).c_str(),
                  r.filters, seg, 100.0 * r.mean_eer, 100.0 * r.std_eer, rel, r.parameters);
    out << line;
  }
  if (!report.baseline.empty()) {
    out << "rel: relative EER improvement over '" << report.baseline
        << "', positive is better\n";
  }
  return out.str();
}

std::string format_report_records(const ExperimentReport& report) {
  std::string out;
  Json header;
  header["record"] = "experiment";
  header["experiment"] = report.experiment;
  header["baseline"] = report.baseline;
  header["version"] = report.version;
  header["config_hash"] = report.config_hash;
  out += header.dump() + '\n';
  for (const ReportRow& r : report.rows) {
    Json j;
    j["record"] = "row";
    j["name"] = r.name;
    j["mode"] = r.mode;
    j["channel_order"] = r.channel_order;
    j["filters"] = r.filters;
    j["segment_seconds"] = r.segment_seconds;
    j["segment_position"] = r.segment_position;
    j["parameters"] = r.parameters;
    j["seeds"] = r.seeds;
    j["eers"] = r.eers;
    j["mean_eer"] = r.mean_eer;
    j["std_eer"] = r.std_eer;
    j["relative_improvement"] = r.improvement ? Json(*r.improvement) : Json(nullptr);
    out += j.dump() + '\n';
  }
  return out;
}

void write_report(const std::filesystem::path& dir, const ExperimentReport& report) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  check(!ec, ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [name, text] :
       {std::pair{"report.txt", format_report_table(report)},
        std::pair{"report.jsonl", format_report_records(report)}}) {
    std::ofstream out(dir / name, std::ios::binary);
    check(static_cast<bool>(out << text), ErrorCode::kIo,
          "cannot write " + (dir / name).string());
  }
}

}  // namespace mcreplay
