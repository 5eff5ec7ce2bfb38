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

#include "mcreplay/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "mcreplay/logging.hpp"

namespace mcreplay {
namespace {

std::string order_text(const std::vector<int>& order) {
  std::string s;
  for (const int c : order) s += (s.empty() ? "" : "-") + std::to_string(c);
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  check(static_cast<bool>(out << text), ErrorCode::kIo, "cannot write " + path.string());
}

}  // namespace

ExperimentInputs load_experiment_inputs(const Manifest& manifest, const TrainConfig& config,
                                        std::filesystem::path output_dir) {
  config.validate();
  const SplitPlan plan = plan_splits(manifest, config.dev_fraction, config.seeds.front());
  check(!plan.eval.empty(), ErrorCode::kInput, "manifest has no evaluation clips");
  ExperimentInputs in;
  in.train = load_clips(manifest, plan.train, config.threads);
  in.dev = load_clips(manifest, plan.dev, config.threads);
  in.eval = load_clips(manifest, plan.eval, config.threads);
  in.config = config;
  in.output_dir = std::move(output_dir);
  return in;
}

ExperimentRunner::ExperimentRunner(ExperimentInputs inputs) : inputs_(std::move(inputs)) {
  inputs_.config.validate();
  check(!inputs_.train.clips.empty() && !inputs_.dev.clips.empty() &&
            !inputs_.eval.clips.empty(),
        ErrorCode::kInput, "experiments need train, dev and eval clips");
}

ModelConfig ExperimentRunner::model_config(ModelMode mode) const {
  return model_config_for(inputs_.config, mode, inputs_.train);
}

std::vector<int> ExperimentRunner::default_order() const {
  return model_config(ModelMode::kMultichannel).channel_order;
}

std::size_t ExperimentRunner::available_channels() const {
  return inputs_.train.clips.front().num_channels();
}

std::string run_key(const ModelConfig& c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s_ch%s_P%zu_K%zu_E%zu_H%zux%zu_seg%.3g%s",
                model_mode_name(c.mode), order_text(c.channel_order).c_str(), c.filters,
                c.freq_maps, c.embed_dim, c.lstm_hidden, c.lstm_layers, c.segment_seconds,
                segment_position_name(c.segment_position));
  return buf;
}

template <typename T>
MultiSeedResult ExperimentRunner::run_typed(const ModelConfig& mc, const std::string& key) {
  const Dataset<T> train_set = prepare_dataset<T>(inputs_.train, mc);
  const Dataset<T> dev_set = prepare_dataset<T>(inputs_.dev, mc);
  const Dataset<T> eval_set = prepare_dataset<T>(inputs_.eval, mc);
  SeedCallback<T> on_seed;
  if (!inputs_.output_dir.empty()) {
    on_seed = [&](const SeedRun& run, const TrainResult<T>& tr, const ScoreSet& scores) {
      const auto dir = inputs_.output_dir / "runs" / key / ("seed" + std::to_string(run.seed));
      std::filesystem::create_directories(dir);
      std::string log;
      for (const EpochRecord& r : tr.log) log += format_epoch_record(r) + "\n";
      write_text(dir / "train_log.jsonl", log);
      save_model(dir / "model.bin", tr.best);
      write_scores(dir / "scores.jsonl", scores);
    };
  }
  return multi_seed<T>(train_set, dev_set, eval_set, mc, inputs_.config, on_seed);
}

const MultiSeedResult& ExperimentRunner::run(const ModelConfig& mc) {
  mc.validate();
  const std::string key = run_key(mc);
  if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
  log_info("training " + key);
  MultiSeedResult result = inputs_.config.precision == Precision::kFloat64
                               ? run_typed<double>(mc, key)
                               : run_typed<float>(mc, key);
  ++trained_;
  char msg[128];
  std::snprintf(msg, sizeof msg, "%s: mean EER %.4f", key.c_str(), result.mean_eer);
  log_info(msg);
  return cache_.emplace(key, std::move(result)).first->second;
}

ReportRow ExperimentRunner::row(const std::string& name, const ModelConfig& mc) {
  const MultiSeedResult& r = run(mc);
  ReportRow row;
  row.name = name;
  row.mode = model_mode_name(mc.mode);
  row.channel_order = mc.channel_order;
  row.filters = mc.filters;
  row.segment_seconds = mc.segment_seconds;
  row.segment_position = segment_position_name(mc.segment_position);
  row.parameters = r.runs.front().parameters;
  for (const SeedRun& s : r.runs) {
    row.seeds.push_back(s.seed);
    row.eers.push_back(s.eval_eer);
  }
  return row;
}

namespace {

ExperimentReport new_report(const ExperimentRunner& runner, std::string name) {
  ExperimentReport report;
  report.experiment = std::move(name);
  report.version = MCREPLAY_VERSION;
  report.config_hash = config_hash(runner.config());
  return report;
}

}  // namespace

ExperimentReport dummy_comparison(ExperimentRunner& runner) {
  ExperimentReport report = new_report(runner, "compare-modes");
  report.baseline = "NN-Single";
  const ModelConfig single = runner.model_config(ModelMode::kSingle);
  const ModelConfig dummy = runner.model_config(ModelMode::kDummyMultichannel);
  const ModelConfig multi = runner.model_config(ModelMode::kMultichannel);
  report.rows.push_back(runner.row("NN-Single", single));
  report.rows.push_back(runner.row("NN-Dummy-Multichannel", dummy));
  report.rows.push_back(runner.row("NN-Multichannel", multi));
  const std::size_t p_single = report.rows[0].parameters;
  const std::size_t p_dummy = report.rows[1].parameters;
  const std::size_t p_multi = report.rows[2].parameters;
  check(p_dummy == p_multi, ErrorCode::kDimension,
        "dummy and multichannel models differ in parameter count");
  const std::size_t extra =
      (multi.input_channels() - 1) * multi.filters * multi.filter_length();
  check(p_single + extra == p_multi, ErrorCode::kDimension,
        "single-channel model does not differ by the extra front-end filters");
  report.finalize();
  return report;
}

ExperimentReport channel_ablation(ExperimentRunner& runner, const std::vector<int>& order) {
  check(!order.empty(), ErrorCode::kInput, "channel order is empty");
  std::set<int> seen;
  for (const int c : order) {
    check(c >= 1 && static_cast<std::size_t>(c) <= runner.available_channels(),
          ErrorCode::kInput, "channel " + std::to_string(c) + " is not in the corpus");
    check(seen.insert(c).second, ErrorCode::kInput,
          "channel " + std::to_string(c) + " repeats in the ablation order");
  }
  ExperimentReport report = new_report(runner, "ablate-channels " + order_text(order));
  report.baseline = "1 channel";
  for (std::size_t k = 1; k <= order.size(); ++k) {
    const std::vector<int> prefix(order.begin(), order.begin() + static_cast<long>(k));
    ModelConfig mc = runner.model_config(k == 1 ? ModelMode::kSingle : ModelMode::kMultichannel);
    mc.channel_order = prefix;
    report.rows.push_back(
        runner.row(std::to_string(k) + (k == 1 ? " channel" : " channels"), mc));
  }
  report.finalize();
  return report;
}

std::vector<std::size_t> default_filter_sweep() { return {8, 16, 32, 64, 128}; }

ExperimentReport filter_sweep(ExperimentRunner& runner, std::vector<std::size_t> filters) {
  check(!filters.empty(), ErrorCode::kConfig, "filter sweep list is empty");
  for (const std::size_t p : filters) {
    check(p >= 8, ErrorCode::kConfig,
          "P=" + std::to_string(p) + " is below the frequency convolution width 8");
  }
  std::sort(filters.begin(), filters.end());
  filters.erase(std::unique(filters.begin(), filters.end()), filters.end());
  ExperimentReport report = new_report(runner, "sweep-filters");
  for (const std::size_t p : filters) {
    ModelConfig mc = runner.model_config(ModelMode::kMultichannel);
    mc.filters = p;
    report.rows.push_back(runner.row("P=" + std::to_string(p), mc));
  }
  report.finalize();
  return report;
}

ExperimentReport segment_ablation(ExperimentRunner& runner, const std::vector<double>& lengths,
                                  const std::vector<SegmentPosition>& positions) {
  check(!lengths.empty() && !positions.empty(), ErrorCode::kConfig,
        "segment ablation needs lengths and positions");
  for (const double l : lengths) {
    check(l > 0, ErrorCode::kConfig, "segment lengths must be positive");
  }
  ExperimentReport report = new_report(runner, "ablate-segment");
  for (const double l : lengths) {
    for (const SegmentPosition pos : positions) {
      ModelConfig mc = runner.model_config(ModelMode::kMultichannel);
      mc.segment_seconds = l;
      mc.segment_position = pos;
      char name[48];
      std::snprintf(name, sizeof name, "%.3gs %s", l, segment_position_name(pos));
      if (l == 1.0 && pos == SegmentPosition::kBeginning) report.baseline = name;
      report.rows.push_back(runner.row(name, mc));
    }
  }
  report.finalize();
  return report;
}

}  // namespace mcreplay
