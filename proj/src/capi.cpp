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

#include "mcreplay/mcreplay.h"

#include <cstring>
#include <fstream>
#include <string>

#include "mcreplay/error.hpp"
#include "mcreplay/evaluation.hpp"
#include "mcreplay/experiments.hpp"
#include "mcreplay/logging.hpp"
#include "mcreplay/model.hpp"
#include "mcreplay/synth.hpp"
#include "mcreplay/trainer.hpp"

struct mcr_config {
  mcreplay::TrainConfig value;
};

struct mcr_synth_options {
  mcreplay::CorpusConfig value;
};

struct mcr_model {
  mcreplay::AnyModel value;
};

struct mcr_report {
  mcreplay::ExperimentReport value;
  std::string table;
  std::string records;
};

namespace {

using namespace mcreplay;

thread_local std::string g_last_error;

mcr_status to_status(ErrorCode code) {
  return static_cast<mcr_status>(static_cast<int>(code));
}

template <typename Fn>
mcr_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MCR_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MCR_ERR_INTERNAL;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return MCR_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MCR_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  check(p != nullptr, ErrorCode::kInput, std::string(what) + " is NULL");
}

double real_value(const char* key, const char* value) {
  const std::string s(value);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  check(!s.empty() && end == s.c_str() + s.size(), ErrorCode::kConfig,
        std::string("bad number for ") + key + ": '" + s + "'");
  return v;
}

std::size_t count_value(const char* key, const char* value) {
  const double v = real_value(key, value);
  check(v >= 0 && v == static_cast<double>(static_cast<std::size_t>(v)), ErrorCode::kConfig,
        std::string("bad count for ") + key + ": '" + value + "'");
  return static_cast<std::size_t>(v);
}

ModelMode to_mode(mcr_mode mode) {
  switch (mode) {
    case MCR_MODE_SINGLE: return ModelMode::kSingle;
    case MCR_MODE_DUMMY: return ModelMode::kDummyMultichannel;
    case MCR_MODE_MULTICHANNEL: return ModelMode::kMultichannel;
  }
  fail(ErrorCode::kInput, "unknown model mode " + std::to_string(static_cast<int>(mode)));
}

mcr_mode from_mode(ModelMode mode) { return static_cast<mcr_mode>(static_cast<int>(mode)); }

std::filesystem::path optional_path(const char* p) {
  return p == nullptr ? std::filesystem::path{} : std::filesystem::path(p);
}

template <typename T>
mcr_model* train_typed(const TrainConfig& cfg, const ModelConfig& mc, const ClipSet& train_clips,
                       const ClipSet& dev_clips, std::uint64_t seed,
                       const std::filesystem::path& out_dir, double* best_dev_eer) {
  const Dataset<T> train_set = prepare_dataset<T>(train_clips, mc);
  const Dataset<T> dev_set = prepare_dataset<T>(dev_clips, mc);
  std::ofstream log;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    log.open(out_dir / "train_log.jsonl", std::ios::binary);
    check(static_cast<bool>(log), ErrorCode::kIo,
          "cannot write " + (out_dir / "train_log.jsonl").string());
  }
  TrainResult<T> result = train<T>(train_set, dev_set, mc, cfg, seed, log.is_open() ? &log : nullptr);
  if (!out_dir.empty()) save_model(out_dir / "model.bin", result.best);
  if (best_dev_eer != nullptr) *best_dev_eer = result.best_dev_eer;
  return new mcr_model{AnyModel(std::move(result.best))};
}

mcr_status run_report(const mcr_config* config, const char* manifest_path, const char* out_dir,
                      mcr_report** out,
                      const std::function<ExperimentReport(ExperimentRunner&)>& recipe) {
  return guarded([&] {
    require(config, "config");
    require(manifest_path, "manifest path");
    require(out, "output handle");
    *out = nullptr;
    const Manifest manifest = read_manifest(manifest_path);
    ExperimentRunner runner(
        load_experiment_inputs(manifest, config->value, optional_path(out_dir)));
    auto report = std::make_unique<mcr_report>();
    report->value = recipe(runner);
    report->table = format_report_table(report->value);
    report->records = format_report_records(report->value);
    if (out_dir != nullptr) write_report(out_dir, report->value);
    *out = report.release();
  });
}

void copy_out(const std::string& text, char* buffer, size_t capacity, size_t* length) {
  if (length != nullptr) *length = text.size();
  if (buffer != nullptr && capacity > 0) {
    const std::size_t n = std::min(capacity - 1, text.size());
    std::memcpy(buffer, text.data(), n);
    buffer[n] = '\0';
  }
}

}  // namespace

extern "C" {

const char* mcr_version(void) { return MCREPLAY_VERSION; }

const char* mcr_status_name(mcr_status status) {
  switch (status) {
    case MCR_OK: return "ok";
    case MCR_ERR_INTERNAL: return "internal error";
    default:
      if (status >= MCR_ERR_DIMENSION && status <= MCR_ERR_IO) {
        return error_code_name(static_cast<ErrorCode>(status));
      }
      return "unknown";
  }
}

const char* mcr_last_error(void) { return g_last_error.c_str(); }

mcr_status mcr_parse_mode(const char* text, mcr_mode* out) {
  return guarded([&] {
    require(text, "mode text");
    require(out, "output");
    *out = from_mode(parse_model_mode(text));
  });
}

const char* mcr_mode_name(mcr_mode mode) {
  if (mode < MCR_MODE_SINGLE || mode > MCR_MODE_MULTICHANNEL) return "unknown";
  return model_mode_name(static_cast<ModelMode>(mode));
}

void mcr_set_quiet(int quiet) { set_log_quiet(quiet != 0); }

mcr_status mcr_config_create(mcr_config** out) {
  return guarded([&] {
    require(out, "output handle");
    *out = new mcr_config{};
  });
}

mcr_status mcr_config_load(const char* path, mcr_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "output handle");
    *out = nullptr;
    *out = new mcr_config{load_train_config(path)};
  });
}

mcr_status mcr_config_set(mcr_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    TrainConfig next = config->value;
    apply_override(next, key, value);
    next.validate();
    config->value = next;
  });
}

mcr_status mcr_config_text(const mcr_config* config, char* buffer, size_t capacity,
                           size_t* length) {
  return guarded([&] {
    require(config, "config");
    copy_out(format_train_config(config->value), buffer, capacity, length);
  });
}

mcr_status mcr_config_get(const mcr_config* config, const char* key, char* buffer,
                          size_t capacity, size_t* length) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    copy_out(config_value(config->value, key), buffer, capacity, length);
  });
}

mcr_status mcr_config_hash(const mcr_config* config, char out[17]) {
  return guarded([&] {
    require(config, "config");
    require(out, "output");
    const std::string h = config_hash(config->value);
    std::memcpy(out, h.c_str(), 17);
  });
}

void mcr_config_destroy(mcr_config* config) { delete config; }

mcr_status mcr_synth_options_create(mcr_synth_options** out) {
  return guarded([&] {
    require(out, "output handle");
    *out = new mcr_synth_options{};
  });
}

mcr_status mcr_synth_options_set(mcr_synth_options* options, const char* key,
                                 const char* value) {
  return guarded([&] {
    require(options, "options");
    require(key, "key");
    require(value, "value");
    CorpusConfig& c = options->value;
    const std::string k(key);
    if (k == "preset") {
      geometry_preset(value);
      c.preset = value;
    } else if (k == "environment") {
      c.environment = value;
    } else if (k == "sample_rate") {
      c.sample_rate = static_cast<int>(count_value(key, value));
    } else if (k == "bit_depth") {
      const std::size_t b = count_value(key, value);
      check(b == 0 || b == 16 || b == 32, ErrorCode::kConfig, "bit_depth must be 16 or 32");
      c.bit_depth = static_cast<int>(b);
    } else if (k == "clips_per_speaker") {
      c.clips_per_speaker = count_value(key, value);
    } else {
      const std::pair<const char*, double*> reals[] = {
          {"min_duration", &c.min_duration_s},
          {"max_duration", &c.max_duration_s},
          {"min_snr_db", &c.min_snr_db},
          {"max_snr_db", &c.max_snr_db},
          {"noise_correlation", &c.noise_correlation},
          {"eval_fraction", &c.eval_fraction},
          {"dev_fraction", &c.dev_fraction},
          {"talker_azimuth_min", &c.talker_azimuth_min},
          {"talker_azimuth_max", &c.talker_azimuth_max},
          {"speaker_azimuth_min", &c.speaker_azimuth_min},
          {"speaker_azimuth_max", &c.speaker_azimuth_max},
          {"min_distance", &c.min_distance},
          {"max_distance", &c.max_distance},
          {"gain_db_range", &c.gain_db_range},
      };
      for (const auto& [name, field] : reals) {
        if (k == name) {
          *field = real_value(key, value);
          return;
        }
      }
      fail(ErrorCode::kConfig, "unknown corpus option '" + k + "'");
    }
  });
}

void mcr_synth_options_destroy(mcr_synth_options* options) { delete options; }

mcr_status mcr_default_class_counts(size_t total, size_t* n_genuine, size_t* n_replayed) {
  return guarded([&] {
    require(n_genuine, "output");
    require(n_replayed, "output");
    std::tie(*n_genuine, *n_replayed) = default_class_counts(total);
  });
}

mcr_status mcr_synth_corpus(const mcr_synth_options* options, size_t n_genuine,
                            size_t n_replayed, uint64_t seed, const char* out_dir) {
  return guarded([&] {
    require(out_dir, "output directory");
    const CorpusConfig config = options != nullptr ? options->value : CorpusConfig{};
    generate_corpus(n_genuine, n_replayed, config, seed, out_dir);
  });
}

mcr_status mcr_model_load(const char* path, mcr_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "output handle");
    *out = nullptr;
    *out = new mcr_model{load_model(path)};
  });
}

mcr_status mcr_model_save(const mcr_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    std::visit([&](const auto& m) { save_model(path, m); }, model->value);
  });
}

mcr_status mcr_model_info_get(const mcr_model* model, mcr_model_info* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "output");
    std::visit(
        [&](const auto& m) {
          using T = typename std::decay_t<decltype(m.params.values())>::value_type;
          const ModelConfig& c = m.config;
          out->mode = from_mode(c.mode);
          out->sample_rate = c.sample_rate;
          out->input_channels = c.input_channels();
          out->filters = c.filters;
          out->filter_length = c.filter_length();
          out->lstm_hidden = c.lstm_hidden;
          out->lstm_layers = c.lstm_layers;
          out->parameters = m.parameter_count();
          out->double_precision = std::is_same_v<std::remove_const_t<T>, double> ? 1 : 0;
          out->segment_seconds = c.segment_seconds;
        },
        model->value);
  });
}

mcr_status mcr_model_score_wav(const mcr_model* model, const char* wav_path, double* score) {
  return guarded([&] {
    require(model, "model");
    require(wav_path, "path");
    require(score, "output");
    const AudioClip clip = load_wav(wav_path);
    *score = std::visit([&](const auto& m) { return mcreplay::score(clip, m); }, model->value);
  });
}

void mcr_model_destroy(mcr_model* model) { delete model; }

mcr_status mcr_train(const mcr_config* config, const char* manifest_path, mcr_mode mode,
                     uint64_t seed, const char* out_dir, mcr_model** out_model,
                     double* best_dev_eer) {
  return guarded([&] {
    require(config, "config");
    require(manifest_path, "manifest path");
    if (out_model != nullptr) *out_model = nullptr;
    const TrainConfig& cfg = config->value;
    cfg.validate();
    const Manifest manifest = read_manifest(manifest_path);
    const SplitPlan plan = plan_splits(manifest, cfg.dev_fraction, seed);
    const ClipSet train_clips = load_clips(manifest, plan.train, cfg.threads);
    const ClipSet dev_clips = load_clips(manifest, plan.dev, cfg.threads);
    const ModelConfig mc = model_config_for(cfg, to_mode(mode), train_clips);
    const std::filesystem::path dir = optional_path(out_dir);
    mcr_model* m =
        cfg.precision == Precision::kFloat64
            ? train_typed<double>(cfg, mc, train_clips, dev_clips, seed, dir, best_dev_eer)
            : train_typed<float>(cfg, mc, train_clips, dev_clips, seed, dir, best_dev_eer);
    if (out_model != nullptr) {
      *out_model = m;
    } else {
      delete m;
    }
  });
}

mcr_status mcr_evaluate(const mcr_model* model, const char* manifest_path, const char* split,
                        const char* scores_path, double* eer_out) {
  return guarded([&] {
    require(model, "model");
    require(manifest_path, "manifest path");
    require(split, "split");
    const Manifest manifest = read_manifest(manifest_path);
    const std::vector<ManifestEntry> entries = manifest.in_split(parse_split(split));
    check(!entries.empty(), ErrorCode::kInput,
          std::string("manifest has no clips in split ") + split);
    const ClipSet clips = load_clips(manifest, entries);
    ScoreSet set = std::visit(
        [&](const auto& m) {
          using T = std::remove_const_t<
              typename std::decay_t<decltype(m.params.values())>::value_type>;
          const Dataset<T> data = prepare_dataset<T>(clips, m.config);
          const std::vector<double> scores = score_dataset(m, data);
          ScoreSet s;
          s.split = split;
          s.channel_order = m.config.channel_order;
          s.filters = m.config.filters;
          s.input_seconds = m.config.segment_seconds;
          for (std::size_t i = 0; i < scores.size(); ++i) {
            s.entries.push_back({data.ids[i], scores[i], data.labels[i]});
          }
          return s;
        },
        model->value);
    if (scores_path != nullptr) write_scores(scores_path, set);
    if (eer_out != nullptr) *eer_out = eer(set);
  });
}

mcr_status mcr_eer(const double* scores, const int* labels, size_t count, double* out) {
  return guarded([&] {
    require(out, "output");
    check(count == 0 || (scores != nullptr && labels != nullptr), ErrorCode::kInput,
          "scores or labels are NULL");
    std::vector<Label> l(count);
    for (std::size_t i = 0; i < count; ++i) {
      check(labels[i] == 0 || labels[i] == 1, ErrorCode::kInput, "labels must be 0 or 1");
      l[i] = labels[i] == 0 ? Label::kGenuine : Label::kReplayed;
    }
    *out = eer(std::span<const double>(scores, count), l);
  });
}

mcr_status mcr_compare_modes(const mcr_config* config, const char* manifest_path,
                             const char* out_dir, mcr_report** out) {
  return run_report(config, manifest_path, out_dir, out,
                    [](ExperimentRunner& r) { return dummy_comparison(r); });
}

mcr_status mcr_ablate_channels(const mcr_config* config, const char* manifest_path,
                               const int* order, size_t count, const char* out_dir,
                               mcr_report** out) {
  return run_report(config, manifest_path, out_dir, out, [&](ExperimentRunner& r) {
    check(count == 0 || order != nullptr, ErrorCode::kInput, "channel order is NULL");
    std::vector<int> o(order, order + count);
    if (o.empty()) o = r.config().ablation_order;
    if (o.empty()) o = r.default_order();
    return channel_ablation(r, o);
  });
}

mcr_status mcr_sweep_filters(const mcr_config* config, const char* manifest_path,
                             const size_t* filters, size_t count, const char* out_dir,
                             mcr_report** out) {
  return run_report(config, manifest_path, out_dir, out, [&](ExperimentRunner& r) {
    check(count == 0 || filters != nullptr, ErrorCode::kInput, "filter list is NULL");
    return filter_sweep(r, count == 0 ? r.config().sweep_filters
                                      : std::vector<std::size_t>(filters, filters + count));
  });
}

mcr_status mcr_ablate_segment(const mcr_config* config, const char* manifest_path,
                              const double* lengths, size_t n_lengths,
                              const char* const* positions, size_t n_positions,
                              const char* out_dir, mcr_report** out) {
  return run_report(config, manifest_path, out_dir, out, [&](ExperimentRunner& r) {
    const std::vector<double> l = n_lengths == 0
                                      ? r.config().segment_lengths
                                      : std::vector<double>(lengths, lengths + n_lengths);
    std::vector<SegmentPosition> p;
    if (n_positions == 0) {
      p = r.config().segment_positions;
    } else {
      for (std::size_t i = 0; i < n_positions; ++i) {
        require(positions[i], "segment position");
        p.push_back(parse_segment_position(positions[i]));
      }
    }
    return segment_ablation(r, l, p);
  });
}

const char* mcr_report_table(const mcr_report* report) {
  return report == nullptr ? "" : report->table.c_str();
}

const char* mcr_report_records(const mcr_report* report) {
  return report == nullptr ? "" : report->records.c_str();
}

size_t mcr_report_rows(const mcr_report* report) {
  return report == nullptr ? 0 : report->value.rows.size();
}

const char* mcr_report_row_name(const mcr_report* report, size_t row) {
  if (report == nullptr || row >= report->value.rows.size()) return "";
  return report->value.rows[row].name.c_str();
}

mcr_status mcr_report_row_eer(const mcr_report* report, size_t row, double* mean,
                              double* std_dev) {
  return guarded([&] {
    require(report, "report");
    check(row < report->value.rows.size(), ErrorCode::kInput, "report row out of range");
    const ReportRow& r = report->value.rows[row];
    if (mean != nullptr) *mean = r.mean_eer;
    if (std_dev != nullptr) *std_dev = r.std_eer;
  });
}

void mcr_report_destroy(mcr_report* report) { delete report; }

mcr_status mcr_grad_check(size_t coordinates, uint64_t seed, double eps,
                          mcr_grad_check_result* out) {
  return guarded([&] {
    require(out, "output");
    const ModelGradCheck r = model_grad_check(grad_check_config(), coordinates, seed, eps);
    out->max_relative_error = r.report.max_relative_error;
    out->worst_coordinate = r.report.worst_coordinate;
    out->worst_analytic = r.report.worst_analytic;
    out->worst_numeric = r.report.worst_numeric;
    out->checked = r.report.checked;
    out->parameters = r.parameters;
    out->loss = r.loss;
  });
}

}  // extern "C"
