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

#ifndef MCREPLAY_MCREPLAY_H_
#define MCREPLAY_MCREPLAY_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MCR_API __declspec(dllexport)
#else
#define MCR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every function returning mcr_status leaves a message for mcr_last_error()
 * on failure. Messages are per thread. */
typedef enum mcr_status {
  MCR_OK = 0,
  MCR_ERR_DIMENSION = 1,
  MCR_ERR_NUMERIC = 2,
  MCR_ERR_INPUT = 3,
  MCR_ERR_PARSE = 4,
  MCR_ERR_UNSUPPORTED_FORMAT = 5,
  MCR_ERR_GEOMETRY = 6,
  MCR_ERR_CONFIG = 7,
  MCR_ERR_IO = 8,
  MCR_ERR_INTERNAL = 100
} mcr_status;

typedef enum mcr_mode {
  MCR_MODE_SINGLE = 0,
  MCR_MODE_DUMMY = 1,
  MCR_MODE_MULTICHANNEL = 2
} mcr_mode;

MCR_API const char* mcr_version(void);
MCR_API const char* mcr_status_name(mcr_status status);
MCR_API const char* mcr_last_error(void);
MCR_API mcr_status mcr_parse_mode(const char* text, mcr_mode* out);
MCR_API const char* mcr_mode_name(mcr_mode mode);
/* Silences informational messages on stderr. */
MCR_API void mcr_set_quiet(int quiet);

/* ---- Training configuration (key = value) ---- */

typedef struct mcr_config mcr_config;

MCR_API mcr_status mcr_config_create(mcr_config** out);
MCR_API mcr_status mcr_config_load(const char* path, mcr_config** out);
MCR_API mcr_status mcr_config_set(mcr_config* config, const char* key, const char* value);
/* Canonical text of every key. Copies up to capacity bytes including the
 * terminator; *length receives the full length without it. */
MCR_API mcr_status mcr_config_text(const mcr_config* config, char* buffer, size_t capacity,
                                   size_t* length);
/* Value of one key, with the same buffer convention as mcr_config_text. */
MCR_API mcr_status mcr_config_get(const mcr_config* config, const char* key, char* buffer,
                                  size_t capacity, size_t* length);
/* 16 hex digits plus terminator. */
MCR_API mcr_status mcr_config_hash(const mcr_config* config, char out[17]);
MCR_API void mcr_config_destroy(mcr_config* config);

/* ---- Synthetic corpus ---- */

typedef struct mcr_synth_options mcr_synth_options;

MCR_API mcr_status mcr_synth_options_create(mcr_synth_options** out);
/* Keys: preset, sample_rate, bit_depth, min_duration, max_duration, min_snr_db,
 * max_snr_db, noise_correlation, clips_per_speaker, eval_fraction,
 * dev_fraction, talker_azimuth_min, talker_azimuth_max, speaker_azimuth_min,
 * speaker_azimuth_max, min_distance, max_distance, gain_db_range, environment. */
MCR_API mcr_status mcr_synth_options_set(mcr_synth_options* options, const char* key,
                                         const char* value);
MCR_API void mcr_synth_options_destroy(mcr_synth_options* options);
/* Clip counts for a total at the default class ratio. */
MCR_API mcr_status mcr_default_class_counts(size_t total, size_t* n_genuine,
                                            size_t* n_replayed);
/* Writes WAV files and manifest.jsonl into out_dir. */
MCR_API mcr_status mcr_synth_corpus(const mcr_synth_options* options, size_t n_genuine,
                                    size_t n_replayed, uint64_t seed, const char* out_dir);

/* ---- Models ---- */

typedef struct mcr_model mcr_model;

typedef struct mcr_model_info {
  mcr_mode mode;
  int sample_rate;
  size_t input_channels;
  size_t filters;
  size_t filter_length;
  size_t lstm_hidden;
  size_t lstm_layers;
  size_t parameters;
  int double_precision;
  double segment_seconds;
} mcr_model_info;

MCR_API mcr_status mcr_model_load(const char* path, mcr_model** out);
MCR_API mcr_status mcr_model_save(const mcr_model* model, const char* path);
MCR_API mcr_status mcr_model_info_get(const mcr_model* model, mcr_model_info* out);
/* Replay probability of one WAV file. */
MCR_API mcr_status mcr_model_score_wav(const mcr_model* model, const char* wav_path,
                                       double* score);
MCR_API void mcr_model_destroy(mcr_model* model);

/* Trains one model of the given mode on the manifest's train split with early stopping on
 * the dev split. Writes train_log.jsonl and model.bin into out_dir when it
 * is not NULL. */
MCR_API mcr_status mcr_train(const mcr_config* config, const char* manifest_path,
                             mcr_mode mode, uint64_t seed, const char* out_dir,
                             mcr_model** out_model, double* best_dev_eer);

/* Scores a manifest split ("train", "dev", "eval" or "core") and returns its
 * EER. Writes the scores as JSON Lines when scores_path is not NULL. */
MCR_API mcr_status mcr_evaluate(const mcr_model* model, const char* manifest_path,
                                const char* split, const char* scores_path, double* eer);

/* labels: 0 genuine, 1 replayed. */
MCR_API mcr_status mcr_eer(const double* scores, const int* labels, size_t count, double* out);

/* ---- Experiments ---- */

typedef struct mcr_report mcr_report;

/* Each recipe trains over every configured seed. out_dir (may be NULL)
 * receives report.txt, report.jsonl and per-run artifacts under runs/. */
MCR_API mcr_status mcr_compare_modes(const mcr_config* config, const char* manifest_path,
                                     const char* out_dir, mcr_report** out);
/* Lists passed with count 0 come from the config (ablation_order,
 * sweep_filters, segment_lengths, segment_positions). An empty
 * ablation_order means the corpus device's default order. */
MCR_API mcr_status mcr_ablate_channels(const mcr_config* config, const char* manifest_path,
                                       const int* order, size_t count, const char* out_dir,
                                       mcr_report** out);
MCR_API mcr_status mcr_sweep_filters(const mcr_config* config, const char* manifest_path,
                                     const size_t* filters, size_t count, const char* out_dir,
                                     mcr_report** out);
/* positions: "beginning" or "middle". */
MCR_API mcr_status mcr_ablate_segment(const mcr_config* config, const char* manifest_path,
                                      const double* lengths, size_t n_lengths,
                                      const char* const* positions, size_t n_positions,
                                      const char* out_dir, mcr_report** out);

MCR_API const char* mcr_report_table(const mcr_report* report);
MCR_API const char* mcr_report_records(const mcr_report* report);
MCR_API size_t mcr_report_rows(const mcr_report* report);
MCR_API const char* mcr_report_row_name(const mcr_report* report, size_t row);
MCR_API mcr_status mcr_report_row_eer(const mcr_report* report, size_t row, double* mean,
                                      double* std_dev);
MCR_API void mcr_report_destroy(mcr_report* report);

/* ---- Gradient check ---- */

typedef struct mcr_grad_check_result {
  double max_relative_error;
  size_t worst_coordinate;
  double worst_analytic;
  double worst_numeric;
  size_t checked;
  size_t parameters;
  double loss;
} mcr_grad_check_result;

/* Full-model finite-difference check in double precision on the built-in
 * small configuration. */
MCR_API mcr_status mcr_grad_check(size_t coordinates, uint64_t seed, double eps,
                                  mcr_grad_check_result* out);

#ifdef __cplusplus
}
#endif

#endif  /* MCREPLAY_MCREPLAY_H_ */
