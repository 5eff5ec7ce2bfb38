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

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "mcreplay/mcreplay.h"
#include "support.hpp"

namespace {

std::string config_get(const mcr_config* c, const char* key) {
  size_t n = 0;
  REQUIRE(mcr_config_get(c, key, nullptr, 0, &n) == MCR_OK);
  std::string s(n + 1, '\0');
  REQUIRE(mcr_config_get(c, key, s.data(), s.size(), &n) == MCR_OK);
  s.resize(n);
  return s;
}

mcr_config* tiny_config() {
  mcr_config* c = nullptr;
  REQUIRE(mcr_config_create(&c) == MCR_OK);
  const char* settings[][2] = {{"filters", "8"},      {"freq_maps", "4"},   {"embed_dim", "8"},
                               {"lstm_hidden", "8"},  {"lstm_layers", "1"}, {"batch_size", "4"},
                               {"max_epochs", "1"},   {"seeds", "1"},       {"segment_seconds", "0.2"},
                               {"sweep_filters", "8"}};
  for (const auto& kv : settings) REQUIRE(mcr_config_set(c, kv[0], kv[1]) == MCR_OK);
  return c;
}

}  // namespace

TEST_SUITE("c-api") {

TEST_CASE("version, names and modes") {
  CHECK(std::strlen(mcr_version()) > 0);
  CHECK(std::string(mcr_status_name(MCR_OK)) == "ok");
  CHECK(std::string(mcr_status_name(MCR_ERR_INTERNAL)) == "internal error");
  mcr_mode m{};
  CHECK(mcr_parse_mode("multichannel", &m) == MCR_OK);
  CHECK(m == MCR_MODE_MULTICHANNEL);
  CHECK(std::string(mcr_mode_name(MCR_MODE_DUMMY)) == "dummy");
  CHECK(mcr_parse_mode("quad", &m) == MCR_ERR_CONFIG);
  CHECK(std::string(mcr_last_error()).find("quad") != std::string::npos);
}

TEST_CASE("configuration handle") {
  mcr_config* c = nullptr;
  REQUIRE(mcr_config_create(&c) == MCR_OK);
  CHECK(config_get(c, "lstm_hidden") == "832");
  CHECK(mcr_config_set(c, "lstm_hidden", "128") == MCR_OK);
  CHECK(config_get(c, "lstm_hidden") == "128");
  CHECK(mcr_config_set(c, "lstm_width", "1") == MCR_ERR_CONFIG);
  CHECK(mcr_config_set(c, "lstm_hidden", "wide") == MCR_ERR_CONFIG);
  CHECK(mcr_config_get(c, "nothing", nullptr, 0, nullptr) != MCR_OK);

  size_t n = 0;
  CHECK(mcr_config_text(c, nullptr, 0, &n) == MCR_OK);
  std::vector<char> small(8);
  CHECK(mcr_config_text(c, small.data(), small.size(), &n) == MCR_OK);
  CHECK(std::strlen(small.data()) == 7);

  char h1[17], h2[17];
  CHECK(mcr_config_hash(c, h1) == MCR_OK);
  CHECK(mcr_config_set(c, "seeds", "9") == MCR_OK);
  CHECK(mcr_config_hash(c, h2) == MCR_OK);
  CHECK(std::string(h1) != std::string(h2));
  CHECK(std::strlen(h1) == 16);
  mcr_config_destroy(c);
  mcr_config_destroy(nullptr);

  mcr_config* missing = nullptr;
  CHECK(mcr_config_load("/nonexistent/x.conf", &missing) == MCR_ERR_IO);
  CHECK(missing == nullptr);
  CHECK(mcr_config_create(nullptr) == MCR_ERR_INPUT);
}

TEST_CASE("synthesize, train, score and evaluate") {
  mcr_set_quiet(1);
  testing::TempDir dir("capi");
  const std::string corpus = (dir / "corpus").string();
  mcr_synth_options* opt = nullptr;
  REQUIRE(mcr_synth_options_create(&opt) == MCR_OK);
  CHECK(mcr_synth_options_set(opt, "sample_rate", "16000") == MCR_OK);
  CHECK(mcr_synth_options_set(opt, "min_duration", "0.3") == MCR_OK);
  CHECK(mcr_synth_options_set(opt, "max_duration", "0.3") == MCR_OK);
  CHECK(mcr_synth_options_set(opt, "preset", "d7") == MCR_ERR_CONFIG);
  CHECK(mcr_synth_options_set(opt, "colour", "red") == MCR_ERR_CONFIG);
  REQUIRE(mcr_synth_corpus(opt, 20, 20, 5, corpus.c_str()) == MCR_OK);
  mcr_synth_options_destroy(opt);
  size_t g = 0, r = 0;
  CHECK(mcr_default_class_counts(23506, &g, &r) == MCR_OK);
  CHECK(g == 6331);

  const std::string manifest = corpus + "/manifest.jsonl";
  mcr_config* c = tiny_config();
  mcr_model* model = nullptr;
  double dev = -1.0;
  const std::string run = (dir / "run").string();
  REQUIRE(mcr_train(c, manifest.c_str(), MCR_MODE_MULTICHANNEL, 1, run.c_str(), &model, &dev) ==
          MCR_OK);
  CHECK(dev >= 0.0);
  CHECK(dev <= 1.0);
  CHECK(std::filesystem::exists(run + "/train_log.jsonl"));
  CHECK(std::filesystem::exists(run + "/model.bin"));

  mcr_model_info info{};
  REQUIRE(mcr_model_info_get(model, &info) == MCR_OK);
  CHECK(info.input_channels == 4);
  CHECK(info.filters == 8);
  CHECK(info.sample_rate == 16000);
  CHECK(info.filter_length == 229);
  CHECK(info.parameters > 0);

  double s = -1.0;
  CHECK(mcr_model_score_wav(model, (corpus + "/clips/clip_00000.wav").c_str(), &s) == MCR_OK);
  CHECK(s >= 0.0);
  CHECK(s <= 1.0);
  CHECK(mcr_model_score_wav(model, (corpus + "/none.wav").c_str(), &s) == MCR_ERR_IO);

  const std::string saved = (dir / "copy.bin").string();
  CHECK(mcr_model_save(model, saved.c_str()) == MCR_OK);
  mcr_model* loaded = nullptr;
  REQUIRE(mcr_model_load(saved.c_str(), &loaded) == MCR_OK);
  double e1 = -1.0, e2 = -2.0;
  const std::string scores = (dir / "scores.jsonl").string();
  CHECK(mcr_evaluate(model, manifest.c_str(), "eval", scores.c_str(), &e1) == MCR_OK);
  CHECK(mcr_evaluate(loaded, manifest.c_str(), "eval", nullptr, &e2) == MCR_OK);
  CHECK(e1 == e2);
  CHECK(std::filesystem::exists(scores));
  CHECK(mcr_evaluate(model, manifest.c_str(), "holdout", nullptr, &e1) == MCR_ERR_PARSE);
  mcr_model_destroy(loaded);
  mcr_model_destroy(model);

  CHECK(mcr_model_load(manifest.c_str(), &loaded) != MCR_OK);
  CHECK(mcr_train(c, (dir / "nope.jsonl").c_str(), MCR_MODE_SINGLE, 1, nullptr, nullptr, nullptr) ==
        MCR_ERR_IO);

  mcr_report* rep = nullptr;
  REQUIRE(mcr_sweep_filters(c, manifest.c_str(), nullptr, 0, (dir / "sweep").c_str(), &rep) ==
          MCR_OK);
  CHECK(mcr_report_rows(rep) == 1);
  CHECK(std::string(mcr_report_row_name(rep, 0)) == "P=8");
  double mean = -1.0, sd = -1.0;
  CHECK(mcr_report_row_eer(rep, 0, &mean, &sd) == MCR_OK);
  CHECK(mean >= 0.0);
  CHECK(mcr_report_row_eer(rep, 3, &mean, &sd) != MCR_OK);
  CHECK(std::string(mcr_report_table(rep)).find("P=8") != std::string::npos);
  CHECK(std::string(mcr_report_records(rep)).find("\"experiment\"") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "sweep" / "report.txt"));
  mcr_report_destroy(rep);

  const int repeat[] = {2, 2};
  CHECK(mcr_ablate_channels(c, manifest.c_str(), repeat, 2, nullptr, &rep) == MCR_ERR_INPUT);
  const size_t four[] = {4};
  CHECK(mcr_sweep_filters(c, manifest.c_str(), four, 1, nullptr, &rep) == MCR_ERR_CONFIG);
  mcr_config_destroy(c);
}

TEST_CASE("EER through the C interface") {
  const double scores[] = {0.2, 0.4, 0.6, 0.3, 0.5, 0.7};
  const int labels[] = {0, 0, 0, 1, 1, 1};
  double e = 0.0;
  CHECK(mcr_eer(scores, labels, 6, &e) == MCR_OK);
  CHECK(e == doctest::Approx(1.0 / 3.0));
  const int bad[] = {0, 0, 0, 1, 1, 2};
  CHECK(mcr_eer(scores, bad, 6, &e) == MCR_ERR_INPUT);
  CHECK(mcr_eer(scores, labels, 3, &e) == MCR_ERR_INPUT);
}

TEST_CASE("gradient check through the C interface") {
  mcr_grad_check_result r{};
  REQUIRE(mcr_grad_check(10, 2, 1e-5, &r) == MCR_OK);
  CHECK(r.checked == 10);
  CHECK(r.parameters == 10088);
  CHECK(r.max_relative_error < 1e-4);
  CHECK(mcr_grad_check(10, 2, 0.0, &r) != MCR_OK);
}

}  // TEST_SUITE
