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

#include <cmath>

#include "mcreplay/error.hpp"
#include "mcreplay/model.hpp"
#include "mcreplay/ops.hpp"
#include "support.hpp"

using namespace mcreplay;

namespace {

ModelConfig small_config(ModelMode mode) {
  ModelConfig c = make_model_config(mode, {1, 2, 3, 4}, 16000, 8);
  c.freq_maps = 6;
  c.embed_dim = 12;
  c.lstm_hidden = 10;
  c.lstm_layers = 2;
  c.segment_seconds = 0.1;
  return c;
}

AudioClip noise_clip(std::size_t channels, double seconds, int rate, std::uint64_t seed) {
  AudioClip clip;
  clip.sample_rate = rate;
  Rng rng(seed);
  clip.channels.assign(channels, std::vector<double>(static_cast<std::size_t>(seconds * rate)));
  for (auto& ch : clip.channels) {
    for (double& v : ch) v = 0.3 * rng.uniform(-1.0, 1.0);
  }
  return clip;
}

// Copies every tensor except the front-end bank by name.
template <typename T>
void copy_shared(const ModelParams<T>& from, ModelParams<T>& to) {
  for (std::size_t s = 0; s < from.params.slots().size(); ++s) {
    const std::string& name = from.params.slots()[s].name;
    if (name == "frontend.bank") continue;
    const std::size_t d = to.params.find(name);
    REQUIRE(to.params.slots()[d].shape == from.params.slots()[s].shape);
    std::copy(from.params.slice(s).begin(), from.params.slice(s).end(), to.params.slice(d).begin());
  }
}

}  // namespace

TEST_SUITE("classifier-backbone") {

TEST_CASE("full-scale dimension chain") {
  ModelConfig c = make_model_config(ModelMode::kMultichannel, {1, 4, 2, 3}, 44100, 64);
  CHECK(c.frame_length() == 882);
  CHECK(c.filter_length() == 630);
  CHECK(c.frontend_width() == 253);
  CHECK(c.freq_conv_width() == 57);
  CHECK(c.freq_pooled_width() == 19);
  CHECK(c.embed_input() == 256 * 19);
  CHECK(c.lstm_hidden == 832);
}

TEST_CASE("mode determines the input width") {
  CHECK(make_model_config(ModelMode::kSingle, {3, 1}, 16000, 8).input_channels() == 1);
  CHECK(make_model_config(ModelMode::kDummyMultichannel, {3, 1}, 16000, 8).input_channels() == 2);
  CHECK(make_model_config(ModelMode::kMultichannel, {3, 1}, 16000, 8).input_channels() == 2);
  CHECK(parse_model_mode("dummy") == ModelMode::kDummyMultichannel);
  CHECK(std::string(model_mode_name(ModelMode::kSingle)) == "single");
  CHECK_THROWS_AS(parse_model_mode("stereo"), Error);
}

TEST_CASE("filter counts below the frequency kernel are rejected") {
  ModelConfig c = small_config(ModelMode::kMultichannel);
  c.filters = 4;
  CHECK_THROWS_AS(c.validate(), Error);
  c.filters = 8;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("dummy and multichannel share an architecture; single differs only in the bank") {
  const auto single = build_model<float>(small_config(ModelMode::kSingle));
  const auto dummy = build_model<float>(small_config(ModelMode::kDummyMultichannel));
  const auto multi = build_model<float>(small_config(ModelMode::kMultichannel));
  CHECK(dummy.parameter_count() == multi.parameter_count());
  CHECK(architecture_hash(dummy) == architecture_hash(multi));
  CHECK(architecture_hash(single) != architecture_hash(multi));
  const std::size_t bank_per_channel = 8 * small_config(ModelMode::kSingle).filter_length();
  CHECK(single.parameter_count() + 3 * bank_per_channel == multi.parameter_count());
}

TEST_CASE("initialization is seeded and the forget gate starts open") {
  const auto a = make_model<double>(small_config(ModelMode::kMultichannel), 5);
  const auto b = make_model<double>(small_config(ModelMode::kMultichannel), 5);
  const auto c = make_model<double>(small_config(ModelMode::kMultichannel), 6);
  CHECK(a.flatten() == b.flatten());
  CHECK(a.flatten() != c.flatten());
  const auto bias = a.params.slice(a.lstm[0][2]);
  const std::size_t h = 10;
  for (std::size_t j = 0; j < h; ++j) {
    CHECK(bias[j] == 0.0);
    CHECK(bias[h + j] == 1.0);
  }
}

TEST_CASE("replicated input with the equivalence bank scores like the single-channel model") {
  const auto single = make_model<double>(small_config(ModelMode::kSingle), 11);
  auto multi = build_model<double>(small_config(ModelMode::kMultichannel));
  copy_shared(single, multi);
  multi.set_filter_bank(single_channel_equivalence_bank(single.filter_bank(), 4));
  const AudioClip mono = noise_clip(1, 0.1, 16000, 3);
  const double s1 = score(mono, single);
  const double s4 = score(replicate_channels(mono, 4), multi);
  CHECK(std::abs(s1 - s4) < 1e-9);
}

TEST_CASE("graph and convenience forward agree") {
  const auto model = make_model<double>(small_config(ModelMode::kMultichannel), 2);
  const auto frames = prepare_frames<double>(noise_clip(4, 0.1, 16000, 9), model.config);
  REQUIRE(frames.shape() == Shape{5, 4, 320});
  Graph<double> g;
  const auto bound = bind_model(g, model);
  const Var out = model_logits(g, g.constant(frames), bound, model.config);
  const auto direct = logits(frames, model);
  CHECK(g.data(out)[0] == doctest::Approx(direct[0]).epsilon(1e-14));
  CHECK(g.data(out)[1] == doctest::Approx(direct[1]).epsilon(1e-14));
}

TEST_CASE("replay probability of equal logits") {
  CHECK(replay_probability(std::array<double, 2>{0.0, 0.0}) == 0.5);
  CHECK(replay_probability(std::array<double, 2>{0.0, std::log(3.0)}) == doctest::Approx(0.75));
  CHECK(replay_probability(std::array<float, 2>{0.0f, 1000.0f}) == doctest::Approx(1.0));
}

TEST_CASE("loss_value matches loss_and_gradient and gradients match finite differences") {
  const auto model = make_model<double>(small_config(ModelMode::kMultichannel), 8);
  const auto frames = prepare_frames<double>(noise_clip(4, 0.1, 16000, 10), model.config);
  std::vector<double> grads(model.parameter_count(), 0.0);
  const double l = loss_and_gradient<double>(frames, Label::kReplayed, 0.7, model, grads);
  CHECK(l == doctest::Approx(loss_value<double>(frames, Label::kReplayed, 0.7, model)).epsilon(1e-14));
  bool any = false;
  for (const double v : grads) any = any || v != 0.0;
  CHECK(any);
}

TEST_CASE("full-model gradient check on a small configuration") {
  const ModelGradCheck r = model_grad_check(grad_check_config(), 40, 3);
  CHECK(r.report.checked == 40);
  CHECK(r.report.max_relative_error < 1e-4);
}

TEST_CASE("sample rate mismatch is a configuration error") {
  const auto model = build_model<float>(small_config(ModelMode::kMultichannel));
  try {
    score(noise_clip(4, 0.2, 44100, 1), model);
    FAIL("mismatched rate accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
  }
}

TEST_CASE("segment position picks the centred window") {
  ModelConfig c = small_config(ModelMode::kSingle);
  c.segment_position = SegmentPosition::kMiddle;
  AudioClip clip = noise_clip(4, 0.3, 16000, 4);
  const AudioClip in = prepare_input(clip, c);
  REQUIRE(in.length() == 1600);
  CHECK(in.channels[0][0] == clip.channels[0][1600]);
}

TEST_CASE("checkpoint round trip") {
  testing::TempDir dir("ckpt");
  ModelConfig c = small_config(ModelMode::kDummyMultichannel);
  c.channel_order = {2, 4, 1, 3};
  c.segment_position = SegmentPosition::kMiddle;
  const auto model = make_model<float>(c, 12);
  save_model(dir / "m.bin", model);
  const AnyModel loaded = load_model(dir / "m.bin");
  REQUIRE(std::holds_alternative<ModelParams<float>>(loaded));
  const auto& back = std::get<ModelParams<float>>(loaded);
  CHECK(back.flatten() == model.flatten());
  CHECK(back.config.mode == ModelMode::kDummyMultichannel);
  CHECK(back.config.channel_order == c.channel_order);
  CHECK(back.config.segment_position == SegmentPosition::kMiddle);
  CHECK(serialize_model(back) == serialize_model(model));

  const auto wide = make_model<double>(small_config(ModelMode::kSingle), 1);
  CHECK(std::holds_alternative<ModelParams<double>>(deserialize_model(serialize_model(wide))));

  std::string bytes = serialize_model(model);
  CHECK_THROWS_AS(deserialize_model(bytes.substr(0, bytes.size() / 2)), Error);
  bytes[0] = 'X';
  CHECK_THROWS_AS(deserialize_model(bytes), Error);
}

TEST_CASE("precision names") {
  CHECK(parse_precision("float64") == Precision::kFloat64);
  CHECK(std::string(precision_name(Precision::kFloat32)) == "float32");
  CHECK_THROWS_AS(parse_precision("half"), Error);
}

}  // TEST_SUITE
