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
#include <sstream>

#include "fixtures.hpp"
#include "mcreplay/error.hpp"
#include "mcreplay/trainer.hpp"
#include "support.hpp"

using namespace mcreplay;

namespace {

template <typename T>
std::string log_text(const TrainResult<T>& r) {
  std::string s;
  for (const auto& rec : r.log) s += format_epoch_record(rec) + "\n";
  return s;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("learning-rate schedule") {
  const TrainConfig c;
  CHECK(lr_at(0, c) == 1e-5);
  CHECK(lr_at(20, c) == 1e-4);
  CHECK(lr_at(40, c) == 5e-5);
  CHECK(lr_at(60, c) == 2.5e-5);
  CHECK(lr_at(10, c) == doctest::Approx(5.5e-5));
  CHECK(lr_at(39, c) == 1e-4);
}

TEST_CASE("class weights are normalized reciprocal frequencies") {
  const ClassWeights w = class_weights(6331, 17175);
  CHECK(w.genuine == doctest::Approx(0.7307).epsilon(1e-4 / 0.7307));
  CHECK(w.replayed == doctest::Approx(0.2693).epsilon(1e-4 / 0.2693));
  CHECK(w.genuine + w.replayed == doctest::Approx(1.0));
  CHECK(w[Label::kReplayed] == w.replayed);
  CHECK(class_weights(10, 10).genuine == 0.5);
  CHECK_THROWS_AS(class_weights(0, 5), Error);
}

TEST_CASE("first ADAM step moves each weight by about lr") {
  std::vector<double> p{1.0, -2.0, 0.5};
  const std::vector<double> g{0.5, -3.0, 0.0};
  AdamState<double> s;
  adam_step<double>(p, g, s, 0.1, 0.0);
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(p[1] == doctest::Approx(-1.9).epsilon(1e-7));
  CHECK(p[2] == 0.5);
  CHECK(s.step == 1);
}

TEST_CASE("decoupled weight decay shrinks toward zero") {
  std::vector<double> p{2.0};
  const std::vector<double> g{0.0};
  AdamState<double> s;
  adam_step<double>(p, g, s, 0.1, 0.01);
  CHECK(p[0] == doctest::Approx(2.0 - 0.1 * 0.01 * 2.0));
}

TEST_CASE("second ADAM step follows the bias-corrected moments") {
  std::vector<double> p{0.0};
  AdamState<double> s;
  adam_step<double>(p, std::vector<double>{1.0}, s, 0.01, 0.0);
  adam_step<double>(p, std::vector<double>{-1.0}, s, 0.01, 0.0);
  const double m = 0.9 * 0.1 * 1.0 + 0.1 * -1.0;
  const double v = 0.999 * 0.001 + 0.001;
  const double second = -0.01 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
  CHECK(p[0] == doctest::Approx(-0.01 + second).epsilon(1e-10));
}

TEST_CASE("non-finite gradients are rejected before any update") {
  std::vector<float> p{1.0f, 2.0f};
  const std::vector<float> g{0.1f, std::nanf("")};
  AdamState<float> s;
  try {
    adam_step<float>(p, g, s, 0.1, 0.0);
    FAIL("NaN gradient accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNumeric);
  }
  CHECK(p[0] == 1.0f);
  CHECK(s.step == 0);
}

TEST_CASE("gradient clipping") {
  std::vector<double> g{3.0, 4.0};
  CHECK(clip_gradient<double>(g, 1.0) == doctest::Approx(5.0));
  CHECK(g[0] == doctest::Approx(0.6));
  std::vector<double> small{0.3, 0.4};
  clip_gradient<double>(small, 1.0);
  CHECK(small[0] == 0.3);
}

TEST_CASE("config files parse, override and round trip") {
  const TrainConfig c = parse_train_config(
      "# comment\n"
      "batch_size = 16  # trailing\n"
      "lr_init=1e-4\n"
      "seeds = 4,5\n"
      "channels = 1,4\n"
      "precision = float64\n"
      "segment_position = middle\n"
      "mode = dummy\n");
  CHECK(c.batch_size == 16);
  CHECK(c.lr_init == 1e-4);
  CHECK(c.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(c.channels == std::vector<int>{1, 4});
  CHECK(c.precision == Precision::kFloat64);
  CHECK(c.mode == ModelMode::kDummyMultichannel);
  CHECK(config_value(c, "segment_position") == "middle");

  const TrainConfig again = parse_train_config(format_train_config(c));
  CHECK(format_train_config(again) == format_train_config(c));
  CHECK(config_hash(again) == config_hash(c));
  CHECK(config_hash(c).size() == 16);

  TrainConfig d = c;
  apply_override(d, "lstm_hidden=64");
  CHECK(d.lstm_hidden == 64);
  CHECK(config_hash(d) != config_hash(c));

  try {
    parse_train_config("batch_size = 4\nlearning_rate = 1\n");
    FAIL("unknown key accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_override(d, "batch_size", "many"), Error);
  CHECK_THROWS_AS(apply_override(d, "novalue"), Error);
  apply_override(d, "filters", "4");
  CHECK_THROWS_AS(d.validate(), Error);
  CHECK_THROWS_AS(config_value(d, "nope"), Error);
  CHECK_THROWS_AS(load_train_config("/nonexistent.conf"), Error);
}

TEST_CASE("core clips split 90/10 with a seeded shuffle") {
  Manifest m;
  for (int i = 0; i < 50; ++i) {
    m.entries.push_back({"c" + std::to_string(i) + ".wav", Label::kGenuine, "d2", "s", "e",
                         i < 40 ? Split::kCore : Split::kEval});
  }
  const SplitPlan a = plan_splits(m, 0.1, 1), b = plan_splits(m, 0.1, 1), c = plan_splits(m, 0.1, 2);
  CHECK(a.train.size() == 36);
  CHECK(a.dev.size() == 4);
  CHECK(a.eval.size() == 10);
  CHECK(a.dev[0].path == b.dev[0].path);
  bool differs = false;
  for (std::size_t i = 0; i < 4; ++i) differs = differs || a.dev[i].path != c.dev[i].path;
  CHECK(differs);
  Manifest only_eval;
  only_eval.entries.push_back({"x.wav", Label::kGenuine, "", "", "", Split::kEval});
  CHECK_THROWS_AS(plan_splits(only_eval, 0.1, 1), Error);
}

TEST_CASE("model config follows the device preset order") {
  const ClipSet clips = testing::tiny_clips(2, 0, 1);
  TrainConfig t = testing::tiny_train_config();
  CHECK(model_config_for(t, ModelMode::kMultichannel, clips).channel_order ==
        std::vector<int>{1, 4, 2, 3});
  t.channels = {2, 3};
  CHECK(model_config_for(t, ModelMode::kMultichannel, clips).channel_order ==
        std::vector<int>{2, 3});
  t.channels = {5};
  CHECK_THROWS_AS(model_config_for(t, ModelMode::kMultichannel, clips), Error);
}

TEST_CASE("loss on a fixed batch decreases at a fixed learning rate") {
  // Loud clips are genuine, quiet ones replayed: separable by level alone.
  ModelConfig mc = make_model_config(ModelMode::kMultichannel, {1, 2}, 16000, 8);
  mc.freq_maps = 4;
  mc.embed_dim = 8;
  mc.lstm_hidden = 8;
  mc.lstm_layers = 1;
  Rng rng(3);
  std::vector<Tensor<double>> frames;
  std::vector<Label> labels;
  for (int i = 0; i < 8; ++i) {
    const bool replayed = i % 2 == 1;
    frames.push_back(testing::random_tensor({4, 2, 320}, rng, replayed ? 0.02 : 0.3));
    labels.push_back(replayed ? Label::kReplayed : Label::kGenuine);
  }
  auto model = make_model<double>(mc, 1);
  AdamState<double> state;
  std::vector<double> grads(model.parameter_count());
  const auto batch_loss = [&](bool with_grad) {
    std::fill(grads.begin(), grads.end(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      total += with_grad ? loss_and_gradient<double>(frames[i], labels[i], 0.5, model, grads)
                         : loss_value<double>(frames[i], labels[i], 0.5, model);
    }
    return total / static_cast<double>(frames.size());
  };
  const double first = batch_loss(false);
  for (int step = 0; step < 50; ++step) {
    batch_loss(true);
    for (double& g : grads) g /= static_cast<double>(frames.size());
    adam_step<double>(model.params.values(), grads, state, 1e-2, 0.0);
  }
  const double last = batch_loss(false);
  MESSAGE("loss " << first << " -> " << last);
  CHECK(last < 0.5 * first);
}

TEST_CASE("training is deterministic and keeps the best dev model") {
  TrainConfig t = testing::tiny_train_config();
  const ClipSet train_clips = testing::tiny_clips(12, 0, 4), dev_clips = testing::tiny_clips(6, 100, 4);
  const ModelConfig mc = model_config_for(t, ModelMode::kMultichannel, train_clips);
  const auto train_set = prepare_dataset<float>(train_clips, mc);
  const auto dev_set = prepare_dataset<float>(dev_clips, mc);
  std::ostringstream sink_a;
  const auto a = train(train_set, dev_set, mc, t, 7, &sink_a);
  const auto b = train(train_set, dev_set, mc, t, 7);
  CHECK(log_text(a) == log_text(b));
  CHECK(sink_a.str() == log_text(a));
  CHECK(serialize_model(a.best) == serialize_model(b.best));
  CHECK(a.best_dev_eer == doctest::Approx(dataset_eer(a.best, dev_set)));
  REQUIRE(a.log.size() == 3);
  CHECK(a.log[0].improved);
  CHECK(a.log[a.best_epoch].dev_eer == a.best_dev_eer);

  t.threads = 3;
  const auto c = train(train_set, dev_set, mc, t, 7);
  CHECK(serialize_model(c.best) == serialize_model(a.best));

  const auto other = train(train_set, dev_set, mc, t, 8);
  CHECK(serialize_model(other.best) != serialize_model(a.best));
}

TEST_CASE("early stopping after patience epochs without improvement") {
  TrainConfig t = testing::tiny_train_config();
  t.max_epochs = 30;
  t.patience = 2;
  t.lr_init = 1e-9;
  t.warmup_multiplier = 1.0;
  const ClipSet train_clips = testing::tiny_clips(8, 0, 5), dev_clips = testing::tiny_clips(4, 50, 5);
  const ModelConfig mc = model_config_for(t, ModelMode::kSingle, train_clips);
  const auto r = train(prepare_dataset<float>(train_clips, mc), prepare_dataset<float>(dev_clips, mc),
                       mc, t, 1);
  CHECK(r.log.size() < 30);
  CHECK(r.log.size() == r.best_epoch + 1 + t.patience);
}

TEST_CASE("multi-seed results average the per-seed eval EERs") {
  const TrainConfig t = testing::tiny_train_config();
  const ClipSet tr = testing::tiny_clips(8, 0, 6), dv = testing::tiny_clips(4, 50, 6),
                ev = testing::tiny_clips(6, 90, 6);
  const ModelConfig mc = model_config_for(t, ModelMode::kDummyMultichannel, tr);
  std::vector<std::uint64_t> seen;
  const MultiSeedResult r = multi_seed<float>(
      prepare_dataset<float>(tr, mc), prepare_dataset<float>(dv, mc), prepare_dataset<float>(ev, mc),
      mc, t, [&](const SeedRun& run, const TrainResult<float>&, const ScoreSet& scores) {
        seen.push_back(run.seed);
        CHECK(scores.entries.size() == 6);
        CHECK(eer(scores) == run.eval_eer);
      });
  CHECK(seen == t.seeds);
  REQUIRE(r.runs.size() == 2);
  CHECK(r.mean_eer == doctest::Approx((r.runs[0].eval_eer + r.runs[1].eval_eer) / 2));
  CHECK(r.runs[0].architecture == r.runs[1].architecture);
}

}  // TEST_SUITE
