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
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mcreplay/error.hpp"
#include "mcreplay/synth.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mcreplay;

namespace {

double rms(const std::vector<double>& x, std::size_t begin, std::size_t end) {
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(end - begin));
}

// Lag of b relative to a at the cross-correlation peak, refined by a
// parabola through the peak and its neighbours.
double xcorr_delay(const std::vector<double>& a, const std::vector<double>& b, int max_lag) {
  std::vector<double> r(2 * max_lag + 1);
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
      const long u = static_cast<long>(t) + lag;
      if (u >= 0 && u < static_cast<long>(b.size())) acc += a[t] * b[u];
    }
    r[lag + max_lag] = acc;
  }
  const auto peak = static_cast<int>(std::max_element(r.begin() + 1, r.end() - 1) - r.begin());
  const double y0 = r[peak - 1], y1 = r[peak], y2 = r[peak + 1];
  return peak - max_lag + 0.5 * (y0 - y2) / (y0 - 2.0 * y1 + y2);
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

CorpusConfig desk_corpus() {
  CorpusConfig c;
  c.sample_rate = 16000;
  c.min_duration_s = 1.0;
  c.max_duration_s = 1.0;
  return c;
}

}  // namespace

TEST_SUITE("synth-corpus") {

TEST_CASE("geometry presets") {
  const auto d1 = geometry_preset("d1"), d2 = geometry_preset("d2");
  const auto d3 = geometry_preset("d3"), d4 = geometry_preset("d4");
  CHECK(d1.size() == 2);
  CHECK(d2.size() == 4);
  CHECK(d3.size() == 6);
  CHECK(d4.size() == 7);
  CHECK(d3.bit_depth == 32);
  CHECK(d4.sample_rate == 16000);
  CHECK(ablation_order("d2") == std::vector<int>{1, 4, 2, 3});
  for (const char* name : {"d1", "d2", "d3", "d4"}) {
    const auto order = ablation_order(name);
    CHECK(std::set<int>(order.begin(), order.end()).size() == geometry_preset(name).size());
  }
  CHECK_THROWS_AS(geometry_preset("d9"), Error);
  ArrayGeometry twin{"t", {{0, 0, 0}, {0, 0, 0}}};
  CHECK_THROWS_AS(twin.validate(), Error);
}

TEST_CASE("synth_source is deterministic, sized and starts quietly") {
  const auto a = synth_source(1.0, 9, 44100);
  const auto b = synth_source(1.0, 9, 44100);
  CHECK(a.size() == 44100);
  CHECK(a == b);
  CHECK(synth_source(1.0, 10, 44100) != a);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto x = synth_source(2.0, seed, 16000, voice_for_speaker(seed));
    CHECK(rms(x, 0, 3200) < 0.1 * rms(x, 3200, x.size()));
  }
}

TEST_CASE("voices stay in the pitch range") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Voice v = voice_for_speaker(s);
    CHECK(v.pitch_hz >= 80.0);
    CHECK(v.pitch_hz <= 300.0);
  }
}

TEST_CASE("fractional delay by an integer is a shift") {
  std::vector<double> x(200, 0.0);
  x[50] = 1.0;
  const auto y = fractional_delay(x, 7.0);
  for (std::size_t t = 0; t < y.size(); ++t) CHECK(y[t] == doctest::Approx(t == 57 ? 1.0 : 0.0));
}

TEST_CASE("equidistant microphones receive identical signals") {
  ArrayGeometry g{"pair", {{-0.05, 0, 0}, {0.05, 0, 0}}, 16000, 16};
  SceneSpec scene;
  scene.talker = {0.0, 1.3, 0.2};
  const AudioClip clip = propagate(synth_source(0.5, 4, 16000), g, scene);
  for (std::size_t t = 0; t < clip.length(); ++t) {
    CHECK(std::abs(clip.channels[0][t] - clip.channels[1][t]) < 1e-6);
  }
}

TEST_CASE("0.343 m along the propagation axis delays by 44.1 samples") {
  ArrayGeometry g{"axis", {{0, 0, 0}, {0.343, 0, 0}}, 44100, 16};
  SceneSpec scene;
  scene.talker = {-2.0, 0.0, 0.0};
  const AudioClip clip = propagate(synth_source(0.5, 2, 44100), g, scene);
  CHECK(xcorr_delay(clip.channels[0], clip.channels[1], 80) == doctest::Approx(44.1).epsilon(0.002));
}

TEST_CASE("identity coloration at the talker position gives identical classes") {
  const auto g = geometry_preset("d2");
  const auto src = synth_source(0.3, 5, g.sample_rate);
  SceneSpec scene;
  scene.talker = scene.loudspeaker = {0.4, 1.2, 0.1};
  scene.coloration = {1.0};
  const AudioClip genuine = propagate(src, g, scene);
  scene.label = Label::kReplayed;
  const AudioClip replayed = propagate(src, g, scene);
  CHECK(genuine.channels == replayed.channels);
}

TEST_CASE("source at a microphone is a geometry error") {
  const auto g = geometry_preset("d1");
  SceneSpec scene;
  scene.talker = g.mics[1];
  try {
    propagate(synth_source(0.1, 1, g.sample_rate), g, scene);
    FAIL("coincident source accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kGeometry);
  }
}

TEST_CASE("additive noise meets the requested SNR") {
  const auto g = geometry_preset("d2");
  const auto src = synth_source(1.0, 3, g.sample_rate);
  SceneSpec clean;
  clean.talker = {0.3, 1.0, 0.0};
  SceneSpec noisy = clean;
  noisy.snr_db = 10.0;
  noisy.seed = 77;
  const AudioClip a = propagate(src, g, clean), b = propagate(src, g, noisy);
  double signal = 0.0, noise = 0.0;
  for (std::size_t c = 0; c < a.num_channels(); ++c) {
    for (std::size_t t = 0; t < a.length(); ++t) {
      signal += a.channels[c][t] * a.channels[c][t];
      const double n = b.channels[c][t] - a.channels[c][t];
      noise += n * n;
    }
  }
  CHECK(10.0 * std::log10(signal / noise) == doctest::Approx(10.0).epsilon(0.02));
}

TEST_CASE("default coloration is a unit-gain band-pass") {
  const auto h = default_coloration(44100);
  REQUIRE(h.size() == 64);
  const auto gain_db = [&](double f) {
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < h.size(); ++n) {
      re += h[n] * std::cos(2.0 * std::numbers::pi * f * n / 44100.0);
      im -= h[n] * std::sin(2.0 * std::numbers::pi * f * n / 44100.0);
    }
    return 10.0 * std::log10(re * re + im * im);
  };
  CHECK(std::abs(gain_db(1000.0)) < 0.5);
  CHECK(gain_db(15000.0) < -15.0);
  for (std::size_t n = 0; n < 32; ++n) CHECK(h[n] == doctest::Approx(h[63 - n]));
}

TEST_CASE("default class counts follow the core-set ratio") {
  const auto [g, r] = default_class_counts(23506);
  CHECK(g == 6331);
  CHECK(r == 17175);
  const auto [g2, r2] = default_class_counts(200);
  CHECK(g2 + r2 == 200);
  CHECK(g2 == 54);
}

TEST_CASE("corpus splits are speaker-disjoint and regeneration is byte-identical") {
  testing::TempDir a("corpus_a"), b("corpus_b");
  const CorpusConfig config = desk_corpus();
  const Manifest m = generate_corpus(10, 10, config, 3, a.path());
  generate_corpus(10, 10, config, 3, b.path());
  REQUIRE(m.entries.size() == 20);
  std::size_t genuine = 0;
  std::map<Split, std::set<std::string>> speakers;
  for (const auto& e : m.entries) {
    genuine += e.label == Label::kGenuine;
    speakers[e.split].insert(e.speaker);
    CHECK(read_bytes(a / e.path) == read_bytes(b / e.path));
  }
  CHECK(genuine == 10);
  CHECK(read_bytes(a / "manifest.jsonl") == read_bytes(b / "manifest.jsonl"));
  for (const Split s : {Split::kTrain, Split::kDev, Split::kEval}) CHECK_FALSE(speakers[s].empty());
  for (const auto& [s1, set1] : speakers) {
    for (const auto& [s2, set2] : speakers) {
      if (s1 == s2) continue;
      for (const auto& spk : set1) CHECK(set2.count(spk) == 0);
    }
  }
  const AudioClip from_disk = load_entry(m, m.entries[4]);
  CHECK(from_disk.num_channels() == 4);
  CHECK(from_disk.length() == 16000);
}

TEST_CASE("generate_clip does not depend on generation order") {
  const CorpusConfig config = desk_corpus();
  const AudioClip late = generate_clip(7, Label::kReplayed, 2, config, 11);
  generate_clip(3, Label::kGenuine, 1, config, 11);
  CHECK(generate_clip(7, Label::kReplayed, 2, config, 11).channels == late.channels);
}

TEST_CASE("a stopband detector separates the classes") {
  testing::TempDir dir("separable");
  const Manifest m = generate_corpus(100, 100, desk_corpus(), 7, dir.path());
  std::vector<double> scores;
  std::vector<bool> replayed;
  for (const auto& e : m.entries) {
    scores.push_back(oracle::stopband_score(load_entry(m, e)));
    replayed.push_back(e.label == Label::kReplayed);
  }
  const double error = oracle::best_threshold_error(scores, replayed);
  MESSAGE("stopband detector error " << error);
  CHECK(error < 0.10);
}

TEST_CASE("unwritable output directory is an I/O error") {
  testing::TempDir dir("blocked");
  std::ofstream(dir / "file") << "x";
  try {
    generate_corpus(1, 1, desk_corpus(), 1, dir / "file");
    FAIL("wrote into a file path");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
  }
}

}  // TEST_SUITE
