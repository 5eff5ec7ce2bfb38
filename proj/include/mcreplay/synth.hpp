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

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "mcreplay/audio.hpp"
#include "mcreplay/manifest.hpp"

namespace mcreplay {

using Point3 = std::array<double, 3>;

double distance(const Point3& a, const Point3& b);

// Microphone positions in meters; the array centre is the origin and the
// array lies in the z = 0 plane. Index i is microphone i + 1.
struct ArrayGeometry {
  std::string name;
  std::vector<Point3> mics;
  int sample_rate = 44100;
  int bit_depth = 16;

  std::size_t size() const { return mics.size(); }
  // Throws kGeometry when empty, non-finite or two mics coincide.
  void validate() const;
};

// d1: 2-mic linear, d2: 4-mic linear, d3: 6-mic circular, d4: 6-mic circle
// plus centre mic 7. Sample rate and bit depth follow the recording presets.
ArrayGeometry geometry_preset(std::string_view name);

// Channel orders for the channel-count ablation, each next microphone being
// the one furthest from the previously added one.
std::vector<int> ablation_order(std::string_view preset);

struct SceneSpec {
  Point3 talker{1.0, 0.0, 0.0};
  Point3 loudspeaker{1.0, 0.0, 0.0};
  double speed_of_sound = 343.0;
  double snr_db = std::numeric_limits<double>::infinity();
  double noise_correlation = 0.0;  // 0 = independent per channel
  Label label = Label::kGenuine;
  std::vector<double> coloration;  // FIR applied before replay
  std::uint64_t seed = 0;
};

// Band-pass FIR (64 taps) approximating 150 Hz - 7 kHz with a +/-3 dB
// passband ripple: a crude loudspeaker model.
std::vector<double> default_coloration(int sample_rate);

// Speech-like voice parameters drawn per speaker.
struct Voice {
  double pitch_hz = 150.0;        // in [80, 300]
  double formant_scale = 1.0;
  double breathiness = 0.1;
  double spectral_tilt = 0.0;     // extra harmonic roll-off exponent
  double fricative_rate = 0.5;    // share of syllables led by a fricative
};

Voice voice_for_speaker(std::uint64_t speaker_seed);

// Harmonic pulse train with a randomized pitch contour plus shaped noise,
// formant-filtered and syllable-modulated, preceded by a 0.2 s low-energy
// non-speech lead-in. Deterministic per (voice, seed).
std::vector<double> synth_source(double duration_s, std::uint64_t seed, int sample_rate,
                                 const Voice& voice = Voice{});

// Delays the signal by delay_samples using a 32-tap Hann-windowed sinc.
std::vector<double> fractional_delay(const std::vector<double>& signal,
                                     double delay_samples);

// Propagates a mono source to every microphone (distance delay, 1/distance
// attenuation, additive noise at the requested SNR). Replayed scenes filter
// the source with the coloration and emit it from the loudspeaker position.
AudioClip propagate(const std::vector<double>& source, const ArrayGeometry& geometry,
                    const SceneSpec& scene);

struct CorpusConfig {
  std::string preset = "d2";
  int sample_rate = 0;            // 0: preset rate
  int bit_depth = 0;              // 0: preset depth
  double min_duration_s = 2.0;
  double max_duration_s = 3.0;
  double min_snr_db = 20.0;
  double max_snr_db = 30.0;
  double noise_correlation = 0.0;
  std::size_t clips_per_speaker = 10;
  double eval_fraction = 0.2;     // of speakers
  double dev_fraction = 0.1;      // of the remaining (core) speakers
  // Placement as |azimuth| in degrees from broadside (+y), side chosen at
  // random, and horizontal distance in metres from the array centre.
  double talker_azimuth_min = 0.0, talker_azimuth_max = 30.0;
  double speaker_azimuth_min = 40.0, speaker_azimuth_max = 90.0;
  double min_distance = 0.8, max_distance = 2.5;
  double gain_db_range = 6.0;     // per-clip random level, +/- range
  std::string environment = "synthetic";
};

// Counts for a requested total at the core-set class ratio 6331:17175.
std::pair<std::size_t, std::size_t> default_class_counts(std::size_t total);

// Writes n_genuine + n_replayed WAV files plus manifest.jsonl into out_dir.
// Train/dev/eval splits have disjoint speaker ids. Clip i draws from the
// stream mix_seed(seed, i), so output does not depend on generation order.
Manifest generate_corpus(std::size_t n_genuine, std::size_t n_replayed,
                         const CorpusConfig& config, std::uint64_t seed,
                         const std::filesystem::path& out_dir);

// In-memory form of one corpus clip, as written by generate_corpus.
AudioClip generate_clip(std::size_t index, Label label, std::size_t speaker,
                        const CorpusConfig& config, std::uint64_t seed);

}  // namespace mcreplay
