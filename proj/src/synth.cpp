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

#include "mcreplay/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "mcreplay/rng.hpp"

namespace mcreplay {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLeadIn = 0.2;
constexpr double kSpeechRms = 0.05;
constexpr double kLeadInRms = 0.001;
constexpr std::uint64_t kVoiceStream = 0x766f696365ULL;

// Two-pole resonator at freq with bandwidth bw, unit gain at the peak.
struct Resonator {
  double b0 = 0, a1 = 0, a2 = 0, y1 = 0, y2 = 0;
  void set(double freq, double bw, int fs) {
    const double r = std::exp(-kPi * bw / fs);
    const double theta = 2.0 * kPi * freq / fs;
    a1 = 2.0 * r * std::cos(theta);
    a2 = -r * r;
    b0 = (1.0 - r) * std::sqrt(1.0 - 2.0 * r * std::cos(2.0 * theta) + r * r);
  }
  double step(double x) {
    const double y = b0 * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

double rms(const double* x, std::size_t n) {
  if (n == 0) return 0.0;
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(n));
}

Point3 place(Rng& rng, double az_min_deg, double az_max_deg, double d_min, double d_max) {
  const double az = rng.uniform(az_min_deg, az_max_deg) * kPi / 180.0 *
                    (rng.uniform() < 0.5 ? -1.0 : 1.0);
  const double d = rng.uniform(d_min, d_max);
  const double z = rng.uniform(0.0, 0.4);
  return {d * std::sin(az), d * std::cos(az), z};
}

}  // namespace

double distance(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void ArrayGeometry::validate() const {
  check(!mics.empty(), ErrorCode::kGeometry, "array has no microphones");
  check(mics.size() <= kMaxChannels, ErrorCode::kGeometry, "array has more than 8 microphones");
  for (std::size_t i = 0; i < mics.size(); ++i) {
    for (const double v : mics[i]) {
      check(std::isfinite(v), ErrorCode::kGeometry, "non-finite microphone position");
    }
    for (std::size_t j = 0; j < i; ++j) {
      check(distance(mics[i], mics[j]) > 0, ErrorCode::kGeometry,
            "microphones " + std::to_string(j + 1) + " and " + std::to_string(i + 1) +
                " coincide");
    }
  }
}

ArrayGeometry geometry_preset(std::string_view name) {
  ArrayGeometry g;
  g.name = std::string(name);
  const auto linear = [&](std::size_t n, double spacing) {
    for (std::size_t i = 0; i < n; ++i) {
      g.mics.push_back({(static_cast<double>(i) - (n - 1) / 2.0) * spacing, 0.0, 0.0});
    }
  };
  const auto circle = [&](std::size_t n, double radius) {
    for (std::size_t i = 0; i < n; ++i) {
      const double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
      g.mics.push_back({radius * std::cos(a), radius * std::sin(a), 0.0});
    }
  };
  if (name == "d1") {
    linear(2, 0.064);
  } else if (name == "d2") {
    linear(4, 0.05);
  } else if (name == "d3") {
    circle(6, 0.0463);
    g.bit_depth = 32;
  } else if (name == "d4") {
    circle(6, 0.04);
    g.mics.push_back({0.0, 0.0, 0.0});
    g.sample_rate = 16000;
  } else {
    fail(ErrorCode::kConfig, "unknown array preset '" + std::string(name) +
                                 "' (expected d1, d2, d3 or d4)");
  }
  return g;
}

std::vector<int> ablation_order(std::string_view preset) {
  if (preset == "d1") return {1, 2};
  if (preset == "d2") return {1, 4, 2, 3};
  if (preset == "d3") return {1, 4, 2, 5, 3, 6};
  if (preset == "d4") return {1, 4, 2, 5, 3, 6, 7};
  fail(ErrorCode::kConfig, "unknown array preset '" + std::string(preset) + "'");
}

std::vector<double> default_coloration(int sample_rate) {
  check(sample_rate > 0, ErrorCode::kConfig, "sample rate must be positive");
  constexpr std::size_t kTaps = 64;
  constexpr std::size_t kGrid = 1024;
  const double fs = sample_rate;
  const double lo = 150.0;
  const double hi = std::min(7000.0, 0.45 * fs);
  const auto magnitude = [&](double f) {
    if (f < lo || f > hi) return 0.0;
    const double ripple_db = 3.0 * std::sin(2.0 * kPi * f / 1100.0);
    return std::pow(10.0, ripple_db / 20.0);
  };
  // Linear-phase frequency sampling, Hamming-windowed.
  std::vector<double> h(kTaps, 0.0);
  const double centre = (kTaps - 1) / 2.0;
  for (std::size_t k = 0; k < kGrid; ++k) {
    const double f = (k + 0.5) * (fs / 2.0) / kGrid;
    const double a = magnitude(f);
    if (a == 0.0) continue;
    for (std::size_t n = 0; n < kTaps; ++n) {
      h[n] += a * std::cos(2.0 * kPi * f * (n - centre) / fs);
    }
  }
  for (std::size_t n = 0; n < kTaps; ++n) {
    const double w = 0.54 - 0.46 * std::cos(2.0 * kPi * n / (kTaps - 1));
    h[n] *= w / kGrid;
  }
  // Unit gain at 1 kHz.
  double re = 0, im = 0;
  for (std::size_t n = 0; n < kTaps; ++n) {
    re += h[n] * std::cos(2.0 * kPi * 1000.0 * n / fs);
    im -= h[n] * std::sin(2.0 * kPi * 1000.0 * n / fs);
  }
  const double gain = std::hypot(re, im);
  for (double& v : h) v /= gain;
  return h;
}

Voice voice_for_speaker(std::uint64_t speaker_seed) {
  Rng rng(speaker_seed);
  Voice v;
  v.pitch_hz = rng.uniform(80.0, 300.0);
  v.formant_scale = rng.uniform(0.85, 1.2);
  v.breathiness = rng.uniform(0.05, 0.3);
  v.spectral_tilt = rng.uniform(0.0, 0.6);
  v.fricative_rate = rng.uniform(0.3, 0.8);
  return v;
}

std::vector<double> synth_source(double duration_s, std::uint64_t seed, int sample_rate,
                                 const Voice& voice) {
  check(duration_s > 0 && std::isfinite(duration_s), ErrorCode::kInput,
        "duration must be positive");
  check(sample_rate > 0, ErrorCode::kInput, "sample rate must be positive");
  const double fs = sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  const std::size_t lead = std::min(n, static_cast<std::size_t>(std::llround(kLeadIn * fs)));
  Rng rng(seed);
  std::vector<double> out(n, 0.0);

  // Syllable envelope after the lead-in.
  std::vector<double> env(n, 0.0);
  std::vector<std::size_t> syllable_start;
  for (std::size_t t = lead + static_cast<std::size_t>(rng.uniform(0.0, 0.05) * fs); t < n;) {
    const auto len = static_cast<std::size_t>(rng.uniform(0.12, 0.30) * fs);
    syllable_start.push_back(t);
    const double peak = rng.uniform(0.6, 1.0);
    for (std::size_t i = 0; i < len && t + i < n; ++i) {
      const double s = std::sin(kPi * static_cast<double>(i) / static_cast<double>(len));
      env[t + i] = peak * s * s;
    }
    t += len + static_cast<std::size_t>(rng.uniform(0.03, 0.12) * fs);
  }

  // Harmonic excitation sum_k sin(k phi) / k^(1 + tilt), harmonics below
  // 0.45 fs, built with the Chebyshev recurrence.
  const double phase1 = rng.uniform(0.0, 2.0 * kPi);
  const double phase2 = rng.uniform(0.0, 2.0 * kPi);
  const double rate1 = rng.uniform(0.4, 1.2);
  const double rate2 = rng.uniform(1.5, 3.0);
  double phi = rng.uniform(0.0, 2.0 * kPi);
  const double noise_pole = 0.6;
  double shaped = 0.0;
  std::vector<double> excitation(n, 0.0);
  for (std::size_t t = lead; t < n; ++t) {
    if (env[t] == 0.0) continue;
    const double time = t / fs;
    double f0 = voice.pitch_hz * (1.0 + 0.12 * std::sin(2.0 * kPi * rate1 * time + phase1) +
                                  0.04 * std::sin(2.0 * kPi * rate2 * time + phase2));
    f0 = std::clamp(f0, 80.0, 300.0);
    phi = std::fmod(phi + 2.0 * kPi * f0 / fs, 2.0 * kPi);
    const auto harmonics = static_cast<int>(0.45 * fs / f0);
    const double c2 = 2.0 * std::cos(phi);
    double s_prev = 0.0, s_cur = std::sin(phi), acc = 0.0;
    for (int k = 1; k <= harmonics; ++k) {
      acc += s_cur / std::pow(static_cast<double>(k), 1.0 + voice.spectral_tilt);
      const double s_next = c2 * s_cur - s_prev;
      s_prev = s_cur;
      s_cur = s_next;
    }
    shaped = noise_pole * shaped + rng.normal();
    excitation[t] = acc + voice.breathiness * 3.0 * shaped;
  }

  // Formants, re-drawn per syllable.
  std::array<Resonator, 3> formants;
  std::size_t next_syllable = 0;
  for (std::size_t t = lead; t < n; ++t) {
    if (next_syllable < syllable_start.size() && t == syllable_start[next_syllable]) {
      const double s = voice.formant_scale;
      formants[0].set(rng.uniform(300.0, 850.0) * s, rng.uniform(60.0, 120.0), sample_rate);
      formants[1].set(rng.uniform(900.0, 2300.0) * s, rng.uniform(80.0, 160.0), sample_rate);
      formants[2].set(std::min(rng.uniform(2300.0, 3300.0) * s, 0.45 * fs),
                      rng.uniform(120.0, 250.0), sample_rate);
      ++next_syllable;
    }
    const double x = excitation[t];
    out[t] = env[t] * (formants[0].step(x) + 0.6 * formants[1].step(x) +
                       0.3 * formants[2].step(x) + 0.02 * x);
  }

  const double speech_rms = rms(out.data() + lead, n - lead);
  if (speech_rms > 0) {
    for (std::size_t t = lead; t < n; ++t) out[t] *= kSpeechRms / speech_rms;
  }

  // Unvoiced fricatives ahead of some syllables: differenced noise through a
  // broad high resonance.
  for (const std::size_t start : syllable_start) {
    if (rng.uniform() >= voice.fricative_rate) continue;
    const auto len = static_cast<std::size_t>(rng.uniform(0.03, 0.09) * fs);
    const std::size_t begin = start > lead + len ? start - len : lead;
    Resonator hiss;
    hiss.set(std::min(rng.uniform(3000.0, 7000.0), 0.42 * fs), rng.uniform(1500.0, 3000.0),
             sample_rate);
    const double level = kSpeechRms * rng.uniform(0.8, 2.0);
    double prev = 0.0;
    for (std::size_t i = 0; begin + i < std::min(n, begin + len); ++i) {
      const double w = rng.normal();
      const double s = std::sin(kPi * static_cast<double>(i) / static_cast<double>(len));
      out[begin + i] += level * s * hiss.step(w - prev);
      prev = w;
    }
  }
  // Low-level breath/room floor everywhere, including the lead-in.
  for (std::size_t t = 0; t < n; ++t) out[t] += kLeadInRms * rng.normal();
  return out;
}

std::vector<double> fractional_delay(const std::vector<double>& signal, double delay) {
  check(std::isfinite(delay) && delay >= 0, ErrorCode::kInput,
        "delay must be finite and non-negative");
  constexpr int kHalf = 16;  // taps k in [-15, 16]
  const auto whole = static_cast<std::ptrdiff_t>(std::floor(delay));
  const double frac = delay - static_cast<double>(whole);
  std::array<double, 2 * kHalf> taps{};
  for (int k = -kHalf + 1; k <= kHalf; ++k) {
    const double u = k - frac;
    const double sinc = std::abs(u) < 1e-12 ? 1.0 : std::sin(kPi * u) / (kPi * u);
    const double w = 0.5 + 0.5 * std::cos(kPi * u / (kHalf + 0.5));
    taps[k + kHalf - 1] = sinc * w;
  }
  const auto n = static_cast<std::ptrdiff_t>(signal.size());
  std::vector<double> out(signal.size(), 0.0);
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (int k = -kHalf + 1; k <= kHalf; ++k) {
      const std::ptrdiff_t i = t - whole - k;
      if (i >= 0 && i < n) acc += signal[static_cast<std::size_t>(i)] * taps[k + kHalf - 1];
    }
    out[static_cast<std::size_t>(t)] = acc;
  }
  return out;
}

AudioClip propagate(const std::vector<double>& source, const ArrayGeometry& geometry,
                    const SceneSpec& scene) {
  geometry.validate();
  check(scene.speed_of_sound > 0, ErrorCode::kGeometry, "speed of sound must be positive");
  check(!std::isnan(scene.snr_db), ErrorCode::kInput, "SNR must not be NaN");
  std::vector<double> emitted = source;
  Point3 origin = scene.talker;
  if (scene.label == Label::kReplayed) {
    origin = scene.loudspeaker;
    if (!scene.coloration.empty()) {
      const auto& h = scene.coloration;
      for (std::size_t t = 0; t < source.size(); ++t) {
        double acc = 0.0;
        for (std::size_t k = 0; k < h.size() && k <= t; ++k) acc += h[k] * source[t - k];
        emitted[t] = acc;
      }
    }
  }
  AudioClip clip;
  clip.sample_rate = geometry.sample_rate;
  clip.bit_depth = geometry.bit_depth;
  clip.label = scene.label;
  clip.device_id = geometry.name;
  for (const Point3& mic : geometry.mics) {
    const double d = distance(origin, mic);
    check(d > 0, ErrorCode::kGeometry, "source coincides with a microphone");
    std::vector<double> ch =
        fractional_delay(emitted, d / scene.speed_of_sound * geometry.sample_rate);
    for (double& v : ch) v /= d;
    clip.channels.push_back(std::move(ch));
  }
  if (std::isfinite(scene.snr_db)) {
    double power = 0.0;
    std::size_t count = 0;
    for (const auto& ch : clip.channels) {
      for (const double v : ch) power += v * v;
      count += ch.size();
    }
    power /= std::max<std::size_t>(count, 1);
    const double sigma = std::sqrt(power / std::pow(10.0, scene.snr_db / 10.0));
    const double rho = std::clamp(scene.noise_correlation, 0.0, 1.0);
    Rng rng(mix_seed(scene.seed, 0x6e6f697365ULL));
    std::vector<double> shared(clip.length());
    for (double& v : shared) v = rng.normal();
    for (auto& ch : clip.channels) {
      for (std::size_t t = 0; t < ch.size(); ++t) {
        ch[t] += sigma * (std::sqrt(rho) * shared[t] + std::sqrt(1.0 - rho) * rng.normal());
      }
    }
  }
  const double top = 1.0 - std::ldexp(1.0, -(clip.bit_depth - 1));
  for (auto& ch : clip.channels) {
    for (double& v : ch) v = std::clamp(v, -1.0, top);
  }
  return clip;
}

std::pair<std::size_t, std::size_t> default_class_counts(std::size_t total) {
  check(total >= 2, ErrorCode::kInput, "need at least one clip per class");
  auto genuine = static_cast<std::size_t>(
      std::llround(static_cast<double>(total) * 6331.0 / (6331.0 + 17175.0)));
  genuine = std::clamp<std::size_t>(genuine, 1, total - 1);
  return {genuine, total - genuine};
}

AudioClip generate_clip(std::size_t index, Label label, std::size_t speaker,
                        const CorpusConfig& config, std::uint64_t seed) {
  ArrayGeometry geometry = geometry_preset(config.preset);
  if (config.sample_rate > 0) geometry.sample_rate = config.sample_rate;
  if (config.bit_depth > 0) geometry.bit_depth = config.bit_depth;
  Rng rng(mix_seed(seed, index));
  const Voice voice = voice_for_speaker(mix_seed(seed ^ kVoiceStream, speaker));
  const double duration = rng.uniform(config.min_duration_s, config.max_duration_s);
  std::vector<double> source =
      synth_source(duration, rng.next_u64(), geometry.sample_rate, voice);
  const double gain = std::pow(10.0, rng.uniform(-config.gain_db_range, config.gain_db_range) / 20.0);
  for (double& v : source) v *= gain;
  SceneSpec scene;
  scene.label = label;
  scene.talker = place(rng, config.talker_azimuth_min, config.talker_azimuth_max,
                       config.min_distance, config.max_distance);
  scene.loudspeaker = place(rng, config.speaker_azimuth_min, config.speaker_azimuth_max,
                            config.min_distance, config.max_distance);
  scene.snr_db = rng.uniform(config.min_snr_db, config.max_snr_db);
  scene.noise_correlation = config.noise_correlation;
  scene.coloration = default_coloration(geometry.sample_rate);
  scene.seed = rng.next_u64();
  AudioClip clip = propagate(source, geometry, scene);
  char id[32];
  std::snprintf(id, sizeof id, "spk%04zu", speaker);
  clip.speaker_id = id;
  return clip;
}

Manifest generate_corpus(std::size_t n_genuine, std::size_t n_replayed,
                         const CorpusConfig& config, std::uint64_t seed,
                         const std::filesystem::path& out_dir) {
  check(n_genuine >= 1 && n_replayed >= 1, ErrorCode::kInput,
        "corpus needs at least one clip per class");
  check(config.clips_per_speaker >= 1, ErrorCode::kConfig, "clips_per_speaker must be positive");
  check(config.min_duration_s > 0 && config.max_duration_s >= config.min_duration_s,
        ErrorCode::kConfig, "bad clip duration range");
  const std::size_t total = n_genuine + n_replayed;
  const std::size_t speakers =
      std::max<std::size_t>(3, (total + config.clips_per_speaker - 1) / config.clips_per_speaker);

  // Speaker-level split assignment keeps train, dev and eval disjoint.
  std::vector<std::size_t> order(speakers);
  for (std::size_t i = 0; i < speakers; ++i) order[i] = i;
  Rng split_rng(mix_seed(seed, 0x73706c6974ULL));
  split_rng.shuffle(order.begin(), order.end());
  const auto n_eval = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(config.eval_fraction * speakers)), 1, speakers - 2);
  const auto n_dev = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(config.dev_fraction * (speakers - n_eval))), 1,
      speakers - n_eval - 1);
  std::vector<Split> speaker_split(speakers, Split::kTrain);
  for (std::size_t i = 0; i < n_eval; ++i) speaker_split[order[i]] = Split::kEval;
  for (std::size_t i = n_eval; i < n_eval + n_dev; ++i) speaker_split[order[i]] = Split::kDev;

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "clips", ec);
  check(!ec, ErrorCode::kIo, "cannot create " + (out_dir / "clips").string() + ": " + ec.message());

  Manifest manifest;
  manifest.base_dir = out_dir;
  for (std::size_t i = 0; i < total; ++i) {
    const Label label = i < n_genuine ? Label::kGenuine : Label::kReplayed;
    const std::size_t speaker = i % speakers;
    AudioClip clip = generate_clip(i, label, speaker, config, seed);
    char name[48];
    std::snprintf(name, sizeof name, "clips/clip_%05zu.wav", i);
    write_wav(out_dir / name, clip);
    ManifestEntry e;
    e.path = name;
    e.label = label;
    e.device = clip.device_id;
    e.speaker = clip.speaker_id;
    e.environment = config.environment;
    e.split = speaker_split[speaker];
    manifest.entries.push_back(std::move(e));
  }
  write_manifest(out_dir / "manifest.jsonl", manifest);
  return manifest;
}

}  // namespace mcreplay
