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

#include "mcreplay/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "mcreplay/logging.hpp"

namespace mcreplay {
namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const char* p) {
  const auto* b = reinterpret_cast<const unsigned char*>(p);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t read_u32(const char* p) {
  const auto* b = reinterpret_cast<const unsigned char*>(p);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

const char* label_name(Label label) {
  return label == Label::kGenuine ? "genuine" : "replayed";
}

Label parse_label(std::string_view text) {
  if (text == "genuine") return Label::kGenuine;
  if (text == "replayed") return Label::kReplayed;
  fail(ErrorCode::kParse, "unknown label '" + std::string(text) + "'");
}

const char* segment_position_name(SegmentPosition position) {
  return position == SegmentPosition::kBeginning ? "beginning" : "middle";
}

SegmentPosition parse_segment_position(std::string_view text) {
  if (text == "beginning") return SegmentPosition::kBeginning;
  if (text == "middle") return SegmentPosition::kMiddle;
  fail(ErrorCode::kConfig, "unknown segment position '" + std::string(text) + "'");
}

std::string validate_clip(const AudioClip& clip) {
  const std::size_t nc = clip.num_channels();
  check(nc >= 1 && nc <= kMaxChannels, ErrorCode::kInput,
        "clip must have 1-8 channels, got " + std::to_string(nc));
  for (const auto& ch : clip.channels) {
    check(ch.size() == clip.length(), ErrorCode::kInput,
          "clip channels have unequal lengths");
    for (const double v : ch) {
      check(std::isfinite(v) && std::abs(v) < 1.0 + 1e-9, ErrorCode::kInput,
            "sample out of range in " + clip.source_path);
    }
  }
  check(clip.sample_rate > 0, ErrorCode::kInput, "sample rate must be positive");
  if (clip.sample_rate != 16000 && clip.sample_rate != 44100) {
    return "sample rate " + std::to_string(clip.sample_rate) +
           " Hz is not one of the array presets (16000, 44100)";
  }
  return {};
}

AudioClip parse_wav(std::string_view bytes, const std::string& source) {
  const auto malformed = [&](const std::string& why) {
    fail(ErrorCode::kParse, source + ": malformed WAV: " + why);
  };
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE") {
    malformed("missing RIFF/WAVE header");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  std::string_view payload;
  bool have_data = false;
  while (pos + 8 <= bytes.size()) {
    const std::string_view id = bytes.substr(pos, 4);
    const std::uint32_t size = read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (id == "data") {
      // Some writers leave the data size unset; clamp to what is present.
      const std::size_t avail = bytes.size() - body;
      payload = bytes.substr(body, std::min<std::size_t>(size, avail));
      have_data = true;
      if (size > avail) break;
    } else if (body + size > bytes.size()) {
      malformed("truncated '" + std::string(id) + "' chunk");
    }
    if (id == "fmt ") {
      if (size < 16) malformed("fmt chunk too short");
      const char* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      block_align = read_u16(f + 12);
      bits = read_u16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40) malformed("extensible fmt chunk too short");
        format = read_u16(f + 24);
      }
      have_fmt = true;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) malformed("no fmt chunk");
  if (!have_data) malformed("no data chunk");
  if (format == kFormatFloat) {
    fail(ErrorCode::kUnsupportedFormat, source + ": IEEE-float WAV is not supported");
  }
  if (format != kFormatPcm) {
    fail(ErrorCode::kUnsupportedFormat,
         source + ": unsupported WAV codec 0x" + [&] {
           std::ostringstream os;
           os << std::hex << format;
           return os.str();
         }());
  }
  if (bits != 16 && bits != 32) {
    fail(ErrorCode::kUnsupportedFormat,
         source + ": unsupported PCM bit depth " + std::to_string(bits));
  }
  if (channels < 1 || channels > kMaxChannels) {
    fail(ErrorCode::kUnsupportedFormat,
         source + ": unsupported channel count " + std::to_string(channels));
  }
  const std::size_t sample_bytes = bits / 8;
  if (block_align != channels * sample_bytes) malformed("inconsistent block alignment");
  if (rate == 0) malformed("zero sample rate");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.bit_depth = bits;
  clip.source_path = source;
  const std::size_t frames = payload.size() / block_align;
  clip.channels.assign(channels, std::vector<double>(frames));
  const double scale = 1.0 / std::ldexp(1.0, bits - 1);
  const char* p = payload.data();
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < channels; ++c, p += sample_bytes) {
      const double v = bits == 16
                           ? static_cast<double>(static_cast<std::int16_t>(read_u16(p)))
                           : static_cast<double>(static_cast<std::int32_t>(read_u32(p)));
      clip.channels[c][t] = v * scale;
    }
  }
  const std::string warning = validate_clip(clip);
  if (!warning.empty()) log_warning(source + ": " + warning);
  return clip;
}

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  check(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_wav(bytes, path.string());
}

std::string encode_wav(const AudioClip& clip) {
  validate_clip(clip);
  check(clip.bit_depth == 16 || clip.bit_depth == 32, ErrorCode::kUnsupportedFormat,
        "can only write 16- or 32-bit PCM");
  const std::uint16_t channels = static_cast<std::uint16_t>(clip.num_channels());
  const std::uint16_t sample_bytes = static_cast<std::uint16_t>(clip.bit_depth / 8);
  const std::uint64_t data_size =
      static_cast<std::uint64_t>(clip.length()) * channels * sample_bytes;
  check(data_size < 0xFFFFFFF0ULL - 36, ErrorCode::kIo, "clip too long for RIFF");
  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, static_cast<std::uint32_t>(36 + data_size));
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, channels);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * channels * sample_bytes);
  put_u16(out, static_cast<std::uint16_t>(channels * sample_bytes));
  put_u16(out, static_cast<std::uint16_t>(clip.bit_depth));
  out += "data";
  put_u32(out, static_cast<std::uint32_t>(data_size));
  const double full = std::ldexp(1.0, clip.bit_depth - 1);
  const double lo = -full;
  const double hi = full - 1.0;
  for (std::size_t t = 0; t < clip.length(); ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double q = std::clamp(std::nearbyint(clip.channels[c][t] * full), lo, hi);
      if (clip.bit_depth == 16) {
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      } else {
        put_u32(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(q)));
      }
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  const std::string bytes = encode_wav(clip);
  std::ofstream out(path, std::ios::binary);
  check(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  check(static_cast<bool>(out), ErrorCode::kIo, "write failed for " + path.string());
}

AudioClip select_segment(const AudioClip& clip, double length_s,
                         SegmentPosition position) {
  check(clip.num_channels() >= 1 && clip.length() >= 1, ErrorCode::kInput,
        "cannot select a segment of an empty clip");
  check(std::isfinite(length_s) && length_s > 0, ErrorCode::kInput,
        "segment length must be positive");
  const auto want = static_cast<std::size_t>(std::llround(length_s * clip.sample_rate));
  check(want >= 1, ErrorCode::kInput, "segment shorter than one sample");
  const std::size_t total = clip.length();
  std::size_t start = 0;
  if (position == SegmentPosition::kMiddle && total > want) start = (total - want) / 2;
  AudioClip out = clip;
  for (std::size_t c = 0; c < clip.num_channels(); ++c) {
    std::vector<double> seg(want, 0.0);
    const std::size_t n = std::min(want, total - start);
    std::copy_n(clip.channels[c].begin() + static_cast<std::ptrdiff_t>(start), n, seg.begin());
    out.channels[c] = std::move(seg);
  }
  return out;
}

std::size_t frame_length_for(int sample_rate) {
  check(sample_rate > 0, ErrorCode::kInput, "sample rate must be positive");
  return static_cast<std::size_t>(std::llround(kFrameDuration * sample_rate));
}

template <typename T>
FrameBatch<T> frame(const AudioClip& segment) {
  const std::size_t m = frame_length_for(segment.sample_rate);
  const std::size_t nc = segment.num_channels();
  check(nc >= 1, ErrorCode::kInput, "cannot frame a clip without channels");
  check(segment.length() >= m, ErrorCode::kInput,
        "segment of " + std::to_string(segment.length()) +
            " samples is shorter than one frame (" + std::to_string(m) + ")");
  const std::size_t nf = segment.length() / m;
  FrameBatch<T> batch;
  batch.frames = Tensor<T>(Shape{nf, nc, m});
  for (std::size_t f = 0; f < nf; ++f) {
    for (std::size_t c = 0; c < nc; ++c) {
      const double* src = segment.channels[c].data() + f * m;
      T* dst = batch.frames.data() + (f * nc + c) * m;
      for (std::size_t i = 0; i < m; ++i) dst[i] = static_cast<T>(src[i]);
    }
  }
  batch.frame_length = m;
  batch.label = segment.label;
  batch.speaker_id = segment.speaker_id;
  batch.device_id = segment.device_id;
  batch.source_path = segment.source_path;
  return batch;
}

template FrameBatch<float> frame<float>(const AudioClip&);
template FrameBatch<double> frame<double>(const AudioClip&);

AudioClip replicate_channels(const AudioClip& clip, std::size_t count) {
  check(clip.num_channels() >= 1, ErrorCode::kInput, "clip has no channels");
  check(count >= 1 && count <= kMaxChannels, ErrorCode::kInput,
        "replication count must be in [1, 8], got " + std::to_string(count));
  AudioClip out = clip;
  out.channels.assign(count, clip.channels[0]);
  return out;
}

AudioClip select_channels(const AudioClip& clip, const std::vector<int>& indices) {
  check(!indices.empty(), ErrorCode::kInput, "channel selection is empty");
  check(indices.size() <= kMaxChannels, ErrorCode::kInput, "too many channels selected");
  AudioClip out = clip;
  out.channels.clear();
  for (const int idx : indices) {
    check(idx >= 1 && static_cast<std::size_t>(idx) <= clip.num_channels(),
          ErrorCode::kInput,
          "channel index " + std::to_string(idx) + " out of range 1.." +
              std::to_string(clip.num_channels()));
    out.channels.push_back(clip.channels[static_cast<std::size_t>(idx - 1)]);
  }
  return out;
}

}  // namespace mcreplay
