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

#include "mcreplay/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mcreplay/ops.hpp"
#include "mcreplay/rng.hpp"

namespace mcreplay {

const char* model_mode_name(ModelMode mode) {
  switch (mode) {
    case ModelMode::kSingle: return "single";
    case ModelMode::kDummyMultichannel: return "dummy";
    case ModelMode::kMultichannel: return "multichannel";
  }
  return "?";
}

ModelMode parse_model_mode(std::string_view text) {
  if (text == "single") return ModelMode::kSingle;
  if (text == "dummy" || text == "dummy-multichannel") return ModelMode::kDummyMultichannel;
  if (text == "multichannel" || text == "multi") return ModelMode::kMultichannel;
  fail(ErrorCode::kConfig, "unknown model mode '" + std::string(text) + "'");
}

std::size_t ModelConfig::input_channels() const {
  return mode == ModelMode::kSingle ? 1 : channel_order.size();
}

std::size_t ModelConfig::freq_pooled_width() const {
  const std::size_t q = freq_conv_width();
  return q < freq_pool ? 1 : (q - freq_pool) / freq_pool + 1;
}

void ModelConfig::validate() const {
  check(!channel_order.empty() && channel_order.size() <= kMaxChannels,
        ErrorCode::kConfig, "channel order must list 1-8 channels");
  for (const int c : channel_order) {
    check(c >= 1 && c <= static_cast<int>(kMaxChannels), ErrorCode::kConfig,
          "channel index " + std::to_string(c) + " out of range");
  }
  check(sample_rate > 0, ErrorCode::kConfig, "sample rate must be positive");
  check(filter_length() >= 1 && filter_length() < frame_length(), ErrorCode::kConfig,
        "filter length must be shorter than the frame");
  check(freq_kernel >= 1 && filters >= freq_kernel, ErrorCode::kConfig,
        "filters per channel (" + std::to_string(filters) +
            ") must be at least the frequency kernel width (" +
            std::to_string(freq_kernel) + ")");
  check(freq_maps >= 1 && freq_pool >= 1 && embed_dim >= 1 && lstm_hidden >= 1 &&
            lstm_layers >= 1,
        ErrorCode::kConfig, "layer sizes must be positive");
  check(std::isfinite(segment_seconds) && segment_seconds > 0, ErrorCode::kConfig,
        "segment length must be positive");
}

ModelConfig make_model_config(ModelMode mode, std::vector<int> channel_order,
                              int sample_rate, std::size_t filters) {
  check(!channel_order.empty(), ErrorCode::kConfig, "channel order is empty");
  ModelConfig cfg;
  cfg.mode = mode;
  if (mode == ModelMode::kSingle) channel_order.resize(1);
  cfg.channel_order = std::move(channel_order);
  cfg.sample_rate = sample_rate;
  cfg.filters = filters;
  return cfg;
}

template <typename T>
std::size_t ParamSet<T>::add(std::string name, Shape shape) {
  check(find(name) == slots_.size(), ErrorCode::kConfig, "duplicate parameter " + name);
  ParamSlot slot;
  slot.name = std::move(name);
  slot.size = shape_size(shape);
  slot.shape = std::move(shape);
  slot.offset = values_.size();
  values_.resize(values_.size() + slot.size, T(0));
  slots_.push_back(std::move(slot));
  return slots_.size() - 1;
}

template <typename T>
std::size_t ParamSet<T>::find(std::string_view name) const {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].name == name) return i;
  }
  return slots_.size();
}

template <typename T>
FilterBank<T> ModelParams<T>::filter_bank() const {
  auto v = params.slice(bank);
  return FilterBank<T>{Tensor<T>(params.slots()[bank].shape, std::vector<T>(v.begin(), v.end()))};
}

template <typename T>
void ModelParams<T>::set_filter_bank(const FilterBank<T>& fb) {
  check(fb.h.shape() == params.slots()[bank].shape, ErrorCode::kDimension,
        "filter bank shape " + shape_string(fb.h.shape()) + " does not match model " +
            shape_string(params.slots()[bank].shape));
  std::copy(fb.h.values().begin(), fb.h.values().end(), params.slice(bank).begin());
}

template <typename T>
void ModelParams<T>::unflatten(std::span<const T> flat) {
  check(flat.size() == params.size(), ErrorCode::kDimension,
        "flat parameter vector has " + std::to_string(flat.size()) + " entries, expected " +
            std::to_string(params.size()));
  std::copy(flat.begin(), flat.end(), params.values().begin());
}

template <typename T>
ModelParams<T> build_model(const ModelConfig& config) {
  config.validate();
  ModelParams<T> m;
  m.config = config;
  const std::size_t c = config.input_channels();
  m.bank = m.params.add("frontend.bank", Shape{c, config.filters, config.filter_length()});
  m.freq_kernels = m.params.add("freq.kernels", Shape{config.freq_maps, config.freq_kernel});
  m.freq_bias = m.params.add("freq.bias", Shape{config.freq_maps});
  m.fc_weight = m.params.add("embed.weight", Shape{config.embed_dim, config.embed_input()});
  m.fc_bias = m.params.add("embed.bias", Shape{config.embed_dim});
  std::size_t in = config.embed_dim;
  const std::size_t hid = config.lstm_hidden;
  for (std::size_t l = 0; l < config.lstm_layers; ++l) {
    const std::string p = "lstm" + std::to_string(l) + ".";
    m.lstm.push_back({m.params.add(p + "wx", Shape{4 * hid, in}),
                      m.params.add(p + "wh", Shape{4 * hid, hid}),
                      m.params.add(p + "b", Shape{4 * hid})});
    in = hid;
  }
  m.head_weight = m.params.add("head.weight", Shape{2, hid});
  m.head_bias = m.params.add("head.bias", Shape{2});
  return m;
}

template <typename T>
void init_model(ModelParams<T>& m, std::uint64_t seed) {
  const ModelConfig& cfg = m.config;
  m.set_filter_bank(init_bank<T>(cfg.input_channels(), cfg.filters, cfg.filter_length(),
                                 mix_seed(seed, 0)));
  Rng rng(mix_seed(seed, 1));
  const auto fill = [&](std::size_t slot, std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (T& v : m.params.slice(slot)) v = static_cast<T>(rng.uniform(-a, a));
  };
  fill(m.freq_kernels, cfg.freq_kernel, cfg.freq_maps);
  std::ranges::fill(m.params.slice(m.freq_bias), T(0));
  fill(m.fc_weight, cfg.embed_input(), cfg.embed_dim);
  std::ranges::fill(m.params.slice(m.fc_bias), T(0));
  std::size_t in = cfg.embed_dim;
  const std::size_t hid = cfg.lstm_hidden;
  for (const auto& layer : m.lstm) {
    fill(layer[0], in, 4 * hid);
    fill(layer[1], hid, 4 * hid);
    auto b = m.params.slice(layer[2]);
    std::ranges::fill(b, T(0));
    std::fill(b.begin() + static_cast<std::ptrdiff_t>(hid),
              b.begin() + static_cast<std::ptrdiff_t>(2 * hid), T(1));
    in = hid;
  }
  fill(m.head_weight, hid, 2);
  std::ranges::fill(m.params.slice(m.head_bias), T(0));
}

std::uint64_t architecture_hash(const std::vector<ParamSlot>& slots) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& s : slots) {
    mix(s.name.data(), s.name.size());
    for (const std::size_t d : s.shape) {
      const std::uint64_t v = d;
      mix(&v, sizeof v);
    }
  }
  return h;
}

template <typename T>
BoundModel<T> bind_model(Graph<T>& g, const ModelParams<T>& m, std::span<T> grads) {
  check(grads.empty() || grads.size() == m.params.size(), ErrorCode::kDimension,
        "gradient buffer does not match the parameter layout");
  const auto bind = [&](std::size_t slot) {
    std::span<T> sink;
    if (!grads.empty()) {
      sink = grads.subspan(m.params.slots()[slot].offset, m.params.slots()[slot].size);
    }
    return g.parameter(m.params.view(slot), sink);
  };
  BoundModel<T> b;
  b.bank = bind(m.bank);
  b.freq_kernels = bind(m.freq_kernels);
  b.freq_bias = bind(m.freq_bias);
  b.fc_weight = bind(m.fc_weight);
  b.fc_bias = bind(m.fc_bias);
  for (const auto& layer : m.lstm) b.lstm.push_back({bind(layer[0]), bind(layer[1]), bind(layer[2])});
  b.head_weight = bind(m.head_weight);
  b.head_bias = bind(m.head_bias);
  return b;
}

template <typename T>
Var frame_embed(Graph<T>& g, Var z, const BoundModel<T>& m, const ModelConfig& config) {
  check(g.shape(z).size() == 2 && g.shape(z)[1] == config.filters, ErrorCode::kDimension,
        "frame_embed expects z of shape [F x P]");
  check(config.filters >= config.freq_kernel, ErrorCode::kConfig,
        "P must be at least the frequency kernel width");
  const std::size_t frames = g.shape(z)[0];
  Var conv = multi_map_conv(g, z, m.freq_kernels, m.freq_bias);
  const std::size_t q = config.freq_conv_width();
  const std::size_t window = std::min(config.freq_pool, q);
  Var pooled = max_pool(g, conv, window, config.freq_pool);
  Var flat = reshape(g, pooled, Shape{frames, config.embed_input()});
  return relu(g, linear(g, flat, m.fc_weight, m.fc_bias));
}

template <typename T>
Var sequence_classify(Graph<T>& g, Var o_seq, const BoundModel<T>& m) {
  check(g.shape(o_seq).size() == 2 && g.shape(o_seq)[0] >= 1, ErrorCode::kDimension,
        "sequence_classify expects a non-empty [F x D] sequence");
  Var h = o_seq;
  for (const auto& layer : m.lstm) h = lstm_layer(g, h, layer[0], layer[1], layer[2]);
  Var last = row(g, h, g.shape(h)[0] - 1);
  return linear(g, last, m.head_weight, m.head_bias);
}

template <typename T>
Var model_logits(Graph<T>& g, Var frames, const BoundModel<T>& m, const ModelConfig& config) {
  Var z = frontend(g, frames, m.bank);
  return sequence_classify(g, frame_embed(g, z, m, config), m);
}

template <typename T>
std::vector<T> frame_embed(const Tensor<T>& z, const ModelParams<T>& model) {
  check(z.size() == model.config.filters, ErrorCode::kDimension,
        "z must hold P values");
  Graph<T> g;
  BoundModel<T> b = bind_model(g, model);
  Var zin = g.constant(Tensor<T>(Shape{1, z.size()}, z.storage()));
  auto o = g.data(frame_embed(g, zin, b, model.config));
  return std::vector<T>(o.begin(), o.end());
}

template <typename T>
std::array<T, 2> sequence_classify(const Tensor<T>& o_seq, const ModelParams<T>& model) {
  Graph<T> g;
  BoundModel<T> b = bind_model(g, model);
  auto out = g.data(sequence_classify(g, g.constant(o_seq), b));
  return {out[0], out[1]};
}

template <typename T>
std::array<T, 2> logits(const Tensor<T>& frames, const ModelParams<T>& model) {
  Graph<T> g;
  BoundModel<T> b = bind_model(g, model);
  auto out = g.data(model_logits(g, g.constant(frames), b, model.config));
  return {out[0], out[1]};
}

template <typename T>
T loss_and_gradient(const Tensor<T>& frames, Label label, T class_weight,
                    const ModelParams<T>& model, std::span<T> grads) {
  Graph<T> g;
  BoundModel<T> b = bind_model(g, model, grads);
  Var z = model_logits(g, g.constant(frames), b, model.config);
  Var loss = softmax_cross_entropy(g, z, static_cast<std::size_t>(label), class_weight);
  g.backward(loss);
  return g.data(loss)[0];
}

template <typename T>
T loss_value(const Tensor<T>& frames, Label label, T class_weight, const ModelParams<T>& model) {
  Graph<T> g;
  BoundModel<T> b = bind_model(g, model);
  Var z = model_logits(g, g.constant(frames), b, model.config);
  return g.data(softmax_cross_entropy(g, z, static_cast<std::size_t>(label), class_weight))[0];
}

ModelConfig grad_check_config() {
  ModelConfig cfg = make_model_config(ModelMode::kMultichannel, {1, 2, 3, 4}, 16000, 8);
  cfg.freq_maps = 6;
  cfg.embed_dim = 12;
  cfg.lstm_hidden = 10;
  cfg.lstm_layers = 3;
  cfg.segment_seconds = 0.1;
  return cfg;
}

ModelGradCheck model_grad_check(const ModelConfig& config, std::size_t coordinates,
                                std::uint64_t seed, double eps) {
  check(coordinates >= 1, ErrorCode::kInput, "grad check needs at least one coordinate");
  check(eps > 0, ErrorCode::kInput, "grad check step must be positive");
  ModelParams<double> model = make_model<double>(config, seed);
  const auto frames_n = static_cast<std::size_t>(
      std::llround(config.segment_seconds * config.sample_rate)) / config.frame_length();
  check(frames_n >= 1, ErrorCode::kConfig, "segment shorter than one frame");
  Tensor<double> frames(Shape{frames_n, config.input_channels(), config.frame_length()});
  Rng rng(mix_seed(seed, 2));
  for (double& v : frames.storage()) v = 0.5 * rng.normal();
  const Label label = Label::kReplayed;
  const double weight = 0.7;

  std::vector<double> grads(model.parameter_count(), 0.0);
  ModelGradCheck out;
  out.parameters = model.parameter_count();
  out.loss = loss_and_gradient<double>(frames, label, weight, model, grads);

  // One coordinate per tensor first, the rest uniformly without replacement.
  const std::size_t n = model.parameter_count();
  coordinates = std::min(coordinates, n);
  std::vector<std::size_t> picked;
  std::vector<char> taken(n, 0);
  for (const ParamSlot& slot : model.params.slots()) {
    if (picked.size() == coordinates) break;
    const std::size_t i = slot.offset + static_cast<std::size_t>(rng.below(slot.size));
    picked.push_back(i);
    taken[i] = 1;
  }
  while (picked.size() < coordinates) {
    const auto i = static_cast<std::size_t>(rng.below(n));
    if (taken[i]) continue;
    taken[i] = 1;
    picked.push_back(i);
  }
  // The reference loss runs in extended precision and is reported relative
  // to the unperturbed loss, so the difference quotient is not limited by
  // the spacing of doubles around the loss value.
  ModelParams<long double> probe = build_model<long double>(config);
  Tensor<long double> frames_ext(frames.shape());
  std::copy(frames.values().begin(), frames.values().end(), frames_ext.storage().begin());
  std::vector<long double> theta_ext(n);
  const auto reference = [&](std::span<const double> theta) {
    std::copy(theta.begin(), theta.end(), theta_ext.begin());
    probe.unflatten(theta_ext);
    return loss_value<long double>(frames_ext, label, weight, probe);
  };
  const std::vector<double> theta = model.flatten();
  const long double base = reference(theta);
  const auto f = [&](std::span<const double> point) {
    return static_cast<double>(reference(point) - base);
  };
  out.report = grad_check(f, theta, grads, picked, eps);
  return out;
}

template <typename T>
double replay_probability(const std::array<T, 2>& z) {
  const double a = static_cast<double>(z[0]);
  const double b = static_cast<double>(z[1]);
  const double m = std::max(a, b);
  const double ea = std::exp(a - m);
  const double eb = std::exp(b - m);
  return eb / (ea + eb);
}

AudioClip prepare_input(const AudioClip& clip, const ModelConfig& config) {
  AudioClip selected;
  switch (config.mode) {
    case ModelMode::kSingle:
      selected = select_channels(clip, {config.channel_order.front()});
      break;
    case ModelMode::kDummyMultichannel:
      selected = replicate_channels(select_channels(clip, {config.channel_order.front()}),
                                    config.channel_order.size());
      break;
    case ModelMode::kMultichannel:
      selected = select_channels(clip, config.channel_order);
      break;
  }
  check(selected.sample_rate == config.sample_rate, ErrorCode::kConfig,
        "clip sample rate " + std::to_string(selected.sample_rate) +
            " Hz does not match the model (" + std::to_string(config.sample_rate) + " Hz)");
  return select_segment(selected, config.segment_seconds, config.segment_position);
}

template <typename T>
double score(const AudioClip& clip, const ModelParams<T>& model) {
  return replay_probability(logits(prepare_frames<T>(clip, model.config), model));
}

const char* precision_name(Precision p) {
  return p == Precision::kFloat32 ? "float32" : "float64";
}

Precision parse_precision(std::string_view text) {
  if (text == "float32" || text == "float") return Precision::kFloat32;
  if (text == "float64" || text == "double") return Precision::kFloat64;
  fail(ErrorCode::kConfig, "unknown precision '" + std::string(text) + "'");
}

namespace {

constexpr char kMagic[8] = {'M', 'C', 'R', 'P', 'A', 'R', 'A', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

void put(std::string& out, const void* p, std::size_t n) {
  const auto* b = static_cast<const char*>(p);
  out.append(b, n);
}
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(out, bits);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::uint64_t uint(int width) {
    need(width);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += width;
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  std::uint64_t u64() { return uint(8); }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    check(pos_ + n <= bytes_.size(), ErrorCode::kParse, "truncated model file");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
ModelParams<T> read_tensors(Reader& r, const ModelConfig& cfg) {
  ModelParams<T> m = build_model<T>(cfg);
  const std::uint32_t count = r.u32();
  check(count == m.params.slots().size(), ErrorCode::kParse,
        "model file tensor count does not match its header");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str(r.u32());
    const std::size_t slot = m.params.find(name);
    check(slot < m.params.slots().size(), ErrorCode::kParse, "unknown tensor " + name);
    const std::uint32_t rank = r.u32();
    check(rank <= 8, ErrorCode::kParse, "tensor rank too large");
    Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    check(shape == m.params.slots()[slot].shape, ErrorCode::kParse,
          "tensor " + name + " has shape " + shape_string(shape) + ", expected " +
              shape_string(m.params.slots()[slot].shape));
    for (T& v : m.params.slice(slot)) {
      const double d = r.f64();
      check(std::isfinite(d), ErrorCode::kNumeric, "non-finite value in tensor " + name);
      v = static_cast<T>(d);
    }
  }
  check(r.done(), ErrorCode::kParse, "trailing bytes in model file");
  return m;
}

}  // namespace

template <typename T>
std::string serialize_model(const ModelParams<T>& m) {
  const ModelConfig& c = m.config;
  std::string out;
  put(out, kMagic, sizeof kMagic);
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(c.mode));
  put_u32(out, static_cast<std::uint32_t>(c.input_channels()));
  put_u32(out, static_cast<std::uint32_t>(c.filters));
  put_u32(out, static_cast<std::uint32_t>(c.filter_length()));
  put_u32(out, std::is_same_v<T, float> ? 0u : 1u);
  put_u32(out, static_cast<std::uint32_t>(c.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(c.freq_maps));
  put_u32(out, static_cast<std::uint32_t>(c.freq_kernel));
  put_u32(out, static_cast<std::uint32_t>(c.freq_pool));
  put_u32(out, static_cast<std::uint32_t>(c.embed_dim));
  put_u32(out, static_cast<std::uint32_t>(c.lstm_hidden));
  put_u32(out, static_cast<std::uint32_t>(c.lstm_layers));
  put_f64(out, c.segment_seconds);
  put_u32(out, static_cast<std::uint32_t>(c.segment_position));
  put_u32(out, static_cast<std::uint32_t>(c.channel_order.size()));
  for (const int ch : c.channel_order) put_u32(out, static_cast<std::uint32_t>(ch));
  put_u32(out, static_cast<std::uint32_t>(m.params.slots().size()));
  for (std::size_t s = 0; s < m.params.slots().size(); ++s) {
    const ParamSlot& slot = m.params.slots()[s];
    put_u32(out, static_cast<std::uint32_t>(slot.name.size()));
    out += slot.name;
    put_u32(out, static_cast<std::uint32_t>(slot.shape.size()));
    for (const std::size_t d : slot.shape) put_u64(out, d);
    for (const T v : m.params.slice(s)) put_f64(out, static_cast<double>(v));
  }
  return out;
}

template <typename T>
void save_model(const std::filesystem::path& path, const ModelParams<T>& model) {
  const std::string bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  check(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  check(static_cast<bool>(out), ErrorCode::kIo, "write failed for " + path.string());
}

AnyModel deserialize_model(std::string_view bytes) {
  Reader r(bytes);
  check(r.str(sizeof kMagic) == std::string(kMagic, sizeof kMagic), ErrorCode::kParse,
        "not a model file (bad magic)");
  check(r.u32() == kFormatVersion, ErrorCode::kUnsupportedFormat,
        "unsupported model file version");
  ModelConfig cfg;
  const std::uint32_t mode = r.u32();
  check(mode <= 2, ErrorCode::kParse, "bad model mode");
  cfg.mode = static_cast<ModelMode>(mode);
  const std::uint32_t channels = r.u32();
  cfg.filters = r.u32();
  const std::uint32_t taps = r.u32();
  const std::uint32_t precision = r.u32();
  check(precision <= 1, ErrorCode::kParse, "bad precision tag");
  cfg.sample_rate = static_cast<int>(r.u32());
  cfg.freq_maps = r.u32();
  cfg.freq_kernel = r.u32();
  cfg.freq_pool = r.u32();
  cfg.embed_dim = r.u32();
  cfg.lstm_hidden = r.u32();
  cfg.lstm_layers = r.u32();
  cfg.segment_seconds = r.f64();
  const std::uint32_t position = r.u32();
  check(position <= 1, ErrorCode::kParse, "bad segment position");
  cfg.segment_position = static_cast<SegmentPosition>(position);
  const std::uint32_t order_len = r.u32();
  check(order_len >= 1 && order_len <= kMaxChannels, ErrorCode::kParse, "bad channel order");
  for (std::uint32_t i = 0; i < order_len; ++i) {
    cfg.channel_order.push_back(static_cast<int>(r.u32()));
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kParse, std::string("model header: ") + e.what());
  }
  check(cfg.input_channels() == channels && cfg.filter_length() == taps, ErrorCode::kParse,
        "model header channel count or filter length is inconsistent");
  if (precision == 0) return read_tensors<float>(r, cfg);
  return read_tensors<double>(r, cfg);
}

AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  check(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

#define MCREPLAY_INSTANTIATE_MODEL(T)                                                   \
  template class ParamSet<T>;                                                           \
  template struct ModelParams<T>;                                                       \
  template ModelParams<T> build_model<T>(const ModelConfig&);                           \
  template void init_model<T>(ModelParams<T>&, std::uint64_t);                          \
  template BoundModel<T> bind_model<T>(Graph<T>&, const ModelParams<T>&, std::span<T>); \
  template Var frame_embed<T>(Graph<T>&, Var, const BoundModel<T>&, const ModelConfig&); \
  template Var sequence_classify<T>(Graph<T>&, Var, const BoundModel<T>&);              \
  template Var model_logits<T>(Graph<T>&, Var, const BoundModel<T>&, const ModelConfig&); \
  template std::vector<T> frame_embed<T>(const Tensor<T>&, const ModelParams<T>&);      \
  template std::array<T, 2> sequence_classify<T>(const Tensor<T>&, const ModelParams<T>&); \
  template std::array<T, 2> logits<T>(const Tensor<T>&, const ModelParams<T>&);         \
  template T loss_and_gradient<T>(const Tensor<T>&, Label, T, const ModelParams<T>&,    \
                                  std::span<T>);                                        \
  template T loss_value<T>(const Tensor<T>&, Label, T, const ModelParams<T>&);          \
  template double replay_probability<T>(const std::array<T, 2>&);                       \
  template double score<T>(const AudioClip&, const ModelParams<T>&);                    \
  template std::string serialize_model<T>(const ModelParams<T>&);                       \
  template void save_model<T>(const std::filesystem::path&, const ModelParams<T>&);

MCREPLAY_INSTANTIATE_MODEL(float)
MCREPLAY_INSTANTIATE_MODEL(double)

// Extended precision serves as the finite-difference reference.
template class ParamSet<long double>;
template struct ModelParams<long double>;
template ModelParams<long double> build_model<long double>(const ModelConfig&);
template long double loss_value<long double>(const Tensor<long double>&, Label, long double,
                                             const ModelParams<long double>&);

#undef MCREPLAY_INSTANTIATE_MODEL

}  // namespace mcreplay
