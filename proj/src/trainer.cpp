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

#include "mcreplay/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mcreplay/logging.hpp"
#include "mcreplay/rng.hpp"
#include "mcreplay/synth.hpp"
#include "parallel.hpp"

namespace mcreplay {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view text) {
  Int v{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  check(ec == std::errc() && end == text.data() + text.size(), ErrorCode::kConfig,
        "bad integer for " + std::string(key) + ": '" + std::string(text) + "'");
  return v;
}

double parse_real(std::string_view key, std::string_view text) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  check(!s.empty() && end == s.c_str() + s.size() && std::isfinite(v), ErrorCode::kConfig,
        "bad number for " + std::string(key) + ": '" + s + "'");
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  fail(ErrorCode::kConfig, "bad boolean for " + std::string(key) + ": '" + std::string(text) + "'");
}

std::vector<std::string_view> split_items(std::string_view text);

template <typename Int>
std::vector<Int> parse_list(std::string_view key, std::string_view text) {
  std::vector<Int> out;
  for (const auto item : split_items(text)) out.push_back(parse_int<Int>(key, item));
  return out;
}

std::string real_text(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename Item, typename Format>
std::string join(const std::vector<Item>& v, Format&& format) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format(v[i]);
  }
  return s;
}

template <typename Int>
std::string join(const std::vector<Int>& v) {
  return join(v, [](Int x) { return std::to_string(x); });
}

std::vector<std::string_view> split_items(std::string_view text) {
  std::vector<std::string_view> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(trim(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

struct Key {
  const char* name;
  void (*set)(TrainConfig&, std::string_view key, std::string_view value);
  std::string (*get)(const TrainConfig&);
};

#define MCREPLAY_SIZE_KEY(field)                                                         \
  Key{#field, [](TrainConfig& c, std::string_view k, std::string_view v) {              \
        c.field = parse_int<std::size_t>(k, v);                                          \
      },                                                                                 \
      [](const TrainConfig& c) { return std::to_string(c.field); }}
#define MCREPLAY_REAL_KEY(field)                                                         \
  Key{#field, [](TrainConfig& c, std::string_view k, std::string_view v) {              \
        c.field = parse_real(k, v);                                                      \
      },                                                                                 \
      [](const TrainConfig& c) { return real_text(c.field); }}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      MCREPLAY_SIZE_KEY(batch_size),
      MCREPLAY_REAL_KEY(lr_init),
      MCREPLAY_SIZE_KEY(warmup_epochs),
      MCREPLAY_REAL_KEY(warmup_multiplier),
      MCREPLAY_SIZE_KEY(decay_interval),
      MCREPLAY_REAL_KEY(decay_factor),
      MCREPLAY_SIZE_KEY(max_epochs),
      MCREPLAY_REAL_KEY(weight_decay),
      Key{"seeds",
          [](TrainConfig& c, std::string_view k, std::string_view v) {
            c.seeds = parse_list<std::uint64_t>(k, v);
          },
          [](const TrainConfig& c) { return join(c.seeds); }},
      Key{"early_stop_metric",
          [](TrainConfig& c, std::string_view, std::string_view v) {
            c.early_stop_metric = std::string(v);
          },
          [](const TrainConfig& c) { return c.early_stop_metric; }},
      MCREPLAY_SIZE_KEY(patience),
      MCREPLAY_REAL_KEY(grad_clip),
      MCREPLAY_REAL_KEY(dev_fraction),
      MCREPLAY_SIZE_KEY(filters),
      MCREPLAY_SIZE_KEY(freq_maps),
      MCREPLAY_SIZE_KEY(embed_dim),
      MCREPLAY_SIZE_KEY(lstm_hidden),
      MCREPLAY_SIZE_KEY(lstm_layers),
      Key{"channels",
          [](TrainConfig& c, std::string_view k, std::string_view v) {
            c.channels = parse_list<int>(k, v);
          },
          [](const TrainConfig& c) { return join(c.channels); }},
      MCREPLAY_REAL_KEY(segment_seconds),
      Key{"segment_position",
          [](TrainConfig& c, std::string_view, std::string_view v) {
            c.segment_position = parse_segment_position(v);
          },
          [](const TrainConfig& c) {
            return std::string(segment_position_name(c.segment_position));
          }},
      Key{"precision",
          [](TrainConfig& c, std::string_view, std::string_view v) {
            c.precision = parse_precision(v);
          },
          [](const TrainConfig& c) { return std::string(precision_name(c.precision)); }},
      MCREPLAY_SIZE_KEY(threads),
      Key{"determinism",
          [](TrainConfig& c, std::string_view k, std::string_view v) {
            c.determinism = parse_bool(k, v);
          },
          [](const TrainConfig& c) { return std::string(c.determinism ? "true" : "false"); }},
      Key{"mode",
          [](TrainConfig& c, std::string_view, std::string_view v) {
            c.mode = parse_model_mode(v);
          },
          [](const TrainConfig& c) { return std::string(model_mode_name(c.mode)); }},
      Key{"ablation_order",
          [](TrainConfig& c, std::string_view k, std::string_view v) {
            c.ablation_order = parse_list<int>(k, v);
          },
          [](const TrainConfig& c) { return join(c.ablation_order); }},
      Key{"sweep_filters",
          [](TrainConfig& c, std::string_view k, std::string_view v) {
            c.sweep_filters = parse_list<std::size_t>(k, v);
          },
          [](const TrainConfig& c) { return join(c.sweep_filters); }},
      Key{"segment_lengths",
          [](TrainConfig& c, std::string_view k, std::string_view v) {
            c.segment_lengths.clear();
            for (const auto item : split_items(v)) c.segment_lengths.push_back(parse_real(k, item));
          },
          [](const TrainConfig& c) { return join(c.segment_lengths, real_text); }},
      Key{"segment_positions",
          [](TrainConfig& c, std::string_view, std::string_view v) {
            c.segment_positions.clear();
            for (const auto item : split_items(v)) {
              c.segment_positions.push_back(parse_segment_position(item));
            }
          },
          [](const TrainConfig& c) {
            return join(c.segment_positions,
                        [](SegmentPosition p) { return std::string(segment_position_name(p)); });
          }},
  };
  return table;
}

#undef MCREPLAY_SIZE_KEY
#undef MCREPLAY_REAL_KEY

}  // namespace

void TrainConfig::validate() const {
  check(batch_size >= 1, ErrorCode::kConfig, "batch_size must be at least 1");
  check(lr_init > 0 && warmup_multiplier > 0 && decay_factor > 0, ErrorCode::kConfig,
        "lr_init, warmup_multiplier and decay_factor must be positive");
  check(decay_interval >= 1, ErrorCode::kConfig, "decay_interval must be at least 1");
  check(weight_decay >= 0, ErrorCode::kConfig, "weight_decay must be non-negative");
  check(max_epochs >= 1, ErrorCode::kConfig, "max_epochs must be at least 1");
  check(!seeds.empty(), ErrorCode::kConfig, "at least one seed is required");
  check(early_stop_metric == "dev_eer", ErrorCode::kConfig,
        "early_stop_metric must be dev_eer");
  check(patience >= 1, ErrorCode::kConfig, "patience must be at least 1");
  check(grad_clip >= 0, ErrorCode::kConfig, "grad_clip must be non-negative");
  check(dev_fraction > 0 && dev_fraction < 1, ErrorCode::kConfig,
        "dev_fraction must lie in (0, 1)");
  check(filters >= 8, ErrorCode::kConfig,
        "filters must be at least 8 to feed the width-8 frequency convolution");
  check(freq_maps >= 1 && embed_dim >= 1 && lstm_hidden >= 1 && lstm_layers >= 1,
        ErrorCode::kConfig, "layer sizes must be positive");
  check(segment_seconds > 0, ErrorCode::kConfig, "segment_seconds must be positive");
  check(threads >= 1, ErrorCode::kConfig, "threads must be at least 1");
}

void apply_override(TrainConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  for (const Key& k : keys()) {
    if (key == k.name) {
      k.set(config, key, value);
      return;
    }
  }
  fail(ErrorCode::kConfig, "unknown config key '" + std::string(key) + "'");
}

void apply_override(TrainConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  check(eq != std::string_view::npos, ErrorCode::kConfig,
        "expected key=value, got '" + std::string(assignment) + "'");
  apply_override(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

TrainConfig parse_train_config(std::string_view text) {
  TrainConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    try {
      apply_override(config, line);
    } catch (const Error& e) {
      fail(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  check(static_cast<bool>(in), ErrorCode::kIo, "cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_train_config(buf.str());
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

std::string config_value(const TrainConfig& config, std::string_view key) {
  for (const Key& k : keys()) {
    if (key == k.name) return k.get(config);
  }
  fail(ErrorCode::kConfig, "unknown config key '" + std::string(key) + "'");
}

std::string format_train_config(const TrainConfig& config) {
  std::string out;
  for (const Key& k : keys()) out += std::string(k.name) + " = " + k.get(config) + "\n";
  return out;
}

std::string config_hash(const TrainConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : format_train_config(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ClassWeights class_weights(std::size_t n_genuine, std::size_t n_replayed) {
  check(n_genuine >= 1 && n_replayed >= 1, ErrorCode::kInput,
        "class weights need at least one clip of each class");
  const double ig = 1.0 / static_cast<double>(n_genuine);
  const double ir = 1.0 / static_cast<double>(n_replayed);
  return {ig / (ig + ir), ir / (ig + ir)};
}

double lr_at(std::size_t epoch, const TrainConfig& c) {
  if (epoch < c.warmup_epochs) {
    return c.lr_init * (1.0 + (c.warmup_multiplier - 1.0) * static_cast<double>(epoch) /
                                  static_cast<double>(c.warmup_epochs));
  }
  const auto drops = static_cast<double>((epoch - c.warmup_epochs) / c.decay_interval);
  return c.lr_init * c.warmup_multiplier * std::pow(c.decay_factor, drops);
}

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, double lr,
               double weight_decay) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  check(params.size() == grads.size(), ErrorCode::kDimension,
        "parameter and gradient sizes differ");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) [[unlikely]] {
      fail(ErrorCode::kNumeric, "non-finite gradient at index " + std::to_string(i) +
                                    "; optimizer step aborted");
    }
  }
  if (state.m.empty()) {
    state.m.assign(params.size(), T(0));
    state.v.assign(params.size(), T(0));
    state.step = 0;
  }
  check(state.m.size() == params.size(), ErrorCode::kDimension,
        "optimizer state does not match the parameters");
  ++state.step;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(kBeta1), b2 = static_cast<T>(kBeta2);
  const T step_size = static_cast<T>(lr / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);
  const T decay = static_cast<T>(lr * weight_decay);
  const T eps = static_cast<T>(kEps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    T& m = state.m[i];
    T& v = state.v[i];
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g * g;
    const T theta = params[i];
    params[i] = theta - step_size * m / (std::sqrt(v * inv_c2) + eps) - decay * theta;
  }
}

template <typename T>
double clip_gradient(std::span<T> grads, double max_norm) {
  double ss = 0.0;
  for (const T g : grads) ss += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(ss);
  if (max_norm > 0 && norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (T& g : grads) g *= scale;
  }
  return norm;
}

template <typename T>
std::size_t Dataset<T>::count(Label label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

SplitPlan plan_splits(const Manifest& manifest, double dev_fraction, std::uint64_t seed) {
  SplitPlan plan;
  plan.train = manifest.in_split(Split::kTrain);
  plan.dev = manifest.in_split(Split::kDev);
  plan.eval = manifest.in_split(Split::kEval);
  std::vector<ManifestEntry> core = manifest.in_split(Split::kCore);
  if (!core.empty()) {
    Rng rng(mix_seed(seed, 0x636f7265ULL));
    rng.shuffle(core.begin(), core.end());
    const auto n_dev = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(dev_fraction * static_cast<double>(core.size()))),
        1, core.size() - (core.size() > 1 ? 1 : 0));
    plan.dev.insert(plan.dev.end(), core.begin(), core.begin() + static_cast<long>(n_dev));
    plan.train.insert(plan.train.end(), core.begin() + static_cast<long>(n_dev), core.end());
  }
  check(!plan.train.empty(), ErrorCode::kInput, "manifest has no training clips");
  check(!plan.dev.empty(), ErrorCode::kInput, "manifest has no development clips");
  return plan;
}

ClipSet load_clips(const Manifest& manifest, const std::vector<ManifestEntry>& entries,
                   std::size_t threads) {
  ClipSet set;
  set.clips.resize(entries.size());
  set.ids.resize(entries.size());
  parallel_chunks(entries.size(), threads, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      set.clips[i] = load_entry(manifest, entries[i]);
      set.ids[i] = entries[i].path;
    }
  });
  return set;
}

template <typename T>
Dataset<T> prepare_dataset(const ClipSet& clips, const ModelConfig& config) {
  Dataset<T> d;
  d.ids = clips.ids;
  d.frames.reserve(clips.clips.size());
  for (const AudioClip& clip : clips.clips) {
    d.labels.push_back(clip.label);
    d.frames.push_back(prepare_frames<T>(clip, config));
  }
  return d;
}

ModelConfig model_config_for(const TrainConfig& train, ModelMode mode, const ClipSet& clips) {
  check(!clips.clips.empty(), ErrorCode::kInput, "no clips to derive the model input from");
  const AudioClip& first = clips.clips.front();
  for (const AudioClip& c : clips.clips) {
    check(c.sample_rate == first.sample_rate && c.num_channels() == first.num_channels(),
          ErrorCode::kInput, "clips disagree on sample rate or channel count");
  }
  const auto available = static_cast<int>(first.num_channels());
  std::vector<int> order = train.channels;
  if (order.empty()) {
    try {
      order = ablation_order(first.device_id);
    } catch (const Error&) {
      order.clear();
    }
    if (order.size() != first.num_channels()) {
      order.clear();
      for (int c = 1; c <= available; ++c) order.push_back(c);
    }
  }
  for (const int c : order) {
    check(c >= 1 && c <= available, ErrorCode::kConfig,
          "channel " + std::to_string(c) + " not present in " + std::to_string(available) +
              "-channel clips");
  }
  ModelConfig mc = make_model_config(mode, order, first.sample_rate, train.filters);
  mc.freq_maps = train.freq_maps;
  mc.embed_dim = train.embed_dim;
  mc.lstm_hidden = train.lstm_hidden;
  mc.lstm_layers = train.lstm_layers;
  mc.segment_seconds = train.segment_seconds;
  mc.segment_position = train.segment_position;
  mc.validate();
  return mc;
}

template <typename T>
std::vector<double> score_dataset(const ModelParams<T>& model, const Dataset<T>& data,
                                  std::size_t threads) {
  std::vector<double> scores(data.size());
  parallel_chunks(data.size(), threads, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      scores[i] = replay_probability(logits(data.frames[i], model));
    }
  });
  return scores;
}

template <typename T>
double dataset_eer(const ModelParams<T>& model, const Dataset<T>& data, std::size_t threads) {
  return eer(score_dataset(model, data, threads), data.labels);
}

std::string format_epoch_record(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["step"] = r.step;
  j["loss"] = r.loss;
  j["lr"] = r.lr;
  j["dev_eer"] = r.dev_eer;
  j["improved"] = r.improved;
  return j.dump();
}

template <typename T>
TrainResult<T> train(const Dataset<T>& train_set, const Dataset<T>& dev_set,
                     const ModelConfig& model_config, const TrainConfig& config,
                     std::uint64_t seed, std::ostream* log_sink) {
  config.validate();
  check(train_set.size() > 0, ErrorCode::kInput, "training split is empty");
  check(dev_set.size() > 0, ErrorCode::kInput, "development split is empty");
  check(dev_set.count(Label::kGenuine) > 0 && dev_set.count(Label::kReplayed) > 0,
        ErrorCode::kInput, "development split needs both classes for EER");
  const ClassWeights weights =
      class_weights(train_set.count(Label::kGenuine), train_set.count(Label::kReplayed));
  const std::size_t grad_threads = config.determinism ? 1 : config.threads;

  TrainResult<T> result;
  ModelParams<T> model = make_model<T>(model_config, seed);
  result.best = model;
  result.best_dev_eer = std::numeric_limits<double>::infinity();
  AdamState<T> adam;
  Rng rng(mix_seed(seed, 0x73687566ULL));
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t n_params = model.parameter_count();
  AlignedVector<T> grads(n_params);
  std::vector<AlignedVector<T>> partial(grad_threads, AlignedVector<T>(n_params));
  std::vector<double> partial_loss(grad_threads);
  std::uint64_t step = 0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const double lr = lr_at(epoch, config);
    rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      parallel_chunks(count, grad_threads, [&](std::size_t b, std::size_t e, std::size_t w) {
        std::fill(partial[w].begin(), partial[w].end(), T(0));
        double loss = 0.0;
        for (std::size_t k = b; k < e; ++k) {
          const std::size_t i = order[start + k];
          loss += static_cast<double>(loss_and_gradient<T>(
              train_set.frames[i], train_set.labels[i],
              static_cast<T>(weights[train_set.labels[i]]), model, partial[w]));
        }
        partial_loss[w] = loss;
      });
      const std::size_t used = std::min(grad_threads, count);
      std::fill(grads.begin(), grads.end(), T(0));
      double batch_loss = 0.0;
      for (std::size_t w = 0; w < used; ++w) {
        for (std::size_t j = 0; j < n_params; ++j) grads[j] += partial[w][j];
        batch_loss += partial_loss[w];
      }
      const T inv = static_cast<T>(1.0 / static_cast<double>(count));
      for (T& g : grads) g *= inv;
      if (config.grad_clip > 0) clip_gradient<T>(grads, config.grad_clip);
      adam_step<T>(model.params.values(), grads, adam, lr, config.weight_decay);
      ++step;
      epoch_loss += batch_loss / static_cast<double>(count);
      ++batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.step = step;
    rec.loss = epoch_loss / static_cast<double>(batches);
    rec.lr = lr;
    rec.dev_eer = dataset_eer(model, dev_set, config.threads);
    rec.improved = rec.dev_eer < result.best_dev_eer;
    if (rec.improved) {
      result.best = model;
      result.best_dev_eer = rec.dev_eer;
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    result.log.push_back(rec);
    if (log_sink != nullptr) *log_sink << format_epoch_record(rec) << '\n';
    if (since_best >= config.patience) break;
  }
  return result;
}

template <typename T>
MultiSeedResult multi_seed(const Dataset<T>& train_set, const Dataset<T>& dev_set,
                           const Dataset<T>& eval_set, const ModelConfig& model_config,
                           const TrainConfig& config, const SeedCallback<T>& on_seed) {
  check(!config.seeds.empty(), ErrorCode::kConfig, "at least one seed is required");
  MultiSeedResult out;
  std::vector<double> eers;
  for (const std::uint64_t seed : config.seeds) {
    TrainResult<T> tr = train(train_set, dev_set, model_config, config, seed);
    const std::vector<double> scores = score_dataset(tr.best, eval_set, config.threads);
    ScoreSet set;
    set.model_id = std::string(model_mode_name(model_config.mode)) + "/seed" +
                   std::to_string(seed);
    set.split = "eval";
    set.channel_order = model_config.channel_order;
    set.filters = model_config.filters;
    set.input_seconds = model_config.segment_seconds;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      set.entries.push_back({eval_set.ids[i], scores[i], eval_set.labels[i]});
    }
    SeedRun run;
    run.seed = seed;
    run.eval_eer = eer(set);
    run.best_dev_eer = tr.best_dev_eer;
    run.best_epoch = tr.best_epoch;
    run.epochs = tr.log.size();
    run.parameters = tr.best.parameter_count();
    run.architecture = architecture_hash(tr.best);
    if (on_seed) on_seed(run, tr, set);
    eers.push_back(run.eval_eer);
    out.runs.push_back(run);
  }
  std::tie(out.mean_eer, out.std_eer) = mean_and_std(eers);
  return out;
}

#define MCREPLAY_INSTANTIATE(T)                                                              \
  template void adam_step<T>(std::span<T>, std::span<const T>, AdamState<T>&, double,       \
                             double);                                                        \
  template double clip_gradient<T>(std::span<T>, double);                                    \
  template struct Dataset<T>;                                                                \
  template Dataset<T> prepare_dataset<T>(const ClipSet&, const ModelConfig&);                \
  template std::vector<double> score_dataset<T>(const ModelParams<T>&, const Dataset<T>&,    \
                                                std::size_t);                                \
  template double dataset_eer<T>(const ModelParams<T>&, const Dataset<T>&, std::size_t);     \
  template TrainResult<T> train<T>(const Dataset<T>&, const Dataset<T>&, const ModelConfig&, \
                                   const TrainConfig&, std::uint64_t, std::ostream*);        \
  template MultiSeedResult multi_seed<T>(const Dataset<T>&, const Dataset<T>&,               \
                                         const Dataset<T>&, const ModelConfig&,              \
                                         const TrainConfig&, const SeedCallback<T>&);

MCREPLAY_INSTANTIATE(float)
MCREPLAY_INSTANTIATE(double)

}  // namespace mcreplay
