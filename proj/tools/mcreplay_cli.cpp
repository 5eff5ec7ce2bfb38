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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mcreplay/mcreplay.h"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

using Json = nlohmann::ordered_json;

struct Failure {
  mcr_status status;
  std::string message;
};

void ok(mcr_status status, const std::string& what) {
  if (status != MCR_OK) {
    throw Failure{status, what + ": " + mcr_status_name(status) + ": " + mcr_last_error()};
  }
}

[[noreturn]] void usage_error(const std::string& message) {
  throw Failure{MCR_ERR_CONFIG, message};
}

struct ConfigDeleter {
  void operator()(mcr_config* c) const { mcr_config_destroy(c); }
};
struct ModelDeleter {
  void operator()(mcr_model* m) const { mcr_model_destroy(m); }
};
struct ReportDeleter {
  void operator()(mcr_report* r) const { mcr_report_destroy(r); }
};
struct SynthDeleter {
  void operator()(mcr_synth_options* s) const { mcr_synth_options_destroy(s); }
};
using ConfigPtr = std::unique_ptr<mcr_config, ConfigDeleter>;
using ModelPtr = std::unique_ptr<mcr_model, ModelDeleter>;
using ReportPtr = std::unique_ptr<mcr_report, ReportDeleter>;
using SynthPtr = std::unique_ptr<mcr_synth_options, SynthDeleter>;

std::pair<std::string, std::string> split_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) usage_error("expected key=value, got '" + s + "'");
  const auto trim = [](std::string t) {
    const auto b = t.find_first_not_of(" \t\r");
    const auto e = t.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
  };
  return {trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
}

// key = value lines with '#' comments, in file order.
std::vector<std::pair<std::string, std::string>> read_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure{MCR_ERR_IO, "cannot read " + path};
  std::vector<std::pair<std::string, std::string>> out;
  for (std::string line; std::getline(in, line);) {
    line = line.substr(0, line.find('#'));
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(split_assignment(line));
  }
  return out;
}

// Layered settings: config file, then MCREPLAY_THREADS (training only), then
// named flags, then --set pairs. Named flags are shorthands for keys.
struct Settings {
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> named;
};

void add_key_flag(CLI::App* app, Settings& s, const std::string& flag, const std::string& key,
                  const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&s, key](const std::string& v) { s.named[key] = v; }, help + " [" + key + "]");
}

void add_settings(CLI::App* app, Settings& s) {
  app->add_option("--config", s.config_path, "key = value settings file")
      ->check(CLI::ExistingFile);
  app->add_option("--set", s.sets, "setting override key=value (repeatable)");
}

std::vector<std::pair<std::string, std::string>> ordered_settings(const Settings& s) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [k, v] : s.named) out.emplace_back(k, v);
  for (const std::string& a : s.sets) out.push_back(split_assignment(a));
  return out;
}

struct TrainFlags {
  Settings settings;
  std::string manifest;
  std::string out;
};

void add_train_flags(CLI::App* app, TrainFlags& f) {
  add_settings(app, f.settings);
  app->add_option("--manifest", f.manifest, "dataset manifest (JSON Lines)")
      ->required()
      ->check(CLI::ExistingFile);
  app->add_option("--out", f.out, "output directory")->required();
  Settings& s = f.settings;
  add_key_flag(app, s, "--seeds", "seeds", "comma-separated seeds");
  add_key_flag(app, s, "--filters", "filters", "front-end filters per channel");
  add_key_flag(app, s, "--lstm-hidden", "lstm_hidden", "LSTM units per layer");
  add_key_flag(app, s, "--max-epochs", "max_epochs", "epoch limit");
  add_key_flag(app, s, "--batch-size", "batch_size", "mini-batch size");
  add_key_flag(app, s, "--lr-init", "lr_init", "initial learning rate");
  add_key_flag(app, s, "--patience", "patience", "early-stopping patience in epochs");
  add_key_flag(app, s, "--channels", "channels", "comma-separated channel order");
  add_key_flag(app, s, "--precision", "precision", "float32 or float64");
  add_key_flag(app, s, "--threads", "threads", "worker threads");
  add_key_flag(app, s, "--determinism", "determinism", "true or false");
}

ConfigPtr build_config(const Settings& s) {
  mcr_config* raw = nullptr;
  if (s.config_path.empty()) {
    ok(mcr_config_create(&raw), "config");
  } else {
    ok(mcr_config_load(s.config_path.c_str(), &raw), "config");
  }
  ConfigPtr config(raw);
  if (const char* env = std::getenv("MCREPLAY_THREADS"); env != nullptr && *env != '\0') {
    ok(mcr_config_set(config.get(), "threads", env), "MCREPLAY_THREADS");
  }
  for (const auto& [key, value] : ordered_settings(s)) {
    ok(mcr_config_set(config.get(), key.c_str(), value.c_str()), key);
  }
  return config;
}

std::string read_string(mcr_status (*fn)(const mcr_config*, char*, size_t, size_t*),
                        const mcr_config* config) {
  std::size_t length = 0;
  ok(fn(config, nullptr, 0, &length), "config");
  std::string text(length + 1, '\0');
  ok(fn(config, text.data(), text.size(), &length), "config");
  text.resize(length);
  return text;
}

std::string config_get(const mcr_config* config, const char* key) {
  std::size_t length = 0;
  ok(mcr_config_get(config, key, nullptr, 0, &length), key);
  std::string text(length + 1, '\0');
  ok(mcr_config_get(config, key, text.data(), text.size(), &length), key);
  text.resize(length);
  return text;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& what) {
  std::vector<T> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    std::istringstream v(item);
    T value{};
    if (!(v >> value) || !(v >> std::ws).eof()) usage_error("bad " + what + " '" + item + "'");
    out.push_back(value);
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!(out << text)) throw Failure{MCR_ERR_IO, "cannot write " + path.string()};
}

// run.json records the invocation, the code version and the effective
// settings; config.conf can be passed back with --config to repeat a
// training run.
void write_run_manifest(const std::filesystem::path& dir, const std::string& subcommand,
                        const std::vector<std::string>& argv, const mcr_config* config,
                        const Json& extra) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Failure{MCR_ERR_IO, "cannot create " + dir.string() + ": " + ec.message()};
  Json j;
  j["subcommand"] = subcommand;
  j["version"] = mcr_version();
  j["argv"] = argv;
  if (config != nullptr) {
    char hash[17];
    ok(mcr_config_hash(config, hash), "config");
    j["config_hash"] = hash;
    const std::string text = read_string(mcr_config_text, config);
    j["seeds"] = parse_list<std::uint64_t>(config_get(config, "seeds"), "seed");
    j["config"] = text;
    write_file(dir / "config.conf", text);
  }
  for (const auto& [k, v] : extra.items()) j[k] = v;
  write_file(dir / "run.json", j.dump(2) + "\n");
}

int run_synth(const Settings& s, const std::string& out, const std::vector<std::string>& argv) {
  mcr_synth_options* raw = nullptr;
  ok(mcr_synth_options_create(&raw), "synth");
  SynthPtr options(raw);
  std::size_t n = 0, genuine = 0, replayed = 0;
  bool have_n = false, have_genuine = false, have_replayed = false, balanced = false;
  std::uint64_t seed = 1;
  Json settings = Json::object();
  auto pairs = s.config_path.empty() ? decltype(read_pairs("")){} : read_pairs(s.config_path);
  for (auto& p : ordered_settings(s)) pairs.push_back(std::move(p));
  const auto count = [](const std::string& k, const std::string& v) {
    const auto list = parse_list<std::size_t>(v, k);
    if (list.size() != 1) usage_error("bad " + k + " '" + v + "'");
    return list.front();
  };
  for (const auto& [k, v] : pairs) {
    settings[k] = v;
    if (k == "n") {
      n = count(k, v);
      have_n = true;
    } else if (k == "genuine") {
      genuine = count(k, v);
      have_genuine = true;
    } else if (k == "replayed") {
      replayed = count(k, v);
      have_replayed = true;
    } else if (k == "seed") {
      seed = count(k, v);
    } else if (k == "balanced") {
      balanced = v == "true" || v == "1";
    } else if (k == "duration") {
      ok(mcr_synth_options_set(options.get(), "min_duration", v.c_str()), k);
      ok(mcr_synth_options_set(options.get(), "max_duration", v.c_str()), k);
    } else {
      ok(mcr_synth_options_set(options.get(), k.c_str(), v.c_str()), k);
    }
  }
  if (have_genuine != have_replayed) usage_error("genuine and replayed must be given together");
  if (!have_genuine) {
    if (!have_n) usage_error("give --n or --genuine and --replayed");
    if (balanced) {
      genuine = n / 2;
      replayed = n - genuine;
    } else {
      ok(mcr_default_class_counts(n, &genuine, &replayed), "n");
    }
  }
  ok(mcr_synth_corpus(options.get(), genuine, replayed, seed, out.c_str()), "synth");
  Json extra;
  extra["seed"] = seed;
  extra["genuine"] = genuine;
  extra["replayed"] = replayed;
  extra["settings"] = settings;
  write_run_manifest(out, "synth", argv, nullptr, extra);
  std::cout << "wrote " << genuine + replayed << " clips (" << genuine << " genuine, "
            << replayed << " replayed) and manifest.jsonl to " << out << "\n";
  return 0;
}

int run_train(const TrainFlags& f, const std::vector<std::string>& argv) {
  ConfigPtr config = build_config(f.settings);
  mcr_mode mode{};
  ok(mcr_parse_mode(config_get(config.get(), "mode").c_str(), &mode), "mode");
  Json extra;
  extra["manifest"] = f.manifest;
  write_run_manifest(f.out, "train", argv, config.get(), extra);
  for (const std::uint64_t seed :
       parse_list<std::uint64_t>(config_get(config.get(), "seeds"), "seed")) {
    const std::filesystem::path dir =
        std::filesystem::path(f.out) / ("seed" + std::to_string(seed));
    double dev_eer = 0.0;
    ok(mcr_train(config.get(), f.manifest.c_str(), mode, seed, dir.c_str(), nullptr, &dev_eer),
       "train");
    std::printf("%s seed %llu: best dev EER %.4f, checkpoint %s\n", mcr_mode_name(mode),
                static_cast<unsigned long long>(seed), dev_eer, (dir / "model.bin").c_str());
  }
  return 0;
}

int run_eval(const std::string& model_path, const std::string& manifest,
             const std::string& split, const std::string& out,
             const std::vector<std::string>& argv) {
  mcr_model* raw = nullptr;
  ok(mcr_model_load(model_path.c_str(), &raw), "load model");
  ModelPtr model(raw);
  std::string scores;
  if (!out.empty()) {
    Json extra;
    extra["model"] = model_path;
    extra["manifest"] = manifest;
    extra["split"] = split;
    write_run_manifest(out, "eval", argv, nullptr, extra);
    scores = (std::filesystem::path(out) / "scores.jsonl").string();
  }
  double e = 0.0;
  ok(mcr_evaluate(model.get(), manifest.c_str(), split.c_str(),
                  scores.empty() ? nullptr : scores.c_str(), &e),
     "eval");
  std::printf("EER %.4f (%.2f%%) on split %s\n", e, 100.0 * e, split.c_str());
  return 0;
}

int run_experiment(const std::string& name, const TrainFlags& f,
                   const std::vector<std::string>& argv) {
  ConfigPtr config = build_config(f.settings);
  Json extra;
  extra["manifest"] = f.manifest;
  write_run_manifest(f.out, name, argv, config.get(), extra);
  mcr_report* raw = nullptr;
  const char* manifest = f.manifest.c_str();
  const char* out = f.out.c_str();
  if (name == "compare-modes") {
    ok(mcr_compare_modes(config.get(), manifest, out, &raw), name);
  } else if (name == "ablate-channels") {
    ok(mcr_ablate_channels(config.get(), manifest, nullptr, 0, out, &raw), name);
  } else if (name == "sweep-filters") {
    ok(mcr_sweep_filters(config.get(), manifest, nullptr, 0, out, &raw), name);
  } else {
    ok(mcr_ablate_segment(config.get(), manifest, nullptr, 0, nullptr, 0, out, &raw), name);
  }
  ReportPtr report(raw);
  std::cout << mcr_report_table(report.get());
  return 0;
}

int run_grad_check(const Settings& s, const std::string& out,
                   const std::vector<std::string>& argv) {
  std::size_t coords = 200;
  std::uint64_t seed = 1;
  double eps = 1e-5, tolerance = 1e-4;
  auto pairs = s.config_path.empty() ? decltype(read_pairs("")){} : read_pairs(s.config_path);
  for (auto& p : ordered_settings(s)) pairs.push_back(std::move(p));
  for (const auto& [k, v] : pairs) {
    const auto one = [&](auto& field) {
      using F = std::decay_t<decltype(field)>;
      const auto list = parse_list<F>(v, k);
      if (list.size() != 1) usage_error("bad " + k + " '" + v + "'");
      field = list.front();
    };
    if (k == "coords") {
      one(coords);
    } else if (k == "seed") {
      one(seed);
    } else if (k == "eps") {
      one(eps);
    } else if (k == "tolerance") {
      one(tolerance);
    } else {
      usage_error("unknown grad-check setting '" + k + "'");
    }
  }
  mcr_grad_check_result r{};
  ok(mcr_grad_check(coords, seed, eps, &r), "grad-check");
  if (!out.empty()) {
    Json extra;
    extra["seed"] = seed;
    extra["coords"] = coords;
    extra["eps"] = eps;
    extra["tolerance"] = tolerance;
    extra["max_relative_error"] = r.max_relative_error;
    write_run_manifest(out, "grad-check", argv, nullptr, extra);
  }
  std::printf("parameters %zu, checked %zu coordinates, loss %.6f\n", r.parameters, r.checked,
              r.loss);
  std::printf("max relative error %.3e at coordinate %zu (analytic %.6e, numeric %.6e)\n",
              r.max_relative_error, r.worst_coordinate, r.worst_analytic, r.worst_numeric);
  if (!(r.max_relative_error < tolerance)) {
    std::fprintf(stderr, "mcreplay: gradient check failed (tolerance %.1e)\n", tolerance);
    return kExitRuntime;
  }
  std::printf("PASS (tolerance %.1e)\n", tolerance);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcreplay: multichannel replay-attack detection experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(mcr_version()));
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress progress messages");
  const std::vector<std::string> args(argv, argv + argc);

  auto* synth = app.add_subcommand("synth", "generate a synthetic multichannel corpus");
  Settings synth_settings;
  std::string synth_out;
  add_settings(synth, synth_settings);
  synth->add_option("--out", synth_out, "output directory")->required();
  add_key_flag(synth, synth_settings, "--preset", "preset", "array preset d1, d2, d3 or d4");
  add_key_flag(synth, synth_settings, "--n", "n", "total clips at the default class ratio");
  add_key_flag(synth, synth_settings, "--genuine", "genuine", "genuine clip count");
  add_key_flag(synth, synth_settings, "--replayed", "replayed", "replayed clip count");
  add_key_flag(synth, synth_settings, "--seed", "seed", "master seed");
  add_key_flag(synth, synth_settings, "--sample-rate", "sample_rate", "override preset rate");
  add_key_flag(synth, synth_settings, "--duration", "duration", "fixed clip length in seconds");
  synth->add_flag_callback(
      "--balanced", [&] { synth_settings.named["balanced"] = "true"; },
      "split --n evenly between classes [balanced]");

  auto* train = app.add_subcommand("train", "train one model per configured seed");
  TrainFlags train_flags;
  add_train_flags(train, train_flags);
  add_key_flag(train, train_flags.settings, "--mode", "mode", "single, dummy or multichannel");

  auto* eval = app.add_subcommand("eval", "score a manifest split with a checkpoint");
  std::string eval_model, eval_manifest, eval_split = "eval", eval_out;
  eval->add_option("--model", eval_model, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--manifest", eval_manifest, "dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--split", eval_split, "train, dev, eval or core");
  eval->add_option("--out", eval_out, "directory for scores.jsonl and run.json");

  auto* compare = app.add_subcommand("compare-modes", "NN-Single vs dummy vs multichannel");
  TrainFlags compare_flags;
  add_train_flags(compare, compare_flags);

  auto* ablate = app.add_subcommand("ablate-channels", "EER per number of channels");
  TrainFlags ablate_flags;
  add_train_flags(ablate, ablate_flags);
  add_key_flag(ablate, ablate_flags.settings, "--order", "ablation_order",
               "channel order, e.g. 1,4,2,3");

  auto* sweep = app.add_subcommand("sweep-filters", "EER per front-end filter count");
  TrainFlags sweep_flags;
  add_train_flags(sweep, sweep_flags);
  add_key_flag(sweep, sweep_flags.settings, "--list", "sweep_filters",
               "comma-separated filter counts, each at least 8");

  auto* segment = app.add_subcommand("ablate-segment", "EER per segment length and position");
  TrainFlags segment_flags;
  add_train_flags(segment, segment_flags);
  add_key_flag(segment, segment_flags.settings, "--lengths", "segment_lengths",
               "segment lengths in seconds");
  add_key_flag(segment, segment_flags.settings, "--positions", "segment_positions",
               "beginning and/or middle");

  auto* grad = app.add_subcommand("grad-check", "finite-difference check of the full model");
  Settings grad_settings;
  std::string grad_out;
  add_settings(grad, grad_settings);
  grad->add_option("--out", grad_out, "directory for run.json");
  add_key_flag(grad, grad_settings, "--coords", "coords", "sampled parameter coordinates");
  add_key_flag(grad, grad_settings, "--seed", "seed", "initialization and input seed");
  add_key_flag(grad, grad_settings, "--eps", "eps", "central-difference step");
  add_key_flag(grad, grad_settings, "--tolerance", "tolerance", "maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }
  mcr_set_quiet(quiet ? 1 : 0);

  try {
    if (synth->parsed()) return run_synth(synth_settings, synth_out, args);
    if (train->parsed()) return run_train(train_flags, args);
    if (eval->parsed()) return run_eval(eval_model, eval_manifest, eval_split, eval_out, args);
    if (compare->parsed()) return run_experiment("compare-modes", compare_flags, args);
    if (ablate->parsed()) return run_experiment("ablate-channels", ablate_flags, args);
    if (sweep->parsed()) return run_experiment("sweep-filters", sweep_flags, args);
    if (segment->parsed()) return run_experiment("ablate-segment", segment_flags, args);
    if (grad->parsed()) return run_grad_check(grad_settings, grad_out, args);
  } catch (const Failure& f) {
    std::fprintf(stderr, "mcreplay: %s\n", f.message.c_str());
    return f.status == MCR_ERR_CONFIG ? kExitUsage : kExitRuntime;
  }
  return kExitUsage;
}
