// Copyright 2026 The dpvideo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpvideo/trainer.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "json.hpp"
#include <spdlog/spdlog.h>

#include "dpvideo/accountant.h"
#include "dpvideo/dp_sgd.h"
#include "dpvideo/parallel.h"
#include "dpvideo/random.h"
#include "dpvideo/status.h"

namespace dpvideo {
namespace {

std::string FormatDouble(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double ParseDouble(const std::string& key, const std::string& text) {
  const std::string t = Trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("key '" + key + "': '" + text + "' is not a number");
  }
  return v;
}

std::uint64_t ParseUint(const std::string& key, const std::string& text) {
  const std::string t = Trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("key '" + key + "': '" + text +
                      "' is not a non-negative integer");
  }
  return v;
}

std::vector<std::size_t> ParseList(const std::string& key,
                                   const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (Trim(item).empty()) continue;
    out.push_back(ParseUint(key, item));
  }
  return out;
}

std::string JoinList(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

nlohmann::json JsonNumber(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

void TrainConfig::Validate() const {
  if (target_epsilon.has_value() == sigma.has_value()) {
    throw ConfigError(
        "exactly one of train.target_epsilon and train.sigma must be set");
  }
  if (target_epsilon && !(*target_epsilon > 0.0)) {
    throw ConfigError("train.target_epsilon must be > 0");
  }
  if (sigma && !(*sigma >= 0.0 && std::isfinite(*sigma))) {
    throw ConfigError("train.sigma must be finite and >= 0");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("train.delta must lie in (0, 1)");
  }
  if (!(clip_norm > 0.0) || !std::isfinite(clip_norm)) {
    throw ConfigError("train.clip_norm must be finite and > 0");
  }
  if (!(sampling_rate > 0.0 && sampling_rate <= 1.0)) {
    throw ConfigError("train.sampling_rate must lie in (0, 1]");
  }
  if (!(epochs > 0.0) || !std::isfinite(epochs)) {
    throw ConfigError("train.epochs must be finite and > 0");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw ConfigError("train.lr must be finite and > 0");
  }
  if (clips_per_video == 0) {
    throw ConfigError("train.clips_per_video must be >= 1");
  }
  if (eval_every == 0) throw ConfigError("train.eval_every must be >= 1");
  if (workers < 1) throw ConfigError("train.workers must be >= 1");
  if (scheme.kind == Scheme::Kind::kAdapter && adapter_bottleneck == 0) {
    throw ConfigError("train.adapter_bottleneck must be >= 1");
  }
  if (train_data.empty()) throw ConfigError("data.train is required");
  if (test_data.empty()) throw ConfigError("data.test is required");
}

KeyValues TrainConfig::ToKeyValues() const {
  KeyValues kv;
  kv["seed"] = std::to_string(seed);
  kv["data.train"] = train_data;
  kv["data.test"] = test_data;
  kv["model.hidden"] = JoinList(hidden_dims);
  kv["model.norm"] = norm.ToString();
  kv["train.scheme"] = scheme.ToString();
  kv["train.adapter_bottleneck"] = std::to_string(adapter_bottleneck);
  kv["train.clips_per_video"] = std::to_string(clips_per_video);
  kv["train.target_epsilon"] =
      target_epsilon ? FormatDouble(*target_epsilon) : "";
  kv["train.sigma"] = sigma ? FormatDouble(*sigma) : "";
  kv["train.delta"] = FormatDouble(delta);
  kv["train.clip_norm"] = FormatDouble(clip_norm);
  kv["train.sampling_rate"] = FormatDouble(sampling_rate);
  kv["train.epochs"] = FormatDouble(epochs);
  kv["train.lr"] = FormatDouble(lr);
  kv["train.pretrained"] = pretrained;
  kv["train.eval_every"] = std::to_string(eval_every);
  kv["train.workers"] = std::to_string(workers);
  return kv;
}

TrainConfig TrainConfig::FromKeyValues(const KeyValues& kv) {
  TrainConfig c;
  std::string scheme_name = c.scheme.ToString();
  for (const auto& [key, raw] : kv) {
    const std::string value = Trim(raw);
    if (key == "seed") {
      c.seed = ParseUint(key, value);
    } else if (key == "data.train") {
      c.train_data = value;
    } else if (key == "data.test") {
      c.test_data = value;
    } else if (key == "model.hidden") {
      c.hidden_dims = ParseList(key, value);
    } else if (key == "model.norm") {
      try {
        c.norm = NormSpec::Parse(value);
      } catch (const InvalidArgumentError& e) {
        throw ConfigError(std::string("model.norm: ") + e.what());
      }
    } else if (key == "train.scheme") {
      scheme_name = value;
    } else if (key == "train.adapter_bottleneck") {
      c.adapter_bottleneck = ParseUint(key, value);
    } else if (key == "train.clips_per_video") {
      c.clips_per_video = ParseUint(key, value);
    } else if (key == "train.target_epsilon") {
      c.target_epsilon = value.empty() ? std::nullopt
                                       : std::optional(ParseDouble(key, value));
    } else if (key == "train.sigma") {
      c.sigma = value.empty() ? std::nullopt
                              : std::optional(ParseDouble(key, value));
    } else if (key == "train.delta") {
      c.delta = ParseDouble(key, value);
    } else if (key == "train.clip_norm") {
      c.clip_norm = ParseDouble(key, value);
    } else if (key == "train.sampling_rate") {
      c.sampling_rate = ParseDouble(key, value);
    } else if (key == "train.epochs") {
      c.epochs = ParseDouble(key, value);
    } else if (key == "train.lr") {
      c.lr = ParseDouble(key, value);
    } else if (key == "train.pretrained") {
      c.pretrained = value;
    } else if (key == "train.eval_every") {
      c.eval_every = ParseUint(key, value);
    } else if (key == "train.workers") {
      c.workers = static_cast<int>(ParseUint(key, value));
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  try {
    c.scheme = Scheme::Parse(scheme_name, c.adapter_bottleneck);
  } catch (const InvalidArgumentError& e) {
    throw ConfigError(std::string("train.scheme: ") + e.what());
  }
  return c;
}

bool RunReport::SameResults(const RunReport& o) const {
  auto same = [](double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b) ||
           (std::isnan(a) && std::isnan(b));
  };
  if (records.size() != o.records.size()) return false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const EvalRecord& a = records[i];
    const EvalRecord& b = o.records[i];
    if (a.step != b.step || !same(a.epsilon, b.epsilon) ||
        !same(a.loss, b.loss) || !same(a.accuracy, b.accuracy)) {
      return false;
    }
  }
  return scheme == o.scheme && clips_per_video == o.clips_per_video &&
         trainable_params == o.trainable_params && same(sigma, o.sigma) &&
         same(q, o.q) && same(delta, o.delta) &&
         target_epsilon == o.target_epsilon && steps == o.steps &&
         same(epsilon, o.epsilon) && best_order == o.best_order &&
         same(expected_batch_size, o.expected_batch_size) &&
         empty_batches == o.empty_batches && seed == o.seed &&
         same(final_accuracy, o.final_accuracy) && config == o.config;
}

double Evaluate(const Model& model, const Dataset& dataset) {
  if (dataset.videos.empty()) {
    throw InvalidArgumentError("cannot evaluate on an empty dataset");
  }
  std::size_t correct = 0;
  for (const VideoSample& v : dataset.videos) {
    if (PredictVideo(model, v) == v.label) ++correct;
  }
  return static_cast<double>(correct) /
         static_cast<double>(dataset.videos.size());
}

TrainingData LoadTrainingData(const TrainConfig& config) {
  TrainingData data{LoadDataset(config.train_data),
                    LoadDataset(config.test_data), std::nullopt};
  if (!config.pretrained.empty()) {
    data.pretrained = LoadCheckpoint(config.pretrained);
  }
  return data;
}

ModelConfig ModelConfigFor(const TrainConfig& config,
                           const DatasetSpec& data) {
  ModelConfig mc;
  mc.input_dim = data.feature_dim;
  mc.frames_per_clip = data.clip_length;
  mc.num_classes = data.num_classes;
  mc.hidden_dims = config.hidden_dims;
  mc.norm = config.norm;
  return mc;
}

Model PrepareModel(const TrainConfig& config, const TrainingData& data) {
  const DatasetSpec& spec = data.train.spec;
  const DatasetSpec& test = data.test.spec;
  if (test.feature_dim != spec.feature_dim ||
      test.clip_length != spec.clip_length ||
      test.num_classes != spec.num_classes) {
    throw InvalidArgumentError(
        "test set shape (classes, clip length, features) differs from the "
        "training set");
  }
  Model model = BuildModel(ModelConfigFor(config, spec), config.seed);
  if (data.pretrained && config.scheme.kind != Scheme::Kind::kFromScratch) {
    LoadWeightsInto(model.params, *data.pretrained);
  }
  if (config.scheme.kind == Scheme::Kind::kAdapter) {
    model = InsertAdapters(model, {config.adapter_bottleneck}, config.seed);
  }
  ApplyScheme(model, config.scheme, config.seed);
  return model;
}

std::uint64_t PlannedSteps(const TrainConfig& config) {
  const double steps = std::ceil(config.epochs / config.sampling_rate - 1e-9);
  return static_cast<std::uint64_t>(std::max(1.0, steps));
}

double ResolveSigma(const TrainConfig& config) {
  if (config.sigma) return *config.sigma;
  return CalibrateSigma(*config.target_epsilon, config.delta,
                        config.sampling_rate, PlannedSteps(config));
}

RunReport Train(const TrainConfig& config, const TrainingData& data,
                Model* trained) {
  config.Validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t frames_per_clip = data.train.spec.clip_length;
  for (const VideoSample& v : data.train.videos) {
    const std::size_t clips = v.frames.rows() / frames_per_clip;
    if (config.clips_per_video > clips) {
      throw InvalidArgumentError(
          "clips_per_video " + std::to_string(config.clips_per_video) +
          " exceeds the " + std::to_string(clips) + " clips of video " +
          std::to_string(v.id));
    }
  }
  if (data.train.videos.empty()) {
    throw InvalidArgumentError("training set is empty");
  }

  Model model = PrepareModel(config, data);
  const ParameterStore initial = model.params;

  const double q = config.sampling_rate;
  const std::uint64_t planned = PlannedSteps(config);
  const double sigma = ResolveSigma(config);
  const NoiseConfig noise{config.clip_norm, sigma, config.seed};
  std::optional<PrivacyAccountant> accountant;
  if (sigma > 0.0) accountant.emplace(q, sigma);

  RunReport report;
  report.scheme = config.scheme.ToString();
  report.clips_per_video = config.clips_per_video;
  report.trainable_params = model.params.CountTrainable();
  report.sigma = sigma;
  report.q = q;
  report.delta = config.delta;
  report.target_epsilon = config.target_epsilon;
  report.expected_batch_size =
      q * static_cast<double>(data.train.videos.size());
  report.seed = config.seed;
  report.config = config.ToKeyValues();

  auto spent = [&](std::uint64_t steps) -> EpsilonResult {
    if (!accountant) {
      return {std::numeric_limits<double>::infinity(), 0};
    }
    return accountant->EpsilonAt(steps, config.delta);
  };

  spdlog::info("training {} K={} sigma={:.6g} q={} planned_steps={} "
               "trainable={}",
               report.scheme, config.clips_per_video, sigma, q, planned,
               report.trainable_params);

  const CounterRng poisson(config.seed, Stream::kPoissonSampling);
  double loss_sum = 0.0;
  std::uint64_t loss_steps = 0;
  std::uint64_t step = 0;
  auto record = [&] {
    EvalRecord r;
    r.step = step;
    r.epsilon = spent(step).epsilon;
    r.loss = loss_steps ? loss_sum / static_cast<double>(loss_steps)
                        : std::numeric_limits<double>::quiet_NaN();
    r.accuracy = Evaluate(model, data.test);
    spdlog::debug("step {} eps {:.6g} loss {:.6g} acc {:.4f}", r.step,
                  r.epsilon, r.loss, r.accuracy);
    report.records.push_back(r);
    loss_sum = 0.0;
    loss_steps = 0;
  };

  while (step < planned) {
    if (config.target_epsilon &&
        spent(step + 1).epsilon > *config.target_epsilon) {
      break;
    }
    std::vector<VideoExample> batch;
    for (std::size_t i = 0; i < data.train.videos.size(); ++i) {
      if (poisson.Uniform(step, static_cast<std::uint32_t>(i)) >= q) continue;
      const VideoSample& v = data.train.videos[i];
      PhiloxEngine rng(config.seed, Stream::kClipSampling,
                       static_cast<std::uint32_t>(i), step << 24);
      batch.push_back({SampleClips(v, frames_per_clip,
                                   config.clips_per_video, rng),
                       v.label});
    }
    if (batch.empty()) {
      ++report.empty_batches;
    } else if (config.clips_per_video == 1) {
      std::vector<ClipExample> clips;
      clips.reserve(batch.size());
      for (VideoExample& v : batch) {
        clips.push_back({std::move(v.clips.front().frames), v.label});
      }
      loss_sum +=
          DpSgdStep(model, clips, noise, config.lr, step, config.workers)
              .mean_loss;
      ++loss_steps;
    } else {
      loss_sum +=
          MultiClipStep(model, batch, noise, config.lr, step, config.workers)
              .mean_loss;
      ++loss_steps;
    }
    if (accountant) accountant->Step();
    ++step;
    if (step % config.eval_every == 0) record();
  }
  if (report.records.empty() || report.records.back().step != step) record();

  for (const Parameter& p : model.params.entries()) {
    if (!p.trainable && !(p.value == initial.Value(p.name))) {
      throw std::logic_error("frozen parameter '" + p.name +
                             "' changed during training");
    }
  }

  report.steps = step;
  const EpsilonResult final_eps = spent(step);
  report.epsilon = final_eps.epsilon;
  report.best_order = final_eps.best_order;
  report.final_accuracy = report.records.back().accuracy;
  report.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  spdlog::info("finished {} K={}: {} steps, accuracy {:.4f} at epsilon {:.6g} "
               "({:.1f}s)",
               report.scheme, config.clips_per_video, report.steps,
               report.final_accuracy, report.epsilon, report.wall_seconds);
  if (trained) *trained = std::move(model);
  return report;
}

RunReport Train(const TrainConfig& config) {
  config.Validate();
  return Train(config, LoadTrainingData(config));
}

std::vector<RunReport> SweepClips(const TrainConfig& config,
                                  const std::vector<std::size_t>& clip_counts,
                                  const TrainingData& data, int jobs) {
  config.Validate();
  // Shared across runs: sigma depends only on (target, delta, q, steps).
  TrainConfig base = config;
  if (!base.sigma) {
    base.sigma = ResolveSigma(config);
  }
  std::vector<RunReport> reports(clip_counts.size());
  ParallelFor(clip_counts.size(), jobs, [&](std::size_t i) {
    TrainConfig c = config;
    c.clips_per_video = clip_counts[i];
    reports[i] = Train(c, data);
    if (reports[i].sigma != *base.sigma) {
      throw std::logic_error("sweep runs disagree on sigma");
    }
  });
  return reports;
}

Model Pretrain(const Dataset& source, const PretrainOptions& options) {
  if (source.videos.empty()) {
    throw InvalidArgumentError("pre-training set is empty");
  }
  if (options.batch_size == 0) {
    throw InvalidArgumentError("pre-training batch size must be >= 1");
  }
  ModelConfig mc;
  mc.input_dim = source.spec.feature_dim;
  mc.frames_per_clip = source.spec.clip_length;
  mc.num_classes = source.spec.num_classes;
  mc.hidden_dims = options.hidden_dims;
  mc.norm = options.norm;
  Model model = BuildModel(mc, options.seed);

  const std::size_t n = source.videos.size();
  const std::uint64_t total_batches = static_cast<std::uint64_t>(std::ceil(
      options.epochs * static_cast<double>(n) /
      static_cast<double>(options.batch_size)));
  std::vector<std::size_t> order(n);
  std::size_t cursor = n;
  std::uint32_t epoch = 0;
  for (std::uint64_t b = 0; b < total_batches; ++b) {
    std::vector<NamedTensors> inputs;
    for (std::size_t k = 0; k < options.batch_size; ++k) {
      if (cursor == n) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        PhiloxEngine rng(options.seed, Stream::kMinibatch, epoch++);
        for (std::size_t i = n - 1; i > 0; --i) {
          std::swap(order[i], order[rng.Below(i + 1)]);
        }
        cursor = 0;
      }
      const VideoSample& v = source.videos[order[cursor++]];
      for (const Tensor& clip : ChunkVideo(v, mc.frames_per_clip)) {
        inputs.push_back(ClipInputs(clip, v.label));
      }
    }
    PerSampleGradients g =
        BackwardPerSample(model.tape, inputs, model.params, options.workers);
    model.params.ApplyUpdate(MeanGradient(g.grads), options.lr);
  }
  return model;
}

std::string ReportToJson(const RunReport& report) {
  nlohmann::ordered_json j;
  j["scheme"] = report.scheme;
  j["clips_per_video"] = report.clips_per_video;
  j["trainable_params"] = report.trainable_params;
  j["seed"] = report.seed;
  j["sigma"] = JsonNumber(report.sigma);
  j["q"] = report.q;
  j["delta"] = report.delta;
  j["target_epsilon"] = report.target_epsilon
                            ? nlohmann::ordered_json(*report.target_epsilon)
                            : nlohmann::ordered_json(nullptr);
  j["steps"] = report.steps;
  j["epsilon"] = JsonNumber(report.epsilon);
  j["best_order"] = report.best_order ? nlohmann::ordered_json(report.best_order)
                                      : nlohmann::ordered_json(nullptr);
  j["expected_batch_size"] = report.expected_batch_size;
  j["empty_batches"] = report.empty_batches;
  j["final_accuracy"] = report.final_accuracy;
  auto& records = j["records"] = nlohmann::ordered_json::array();
  for (const EvalRecord& r : report.records) {
    records.push_back({{"step", r.step},
                       {"epsilon", JsonNumber(r.epsilon)},
                       {"loss", JsonNumber(r.loss)},
                       {"accuracy", r.accuracy}});
  }
  j["config"] = report.config;
  return j.dump(2) + "\n";
}

namespace {

void CsvRow(std::ostringstream& os, const EvalRecord& r) {
  os << r.step << ',' << FormatDouble(r.epsilon) << ',' << FormatDouble(r.loss)
     << ',' << FormatDouble(r.accuracy) << '\n';
}

}  // namespace

std::string ReportToCsv(const RunReport& report) {
  std::ostringstream os;
  os << "step,epsilon,loss,accuracy\n";
  for (const EvalRecord& r : report.records) CsvRow(os, r);
  return os.str();
}

std::string SweepToCsv(const std::vector<RunReport>& reports) {
  std::ostringstream os;
  os << "clips,step,epsilon,loss,accuracy\n";
  for (const RunReport& report : reports) {
    for (const EvalRecord& r : report.records) {
      os << report.clips_per_video << ',';
      CsvRow(os, r);
    }
  }
  return os.str();
}

}  // namespace dpvideo
