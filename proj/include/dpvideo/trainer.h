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

#ifndef DPVIDEO_TRAINER_H_
#define DPVIDEO_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpvideo/dataset.h"
#include "dpvideo/finetune.h"
#include "dpvideo/model.h"

namespace dpvideo {

// Flat "section.key" -> value view of a resolved configuration.
using KeyValues = std::map<std::string, std::string>;

struct TrainConfig {
  std::string train_data;
  std::string test_data;
  // Optional DPVM checkpoint loaded before the scheme is applied.
  std::string pretrained;

  std::vector<std::size_t> hidden_dims = {64};
  NormSpec norm = NormSpec::LayerNorm();

  Scheme scheme;
  std::size_t adapter_bottleneck = 8;
  std::size_t clips_per_video = 1;

  // Exactly one of target_epsilon / sigma is set.
  std::optional<double> target_epsilon;
  std::optional<double> sigma;
  double delta = 1e-5;
  double clip_norm = 1.0;
  // Poisson inclusion probability of each training video per step.
  double sampling_rate = 0.05;
  double epochs = 10.0;
  double lr = 0.1;
  std::uint64_t seed = 0;
  std::uint64_t eval_every = 50;
  int workers = 1;

  // Throws ConfigError on any violated constraint.
  void Validate() const;

  // Every key in resolved form; FromKeyValues(ToKeyValues()) round-trips.
  KeyValues ToKeyValues() const;
  // Unknown keys and unparsable values throw ConfigError. Missing keys keep
  // their defaults.
  static TrainConfig FromKeyValues(const KeyValues& kv);
};

struct EvalRecord {
  std::uint64_t step = 0;
  // Spent epsilon after `step` steps; +inf without noise.
  double epsilon = 0.0;
  // Mean training clip loss over the steps since the previous record.
  double loss = 0.0;
  double accuracy = 0.0;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

struct RunReport {
  std::vector<EvalRecord> records;
  std::string scheme;
  std::size_t clips_per_video = 0;
  std::size_t trainable_params = 0;
  double sigma = 0.0;
  double q = 0.0;
  double delta = 0.0;
  std::optional<double> target_epsilon;
  std::uint64_t steps = 0;
  double epsilon = 0.0;
  int best_order = 0;
  double expected_batch_size = 0.0;
  std::uint64_t empty_batches = 0;
  std::uint64_t seed = 0;
  double final_accuracy = 0.0;
  KeyValues config;
  // Not part of equality or of any written file.
  double wall_seconds = 0.0;

  bool SameResults(const RunReport& other) const;
};

// Fraction of videos whose PredictVideo matches the label. Consumes no
// privacy budget.
double Evaluate(const Model& model, const Dataset& dataset);

struct TrainingData {
  Dataset train;
  Dataset test;
  std::optional<ParameterStore> pretrained;
};

// Loads the files referenced by the config.
TrainingData LoadTrainingData(const TrainConfig& config);

// Model shape implied by the dataset and the config.
ModelConfig ModelConfigFor(const TrainConfig& config, const DatasetSpec& data);

// Builds the model, loads pre-trained weights, inserts adapters when the
// scheme needs them and applies the scheme.
Model PrepareModel(const TrainConfig& config, const TrainingData& data);

// Number of steps a run is planned for: ceil(epochs / q).
std::uint64_t PlannedSteps(const TrainConfig& config);

// Noise multiplier a run will use: the explicit sigma, or the calibrated
// one for the target epsilon over PlannedSteps().
double ResolveSigma(const TrainConfig& config);

// Private training. Each step includes every training video independently
// with probability q, samples clips_per_video clips from each included
// video, runs a multi-clip step (a plain DP-SGD step when one clip is
// sampled) and charges the accountant once. Stops after PlannedSteps() or
// as soon as one more step would exceed the target epsilon. An empty
// Poisson batch skips the update but still counts as a step. When
// `trained` is given it receives the final model.
RunReport Train(const TrainConfig& config, const TrainingData& data,
                Model* trained = nullptr);
RunReport Train(const TrainConfig& config);

// One Train() per K, all sharing sigma, steps and seed. Runs up to `jobs`
// configurations concurrently.
std::vector<RunReport> SweepClips(const TrainConfig& config,
                                  const std::vector<std::size_t>& clip_counts,
                                  const TrainingData& data, int jobs = 1);

struct PretrainOptions {
  std::vector<std::size_t> hidden_dims = {64};
  NormSpec norm = NormSpec::LayerNorm();
  double epochs = 10.0;
  double lr = 0.1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  int workers = 1;
};

// Non-private minibatch SGD on every clip of every video, for building
// source-domain checkpoints.
Model Pretrain(const Dataset& source, const PretrainOptions& options);

std::string ReportToJson(const RunReport& report);
// Header "step,epsilon,loss,accuracy".
std::string ReportToCsv(const RunReport& report);
// Header "clips,step,epsilon,loss,accuracy"; one row per report per record.
std::string SweepToCsv(const std::vector<RunReport>& reports);

}  // namespace dpvideo

#endif  // DPVIDEO_TRAINER_H_
