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

// Command-line front end: data generation, privacy accounting,
// pre-training, private training and clip-count sweeps.
//
// Exit codes: 0 ok, 1 runtime error, 2 configuration error, 3 infeasible
// privacy target. DPV_LOG={error,info,debug} sets the log level.

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpvideo/accountant.h"
#include "dpvideo/binary_io.h"
#include "dpvideo/dataset.h"
#include "dpvideo/model.h"
#include "dpvideo/status.h"
#include "dpvideo/trainer.h"

namespace dpvideo {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

void SetUpLogging() {
  auto logger = spdlog::stderr_color_mt("dpvideo");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("DPV_LOG");
  const std::string name = level ? level : "info";
  if (name == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else if (name == "error") {
    spdlog::set_level(spdlog::level::err);
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0')
       << static_cast<int>(digest[i]);
  }
  return os.str();
}

// Reads a sectioned key/value file into "section.key" entries. Relative
// data and checkpoint paths are resolved against the file's directory.
KeyValues ReadConfigFile(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError("config file '" + path + "' does not exist");
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot parse config: ") + e.what());
  }
  KeyValues kv;
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      kv[key] = node.data();
      continue;
    }
    for (const auto& [sub, leaf] : node) kv[key + "." + sub] = leaf.data();
  }
  return kv;
}

void ApplyOverrides(KeyValues& kv, const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + o + "' is not of the form key=value");
    }
    kv[o.substr(0, eq)] = o.substr(eq + 1);
  }
}

std::string ResolvePath(const std::string& path, const std::string& config) {
  if (path.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(config).parent_path() / path).string();
}

struct ResolvedRun {
  TrainConfig config;
  std::vector<std::size_t> sweep_clips;
  int sweep_jobs = 1;
};

ResolvedRun ResolveRun(const std::string& config_path,
                       const std::vector<std::string>& overrides) {
  KeyValues kv = ReadConfigFile(config_path);
  ApplyOverrides(kv, overrides);
  ResolvedRun run;
  run.sweep_clips = {1, 2, 4, 8};
  for (auto it = kv.begin(); it != kv.end();) {
    if (it->first == "sweep.clips") {
      run.sweep_clips.clear();
      std::stringstream ss(it->second);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          run.sweep_clips.push_back(std::stoul(item));
        } catch (const std::exception&) {
          throw ConfigError("sweep.clips: '" + item + "' is not an integer");
        }
      }
      it = kv.erase(it);
    } else if (it->first == "sweep.jobs") {
      try {
        run.sweep_jobs = std::stoi(it->second);
      } catch (const std::exception&) {
        throw ConfigError("sweep.jobs: '" + it->second + "' is not an integer");
      }
      it = kv.erase(it);
    } else {
      ++it;
    }
  }
  run.config = TrainConfig::FromKeyValues(kv);
  run.config.Validate();
  return run;
}

TrainingData LoadRunData(const TrainConfig& config,
                         const std::string& config_path) {
  TrainConfig resolved = config;
  resolved.train_data = ResolvePath(config.train_data, config_path);
  resolved.test_data = ResolvePath(config.test_data, config_path);
  resolved.pretrained = ResolvePath(config.pretrained, config_path);
  for (const std::string& p :
       {resolved.train_data, resolved.test_data, resolved.pretrained}) {
    if (!p.empty() && !std::filesystem::is_regular_file(p)) {
      throw ConfigError("referenced file '" + p + "' does not exist");
    }
  }
  return LoadTrainingData(resolved);
}

void PrintAccuracyAtEpsilon(const RunReport& r) {
  std::cout << "accuracy@epsilon " << std::fixed << std::setprecision(4)
            << r.final_accuracy << "@" << std::setprecision(4) << r.epsilon
            << "  (scheme=" << r.scheme << " clips=" << r.clips_per_video
            << " sigma=" << std::setprecision(6) << r.sigma
            << " steps=" << r.steps << ")\n";
  std::cout.unsetf(std::ios::floatfield);
}

int Run(int argc, char** argv) {
  CLI::App app{"Video-level differentially private training toolkit"};
  app.require_subcommand(1);

  // generate-data
  DatasetSpec spec;
  std::string data_out;
  auto* gen = app.add_subcommand("generate-data",
                                 "Write a synthetic DPVD video dataset");
  gen->add_option("--classes", spec.num_classes, "number of classes");
  gen->add_option("--videos-per-class", spec.videos_per_class);
  gen->add_option("--frames", spec.frames_per_video, "frames per video");
  gen->add_option("--clip-len", spec.clip_length, "frames per clip");
  gen->add_option("--dim", spec.feature_dim, "features per frame");
  gen->add_option("--noise", spec.noise_std, "pixel noise std");
  gen->add_option("--seed", spec.seed, "pixel noise seed");
  gen->add_option("--template-seed", spec.template_seed, "class template seed");
  gen->add_option("--domain-shift", spec.domain_shift,
                  "template perturbation for source-domain data");
  gen->add_option("--signal-scale", spec.signal_scale, "template amplitude");
  gen->add_option("--out", data_out, "output path")->required();

  // account
  double acc_q = 0.0, acc_sigma = 0.0, acc_delta = 1e-5, acc_target = 0.0;
  std::uint64_t acc_steps = 0;
  auto* account = app.add_subcommand(
      "account", "Spent epsilon for (q, sigma, steps), or sigma for a target");
  account->add_option("--q", acc_q, "sampling rate")->required();
  auto* sigma_opt = account->add_option("--sigma", acc_sigma, "noise multiplier");
  account->add_option("--steps", acc_steps, "number of steps")->required();
  account->add_option("--delta", acc_delta, "target delta");
  auto* target_opt =
      account->add_option("--target-eps", acc_target, "calibrate sigma");
  sigma_opt->excludes(target_opt);

  // pretrain
  std::string pre_data, pre_out, pre_hidden = "64", pre_norm = "layer";
  PretrainOptions pre;
  auto* pretrain = app.add_subcommand(
      "pretrain", "Non-private training on a source dataset; writes DPVM");
  pretrain->add_option("--data", pre_data, "source DPVD dataset")->required();
  pretrain->add_option("--hidden", pre_hidden, "comma-separated widths");
  pretrain->add_option("--norm", pre_norm, "none | layer | group:<g>");
  pretrain->add_option("--epochs", pre.epochs);
  pretrain->add_option("--lr", pre.lr);
  pretrain->add_option("--batch", pre.batch_size);
  pretrain->add_option("--seed", pre.seed);
  pretrain->add_option("--out", pre_out, "checkpoint path")->required();

  // train / sweep
  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  auto* train = app.add_subcommand("train", "Private training run");
  auto* sweep =
      app.add_subcommand("sweep", "One private run per clips-per-video value");
  for (auto* sub : {train, sweep}) {
    sub->add_option("--config", config_path, "config file")->required();
    sub->add_option("--override", overrides, "section.key=value")
        ->take_all();
    sub->add_option("--out", out_dir, "output directory")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  SetUpLogging();

  try {
    if (*gen) {
      try {
        spec.Validate();
      } catch (const InvalidArgumentError& e) {
        throw ConfigError(e.what());
      }
      const std::string bytes = SerializeDataset(GenerateDataset(spec));
      WriteFileAtomic(data_out, bytes);
      std::cout << Sha256Hex(bytes) << "  " << data_out << "\n";
      return kExitOk;
    }

    if (*account) {
      nlohmann::ordered_json j;
      if (!(acc_q > 0.0 && acc_q <= 1.0)) {
        throw ConfigError("--q must lie in (0, 1]");
      }
      if (!(acc_delta > 0.0 && acc_delta < 1.0)) {
        throw ConfigError("--delta must lie in (0, 1)");
      }
      double sigma = acc_sigma;
      if (*target_opt) {
        if (acc_steps == 0) throw ConfigError("--target-eps needs --steps > 0");
        sigma = CalibrateSigma(acc_target, acc_delta, acc_q, acc_steps);
      } else if (!*sigma_opt || !(acc_sigma > 0.0)) {
        throw ConfigError("give --sigma > 0 or --target-eps");
      }
      const EpsilonResult eps =
          ComputeEpsilon(acc_q, sigma, acc_steps, acc_delta);
      j["epsilon"] = eps.epsilon;
      j["delta"] = acc_delta;
      j["sigma"] = sigma;
      j["q"] = acc_q;
      j["steps"] = acc_steps;
      j["best_order"] = eps.best_order ? nlohmann::ordered_json(eps.best_order)
                                       : nlohmann::ordered_json(nullptr);
      std::cout << j.dump() << "\n";
      return kExitOk;
    }

    if (*pretrain) {
      std::vector<std::size_t> hidden;
      std::stringstream ss(pre_hidden);
      std::string item;
      try {
        while (std::getline(ss, item, ',')) {
          if (!item.empty()) hidden.push_back(std::stoul(item));
        }
        pre.hidden_dims = hidden;
        pre.norm = NormSpec::Parse(pre_norm);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("pretrain options: ") + e.what());
      }
      const Dataset source = LoadDataset(pre_data);
      const Model model = Pretrain(source, pre);
      SaveCheckpoint(model.params, pre_out);
      std::cout << "source accuracy " << Evaluate(model, source) << "\n";
      return kExitOk;
    }

    if (*train || *sweep) {
      const ResolvedRun run = ResolveRun(config_path, overrides);
      const TrainingData data = LoadRunData(run.config, config_path);
      std::filesystem::create_directories(out_dir);
      const std::filesystem::path out(out_dir);
      if (*train) {
        const RunReport report = Train(run.config, data);
        WriteFileAtomic((out / "report.json").string(), ReportToJson(report));
        WriteFileAtomic((out / "metrics.csv").string(), ReportToCsv(report));
        PrintAccuracyAtEpsilon(report);
      } else {
        const std::vector<RunReport> reports =
            SweepClips(run.config, run.sweep_clips, data, run.sweep_jobs);
        for (const RunReport& r : reports) {
          const std::string k = std::to_string(r.clips_per_video);
          WriteFileAtomic((out / ("report_k" + k + ".json")).string(),
                          ReportToJson(r));
          PrintAccuracyAtEpsilon(r);
        }
        WriteFileAtomic((out / "sweep.csv").string(), SweepToCsv(reports));
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    spdlog::error("infeasible: {}", e.what());
    return kExitInfeasible;
  } catch (const std::exception& e) {
    spdlog::error("runtime error: {}", e.what());
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace
}  // namespace dpvideo

int main(int argc, char** argv) { return dpvideo::Run(argc, argv); }
