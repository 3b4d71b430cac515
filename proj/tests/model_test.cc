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


#include "dpvideo/model.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "dpvideo/dp_sgd.h"
#include "dpvideo/finetune.h"
#include "dpvideo/random.h"
#include "dpvideo/status.h"
#include "gtest/gtest.h"

namespace dpvideo {
namespace {

Tensor RandomClip(PhiloxEngine& rng, const ModelConfig& config) {
  Tensor t({config.frames_per_clip, config.input_dim});
  for (double& v : t.data()) v = rng.Normal();
  return t;
}

ModelConfig SmallConfig() {
  ModelConfig c;
  c.input_dim = 6;
  c.frames_per_clip = 4;
  c.hidden_dims = {12, 8};
  c.num_classes = 5;
  return c;
}

TEST(ModelTest, BareLinearHeadCount) {
  ModelConfig c;
  c.hidden_dims = {};
  Model m = BuildModel(c, 1);
  EXPECT_EQ(m.params.CountTrainable(), (32u + 1u) * 10u);
  EXPECT_EQ(m.tape.ParamNames(),
            (std::vector<std::string>{"head.weight", "head.bias"}));
}

TEST(ModelTest, ParameterNamesAndCounts) {
  Model m = BuildModel(SmallConfig(), 1);
  EXPECT_EQ(m.tape.ParamNames(),
            (std::vector<std::string>{
                "layer0.weight", "layer0.bias", "layer0.norm.scale",
                "layer0.norm.shift", "layer1.weight", "layer1.bias",
                "layer1.norm.scale", "layer1.norm.shift", "head.weight",
                "head.bias"}));
  const std::size_t expected =
      (6 * 12 + 12 + 2 * 12) + (12 * 8 + 8 + 2 * 8) + (8 * 5 + 5);
  EXPECT_EQ(m.params.CountTrainable(), expected);
  EXPECT_EQ(m.params.CountAll(), expected);
}

TEST(ModelTest, SameSeedIsBitIdentical) {
  EXPECT_EQ(BuildModel(SmallConfig(), 9).params,
            BuildModel(SmallConfig(), 9).params);
  EXPECT_FALSE(BuildModel(SmallConfig(), 9).params ==
               BuildModel(SmallConfig(), 10).params);
}

TEST(ModelTest, InitializationConventions) {
  Model m = BuildModel(SmallConfig(), 4);
  for (double v : m.params.Value("layer0.norm.scale").data()) EXPECT_EQ(v, 1);
  for (double v : m.params.Value("layer0.norm.shift").data()) EXPECT_EQ(v, 0);
  for (double v : m.params.Value("layer1.bias").data()) EXPECT_EQ(v, 0);
  EXPECT_GT(L2Norm(m.params.Value("layer0.weight").data()), 0.0);
}

TEST(ModelTest, LogitsHaveClassCount) {
  Model m = BuildModel(SmallConfig(), 4);
  PhiloxEngine rng(1, Stream::kTest);
  Tensor logits = ClipLogits(m, RandomClip(rng, m.config));
  EXPECT_EQ(logits.size(), 5u);
  EXPECT_TRUE(logits.AllFinite());
}

TEST(ModelTest, GroupNormWithOneGroupEqualsLayerNorm) {
  ModelConfig ln = SmallConfig();
  ModelConfig gn = ln;
  gn.norm = NormSpec::GroupNorm(1);
  Model a = BuildModel(ln, 3);
  Model b = BuildModel(gn, 3);
  ASSERT_EQ(a.params, b.params);
  PhiloxEngine rng(2, Stream::kTest);
  for (int i = 0; i < 20; ++i) {
    Tensor clip = RandomClip(rng, ln);
    ForwardResult fa = Forward(a.tape, ClipInputs(clip, 0), a.params);
    ForwardResult fb = Forward(b.tape, ClipInputs(clip, 0), b.params);
    for (std::size_t id = 0; id < a.tape.nodes().size(); ++id) {
      if (a.tape.node(id).name == "layer0.norm") {
        EXPECT_EQ(fa.values[id], fb.values[id]);
      }
    }
    EXPECT_EQ(fa.logits, fb.logits);
  }
}

// Rows of a normalized group have mean 0 and variance v / (v + eps),
// where v is the group's pre-norm variance; groups with v well above eps
// come out with unit variance.
void ExpectNormalizedGroups(const Tensor& pre, const Tensor& post,
                            std::size_t groups) {
  const std::size_t width = pre.cols() / groups;
  for (std::size_t r = 0; r < pre.rows(); ++r) {
    for (std::size_t g = 0; g < groups; ++g) {
      double mean = 0, var = 0, out_mean = 0, out_var = 0;
      for (std::size_t c = g * width; c < (g + 1) * width; ++c) {
        mean += pre.at(r, c);
        out_mean += post.at(r, c);
      }
      mean /= width;
      out_mean /= width;
      for (std::size_t c = g * width; c < (g + 1) * width; ++c) {
        var += (pre.at(r, c) - mean) * (pre.at(r, c) - mean);
        out_var += (post.at(r, c) - out_mean) * (post.at(r, c) - out_mean);
      }
      var /= width;
      out_var /= width;
      EXPECT_NEAR(out_mean, 0.0, 1e-9);
      EXPECT_NEAR(out_var, var / (var + kNormEpsilon), 1e-9);
      if (var > 1000 * kNormEpsilon) EXPECT_NEAR(out_var, 1.0, 1e-3);
    }
  }
}

void CheckNormStatistics(const ModelConfig& config, std::size_t groups) {
  Model m = BuildModel(config, 6);
  PhiloxEngine rng(8, Stream::kTest);
  for (int i = 0; i < 10; ++i) {
    ForwardResult f =
        Forward(m.tape, ClipInputs(RandomClip(rng, config), 0), m.params);
    for (std::size_t id = 0; id < m.tape.nodes().size(); ++id) {
      const TapeNode& n = m.tape.node(id);
      if (n.kind != OpKind::kNormalize) continue;
      // Fresh scale is 1 and shift is 0, so the output is the raw
      // normalization.
      ExpectNormalizedGroups(f.values[n.inputs[0]], f.values[id], groups);
    }
  }
}

TEST(ModelTest, LayerNormStatistics) { CheckNormStatistics(SmallConfig(), 1); }

TEST(ModelTest, GroupNormStatistics) {
  ModelConfig c = SmallConfig();
  c.norm = NormSpec::GroupNorm(4);
  CheckNormStatistics(c, 4);
}

TEST(ModelTest, GroupNormMustDivideWidths) {
  ModelConfig c = SmallConfig();
  c.norm = NormSpec::GroupNorm(3);
  EXPECT_THROW(BuildModel(c, 0), InvalidArgumentError);
}

TEST(ModelTest, NormParsing) {
  EXPECT_EQ(NormSpec::Parse("layer"), NormSpec::LayerNorm());
  EXPECT_EQ(NormSpec::Parse("none"), NormSpec::None());
  EXPECT_EQ(NormSpec::Parse("group:4"), NormSpec::GroupNorm(4));
  EXPECT_EQ(NormSpec::Parse(NormSpec::GroupNorm(2).ToString()),
            NormSpec::GroupNorm(2));
  EXPECT_THROW(NormSpec::Parse("batch"), InvalidArgumentError);
  EXPECT_THROW(NormSpec::Parse("group:0"), InvalidArgumentError);
  EXPECT_THROW(NormSpec::Parse("instance"), InvalidArgumentError);
}

TEST(ModelTest, NormFreeModelHasNoNormParameters) {
  ModelConfig c = SmallConfig();
  c.norm = NormSpec::None();
  Model m = BuildModel(c, 0);
  EXPECT_FALSE(m.params.Contains("layer0.norm.scale"));
}

TEST(AdapterTest, InsertionIsExactIdentity) {
  Model base = BuildModel(SmallConfig(), 5);
  Model adapted = InsertAdapters(base, {3}, 17);
  PhiloxEngine rng(11, Stream::kTest);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    Tensor clip = RandomClip(rng, base.config);
    Tensor before = ClipLogits(base, clip);
    Tensor after = ClipLogits(adapted, clip);
    for (std::size_t c = 0; c < before.size(); ++c) {
      worst = std::max(worst, std::abs(before[c] - after[c]));
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(AdapterTest, ParameterCountFormula) {
  EXPECT_EQ(AdapterParameterCount(64, 8), 64u * 8 + 8 + 8 * 64 + 64);
  Model base = BuildModel(SmallConfig(), 5);
  Model adapted = InsertAdapters(base, {3}, 17);
  EXPECT_EQ(adapted.params.CountAll() - base.params.CountAll(),
            AdapterParameterCount(12, 3) + AdapterParameterCount(8, 3));
  for (const char* name :
       {"adapter0.down.weight", "adapter0.down.bias", "adapter0.up.weight",
        "adapter0.up.bias", "adapter1.up.weight"}) {
    EXPECT_TRUE(adapted.params.Contains(name)) << name;
  }
}

TEST(AdapterTest, OneStepBreaksIdentity) {
  Model base = BuildModel(SmallConfig(), 5);
  Model adapted = InsertAdapters(base, {3}, 17);
  ApplyScheme(adapted, Scheme::Parse("adapter", 3));
  PhiloxEngine rng(12, Stream::kTest);
  std::vector<ClipExample> batch;
  for (std::uint32_t i = 0; i < 4; ++i) {
    batch.push_back({RandomClip(rng, base.config), i % 5});
  }
  DpSgdStep(adapted, batch, {1.0, 0.0, 0}, 0.5, 0);
  EXPECT_GT(L2Norm(adapted.params.Value("adapter0.up.weight").data()), 0.0);
  Tensor probe = RandomClip(rng, base.config);
  Tensor before = ClipLogits(base, probe);
  Tensor after = ClipLogits(adapted, probe);
  double diff = 0.0;
  for (std::size_t c = 0; c < before.size(); ++c) {
    diff = std::max(diff, std::abs(before[c] - after[c]));
  }
  EXPECT_GT(diff, 1e-6);
}

TEST(AdapterTest, RejectsInvalidInsertions) {
  Model base = BuildModel(SmallConfig(), 5);
  EXPECT_THROW(InsertAdapters(base, {8}, 0), InvalidArgumentError);
  EXPECT_THROW(InsertAdapters(base, {0}, 0), InvalidArgumentError);
  EXPECT_THROW(InsertAdapters(InsertAdapters(base, {2}, 0), {2}, 0),
               InvalidArgumentError);
  ModelConfig bare = SmallConfig();
  bare.hidden_dims = {};
  EXPECT_THROW(InsertAdapters(BuildModel(bare, 0), {2}, 0),
               InvalidArgumentError);
}

// Linear head over pooled frames with W = I, b = 0: clip logits equal the
// clip's mean frame.
Model IdentityHead(std::size_t classes, std::size_t frames) {
  ModelConfig c;
  c.input_dim = classes;
  c.frames_per_clip = frames;
  c.hidden_dims = {};
  c.norm = NormSpec::None();
  c.num_classes = classes;
  Model m = BuildModel(c, 0);
  Tensor& w = m.params.Get("head.weight").value;
  w.Fill(0.0);
  for (std::size_t i = 0; i < classes; ++i) w.at(i, i) = 1.0;
  return m;
}

VideoSample VideoFromClips(const std::vector<std::vector<double>>& frames,
                           std::size_t dim) {
  std::vector<double> flat;
  for (const auto& f : frames) flat.insert(flat.end(), f.begin(), f.end());
  return {0, 0, Tensor({frames.size(), dim}, flat)};
}

TEST(PredictVideoTest, SingleClipMatchesClipArgmax) {
  Model m = BuildModel(SmallConfig(), 2);
  PhiloxEngine rng(3, Stream::kTest);
  for (int i = 0; i < 20; ++i) {
    Tensor clip = RandomClip(rng, m.config);
    VideoSample v{0, 0, clip};
    EXPECT_EQ(PredictVideo(m, v), ArgMax(ClipLogits(m, clip).data()));
  }
}

TEST(PredictVideoTest, CancellingClipsLeaveTheOddOneOut) {
  Model m = IdentityHead(4, 1);
  const std::vector<double> l = {5.0, -2.0, 9.0, 0.5};
  const std::vector<double> neg = {-5.0, 2.0, -9.0, -0.5};
  VideoSample v = VideoFromClips({l, neg, l, neg, {0, 0, 1, 0}}, 4);
  EXPECT_EQ(PredictVideo(m, v), 2u);
}

TEST(PredictVideoTest, AveragesClipLogits) {
  Model m = BuildModel(SmallConfig(), 2);
  PhiloxEngine rng(4, Stream::kTest);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Tensor> clips;
    for (int j = 0; j < 3; ++j) clips.push_back(RandomClip(rng, m.config));
    VideoSample v{0, 0, ConcatRows(clips)};
    std::vector<double> mean(m.config.num_classes, 0.0);
    for (const Tensor& c : clips) {
      Tensor z = ClipLogits(m, c);
      for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += z[k] / 3.0;
    }
    std::vector<double> got = VideoLogits(m, v);
    for (std::size_t k = 0; k < mean.size(); ++k) {
      EXPECT_NEAR(got[k], mean[k], 1e-12);
    }
    EXPECT_EQ(PredictVideo(m, v), ArgMax(mean));
  }
}

TEST(PredictVideoTest, TiesGoToLowestIndex) {
  EXPECT_EQ(ArgMax(std::vector<double>{1, 3, 3, 2}), 1u);
  EXPECT_EQ(ArgMax(std::vector<double>{0, 0, 0}), 0u);
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  Model m = InsertAdapters(BuildModel(SmallConfig(), 2), {3}, 5);
  m.params.Get("adapter0.up.weight").value[0] = -0.0;
  const std::string bytes = SerializeCheckpoint(m.params);
  EXPECT_EQ(bytes.substr(0, 4), "DPVM");
  ParameterStore back = DeserializeCheckpoint(bytes);
  EXPECT_EQ(back, m.params);
  EXPECT_EQ(SerializeCheckpoint(back), bytes);
}

TEST(CheckpointTest, FileRoundTrip) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "dpvideo_ckpt_test.dpvm")
          .string();
  Model m = BuildModel(SmallConfig(), 2);
  SaveCheckpoint(m.params, path);
  EXPECT_EQ(LoadCheckpoint(path), m.params);
  std::filesystem::remove(path);
}

TEST(CheckpointTest, CorruptionIsDescribed) {
  const std::string bytes = SerializeCheckpoint(BuildModel(SmallConfig(), 2).params);
  EXPECT_THROW(DeserializeCheckpoint("XXXX" + bytes.substr(4)), IoError);
  try {
    DeserializeCheckpoint(bytes.substr(0, bytes.size() - 3));
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos);
  }
}

TEST(CheckpointTest, IncompatibleWeightsRejected) {
  Model m = BuildModel(SmallConfig(), 2);
  ModelConfig wider = SmallConfig();
  wider.hidden_dims = {16, 8};
  ParameterStore other = BuildModel(wider, 2).params;
  EXPECT_THROW(LoadWeightsInto(m.params, other), InvalidArgumentError);

  ModelConfig deeper = SmallConfig();
  deeper.hidden_dims = {12, 8, 8};
  EXPECT_THROW(LoadWeightsInto(m.params, BuildModel(deeper, 2).params),
               InvalidArgumentError);
}

TEST(CheckpointTest, LoadIntoAdaptedModelKeepsAdapters) {
  Model pretrained = BuildModel(SmallConfig(), 2);
  Model target = InsertAdapters(BuildModel(SmallConfig(), 9), {3}, 1);
  const Tensor up = target.params.Value("adapter1.up.weight");
  LoadWeightsInto(target.params, pretrained.params);
  EXPECT_EQ(target.params.Value("layer0.weight"),
            pretrained.params.Value("layer0.weight"));
  EXPECT_EQ(target.params.Value("adapter1.up.weight"), up);
}

}  // namespace
}  // namespace dpvideo
