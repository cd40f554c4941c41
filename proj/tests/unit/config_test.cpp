// Copyright 2026 The InsPose Authors. All Rights Reserved.
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
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "inspose/config.hpp"
#include "inspose/error.hpp"

namespace inspose {
namespace {

namespace fs = std::filesystem;

TEST(ConfigText, ParsesKeysCommentsAndBlankLines) {
  const ConfigMap m = parse_config_text("# header\n\nseed = 7\n  optim.lr=0.5   # inline\nmodel.stage_widths = 8, 16\n");
  EXPECT_EQ(m.size(), 3u);
  EXPECT_EQ(m.at("seed"), "7");
  EXPECT_EQ(m.at("optim.lr"), "0.5");
  EXPECT_EQ(m.at("model.stage_widths"), "8, 16");
  EXPECT_THROW(parse_config_text("seed 7\n"), ConfigError);
  EXPECT_THROW(parse_config_text(" = 7\n"), ConfigError);
}

TEST(ConfigApply, SetsFieldsAndRejectsUnknownKeys) {
  TrainConfig c;
  apply_config(c, {{"seed", "9"},
                   {"optim.lr", "0.02"},
                   {"optim.decay_epochs", "3,5"},
                   {"model.disk_offset", "false"},
                   {"model.res_ratio", "1/4"},
                   {"infer.score_threshold", "0.2"},
                   {"assign.disk_radius", "2.5"}});
  EXPECT_EQ(c.seed, 9u);
  EXPECT_DOUBLE_EQ(c.optim.lr, 0.02);
  EXPECT_EQ(c.optim.decay_epochs, (std::vector<int>{3, 5}));
  EXPECT_FALSE(c.model.disk_offset);
  EXPECT_EQ(c.model.output_stride, 4);
  EXPECT_DOUBLE_EQ(c.infer.score_threshold, 0.2);
  EXPECT_DOUBLE_EQ(c.assign.disk_radius, 2.5);
  EXPECT_THROW(apply_config(c, {{"optim.learning_rate", "1"}}), ConfigError);
  EXPECT_THROW(apply_config(c, {{"optim.lr", "fast"}}), ConfigError);
  EXPECT_THROW(apply_config(c, {{"model.heatmap", "maybe"}}), ConfigError);
  EXPECT_THROW(apply_config(c, {{"model.res_ratio", "0"}}), ConfigError);
  apply_config(c, {{"optim.decay_epochs", ""}});
  EXPECT_TRUE(c.optim.decay_epochs.empty());
}

TEST(ConfigApply, ResRatioFractionsMapToStrides) {
  const std::pair<const char*, int> cases[] = {{"1/16", 16}, {"1/8", 8}, {"0.25", 4}, {"1/2", 2}};
  for (const auto& [ratio, stride] : cases) {
    TrainConfig c;
    apply_config(c, {{"model.res_ratio", ratio}});
    EXPECT_EQ(c.model.output_stride, stride);
    EXPECT_DOUBLE_EQ(c.model.res_ratio(), 1.0 / stride);
  }
}

TEST(ConfigApply, MapRoundTripIsStable) {
  TrainConfig c;
  c.seed = 123;
  c.model = ModelConfig::tiny(5);
  c.optim.decay_epochs = {4};
  c.optim.epochs = 6;
  c.data.num_images = 17;
  c.output_dir = "runs/x";
  const ConfigMap first = to_config_map(c);
  TrainConfig d;
  apply_config(d, first);
  EXPECT_EQ(to_config_map(d), first);
  EXPECT_EQ(parse_config_text(to_config_text(c)), first);
}

TEST(ConfigValidate, RejectsInconsistentSettings) {
  auto expect_invalid = [](const ConfigMap& m) {
    TrainConfig c;
    apply_config(c, m);
    EXPECT_THROW(c.validate(), ConfigError) << m.begin()->first;
  };
  TrainConfig ok;
  EXPECT_NO_THROW(ok.validate());
  expect_invalid({{"optim.lr", "0"}});
  expect_invalid({{"optim.batch_size", "0"}});
  expect_invalid({{"optim.decay_epochs", "50,40"}});
  expect_invalid({{"optim.decay_epochs", "70"}});
  expect_invalid({{"output.checkpoint_every", "0"}});
  expect_invalid({{"data.source", "imagenet"}});
  expect_invalid({{"data.source", "coco"}});
  expect_invalid({{"model.output_stride", "3"}});
  expect_invalid({{"model.num_keypoints", "9"}});
  expect_invalid({{"infer.score_threshold", "1.5"}});
}

TEST(ConfigFile, OverridesWinOverFileValues) {
  const fs::path p = fs::temp_directory_path() / "inspose_config_test.conf";
  std::ofstream(p) << "seed = 1\noptim.epochs = 4\noptim.decay_epochs = 2\n";
  const TrainConfig c = load_train_config(p, {{"seed", "5"}});
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.optim.epochs, 4);
  EXPECT_THROW(load_train_config(p, {{"bogus", "1"}}), ConfigError);
  fs::remove(p);
  EXPECT_THROW(load_train_config(p), ConfigError);
}

TEST(ConfigPresets, ReferenceSchedule) {
  const TrainConfig c = TrainConfig::reference_schedule();
  EXPECT_EQ(c.optim.batch_size, 16);
  EXPECT_EQ(c.optim.epochs, 36);
  EXPECT_EQ(c.optim.decay_epochs, (std::vector<int>{27, 33}));
  EXPECT_NO_THROW(c.validate());
}

TEST(Device, EnvironmentSelectsDevice) {
  ::unsetenv("INSPOSE_DEVICE");
  EXPECT_EQ(default_device(), "cpu");
  ::setenv("INSPOSE_DEVICE", "cpu", 1);
  EXPECT_EQ(default_device(), "cpu");
  ::setenv("INSPOSE_DEVICE", "cuda:0", 1);
  EXPECT_THROW(default_device(), ConfigError);
  ::unsetenv("INSPOSE_DEVICE");
}

}  // namespace
}  // namespace inspose
