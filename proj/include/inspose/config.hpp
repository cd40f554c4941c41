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
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "inspose/assignment.hpp"
#include "inspose/datagen.hpp"
#include "inspose/decoder.hpp"
#include "inspose/network.hpp"

namespace inspose {

// Flat "dotted.key = value" configuration. Lines starting with '#' are
// comments.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap read_config_file(const std::filesystem::path& path);

struct LossConfig {
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
  double heatmap_alpha = 2.0;
  double heatmap_beta = 4.0;
  double w_cls = 1.0;
  double w_kpf = 1.0;
  double w_do = 1.0;
  double w_hm = 1.0;
};

struct OptimConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_size = 8;
  int epochs = 60;
  std::vector<int> decay_epochs = {45, 55};
  int warmup_iters = 0;
  double grad_clip = 0.0;  // global-norm clip, 0 disables
  int max_iters = 0;       // stop early after this many iterations, 0 disables
};

struct DataConfig {
  std::string source = "synthetic";  // synthetic | coco
  int num_images = 200;
  std::string ann;
  std::string image_root;
  bool augment = true;
  AugmentConfig augment_cfg;
};

struct TrainConfig {
  std::uint64_t seed = 0;
  ModelConfig model;
  AssignmentConfig assign;
  LossConfig loss;
  OptimConfig optim;
  DataConfig data;
  SceneConfig scene;  // num_keypoints follows model.num_keypoints
  InferenceConfig infer;
  double eval_kappa = 0.0;  // > 0: uniform OKS constant, else skeleton default
  std::string output_dir = "runs/default";
  int checkpoint_every = 1;  // epochs between checkpoints; the last epoch is always saved

  void validate() const;
  // Full-scale preset: batch 16, 36 epochs, lr decay at epochs 27 and 33.
  static TrainConfig reference_schedule();
};

// Applies every key of map onto cfg; unknown keys raise ConfigError.
void apply_config(TrainConfig& cfg, const ConfigMap& map);
TrainConfig load_train_config(const std::filesystem::path& path, const ConfigMap& overrides = {});
// Serializes every key, so apply_config(to_config_map(c)) reproduces c.
ConfigMap to_config_map(const TrainConfig& cfg);
std::string to_config_text(const TrainConfig& cfg);

// Model-only keys ("model.*").
void apply_model_config(ModelConfig& cfg, const ConfigMap& map);
ConfigMap model_config_map(const ModelConfig& cfg);

// Compute device from INSPOSE_DEVICE (default "cpu"). Only the CPU backend
// exists; anything else raises ConfigError.
std::string default_device();

}  // namespace inspose
