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
#include <string>
#include <vector>

#include "inspose/config.hpp"
#include "inspose/network.hpp"

namespace inspose {

struct NamedArray {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

struct TrainState {
  int epoch = 0;                 // completed epochs
  std::int64_t iteration = 0;    // completed iterations, all epochs
  std::int64_t epoch_offset = 0; // completed iterations inside the current epoch
};

// Binary container: magic, version, a JSON header (configuration, training
// state, array table) and raw little-endian float32 payloads.
struct Checkpoint {
  ConfigMap config;  // full training configuration, model.* keys required
  TrainState state;
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
  ModelConfig model_config() const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Weights as named arrays, one per parameter.
std::vector<NamedArray> model_arrays(const Model& model);
// Copies weights into model. Throws ConfigError on a missing array or a
// shape that differs from the model's parameter.
void load_model_arrays(Model& model, const Checkpoint& ckpt, const std::string& prefix = "");

// Builds a model from the stored configuration and loads its weights.
Model model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace inspose
