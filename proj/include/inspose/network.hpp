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

#include <array>
#include <cstdint>
#include <vector>

#include "inspose/kpnet.hpp"
#include "inspose/nn.hpp"
#include "inspose/tensor.hpp"

namespace inspose {

struct ModelConfig {
  int num_keypoints = 17;
  // KP-Net shape.
  int kp_hidden = 8;
  int kp_depth = 3;
  int kp_channels = 8;  // C_kp
  // Stride of keypoint maps and offsets: 16, 8, 4 or 2 (ratio 1/16 .. 1/2).
  int output_stride = 8;
  double rel_coord_scale = 16.0;

  // Backbone: stride-2 stem, then four stride-2 stages (strides 4..32).
  int stem_width = 32;
  std::vector<int> stage_widths = {64, 128, 256, 512};
  int stage_blocks = 1;
  int fpn_channels = 128;
  // Shared classification and controller towers.
  int tower_channels = 128;
  int tower_depth = 4;
  // Keypoint feature branch on P3.
  int kp_branch_channels = 128;
  int kp_branch_depth = 4;
  int offset_channels = 128;
  int heatmap_channels = 256;
  int gn_groups = 32;

  bool disk_offset = true;
  bool heatmap = true;

  // Controller output init. Zero makes every initial KP-Net the zero map.
  double controller_init_std = 0.01;
  double cls_prior = 0.01;
  std::uint64_t init_seed = 0;

  KpnetSpec kpnet_spec() const { return {num_keypoints, kp_hidden, kp_depth, kp_channels}; }
  int controller_channels() const { return kpnet_spec().param_count(); }
  double res_ratio() const { return 1.0 / output_stride; }
  void validate() const;

  // Small widths for CPU-scale training.
  static ModelConfig tiny(int num_keypoints);
};

inline constexpr std::array<int, 5> kLevelStrides = {8, 16, 32, 64, 128};
inline constexpr int kPadMultiple = 128;

struct FpnVars {
  std::array<nn::Var, 5> levels{};  // P3..P7
};

struct HeadVars {
  std::vector<nn::Var> cls_logits;   // per level, 1 channel
  std::vector<nn::Var> controllers;  // per level, C_f channels
};

struct ForwardVars {
  FpnVars fpn;
  HeadVars heads;
  nn::Var features = -1;  // F_kp at output_stride
  nn::Var offsets = -1;   // 2K channels at output_stride, -1 when disabled
  nn::Var heatmap = -1;   // K channels at stride 8, training only
};

// Plain-value view of one forward pass.
struct DenseOutputs {
  std::vector<Tensor> cls_logits;
  std::vector<Tensor> controllers;
  std::vector<int> strides;
  Tensor features;
  Tensor offsets;  // empty when the disk offset branch is disabled
  Tensor heatmap;  // empty in inference mode
};

class Model {
 public:
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  void set_training(bool on) { training_ = on; }
  bool training() const { return training_; }
  bool has_heatmap_output() const { return training_ && cfg_.heatmap; }

  nn::Var image_input(nn::Graph& g, const Tensor& image) const;
  FpnVars forward_pyramid(nn::Graph& g, nn::Var image) const;
  HeadVars dense_heads(nn::Graph& g, const FpnVars& fpn) const;
  nn::Var keypoint_feature_branch(nn::Graph& g, nn::Var p3) const;
  nn::Var disk_offset_branch(nn::Graph& g, nn::Var p3) const;
  // Throws ConfigError in inference mode: the branch is pruned there.
  nn::Var heatmap_branch(nn::Graph& g, nn::Var p3) const;
  ForwardVars forward(nn::Graph& g, nn::Var image, bool with_heatmap = true) const;

  // Forward without gradient bookkeeping. image must already be normalized
  // and padded (see preprocess_image). The heatmap is produced only when
  // with_heatmap is set and the model is in training mode.
  DenseOutputs run(const Tensor& image, bool with_heatmap) const;
  DenseOutputs run(const Tensor& image) const { return run(image, has_heatmap_output()); }

 private:
  void build();
  nn::Var conv(nn::Graph& g, nn::Var x, const std::string& name, int stride = 1) const;
  nn::Var conv_gn_relu(nn::Graph& g, nn::Var x, const std::string& name, int stride = 1) const;
  void add_conv(const std::string& name, int in, int out, int k, bool bias = true);
  void add_gn(const std::string& name, int channels);
  int groups_for(int channels) const;
  std::pair<int, int> output_shape(int p3_h, int p3_w) const;

  ModelConfig cfg_;
  nn::ParameterStore params_;
  bool training_ = true;
};

}  // namespace inspose
