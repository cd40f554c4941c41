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
#include "inspose/network.hpp"

#include <cmath>
#include <random>
#include <string>

namespace inspose {

using nn::Graph;
using nn::Var;

void ModelConfig::validate() const {
  if (num_keypoints < 1) throw ConfigError("num_keypoints must be >= 1");
  if (kp_depth < 1 || kp_depth > 4) throw ConfigError("kp_depth must be in [1, 4]");
  if (kp_hidden < 1 || kp_channels < 1) throw ConfigError("KP-Net widths must be >= 1");
  if (output_stride != 16 && output_stride != 8 && output_stride != 4 && output_stride != 2)
    throw ConfigError("output_stride must be one of 16, 8, 4, 2 (res_ratio 1/16 .. 1/2)");
  if (stage_widths.size() != 4) throw ConfigError("backbone needs exactly 4 stage widths");
  if (stage_blocks < 1) throw ConfigError("stage_blocks must be >= 1");
  if (tower_depth < 0 || kp_branch_depth < 0) throw ConfigError("negative tower depth");
  if (!(rel_coord_scale > 0.0)) throw ConfigError("rel_coord_scale must be positive");
  if (!(cls_prior > 0.0 && cls_prior < 1.0)) throw ConfigError("cls_prior must be in (0, 1)");
  if (gn_groups < 1) throw ConfigError("gn_groups must be >= 1");
}

ModelConfig ModelConfig::tiny(int num_keypoints) {
  ModelConfig c;
  c.num_keypoints = num_keypoints;
  c.stem_width = 16;
  c.stage_widths = {16, 32, 48, 64};
  c.fpn_channels = 32;
  c.tower_channels = 32;
  c.tower_depth = 2;
  c.kp_branch_channels = 32;
  c.kp_branch_depth = 2;
  c.offset_channels = 32;
  c.heatmap_channels = 32;
  c.gn_groups = 8;
  return c;
}

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  build();
}

int Model::groups_for(int channels) const {
  int g = std::min(cfg_.gn_groups, channels);
  while (channels % g != 0) --g;
  return g;
}

void Model::add_conv(const std::string& name, int in, int out, int k, bool bias) {
  params_.add(name + ".weight", {out, in, k, k});
  if (bias) params_.add(name + ".bias", {out});
}

void Model::add_gn(const std::string& name, int channels) {
  nn::init_constant(params_[params_.add(name + ".gamma", {channels})], 1.0f);
  params_.add(name + ".beta", {channels});
}

void Model::build() {
  const ModelConfig& c = cfg_;
  std::mt19937_64 rng(c.init_seed);
  auto kaiming = [&](const std::string& name) {
    nn::init_conv_weight(params_[params_.id(name + ".weight")], rng);
  };
  auto normal = [&](const std::string& name, double std) {
    nn::init_normal(params_[params_.id(name + ".weight")], rng, std);
  };
  auto conv_gn = [&](const std::string& name, int in, int out, bool head) {
    add_conv(name, in, out, 3, false);
    add_gn(name + ".gn", out);
    if (head) normal(name, 0.01); else kaiming(name);
  };

  conv_gn("backbone.stem", 3, c.stem_width, false);
  int in = c.stem_width;
  for (int s = 0; s < 4; ++s) {
    const int w = c.stage_widths[s];
    for (int b = 0; b < c.stage_blocks; ++b) {
      const std::string p = "backbone.stage" + std::to_string(s + 1) + ".block" + std::to_string(b);
      conv_gn(p + ".conv1", b == 0 ? in : w, w, false);
      conv_gn(p + ".conv2", w, w, false);
    }
    in = w;
  }

  for (int l = 0; l < 3; ++l) {
    const std::string p = "fpn.lateral" + std::to_string(l + 3);
    add_conv(p, c.stage_widths[l + 1], c.fpn_channels, 1);
    kaiming(p);
    const std::string o = "fpn.output" + std::to_string(l + 3);
    add_conv(o, c.fpn_channels, c.fpn_channels, 3);
    kaiming(o);
  }
  add_conv("fpn.p6", c.fpn_channels, c.fpn_channels, 3);
  kaiming("fpn.p6");
  add_conv("fpn.p7", c.fpn_channels, c.fpn_channels, 3);
  kaiming("fpn.p7");

  for (const char* tower : {"head.cls_tower", "head.ctrl_tower"}) {
    int tin = c.fpn_channels;
    for (int i = 0; i < c.tower_depth; ++i) {
      conv_gn(std::string(tower) + std::to_string(i), tin, c.tower_channels, true);
      tin = c.tower_channels;
    }
  }
  const int tower_out = c.tower_depth > 0 ? c.tower_channels : c.fpn_channels;
  add_conv("head.cls_logits", tower_out, 1, 3);
  normal("head.cls_logits", 0.01);
  nn::init_constant(params_[params_.id("head.cls_logits.bias")],
                    static_cast<float>(-std::log((1.0 - c.cls_prior) / c.cls_prior)));
  add_conv("head.controller", tower_out, c.controller_channels(), 3);
  if (c.controller_init_std > 0.0) normal("head.controller", c.controller_init_std);

  int kin = c.fpn_channels;
  for (int i = 0; i < c.kp_branch_depth; ++i) {
    conv_gn("kp_branch.conv" + std::to_string(i), kin, c.kp_branch_channels, false);
    kin = c.kp_branch_channels;
  }
  add_conv("kp_branch.out", kin, c.kp_channels, 3);
  kaiming("kp_branch.out");

  if (c.disk_offset) {
    conv_gn("offset.conv0", c.fpn_channels, c.offset_channels, false);
    conv_gn("offset.conv1", c.offset_channels, c.offset_channels, false);
    add_conv("offset.out", c.offset_channels, 2 * c.num_keypoints, 3);
  }
  if (c.heatmap) {
    add_conv("heatmap.conv0", c.fpn_channels, c.heatmap_channels, 3);
    kaiming("heatmap.conv0");
    add_conv("heatmap.conv1", c.heatmap_channels, c.heatmap_channels, 3);
    kaiming("heatmap.conv1");
    add_conv("heatmap.out", c.heatmap_channels, c.num_keypoints, 1);
    normal("heatmap.out", 0.01);
    nn::init_constant(params_[params_.id("heatmap.out.bias")], -2.19f);
  }
}

Var Model::conv(Graph& g, Var x, const std::string& name, int stride) const {
  const int w = params_.id(name + ".weight");
  const int k = params_[w].shape[2];
  const int b = params_.contains(name + ".bias") ? params_.id(name + ".bias") : -1;
  return g.conv2d(x, w, b, stride, k / 2);
}

Var Model::conv_gn_relu(Graph& g, Var x, const std::string& name, int stride) const {
  Var y = conv(g, x, name, stride);
  const int channels = g.value(y).c;
  y = g.group_norm(y, params_.id(name + ".gn.gamma"), params_.id(name + ".gn.beta"),
                   groups_for(channels));
  return g.relu(y);
}

std::pair<int, int> Model::output_shape(int p3_h, int p3_w) const {
  return {p3_h * 8 / cfg_.output_stride, p3_w * 8 / cfg_.output_stride};
}

Var Model::image_input(Graph& g, const Tensor& image) const {
  if (image.c != 3) throw ConfigError("model input must have 3 channels");
  return g.input(image);
}

FpnVars Model::forward_pyramid(Graph& g, Var image) const {
  const Tensor& img = g.value(image);
  if (img.h < kPadMultiple || img.w < kPadMultiple || img.h % kPadMultiple != 0 ||
      img.w % kPadMultiple != 0) {
    throw ConfigError("input of " + std::to_string(img.h) + "x" + std::to_string(img.w) +
                      " must be a positive multiple of " + std::to_string(kPadMultiple) +
                      " after padding");
  }
  Var x = conv_gn_relu(g, image, "backbone.stem", 2);
  std::array<Var, 4> stages{};
  for (int s = 0; s < 4; ++s) {
    for (int b = 0; b < cfg_.stage_blocks; ++b) {
      const std::string p = "backbone.stage" + std::to_string(s + 1) + ".block" + std::to_string(b);
      Var h = conv_gn_relu(g, x, p + ".conv1", b == 0 ? 2 : 1);
      Var y = conv_gn_relu(g, h, p + ".conv2");
      x = g.add(h, y);
    }
    stages[s] = x;
  }

  const Var lat5 = conv(g, stages[3], "fpn.lateral5");
  const Var lat4 = conv(g, stages[2], "fpn.lateral4");
  const Var lat3 = conv(g, stages[1], "fpn.lateral3");
  const Var top4 = g.add(lat4, g.upsample_nearest(lat5, g.value(lat4).h, g.value(lat4).w));
  const Var top3 = g.add(lat3, g.upsample_nearest(top4, g.value(lat3).h, g.value(lat3).w));

  FpnVars fpn;
  fpn.levels[0] = conv(g, top3, "fpn.output3");
  fpn.levels[1] = conv(g, top4, "fpn.output4");
  fpn.levels[2] = conv(g, lat5, "fpn.output5");
  fpn.levels[3] = conv(g, fpn.levels[2], "fpn.p6", 2);
  fpn.levels[4] = conv(g, g.relu(fpn.levels[3]), "fpn.p7", 2);
  return fpn;
}

HeadVars Model::dense_heads(Graph& g, const FpnVars& fpn) const {
  HeadVars heads;
  for (Var level : fpn.levels) {
    Var c = level;
    Var k = level;
    for (int i = 0; i < cfg_.tower_depth; ++i) {
      c = conv_gn_relu(g, c, "head.cls_tower" + std::to_string(i));
      k = conv_gn_relu(g, k, "head.ctrl_tower" + std::to_string(i));
    }
    heads.cls_logits.push_back(conv(g, c, "head.cls_logits"));
    heads.controllers.push_back(conv(g, k, "head.controller"));
  }
  return heads;
}

Var Model::keypoint_feature_branch(Graph& g, Var p3) const {
  Var x = p3;
  for (int i = 0; i < cfg_.kp_branch_depth; ++i)
    x = conv_gn_relu(g, x, "kp_branch.conv" + std::to_string(i));
  x = conv(g, x, "kp_branch.out");
  const auto [h, w] = output_shape(g.value(p3).h, g.value(p3).w);
  return g.resize_bilinear(x, h, w);
}

Var Model::disk_offset_branch(Graph& g, Var p3) const {
  if (!cfg_.disk_offset) throw ConfigError("disk offset branch is disabled in this model");
  Var x = conv_gn_relu(g, p3, "offset.conv0");
  x = conv_gn_relu(g, x, "offset.conv1");
  x = conv(g, x, "offset.out");
  const auto [h, w] = output_shape(g.value(p3).h, g.value(p3).w);
  return g.resize_bilinear(x, h, w);
}

Var Model::heatmap_branch(Graph& g, Var p3) const {
  if (!training_) throw ConfigError("heatmap branch is removed in inference mode");
  if (!cfg_.heatmap) throw ConfigError("heatmap branch is disabled in this model");
  Var x = g.relu(conv(g, p3, "heatmap.conv0"));
  x = g.relu(conv(g, x, "heatmap.conv1"));
  return conv(g, x, "heatmap.out");
}

ForwardVars Model::forward(Graph& g, Var image, bool with_heatmap) const {
  ForwardVars out;
  out.fpn = forward_pyramid(g, image);
  out.heads = dense_heads(g, out.fpn);
  const Var p3 = out.fpn.levels[0];
  out.features = keypoint_feature_branch(g, p3);
  if (cfg_.disk_offset) out.offsets = disk_offset_branch(g, p3);
  if (with_heatmap && has_heatmap_output()) out.heatmap = heatmap_branch(g, p3);
  return out;
}

DenseOutputs Model::run(const Tensor& image, bool with_heatmap) const {
  Graph g(params_, nullptr);
  const ForwardVars f = forward(g, image_input(g, image), with_heatmap);
  DenseOutputs out;
  for (std::size_t l = 0; l < f.heads.cls_logits.size(); ++l) {
    out.cls_logits.push_back(g.value(f.heads.cls_logits[l]));
    out.controllers.push_back(g.value(f.heads.controllers[l]));
    out.strides.push_back(kLevelStrides[l]);
  }
  out.features = g.value(f.features);
  if (f.offsets >= 0) out.offsets = g.value(f.offsets);
  if (f.heatmap >= 0) out.heatmap = g.value(f.heatmap);
  return out;
}

}  // namespace inspose
