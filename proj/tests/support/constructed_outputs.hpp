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

// Hand-built network outputs with known decoding behavior.

#include <vector>

#include "inspose/network.hpp"

namespace inspose::testing {

// A depth-2 KP-Net whose K logit planes all equal -(|rx| + |ry|), so every
// keypoint of a candidate decodes to the candidate's own cell.
inline ModelConfig peak_at_self_config(int num_keypoints, int feature_channels = 2) {
  ModelConfig c;
  c.num_keypoints = num_keypoints;
  c.kp_depth = 2;
  c.kp_hidden = 4;
  c.kp_channels = feature_channels;
  c.output_stride = 8;
  return c;
}

inline std::vector<float> peak_at_self_params(const ModelConfig& c) {
  const int in = c.kp_channels + 2;
  std::vector<float> p;
  std::vector<float> w0(4 * in, 0.0f);
  w0[0 * in + c.kp_channels] = 1.0f;
  w0[1 * in + c.kp_channels] = -1.0f;
  w0[2 * in + c.kp_channels + 1] = 1.0f;
  w0[3 * in + c.kp_channels + 1] = -1.0f;
  p.insert(p.end(), w0.begin(), w0.end());
  p.insert(p.end(), 4, 0.0f);
  p.insert(p.end(), static_cast<std::size_t>(c.num_keypoints) * 4, -1.0f);
  p.insert(p.end(), c.num_keypoints, 0.0f);
  return p;
}

inline float logit(double p) { return static_cast<float>(std::log(p / (1.0 - p))); }

// Single-level (stride 8, h x w) outputs. scores are probabilities in
// row-major order; every cell carries the peak-at-self KP-Net. Offsets give
// joint j the in-cell offset (0.1 j, 0.05 j) so rectangles have area.
inline DenseOutputs constructed_outputs(const ModelConfig& c, int h, int w,
                                        const std::vector<double>& scores) {
  DenseOutputs out;
  Tensor cls(1, h, w);
  for (std::size_t i = 0; i < scores.size(); ++i) cls.data[i] = logit(scores[i]);
  const std::vector<float> params = peak_at_self_params(c);
  Tensor ctrl(static_cast<int>(params.size()), h, w);
  for (int ch = 0; ch < ctrl.c; ++ch)
    for (float& v : ctrl.plane(ch)) v = params[ch];
  out.cls_logits.push_back(cls);
  out.controllers.push_back(ctrl);
  out.strides.push_back(8);
  out.features = Tensor(c.kp_channels, h, w);
  out.offsets = Tensor(2 * c.num_keypoints, h, w);
  for (int j = 0; j < c.num_keypoints; ++j) {
    for (float& v : out.offsets.plane(2 * j)) v = 0.1f * j;
    for (float& v : out.offsets.plane(2 * j + 1)) v = 0.05f * j;
  }
  return out;
}

}  // namespace inspose::testing
