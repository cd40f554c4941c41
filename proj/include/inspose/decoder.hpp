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
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "inspose/geometry.hpp"
#include "inspose/image.hpp"
#include "inspose/network.hpp"

namespace inspose {

struct InferenceConfig {
  double score_threshold = 0.1;
  int pre_nms_top_n = 500;
  double nms_iou = 0.6;
  int max_detections = 100;

  void validate() const;
};

// A location that survived score filtering, with its generated KP-Net.
struct Candidate {
  double score = 0.0;
  int level = 0;
  int cell_x = 0;
  int cell_y = 0;
  double image_x = 0.0;  // controller location on the image
  double image_y = 0.0;
  std::vector<float> params;
};

// Keeps locations with probability > score_threshold, then the global top
// pre_nms_top_n by score. Equal scores keep level order, then row-major order.
std::vector<Candidate> select_candidates(std::span<const Tensor> scores,
                                         std::span<const Tensor> controllers,
                                         std::span<const int> strides, const InferenceConfig& cfg);

struct DecodedPose {
  Pose pose;
  std::vector<double> joint_scores;  // spatial softmax at the argmax cell
};

// Per channel: argmax cell (first occurrence in row-major order), plus the
// predicted offset at that cell, scaled by the map stride. offsets may be
// null (no offset branch).
DecodedPose decode_keypoints(const Tensor& logits, const Tensor* offsets, int stride);

// Turns one forward pass into final detections: candidates, KP-Nets,
// decoding, rectangle NMS and the max_detections cap.
std::vector<Detection> decode_detections(const DenseOutputs& outputs, const ModelConfig& model,
                                         const InferenceConfig& cfg);

std::vector<Detection> run_inference(const Model& model, const Image& image,
                                     const InferenceConfig& cfg);

// COCO keypoint results records.
nlohmann::json to_coco_results(std::int64_t image_id, std::span<const Detection> dets);

}  // namespace inspose
