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
#include "inspose/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "inspose/assignment.hpp"
#include "inspose/kpnet.hpp"

namespace inspose {

void InferenceConfig::validate() const {
  if (!(score_threshold > 0.0 && score_threshold < 1.0))
    throw ConfigError("score_threshold must be in (0, 1)");
  if (max_detections < 1) throw ConfigError("max_detections must be >= 1");
  if (pre_nms_top_n < max_detections) throw ConfigError("pre_nms_top_n must be >= max_detections");
  if (!(nms_iou > 0.0 && nms_iou <= 1.0)) throw ConfigError("nms_iou must be in (0, 1]");
}

std::vector<Candidate> select_candidates(std::span<const Tensor> scores,
                                         std::span<const Tensor> controllers,
                                         std::span<const int> strides, const InferenceConfig& cfg) {
  if (scores.size() != controllers.size() || scores.size() != strides.size())
    throw ConfigError("select_candidates: per-level inputs disagree in length");

  struct Ref {
    float score;
    int level;
    int index;
  };
  // Compare in the score precision so a score equal to the threshold is dropped.
  const float threshold = static_cast<float>(cfg.score_threshold);
  std::vector<Ref> refs;
  for (std::size_t l = 0; l < scores.size(); ++l) {
    const Tensor& s = scores[l];
    for (std::size_t i = 0; i < s.plane_size(); ++i)
      if (s.data[i] > threshold)
        refs.push_back({s.data[i], static_cast<int>(l), static_cast<int>(i)});
  }
  std::stable_sort(refs.begin(), refs.end(), [](const Ref& a, const Ref& b) { return a.score > b.score; });
  if (refs.size() > static_cast<std::size_t>(cfg.pre_nms_top_n)) refs.resize(cfg.pre_nms_top_n);

  std::vector<Candidate> out;
  out.reserve(refs.size());
  for (const Ref& r : refs) {
    const Tensor& s = scores[r.level];
    const Tensor& ctrl = controllers[r.level];
    Candidate c;
    c.score = r.score;
    c.level = r.level;
    c.cell_x = r.index % s.w;
    c.cell_y = r.index / s.w;
    const auto [ix, iy] = map_location_to_image(c.cell_x, c.cell_y, strides[r.level]);
    c.image_x = ix;
    c.image_y = iy;
    c.params.resize(ctrl.c);
    for (int ch = 0; ch < ctrl.c; ++ch) c.params[ch] = ctrl.at(ch, c.cell_y, c.cell_x);
    out.push_back(std::move(c));
  }
  return out;
}

DecodedPose decode_keypoints(const Tensor& logits, const Tensor* offsets, int stride) {
  if (offsets != nullptr &&
      (offsets->c != 2 * logits.c || offsets->h != logits.h || offsets->w != logits.w))
    throw ConfigError("decode_keypoints: offset field does not match keypoint maps");
  DecodedPose out;
  const std::size_t n = logits.plane_size();
  for (int j = 0; j < logits.c; ++j) {
    const auto plane = logits.plane(j);
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (plane[i] > plane[best]) best = i;
    double denom = 0.0;
    for (float v : plane) denom += std::exp(static_cast<double>(v) - plane[best]);
    const int x = static_cast<int>(best % logits.w);
    const int y = static_cast<int>(best / logits.w);
    double dx = 0.0, dy = 0.0;
    if (offsets != nullptr) {
      dx = offsets->at(2 * j, y, x);
      dy = offsets->at(2 * j + 1, y, x);
    }
    out.pose.keypoints.push_back({(x + dx) * stride, (y + dy) * stride, kLabeledVisible});
    out.joint_scores.push_back(1.0 / denom);
  }
  return out;
}

std::vector<Detection> decode_detections(const DenseOutputs& outputs, const ModelConfig& model,
                                         const InferenceConfig& cfg) {
  cfg.validate();
  std::vector<Tensor> probs;
  for (const Tensor& logits : outputs.cls_logits) {
    Tensor p = logits;
    for (float& v : p.data) v = 1.0f / (1.0f + std::exp(-v));
    probs.push_back(std::move(p));
  }
  const auto candidates = select_candidates(probs, outputs.controllers, outputs.strides, cfg);
  const KpnetSpec spec = model.kpnet_spec();
  const Tensor* offsets = outputs.offsets.empty() ? nullptr : &outputs.offsets;

  std::vector<Detection> dets;
  dets.reserve(candidates.size());
  for (const Candidate& c : candidates) {
    const auto layers = split_kpnet_params<float>(c.params, spec);
    const Tensor input = kpnet_input(outputs.features, c.image_x, c.image_y, model.output_stride,
                                     model.rel_coord_scale);
    const Tensor logits = apply_kpnet(input, layers);
    DecodedPose decoded = decode_keypoints(logits, offsets, model.output_stride);
    Detection d;
    d.score = c.score;
    d.rect = min_enclosing_rect(decoded.pose);
    d.pose = std::move(decoded.pose);
    d.joint_scores = std::move(decoded.joint_scores);
    dets.push_back(std::move(d));
  }
  auto kept = keypoint_nms(std::move(dets), cfg.nms_iou);
  if (kept.size() > static_cast<std::size_t>(cfg.max_detections)) kept.resize(cfg.max_detections);
  return kept;
}

std::vector<Detection> run_inference(const Model& model, const Image& image,
                                     const InferenceConfig& cfg) {
  const Tensor input = preprocess_image(image, kPadMultiple);
  const DenseOutputs outputs = model.run(input, false);
  return decode_detections(outputs, model.config(), cfg);
}

nlohmann::json to_coco_results(std::int64_t image_id, std::span<const Detection> dets) {
  nlohmann::json out = nlohmann::json::array();
  for (const Detection& d : dets) {
    nlohmann::json kps = nlohmann::json::array();
    for (std::size_t j = 0; j < d.pose.keypoints.size(); ++j) {
      kps.push_back(d.pose.keypoints[j].x);
      kps.push_back(d.pose.keypoints[j].y);
      kps.push_back(j < d.joint_scores.size() ? d.joint_scores[j] : 1.0);
    }
    out.push_back({{"image_id", image_id}, {"category_id", 1}, {"keypoints", kps}, {"score", d.score}});
  }
  return out;
}

}  // namespace inspose
