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

// COCO-style keypoint evaluation: OKS-based greedy matching per image and
// 101-point interpolated average precision / recall with area splits.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "inspose/datagen.hpp"
#include "inspose/geometry.hpp"

namespace inspose {

struct EvalGroundTruth {
  Pose pose;
  Box bbox;
  double area = 0.0;
  bool iscrowd = false;
  int num_keypoints = 0;
};

EvalGroundTruth to_eval_gt(const AnnotationRecord& rec);
EvalGroundTruth to_eval_gt(const InstanceAnnotation& inst);

struct AreaRange {
  double lo = 0.0;
  double hi = 1e10;
};

struct EvalParams {
  std::vector<double> oks_thresholds;  // 0.50:0.05:0.95
  std::vector<double> recall_points;   // 0:0.01:1
  int max_dets = 20;
  std::vector<double> kappas;
  AreaRange all{0.0, 1e10};
  AreaRange medium{32.0 * 32.0, 96.0 * 96.0};
  AreaRange large{96.0 * 96.0, 1e10};

  explicit EvalParams(std::vector<double> kappas);
};

// COCO keypoint similarity between a detection and a ground truth. Ground
// truths without labeled keypoints are scored against their box expanded by
// its size on every side (only ever used to ignore detections in them).
double eval_oks(const Pose& det, const EvalGroundTruth& gt, std::span<const double> kappas);

struct ImageMatch {
  std::vector<double> det_scores;  // sorted descending, capped to max_dets
  std::vector<int> det_gt;         // matched gt index or -1
  std::vector<bool> det_ignore;
  std::vector<bool> gt_ignore;
  std::vector<bool> gt_matched;

  bool tp(std::size_t d) const { return det_gt[d] >= 0 && !det_ignore[d]; }
  bool fp(std::size_t d) const { return det_gt[d] < 0 && !det_ignore[d]; }
  int num_gt() const;  // non-ignored ground truths
};

// One-to-one greedy matching at a single OKS threshold: detections in
// descending score order each take the highest-OKS still-available ground
// truth with OKS >= threshold. Ground truths that are crowd, have no labeled
// keypoints or fall outside the area range are "ignored": matching them
// neither helps nor hurts.
ImageMatch greedy_match(std::span<const Detection> dets, std::span<const EvalGroundTruth> gts,
                        double oks_threshold, std::span<const double> kappas,
                        const AreaRange& range = {}, int max_dets = 20);

// 101-point interpolated AP of one precision/recall curve built from
// detections pooled over images. Returns -1 when num_gt == 0.
struct PrCurveResult {
  double ap = -1.0;
  double recall = -1.0;
};
PrCurveResult interpolated_ap(std::span<const double> scores, const std::vector<bool>& tp,
                              const std::vector<bool>& ignore, int num_gt,
                              std::span<const double> recall_points);

// Undefined entries (no ground truth in the split) are -1, as in COCO.
struct EvalResult {
  double ap = -1, ap50 = -1, ap75 = -1, ap_medium = -1, ap_large = -1;
  double ar = -1, ar50 = -1, ar75 = -1, ar_medium = -1, ar_large = -1;
  std::vector<double> ap_per_threshold;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Throws ConfigError when there is no non-ignored ground truth at all.
EvalResult compute_ap(const std::vector<std::vector<Detection>>& dets,
                      const std::vector<std::vector<EvalGroundTruth>>& gts, const EvalParams& params);

// Ground truth of a dataset, one list per image in dataset order.
std::vector<std::vector<EvalGroundTruth>> dataset_ground_truth(const Dataset& ds);

// Reads a COCO keypoint results file; detections are grouped per image id
// and their rectangles recomputed from the keypoints.
std::map<std::int64_t, std::vector<Detection>> load_coco_results(const std::filesystem::path& path);

}  // namespace inspose
