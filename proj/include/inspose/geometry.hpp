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

#include <span>
#include <vector>

namespace inspose {

// Visibility flag of a keypoint, COCO convention.
enum Visibility : int {
  kNotLabeled = 0,
  kLabeledInvisible = 1,
  kLabeledVisible = 2,
};

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  int v = kNotLabeled;

  bool labeled() const { return v > kNotLabeled; }
  bool visible() const { return v == kLabeledVisible; }
  bool operator==(const Keypoint&) const = default;
};

// K keypoints in image pixels. K is fixed per dataset (17 for COCO).
struct Pose {
  std::vector<Keypoint> keypoints;

  Pose() = default;
  explicit Pose(std::vector<Keypoint> kps) : keypoints(std::move(kps)) {}

  int size() const { return static_cast<int>(keypoints.size()); }
  int num_labeled() const;
  int num_visible() const;
  bool operator==(const Pose&) const = default;
};

struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }
  double longest_side() const { return width() > height() ? width() : height(); }
  bool operator==(const Box&) const = default;
};

// A decoded person instance.
struct Detection {
  double score = 0.0;
  Pose pose;
  Box rect;
  // Spatial-softmax probability at each decoded joint (empty if unknown).
  std::vector<double> joint_scores;
};

// Tightest axis-aligned rectangle around every labeled (v > 0) keypoint.
// Throws GeometryError when no keypoint is labeled.
Box min_enclosing_rect(const Pose& pose);

// Intersection over union. Zero-area boxes always give 0.
double box_iou(const Box& a, const Box& b);

// COCO per-keypoint OKS constants (kappa_j = 2 * sigma_j) for 17 joints.
std::vector<double> coco_kappas();

// Uniform constant used for synthetic skeletons.
std::vector<double> uniform_kappas(int num_keypoints, double kappa = 0.08);

// Object keypoint similarity
//   sum_j [v_j > 0] exp(-d_j^2 / (2 area kappa_j^2)) / sum_j [v_j > 0]
// where v_j is the ground-truth visibility. Throws GeometryError when gt has
// no labeled keypoint, gt_area <= 0, or sizes disagree.
double oks(const Pose& pred, const Pose& gt, double gt_area,
           std::span<const double> kappas);

// Greedy non-maximum suppression on the detections' rectangles. A detection
// is dropped when its IoU with an already kept one is >= iou_threshold.
// Equal scores keep the lower input index first.
std::vector<Detection> keypoint_nms(std::vector<Detection> dets,
                                    double iou_threshold);

}  // namespace inspose
