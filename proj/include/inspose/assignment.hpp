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

#include <limits>
#include <utility>
#include <vector>

#include "inspose/geometry.hpp"
#include "inspose/tensor.hpp"

namespace inspose {

// One FPN level: stride and the (lower, upper] range of pseudo-box longest
// side that is assigned to it.
struct LevelSpec {
  int stride = 8;
  double scale_lo = 0.0;
  double scale_hi = std::numeric_limits<double>::infinity();
};

// P3..P7 with strides 8..128 and longest-side ranges
// (0,64], (64,128], (128,256], (256,512], (512,inf).
std::vector<LevelSpec> default_levels();

struct AssignmentConfig {
  double center_radius = 1.5;  // r, in units of the level stride
  double disk_radius = 4.0;    // R, in stride-8 feature cells
  double heatmap_sigma = 2.0;  // Gaussian sigma, in stride-8 cells
};

struct InstanceAnnotation {
  Pose pose;
  Box pseudo_box;
  double area = 0.0;
  bool iscrowd = false;
};

// Builds an annotation from a pose. area <= 0 means "use pseudo-box area".
InstanceAnnotation make_instance(Pose pose, double area = 0.0);

// Square (c - r s, c + r s) around the pseudo-box center; locations strictly
// inside it are positive candidates.
Box center_region(const Box& pseudo_box, int stride, double radius);

// Image-plane pixel that feature cell (x, y) of a stride-s map stands for.
std::pair<int, int> map_location_to_image(int x, int y, int stride);

struct MapShape {
  int h = 0;
  int w = 0;
};

struct LevelAssignment {
  int stride = 8;
  int h = 0;
  int w = 0;
  std::vector<unsigned char> cls_label;  // row-major, 1 = positive
  std::vector<int> instance_index;       // -1 for background

  int num_positive() const;
};

// Center-sampling label assignment. A location is positive for an instance
// when its image point lies strictly inside the instance's center region
// (c - r s, c + r s) and the pseudo-box longest side is in the level's range.
// Ambiguous locations go to the instance with the smallest pseudo-box area
// (lower index on ties). Crowd annotations are never assigned.
std::vector<LevelAssignment> assign_instances(const std::vector<LevelSpec>& levels,
                                              const std::vector<MapShape>& shapes,
                                              const std::vector<InstanceAnnotation>& instances,
                                              const AssignmentConfig& cfg);

// One-hot spatial target for a single instance, stored as the index of the
// single foreground cell per keypoint (-1 when the channel is excluded).
struct OneHotTarget {
  int h = 0;
  int w = 0;
  std::vector<int> cell;  // y * w + x, or -1
  int clamped = 0;        // visible keypoints that fell outside the grid

  bool valid(int j) const { return cell[j] >= 0; }
  int num_valid() const;
  // Materialized K x h x w binary masks.
  Tensor masks() const;
};

// Only v = 2 keypoints get a target, at (floor(x / s), floor(y / s)).
OneHotTarget keypoint_onehot_target(const InstanceAnnotation& instance, int stride,
                                    int map_h, int map_w);

struct OffsetTarget {
  Tensor field;  // 2K channels (dx_1, dy_1, ..., dx_K, dy_K), feature cells
  Tensor mask;   // K channels, 1 where supervised
};

// Disk offset regression target. For keypoint category j, every cell p with
// |p - kp / s| <= radius stores kp / s - p. Overlapping disks of the same
// category take the nearest keypoint. Uses every labeled (v > 0) keypoint.
// radius is in cells of this plane.
OffsetTarget disk_offset_target(const std::vector<InstanceAnnotation>& instances,
                                int num_keypoints, int stride, double radius,
                                int map_h, int map_w);

// Per-category maximum of exp(-d^2 / (2 sigma^2)) Gaussians centered at the
// cell floor(kp / s) of every labeled keypoint. sigma is in cells.
Tensor heatmap_target(const std::vector<InstanceAnnotation>& instances, int num_keypoints,
                      int stride, double sigma, int map_h, int map_w);

}  // namespace inspose
