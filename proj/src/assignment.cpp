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
#include "inspose/assignment.hpp"

#include <algorithm>
#include <cmath>

namespace inspose {

std::vector<LevelSpec> default_levels() {
  const double inf = std::numeric_limits<double>::infinity();
  return {{8, 0.0, 64.0}, {16, 64.0, 128.0}, {32, 128.0, 256.0},
          {64, 256.0, 512.0}, {128, 512.0, inf}};
}

InstanceAnnotation make_instance(Pose pose, double area) {
  InstanceAnnotation inst;
  inst.pseudo_box = min_enclosing_rect(pose);
  inst.area = area > 0.0 ? area : inst.pseudo_box.area();
  inst.pose = std::move(pose);
  return inst;
}

std::pair<int, int> map_location_to_image(int x, int y, int stride) {
  return {x * stride + stride / 2, y * stride + stride / 2};
}

Box center_region(const Box& pseudo_box, int stride, double radius) {
  const double half = radius * stride;
  const double cx = pseudo_box.center_x();
  const double cy = pseudo_box.center_y();
  return Box{cx - half, cy - half, cx + half, cy + half};
}

int LevelAssignment::num_positive() const {
  return static_cast<int>(std::count(cls_label.begin(), cls_label.end(), 1));
}

std::vector<LevelAssignment> assign_instances(const std::vector<LevelSpec>& levels,
                                              const std::vector<MapShape>& shapes,
                                              const std::vector<InstanceAnnotation>& instances,
                                              const AssignmentConfig& cfg) {
  if (levels.size() != shapes.size())
    throw ConfigError("assign_instances: one map shape per level required");

  std::vector<LevelAssignment> out;
  out.reserve(levels.size());
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const LevelSpec& level = levels[l];
    LevelAssignment a;
    a.stride = level.stride;
    a.h = shapes[l].h;
    a.w = shapes[l].w;
    const std::size_t n = static_cast<std::size_t>(a.h) * a.w;
    a.cls_label.assign(n, 0);
    a.instance_index.assign(n, -1);
    std::vector<double> best_area(n, std::numeric_limits<double>::infinity());

    const double half = cfg.center_radius * level.stride;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const InstanceAnnotation& inst = instances[i];
      if (inst.iscrowd) continue;
      const double side = inst.pseudo_box.longest_side();
      if (!(side > level.scale_lo && side <= level.scale_hi)) continue;
      const Box region = center_region(inst.pseudo_box, level.stride, cfg.center_radius);
      const double cx = inst.pseudo_box.center_x();
      const double cy = inst.pseudo_box.center_y();
      const double area = inst.pseudo_box.area();
      // Only cells whose image point can fall inside the region.
      const int x0 = std::max(0, static_cast<int>(std::floor((cx - half) / level.stride)) - 1);
      const int x1 = std::min(a.w - 1, static_cast<int>(std::ceil((cx + half) / level.stride)) + 1);
      const int y0 = std::max(0, static_cast<int>(std::floor((cy - half) / level.stride)) - 1);
      const int y1 = std::min(a.h - 1, static_cast<int>(std::ceil((cy + half) / level.stride)) + 1);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const auto [px, py] = map_location_to_image(x, y, level.stride);
          if (!(px > region.x_min && px < region.x_max && py > region.y_min && py < region.y_max))
            continue;
          const std::size_t idx = static_cast<std::size_t>(y) * a.w + x;
          if (area < best_area[idx]) {
            best_area[idx] = area;
            a.cls_label[idx] = 1;
            a.instance_index[idx] = static_cast<int>(i);
          }
        }
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

int OneHotTarget::num_valid() const {
  return static_cast<int>(std::count_if(cell.begin(), cell.end(), [](int c) { return c >= 0; }));
}

Tensor OneHotTarget::masks() const {
  Tensor t(static_cast<int>(cell.size()), h, w);
  for (std::size_t j = 0; j < cell.size(); ++j)
    if (cell[j] >= 0) t.plane(static_cast<int>(j))[cell[j]] = 1.0f;
  return t;
}

OneHotTarget keypoint_onehot_target(const InstanceAnnotation& instance, int stride,
                                    int map_h, int map_w) {
  OneHotTarget t;
  t.h = map_h;
  t.w = map_w;
  t.cell.assign(instance.pose.keypoints.size(), -1);
  for (std::size_t j = 0; j < instance.pose.keypoints.size(); ++j) {
    const Keypoint& k = instance.pose.keypoints[j];
    if (!k.visible()) continue;
    int cx = static_cast<int>(std::floor(k.x / stride));
    int cy = static_cast<int>(std::floor(k.y / stride));
    if (cx < 0 || cy < 0 || cx >= map_w || cy >= map_h) {
      ++t.clamped;
      cx = std::clamp(cx, 0, map_w - 1);
      cy = std::clamp(cy, 0, map_h - 1);
    }
    t.cell[j] = cy * map_w + cx;
  }
  return t;
}

OffsetTarget disk_offset_target(const std::vector<InstanceAnnotation>& instances,
                                int num_keypoints, int stride, double radius,
                                int map_h, int map_w) {
  if (!(radius > 0.0)) throw ConfigError("disk_offset_target: radius must be positive");
  OffsetTarget t{Tensor(2 * num_keypoints, map_h, map_w), Tensor(num_keypoints, map_h, map_w)};
  Tensor best(num_keypoints, map_h, map_w, std::numeric_limits<float>::infinity());
  const double r2 = radius * radius;
  const int reach = static_cast<int>(std::ceil(radius));

  for (const InstanceAnnotation& inst : instances) {
    if (inst.pose.size() != num_keypoints)
      throw ConfigError("disk_offset_target: keypoint count mismatch");
    for (int j = 0; j < num_keypoints; ++j) {
      const Keypoint& k = inst.pose.keypoints[j];
      if (!k.labeled()) continue;
      const double fx = k.x / stride;
      const double fy = k.y / stride;
      const int cx = static_cast<int>(std::floor(fx));
      const int cy = static_cast<int>(std::floor(fy));
      for (int y = std::max(0, cy - reach); y <= std::min(map_h - 1, cy + reach + 1); ++y) {
        for (int x = std::max(0, cx - reach); x <= std::min(map_w - 1, cx + reach + 1); ++x) {
          const double dx = fx - x;
          const double dy = fy - y;
          const double d2 = dx * dx + dy * dy;
          if (d2 > r2 || !(d2 < best.at(j, y, x))) continue;
          best.at(j, y, x) = static_cast<float>(d2);
          t.field.at(2 * j, y, x) = static_cast<float>(dx);
          t.field.at(2 * j + 1, y, x) = static_cast<float>(dy);
          t.mask.at(j, y, x) = 1.0f;
        }
      }
    }
  }
  return t;
}

Tensor heatmap_target(const std::vector<InstanceAnnotation>& instances, int num_keypoints,
                      int stride, double sigma, int map_h, int map_w) {
  Tensor hm(num_keypoints, map_h, map_w);
  const double denom = 2.0 * sigma * sigma;
  for (const InstanceAnnotation& inst : instances) {
    for (int j = 0; j < std::min(num_keypoints, inst.pose.size()); ++j) {
      const Keypoint& k = inst.pose.keypoints[j];
      if (!k.labeled()) continue;
      const int cx = std::clamp(static_cast<int>(std::floor(k.x / stride)), 0, map_w - 1);
      const int cy = std::clamp(static_cast<int>(std::floor(k.y / stride)), 0, map_h - 1);
      for (int y = 0; y < map_h; ++y) {
        for (int x = 0; x < map_w; ++x) {
          const double d2 = double(x - cx) * (x - cx) + double(y - cy) * (y - cy);
          const float g = static_cast<float>(std::exp(-d2 / denom));
          float& cell = hm.at(j, y, x);
          cell = std::max(cell, g);
        }
      }
    }
  }
  return hm;
}

}  // namespace inspose
