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
#include "inspose/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "inspose/error.hpp"

namespace inspose {

int Pose::num_labeled() const {
  return static_cast<int>(std::count_if(keypoints.begin(), keypoints.end(),
                                        [](const Keypoint& k) { return k.labeled(); }));
}

int Pose::num_visible() const {
  return static_cast<int>(std::count_if(keypoints.begin(), keypoints.end(),
                                        [](const Keypoint& k) { return k.visible(); }));
}

Box min_enclosing_rect(const Pose& pose) {
  bool any = false;
  Box box;
  for (const Keypoint& k : pose.keypoints) {
    if (!k.labeled()) continue;
    if (!any) {
      box = {k.x, k.y, k.x, k.y};
      any = true;
      continue;
    }
    box.x_min = std::min(box.x_min, k.x);
    box.y_min = std::min(box.y_min, k.y);
    box.x_max = std::max(box.x_max, k.x);
    box.y_max = std::max(box.y_max, k.y);
  }
  if (!any) throw GeometryError("min_enclosing_rect: pose has no labeled keypoint");
  return box;
}

double box_iou(const Box& a, const Box& b) {
  const double area_a = a.area();
  const double area_b = b.area();
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (area_a + area_b - inter);
}

std::vector<double> coco_kappas() {
  static constexpr double kSigmas[17] = {.26, .25, .25, .35, .35, .79, .79, .72, .72,
                                         .62, .62, 1.07, 1.07, .87, .87, .89, .89};
  std::vector<double> out;
  out.reserve(17);
  for (double s : kSigmas) out.push_back(2.0 * s / 10.0);
  return out;
}

std::vector<double> uniform_kappas(int num_keypoints, double kappa) {
  return std::vector<double>(static_cast<std::size_t>(num_keypoints), kappa);
}

double oks(const Pose& pred, const Pose& gt, double gt_area,
           std::span<const double> kappas) {
  if (pred.size() != gt.size() || static_cast<std::size_t>(gt.size()) != kappas.size())
    throw GeometryError("oks: keypoint count mismatch");
  if (!(gt_area > 0.0)) throw GeometryError("oks: ground-truth area must be positive");
  double sum = 0.0;
  int labeled = 0;
  for (int j = 0; j < gt.size(); ++j) {
    const Keypoint& g = gt.keypoints[j];
    if (!g.labeled()) continue;
    const Keypoint& p = pred.keypoints[j];
    const double dx = p.x - g.x;
    const double dy = p.y - g.y;
    const double k = kappas[j];
    sum += std::exp(-(dx * dx + dy * dy) / (2.0 * gt_area * k * k));
    ++labeled;
  }
  if (labeled == 0) throw GeometryError("oks: ground truth has no labeled keypoint");
  return sum / labeled;
}

std::vector<Detection> keypoint_nms(std::vector<Detection> dets, double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  std::vector<Detection> kept;
  for (std::size_t idx : order) {
    const Box& r = dets[idx].rect;
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return box_iou(k.rect, r) >= iou_threshold;
    });
    if (!suppressed) kept.push_back(std::move(dets[idx]));
  }
  return kept;
}

}  // namespace inspose
