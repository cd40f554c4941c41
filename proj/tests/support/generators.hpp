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

// Random generators and brute-force reference implementations shared by the
// unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "inspose/geometry.hpp"

namespace inspose::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Pose with K keypoints inside [x0, x0 + w] x [y0, y0 + h]. Each keypoint is
// labeled with probability p_labeled; at least one is labeled.
inline Pose random_pose(std::mt19937_64& rng, int k, double x0, double y0, double w, double h,
                        double p_labeled = 0.8) {
  Pose p;
  for (int j = 0; j < k; ++j) {
    Keypoint kp;
    kp.x = uniform(rng, x0, x0 + w);
    kp.y = uniform(rng, y0, y0 + h);
    const double u = uniform(rng, 0.0, 1.0);
    kp.v = u < p_labeled ? (u < 0.5 * p_labeled ? kLabeledInvisible : kLabeledVisible) : kNotLabeled;
    p.keypoints.push_back(kp);
  }
  if (p.num_labeled() == 0) p.keypoints[uniform_int(rng, 0, k - 1)].v = kLabeledVisible;
  return p;
}

inline Box random_box(std::mt19937_64& rng, double extent) {
  const double x = uniform(rng, 0.0, extent);
  const double y = uniform(rng, 0.0, extent);
  return Box{x, y, x + uniform(rng, 1.0, extent / 3), y + uniform(rng, 1.0, extent / 3)};
}

// OKS written directly from its definition.
inline double oks_reference(const Pose& pred, const Pose& gt, double area,
                            const std::vector<double>& kappas) {
  double num = 0.0;
  int den = 0;
  for (int j = 0; j < gt.size(); ++j) {
    if (gt.keypoints[j].v <= 0) continue;
    const double dx = pred.keypoints[j].x - gt.keypoints[j].x;
    const double dy = pred.keypoints[j].y - gt.keypoints[j].y;
    num += std::exp(-(dx * dx + dy * dy) / (2.0 * area * kappas[j] * kappas[j]));
    ++den;
  }
  return num / den;
}

inline double iou_reference(const Box& a, const Box& b) {
  const double iw = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double ih = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (a.area() <= 0.0 || b.area() <= 0.0 || uni <= 0.0) return 0.0;
  return inter / uni;
}

// Quadratic NMS: repeatedly takes the best remaining detection (lowest index
// among equal scores) and removes everything overlapping it.
inline std::vector<Detection> nms_reference(const std::vector<Detection>& dets, double thr) {
  std::vector<bool> alive(dets.size(), true);
  std::vector<Detection> kept;
  while (true) {
    int best = -1;
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (alive[i] && (best < 0 || dets[i].score > dets[best].score)) best = static_cast<int>(i);
    if (best < 0) break;
    alive[best] = false;
    kept.push_back(dets[best]);
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (alive[i] && iou_reference(dets[best].rect, dets[i].rect) >= thr) alive[i] = false;
  }
  return kept;
}

inline std::vector<Detection> random_detections(std::mt19937_64& rng, int n, double extent) {
  std::vector<Detection> dets;
  for (int i = 0; i < n; ++i) {
    Detection d;
    // Coarse scores so ties occur.
    d.score = std::round(uniform(rng, 0.0, 1.0) * 20.0) / 20.0;
    d.rect = random_box(rng, extent);
    dets.push_back(d);
  }
  return dets;
}

}  // namespace inspose::testing
