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
#include "inspose/visualize.hpp"

#include <algorithm>

#include "inspose/error.hpp"

namespace inspose {

Rgb joint_color(JointGroup group) {
  switch (group) {
    case JointGroup::kLeft:
      return kLeftJointColor;
    case JointGroup::kRight:
      return kRightJointColor;
    case JointGroup::kCenter:
    default:
      return kCenterJointColor;
  }
}

Image draw_detections(const Image& image, std::span<const Detection> dets,
                      const Skeleton& skeleton) {
  Image out = image;
  const double scale = std::min(image.width, image.height);
  const double radius = std::max(2.0, scale / 100.0);
  const double thickness = std::max(1.0, scale / 200.0);
  for (const Detection& d : dets) {
    if (d.pose.size() != skeleton.size())
      throw ConfigError("detection has " + std::to_string(d.pose.size()) +
                        " keypoints, skeleton has " + std::to_string(skeleton.size()));
    const auto& kps = d.pose.keypoints;
    for (const auto& [a, b] : skeleton.edges)
      if (kps[a].visible() && kps[b].visible())
        draw_line(out, kps[a].x, kps[a].y, kps[b].x, kps[b].y, thickness, kEdgeColor);
  }
  for (const Detection& d : dets) {
    const auto& kps = d.pose.keypoints;
    for (int j = 0; j < skeleton.size(); ++j)
      if (kps[j].visible()) draw_disk(out, kps[j].x, kps[j].y, radius, joint_color(skeleton.groups[j]));
  }
  return out;
}

void render_visualization(const Image& image, std::span<const Detection> dets,
                          const Skeleton& skeleton, const std::filesystem::path& out) {
  write_png(draw_detections(image, dets, skeleton), out);
}

}  // namespace inspose
