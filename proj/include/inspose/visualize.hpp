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

#include <filesystem>
#include <span>

#include "inspose/datagen.hpp"
#include "inspose/geometry.hpp"
#include "inspose/image.hpp"

namespace inspose {

inline constexpr Rgb kCenterJointColor{255, 0, 255};  // magenta
inline constexpr Rgb kLeftJointColor{0, 0, 255};      // blue
inline constexpr Rgb kRightJointColor{255, 165, 0};   // orange
inline constexpr Rgb kEdgeColor{0, 200, 0};

Rgb joint_color(JointGroup group);

// Draws skeleton edges, then the v = 2 joints of every detection colored by
// joint group. Zero detections leave the image unchanged.
Image draw_detections(const Image& image, std::span<const Detection> dets,
                      const Skeleton& skeleton);

// draw_detections followed by a PNG write.
void render_visualization(const Image& image, std::span<const Detection> dets,
                          const Skeleton& skeleton, const std::filesystem::path& out);

}  // namespace inspose
