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

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "inspose/tensor.hpp"

namespace inspose {

using Rgb = std::array<std::uint8_t, 3>;

// 8-bit interleaved RGB raster.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  Image() = default;
  Image(int w, int h, Rgb fill = {0, 0, 0});

  Rgb get(int x, int y) const;
  void set(int x, int y, Rgb c);
  bool operator==(const Image&) const = default;
};

// Throws Error on I/O or decode failure.
Image read_png(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);

// Bilinear resize with half-pixel centers.
Image resize_image(const Image& image, int out_w, int out_h);
Image flip_horizontal(const Image& image);

// Normalizes to roughly zero-mean unit-range floats and zero-pads the bottom
// and right edges up to a multiple of pad_multiple.
Tensor preprocess_image(const Image& image, int pad_multiple = 128);

// Raster primitives (alpha-free, clipped to the image).
void draw_disk(Image& image, double cx, double cy, double radius, Rgb color);
void draw_line(Image& image, double x0, double y0, double x1, double y1, double thickness,
               Rgb color);
void fill_rect(Image& image, int x0, int y0, int x1, int y1, Rgb color);

}  // namespace inspose
