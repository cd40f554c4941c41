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

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "inspose/error.hpp"

namespace inspose {

// Dense channel-major (C, H, W) array for a single image.
template <typename T>
struct BasicTensor {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<T> data;

  BasicTensor() = default;
  BasicTensor(int channels, int height, int width, T fill = T(0))
      : c(channels), h(height), w(width),
        data(static_cast<std::size_t>(channels) * height * width, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }
  bool empty() const { return data.empty(); }
  bool same_shape(const BasicTensor& o) const {
    return c == o.c && h == o.h && w == o.w;
  }

  T& at(int ch, int y, int x) {
    return data[(static_cast<std::size_t>(ch) * h + y) * w + x];
  }
  const T& at(int ch, int y, int x) const {
    return data[(static_cast<std::size_t>(ch) * h + y) * w + x];
  }

  std::span<T> plane(int ch) {
    return {data.data() + static_cast<std::size_t>(ch) * plane_size(), plane_size()};
  }
  std::span<const T> plane(int ch) const {
    return {data.data() + static_cast<std::size_t>(ch) * plane_size(), plane_size()};
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

using Tensor = BasicTensor<float>;

template <typename To, typename From>
BasicTensor<To> tensor_cast(const BasicTensor<From>& t) {
  BasicTensor<To> out(t.c, t.h, t.w);
  for (std::size_t i = 0; i < t.size(); ++i) out.data[i] = static_cast<To>(t.data[i]);
  return out;
}

}  // namespace inspose
