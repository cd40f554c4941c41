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

// Dynamic per-instance keypoint networks (KP-Nets).
//
// A KP-Net is a stack of 1x1 convolutions whose weights are not learned
// directly: the controller head emits one flat parameter vector per feature
// location, and that vector is split into the per-layer weights and biases.
// The KP-Net consumes the shared keypoint feature map concatenated with a
// 2-channel relative coordinate map, and emits K keypoint logit planes.
//
// Everything here is templated on the scalar type so the same code runs in
// float during training and in double for gradient checks.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "inspose/assignment.hpp"
#include "inspose/error.hpp"
#include "inspose/tensor.hpp"

namespace inspose {

struct KpnetSpec {
  int num_keypoints = 17;
  int hidden = 8;
  int depth = 3;
  int feature_channels = 8;  // C_kp; the KP-Net input has C_kp + 2 channels

  struct LayerShape {
    int in = 0;
    int out = 0;
    int size() const { return in * out + out; }
  };

  std::vector<LayerShape> layer_shapes() const {
    if (depth < 1) throw ConfigError("KP-Net depth must be >= 1");
    std::vector<LayerShape> shapes;
    int in = feature_channels + 2;
    for (int l = 0; l < depth; ++l) {
      const int out = (l + 1 == depth) ? num_keypoints : hidden;
      shapes.push_back({in, out});
      in = out;
    }
    return shapes;
  }

  // C_f: total number of generated parameters.
  int param_count() const {
    int total = 0;
    for (const LayerShape& s : layer_shapes()) total += s.size();
    return total;
  }
};

template <typename T>
struct KpnetLayer {
  int in = 0;
  int out = 0;
  std::span<const T> weight;  // out x in, row-major
  std::span<const T> bias;    // out
};

// Splits a flat vector layer by layer, weights before biases in each layer.
template <typename T>
std::vector<KpnetLayer<T>> split_kpnet_params(std::span<const T> flat, const KpnetSpec& spec) {
  const int expected = spec.param_count();
  if (static_cast<int>(flat.size()) != expected) {
    throw ConfigError("KP-Net parameter vector has length " + std::to_string(flat.size()) +
                      ", expected C_f = " + std::to_string(expected));
  }
  std::vector<KpnetLayer<T>> layers;
  std::size_t offset = 0;
  for (const auto& s : spec.layer_shapes()) {
    KpnetLayer<T> layer;
    layer.in = s.in;
    layer.out = s.out;
    layer.weight = flat.subspan(offset, static_cast<std::size_t>(s.in) * s.out);
    offset += layer.weight.size();
    layer.bias = flat.subspan(offset, static_cast<std::size_t>(s.out));
    offset += layer.bias.size();
    layers.push_back(layer);
  }
  return layers;
}

namespace detail {

template <typename T>
void affine_1x1(const BasicTensor<T>& x, const KpnetLayer<T>& layer, bool relu,
                BasicTensor<T>& y) {
  const std::size_t n = x.plane_size();
  y = BasicTensor<T>(layer.out, x.h, x.w);
  for (int o = 0; o < layer.out; ++o) {
    T* dst = y.data.data() + o * n;
    std::fill(dst, dst + n, layer.bias[o]);
    for (int i = 0; i < layer.in; ++i) {
      const T wgt = layer.weight[static_cast<std::size_t>(o) * layer.in + i];
      const T* src = x.data.data() + i * n;
      for (std::size_t p = 0; p < n; ++p) dst[p] += wgt * src[p];
    }
    if (relu)
      for (std::size_t p = 0; p < n; ++p) dst[p] = dst[p] > T(0) ? dst[p] : T(0);
  }
}

}  // namespace detail

// Runs the KP-Net over every cell: per-cell affine maps with ReLU between
// layers and no activation after the last one.
template <typename T>
BasicTensor<T> apply_kpnet(const BasicTensor<T>& input, const std::vector<KpnetLayer<T>>& layers) {
  if (layers.empty()) throw ConfigError("apply_kpnet: no layers");
  if (input.c != layers.front().in) {
    throw ConfigError("apply_kpnet: input has " + std::to_string(input.c) +
                      " channels, KP-Net expects " + std::to_string(layers.front().in));
  }
  BasicTensor<T> cur = input;
  BasicTensor<T> next;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (l > 0 && layers[l].in != layers[l - 1].out)
      throw ConfigError("apply_kpnet: layer shapes do not chain");
    detail::affine_1x1(cur, layers[l], l + 1 < layers.size(), next);
    std::swap(cur, next);
  }
  return cur;
}

// Backward pass of apply_kpnet. Accumulates into grad_params (length C_f,
// same layout as the flat vector) and, when non-null, into grad_input.
template <typename T>
void apply_kpnet_backward(const BasicTensor<T>& input, const std::vector<KpnetLayer<T>>& layers,
                          const BasicTensor<T>& grad_output, std::span<T> grad_params,
                          BasicTensor<T>* grad_input) {
  const std::size_t n = input.plane_size();
  std::vector<BasicTensor<T>> acts;  // acts[l] is the input of layer l
  acts.reserve(layers.size());
  acts.push_back(input);
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    BasicTensor<T> y;
    detail::affine_1x1(acts.back(), layers[l], true, y);
    acts.push_back(std::move(y));
  }

  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& layer : layers) {
    offsets.push_back(off);
    off += static_cast<std::size_t>(layer.in) * layer.out + layer.out;
  }
  if (grad_params.size() != off) throw ConfigError("apply_kpnet_backward: gradient size mismatch");

  BasicTensor<T> grad = grad_output;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const KpnetLayer<T>& layer = layers[li];
    const BasicTensor<T>& x = acts[li];
    T* gw = grad_params.data() + offsets[li];
    T* gb = gw + static_cast<std::size_t>(layer.in) * layer.out;
    for (int o = 0; o < layer.out; ++o) {
      const T* g = grad.data.data() + o * n;
      T sb = 0;
      for (std::size_t p = 0; p < n; ++p) sb += g[p];
      gb[o] += sb;
      for (int i = 0; i < layer.in; ++i) {
        const T* src = x.data.data() + i * n;
        T s = 0;
        for (std::size_t p = 0; p < n; ++p) s += g[p] * src[p];
        gw[static_cast<std::size_t>(o) * layer.in + i] += s;
      }
    }
    if (li == 0 && grad_input == nullptr) break;

    BasicTensor<T> gx(layer.in, x.h, x.w);
    for (int o = 0; o < layer.out; ++o) {
      const T* g = grad.data.data() + o * n;
      for (int i = 0; i < layer.in; ++i) {
        const T wgt = layer.weight[static_cast<std::size_t>(o) * layer.in + i];
        T* dst = gx.data.data() + i * n;
        for (std::size_t p = 0; p < n; ++p) dst[p] += wgt * g[p];
      }
    }
    if (li > 0) {
      // ReLU gate of the previous layer: x is its post-activation output.
      for (std::size_t k = 0; k < gx.size(); ++k)
        if (!(x.data[k] > T(0))) gx.data[k] = T(0);
      grad = std::move(gx);
    } else {
      for (std::size_t k = 0; k < gx.size(); ++k) grad_input->data[k] += gx.data[k];
    }
  }
}

// Two-channel map of (cell image position - controller position) divided by
// (stride * scale). Cell image positions follow map_location_to_image.
template <typename T>
BasicTensor<T> relative_coord_map(double ctrl_x, double ctrl_y, int map_h, int map_w, int stride,
                                  double scale) {
  BasicTensor<T> r(2, map_h, map_w);
  const double norm = 1.0 / (stride * scale);
  for (int y = 0; y < map_h; ++y) {
    for (int x = 0; x < map_w; ++x) {
      const auto [px, py] = map_location_to_image(x, y, stride);
      r.at(0, y, x) = static_cast<T>((px - ctrl_x) * norm);
      r.at(1, y, x) = static_cast<T>((py - ctrl_y) * norm);
    }
  }
  return r;
}

// Concatenates the keypoint features with the relative coordinate map.
template <typename T>
BasicTensor<T> kpnet_input(const BasicTensor<T>& features, double ctrl_x, double ctrl_y,
                           int stride, double scale) {
  BasicTensor<T> out(features.c + 2, features.h, features.w);
  std::copy(features.data.begin(), features.data.end(), out.data.begin());
  const BasicTensor<T> rel = relative_coord_map<T>(ctrl_x, ctrl_y, features.h, features.w,
                                                   stride, scale);
  std::copy(rel.data.begin(), rel.data.end(), out.data.begin() + features.size());
  return out;
}

}  // namespace inspose
