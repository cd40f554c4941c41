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

// Training losses. Each function returns the loss value and, when a gradient
// buffer is supplied, accumulates d(loss)/d(input) into it. Normalizers are
// passed in explicitly so a whole mini-batch can share one denominator.

#include <cmath>
#include <span>
#include <vector>

#include "inspose/assignment.hpp"
#include "inspose/kpnet.hpp"
#include "inspose/tensor.hpp"

namespace inspose {

struct LossReport {
  double l_cls = 0.0;
  double l_kpf = 0.0;
  double l_do = 0.0;
  double l_hm = 0.0;
  double total = 0.0;
};

struct LossWeights {
  double cls = 1.0;
  double kpf = 1.0;
  double disk_offset = 1.0;
  double heatmap = 1.0;
};

// Sum of the four components; disabled branches contribute exactly 0.
LossReport total_loss(double l_cls, double l_kpf, double l_do, double l_hm,
                      bool disk_offset_enabled = true, bool heatmap_enabled = true);

namespace detail {

// log(sigmoid(x)) without overflow.
template <typename T>
T log_sigmoid(T x) {
  return x >= T(0) ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

template <typename T>
T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace detail

// Sigmoid focal loss -alpha_t (1 - p_t)^gamma log(p_t), summed and divided
// by normalizer (callers pass max(N_pos, 1)).
template <typename T>
T focal_cls_loss(std::span<const T> logits, std::span<const unsigned char> labels, double alpha,
                 double gamma, double normalizer, std::span<T> grad = {}) {
  using std::pow;
  T total = 0;
  const T inv = T(1.0 / normalizer);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const T x = logits[i];
    const T p = detail::sigmoid(x);
    const T log_p = detail::log_sigmoid(x);
    const T log_1mp = detail::log_sigmoid(-x);
    T loss, dloss;
    if (labels[i]) {
      const T a = T(alpha);
      const T q = T(1) - p;
      loss = -a * pow(q, T(gamma)) * log_p;
      dloss = a * (T(gamma) * pow(q, T(gamma)) * p * log_p - pow(q, T(gamma) + T(1)));
    } else {
      const T a = T(1.0 - alpha);
      loss = -a * pow(p, T(gamma)) * log_1mp;
      dloss = -a * (T(gamma) * pow(p, T(gamma)) * (T(1) - p) * log_1mp - pow(p, T(gamma) + T(1)));
    }
    total += loss;
    if (!grad.empty()) grad[i] += dloss * inv;
  }
  return total * inv;
}

// One positive location entering the KP-Net loss.
template <typename T>
struct KpfSample {
  std::span<const T> params;     // C_f generated parameters
  double ctrl_x = 0.0;           // controller location, image pixels
  double ctrl_y = 0.0;
  const OneHotTarget* target = nullptr;
  std::span<T> grad_params;      // optional, length C_f
};

struct KpfOptions {
  int stride = 8;                // stride of the keypoint feature plane
  double rel_coord_scale = 16.0;
};

// Spatial softmax cross-entropy of each positive location's KP-Net output
// against its instance's one-hot targets: mean over valid keypoints, summed
// over locations, divided by normalizer (the positive-location count).
// Locations whose target has no valid keypoint are skipped.
template <typename T>
T kpf_loss(std::span<const KpfSample<T>> samples, const BasicTensor<T>& features,
           const KpnetSpec& spec, const KpfOptions& opt, double normalizer,
           BasicTensor<T>* grad_features = nullptr) {
  T total = 0;
  if (samples.empty() || normalizer <= 0.0) return total;
  const T inv = T(1.0 / normalizer);
  const std::size_t n = features.plane_size();
  for (const KpfSample<T>& s : samples) {
    const int valid = s.target->num_valid();
    if (valid == 0) continue;
    const auto layers = split_kpnet_params<T>(s.params, spec);
    const BasicTensor<T> input = kpnet_input(features, s.ctrl_x, s.ctrl_y, opt.stride,
                                             opt.rel_coord_scale);
    const BasicTensor<T> logits = apply_kpnet(input, layers);
    const bool need_grad = !s.grad_params.empty() || grad_features != nullptr;
    BasicTensor<T> dlogits(logits.c, logits.h, logits.w);
    T sample_loss = 0;
    for (int j = 0; j < logits.c; ++j) {
      const int tgt = s.target->cell[j];
      if (tgt < 0) continue;
      auto plane = logits.plane(j);
      T mx = plane[0];
      for (T v : plane) mx = v > mx ? v : mx;
      T sum = 0;
      for (T v : plane) sum += std::exp(v - mx);
      const T lse = mx + std::log(sum);
      sample_loss += lse - plane[tgt];
      if (need_grad) {
        auto g = dlogits.plane(j);
        const T scale = inv / T(valid);
        for (std::size_t p = 0; p < n; ++p) g[p] = std::exp(plane[p] - lse) * scale;
        g[tgt] -= scale;
      }
    }
    total += sample_loss / T(valid);
    if (!need_grad) continue;

    std::vector<T> scratch;
    std::span<T> gparams = s.grad_params;
    if (gparams.empty()) {
      scratch.assign(s.params.size(), T(0));
      gparams = scratch;
    }
    if (grad_features != nullptr) {
      BasicTensor<T> ginput(input.c, input.h, input.w);
      apply_kpnet_backward(input, layers, dlogits, gparams, &ginput);
      for (std::size_t k = 0; k < features.size(); ++k) grad_features->data[k] += ginput.data[k];
    } else {
      apply_kpnet_backward<T>(input, layers, dlogits, gparams, nullptr);
    }
  }
  return total * inv;
}

// Mean absolute error over supervised entries. pred/target have 2K channels,
// mask has K; each supervised cell contributes its x and y entries.
// normalizer is the number of supervised entries (2 * mask count).
template <typename T>
T disk_offset_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                   const BasicTensor<T>& mask, double normalizer, BasicTensor<T>* grad = nullptr) {
  if (!pred.same_shape(target) || mask.c * 2 != pred.c || mask.h != pred.h || mask.w != pred.w)
    throw ConfigError("disk_offset_loss: shape mismatch");
  if (normalizer <= 0.0) return T(0);
  const T inv = T(1.0 / normalizer);
  const std::size_t n = pred.plane_size();
  T total = 0;
  for (int j = 0; j < mask.c; ++j) {
    const auto m = mask.plane(j);
    for (int a = 0; a < 2; ++a) {
      const int ch = 2 * j + a;
      const auto p = pred.plane(ch);
      const auto t = target.plane(ch);
      for (std::size_t i = 0; i < n; ++i) {
        if (!(m[i] > T(0))) continue;
        const T d = p[i] - t[i];
        total += std::abs(d);
        if (grad != nullptr) {
          const T sign = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
          grad->plane(ch)[i] += sign * inv;
        }
      }
    }
  }
  return total * inv;
}

// Counts the y == 1 cells used to normalize the heatmap loss.
template <typename T>
std::size_t count_heatmap_peaks(const BasicTensor<T>& target) {
  return static_cast<std::size_t>(
      std::count_if(target.data.begin(), target.data.end(), [](T v) { return v >= T(1); }));
}

// Penalty-reduced focal loss on sigmoid heatmap logits:
//   y == 1: -(1 - p)^alpha log p
//   else:   -(1 - y)^beta p^alpha log(1 - p)
// divided by normalizer (callers pass max(#peaks, 1)).
template <typename T>
T heatmap_focal_loss(const BasicTensor<T>& logits, const BasicTensor<T>& target, double alpha,
                     double beta, double normalizer, BasicTensor<T>* grad = nullptr) {
  using std::pow;
  if (!logits.same_shape(target)) throw ConfigError("heatmap_focal_loss: shape mismatch");
  const T inv = T(1.0 / normalizer);
  const T a = T(alpha);
  T total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const T x = logits.data[i];
    const T y = target.data[i];
    const T p = detail::sigmoid(x);
    T loss, dloss;
    if (y >= T(1)) {
      const T log_p = detail::log_sigmoid(x);
      const T q = T(1) - p;
      loss = -pow(q, a) * log_p;
      dloss = a * pow(q, a) * p * log_p - pow(q, a + T(1));
    } else {
      const T log_1mp = detail::log_sigmoid(-x);
      const T wgt = pow(T(1) - y, T(beta));
      loss = -wgt * pow(p, a) * log_1mp;
      dloss = -wgt * (a * pow(p, a) * (T(1) - p) * log_1mp - pow(p, a + T(1)));
    }
    total += loss;
    if (grad != nullptr) grad->data[i] += dloss * inv;
  }
  return total * inv;
}

}  // namespace inspose
