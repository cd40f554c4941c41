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
#include "inspose/nn.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace inspose::nn {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMapMat = Eigen::Map<const RowMat>;

int conv_out(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

// GEMM operands live in Eigen-owned (aligned) storage so that the
// vectorized summation order does not depend on heap addresses.
void im2col(const Tensor& x, int k, int stride, int pad, int oh, int ow, RowMat& cols) {
  const std::size_t n = static_cast<std::size_t>(oh) * ow;
  cols.setZero(static_cast<Eigen::Index>(x.c) * k * k, static_cast<Eigen::Index>(n));
  for (int c = 0; c < x.c; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        float* row = cols.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * n;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= x.h) continue;
          const float* src = x.data.data() + (static_cast<std::size_t>(c) * x.h + iy) * x.w;
          float* dst = row + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < x.w) dst[ox] = src[ix];
          }
        }
      }
    }
  }
}

void col2im(const RowMat& cols, int k, int stride, int pad, int oh, int ow, Tensor& dx) {
  const std::size_t n = static_cast<std::size_t>(oh) * ow;
  for (int c = 0; c < dx.c; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* row = cols.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * n;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= dx.h) continue;
          float* dst = dx.data.data() + (static_cast<std::size_t>(c) * dx.h + iy) * dx.w;
          const float* src = row + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < dx.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

struct BilinearTap {
  int i0, i1;
  float l0, l1;
};

std::vector<BilinearTap> bilinear_taps(int in, int out) {
  std::vector<BilinearTap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = std::max(0.0, scale * (o + 0.5) - 0.5);
    int i0 = std::min(static_cast<int>(src), in - 1);
    int i1 = std::min(i0 + 1, in - 1);
    const float l1 = static_cast<float>(src - i0);
    taps[o] = {i0, i1, 1.0f - l1, l1};
  }
  return taps;
}

}  // namespace

int ParameterStore::add(const std::string& name, std::vector<int> shape) {
  if (index_.count(name)) throw ConfigError("duplicate parameter " + name);
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  params_.push_back({name, std::move(shape), std::vector<float>(n, 0.0f)});
  const int id = static_cast<int>(params_.size()) - 1;
  index_[name] = id;
  return id;
}

int ParameterStore::id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

std::size_t ParameterStore::num_scalars() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.size();
  return n;
}

GradientBuffer zero_gradients(const ParameterStore& store) {
  GradientBuffer g;
  g.reserve(store.size());
  for (const Parameter& p : store) g.emplace_back(p.value.size(), 0.0f);
  return g;
}

void init_conv_weight(Parameter& p, std::mt19937_64& rng, double gain) {
  std::size_t fan_in = 1;
  for (std::size_t d = 1; d < p.shape.size(); ++d) fan_in *= static_cast<std::size_t>(p.shape[d]);
  const double bound = gain * std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (float& v : p.value) v = static_cast<float>(dist(rng));
}

void init_normal(Parameter& p, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (float& v : p.value) v = static_cast<float>(dist(rng));
}

void init_constant(Parameter& p, float v) { std::fill(p.value.begin(), p.value.end(), v); }

Graph::Graph(const ParameterStore& params, GradientBuffer* grads)
    : params_(params), grads_(grads) {}

Var Graph::push(Tensor value) {
  auto n = std::make_unique<Node>();
  n->value = std::move(value);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size()) - 1;
}

Var Graph::input(Tensor t) { return push(std::move(t)); }

Tensor& Graph::grad(Var v) {
  Node& n = node(v);
  if (!n.has_grad) {
    n.grad = Tensor(n.value.c, n.value.h, n.value.w);
    n.has_grad = true;
  }
  return n.grad;
}

Var Graph::conv2d(Var xv, int weight, int bias, int stride, int pad) {
  const Parameter& wp = params_[weight];
  const int out_c = wp.shape[0];
  const int in_c = wp.shape[1];
  const int k = wp.shape[2];
  const Tensor& x = value(xv);
  if (x.c != in_c) {
    throw ConfigError("conv2d " + wp.name + ": input has " + std::to_string(x.c) +
                      " channels, expected " + std::to_string(in_c));
  }
  const int oh = conv_out(x.h, k, stride, pad);
  const int ow = conv_out(x.w, k, stride, pad);
  if (oh <= 0 || ow <= 0) throw ConfigError("conv2d " + wp.name + ": input too small");
  const int n = oh * ow;
  const int kk = in_c * k * k;

  auto cols = std::make_shared<RowMat>();
  if (k == 1 && stride == 1 && pad == 0)
    *cols = ConstMapMat(x.data.data(), kk, n);
  else
    im2col(x, k, stride, pad, oh, ow, *cols);
  const RowMat w = ConstMapMat(wp.value.data(), out_c, kk);
  RowMat ym(out_c, n);
  ym.noalias() = w * *cols;

  Tensor y(out_c, oh, ow);
  for (int o = 0; o < out_c; ++o) {
    const float b = bias >= 0 ? params_[bias].value[o] : 0.0f;
    float* dst = y.data.data() + static_cast<std::size_t>(o) * n;
    for (int i = 0; i < n; ++i) dst[i] = ym(o, i) + b;
  }
  const Var out = push(std::move(y));
  if (!requires_grad()) return out;

  node(out).backward = [this, xv, out, weight, bias, stride, pad, k, oh, ow, n, kk, out_c, cols]() {
    const RowMat dym = ConstMapMat(node(out).grad.data.data(), out_c, n);
    RowMat dw(out_c, kk);
    dw.noalias() = dym * cols->transpose();
    auto& gw = (*grads_)[weight];
    for (int o = 0; o < out_c; ++o)
      for (int i = 0; i < kk; ++i) gw[static_cast<std::size_t>(o) * kk + i] += dw(o, i);
    if (bias >= 0) {
      auto& db = (*grads_)[bias];
      for (int o = 0; o < out_c; ++o) {
        float acc = 0.0f;
        for (int i = 0; i < n; ++i) acc += dym(o, i);
        db[o] += acc;
      }
    }
    const RowMat wm = ConstMapMat(params_[weight].value.data(), out_c, kk);
    RowMat dcols(kk, n);
    dcols.noalias() = wm.transpose() * dym;
    Tensor& dx = grad(xv);
    if (k == 1 && stride == 1 && pad == 0) {
      for (int r = 0; r < kk; ++r) {
        float* dst = dx.data.data() + static_cast<std::size_t>(r) * n;
        for (int i = 0; i < n; ++i) dst[i] += dcols(r, i);
      }
    } else {
      col2im(dcols, k, stride, pad, oh, ow, dx);
    }
  };
  return out;
}

Var Graph::group_norm(Var xv, int gamma, int beta, int groups, float eps) {
  const Tensor& x = value(xv);
  if (x.c % groups != 0) throw ConfigError("group_norm: channels not divisible by groups");
  const int cpg = x.c / groups;
  const std::size_t n = static_cast<std::size_t>(cpg) * x.plane_size();
  const std::size_t plane = x.plane_size();
  const auto& g = params_[gamma].value;
  const auto& b = params_[beta].value;

  auto xhat = std::make_shared<Tensor>(x.c, x.h, x.w);
  auto inv_std = std::make_shared<std::vector<float>>(groups);
  Tensor y(x.c, x.h, x.w);
  for (int gi = 0; gi < groups; ++gi) {
    const float* src = x.data.data() + gi * n;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += src[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= static_cast<double>(n);
    const float is = static_cast<float>(1.0 / std::sqrt(var + eps));
    (*inv_std)[gi] = is;
    float* xh = xhat->data.data() + gi * n;
    float* dst = y.data.data() + gi * n;
    for (int c = 0; c < cpg; ++c) {
      const int ch = gi * cpg + c;
      for (std::size_t p = 0; p < plane; ++p) {
        const std::size_t i = c * plane + p;
        xh[i] = static_cast<float>((src[i] - mean) * is);
        dst[i] = xh[i] * g[ch] + b[ch];
      }
    }
  }
  const Var out = push(std::move(y));
  if (!requires_grad()) return out;

  node(out).backward = [this, xv, out, gamma, beta, groups, cpg, n, plane, xhat, inv_std]() {
    const Tensor& dy = node(out).grad;
    const auto& g = params_[gamma].value;
    auto& dg = (*grads_)[gamma];
    auto& db = (*grads_)[beta];
    Tensor& dx = grad(xv);
    std::vector<float> dxhat(n);
    for (int gi = 0; gi < groups; ++gi) {
      const float* dyp = dy.data.data() + gi * n;
      const float* xh = xhat->data.data() + gi * n;
      double sum_d = 0.0;
      double sum_dx = 0.0;
      for (int c = 0; c < cpg; ++c) {
        const int ch = gi * cpg + c;
        double sg = 0.0, sb = 0.0;
        for (std::size_t p = 0; p < plane; ++p) {
          const std::size_t i = c * plane + p;
          sg += dyp[i] * xh[i];
          sb += dyp[i];
          dxhat[i] = dyp[i] * g[ch];
          sum_d += dxhat[i];
          sum_dx += dxhat[i] * xh[i];
        }
        dg[ch] += static_cast<float>(sg);
        db[ch] += static_cast<float>(sb);
      }
      const double inv_n = 1.0 / static_cast<double>(n);
      const float is = (*inv_std)[gi];
      float* dst = dx.data.data() + gi * n;
      for (std::size_t i = 0; i < n; ++i)
        dst[i] += static_cast<float>(is * (dxhat[i] - inv_n * sum_d - xh[i] * inv_n * sum_dx));
    }
  };
  return out;
}

Var Graph::relu(Var xv) {
  Tensor y = value(xv);
  for (float& v : y.data) v = v > 0.0f ? v : 0.0f;
  const Var out = push(std::move(y));
  if (!requires_grad()) return out;
  node(out).backward = [this, xv, out]() {
    const Tensor& dy = node(out).grad;
    const Tensor& y = value(out);
    Tensor& dx = grad(xv);
    for (std::size_t i = 0; i < dy.size(); ++i)
      if (y.data[i] > 0.0f) dx.data[i] += dy.data[i];
  };
  return out;
}

Var Graph::add(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (!av.same_shape(bv)) throw ConfigError("add: shape mismatch");
  Tensor y = av;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += bv.data[i];
  const Var out = push(std::move(y));
  if (!requires_grad()) return out;
  node(out).backward = [this, a, b, out]() {
    const Tensor& dy = node(out).grad;
    Tensor& da = grad(a);
    for (std::size_t i = 0; i < dy.size(); ++i) da.data[i] += dy.data[i];
    Tensor& db = grad(b);
    for (std::size_t i = 0; i < dy.size(); ++i) db.data[i] += dy.data[i];
  };
  return out;
}

Var Graph::upsample_nearest(Var xv, int out_h, int out_w) {
  const Tensor& x = value(xv);
  std::vector<int> sy(out_h), sx(out_w);
  for (int y = 0; y < out_h; ++y) sy[y] = std::min(x.h - 1, static_cast<int>(static_cast<long>(y) * x.h / out_h));
  for (int xo = 0; xo < out_w; ++xo) sx[xo] = std::min(x.w - 1, static_cast<int>(static_cast<long>(xo) * x.w / out_w));
  Tensor y(x.c, out_h, out_w);
  for (int c = 0; c < x.c; ++c)
    for (int yo = 0; yo < out_h; ++yo)
      for (int xo = 0; xo < out_w; ++xo) y.at(c, yo, xo) = x.at(c, sy[yo], sx[xo]);
  const Var out = push(std::move(y));
  if (!requires_grad()) return out;
  node(out).backward = [this, xv, out, sy, sx]() {
    const Tensor& dy = node(out).grad;
    Tensor& dx = grad(xv);
    for (int c = 0; c < dy.c; ++c)
      for (int yo = 0; yo < dy.h; ++yo)
        for (int xo = 0; xo < dy.w; ++xo) dx.at(c, sy[yo], sx[xo]) += dy.at(c, yo, xo);
  };
  return out;
}

Var Graph::resize_bilinear(Var xv, int out_h, int out_w) {
  const Tensor& x = value(xv);
  if (x.h == out_h && x.w == out_w) return xv;
  const auto ty = bilinear_taps(x.h, out_h);
  const auto tx = bilinear_taps(x.w, out_w);
  Tensor y(x.c, out_h, out_w);
  for (int c = 0; c < x.c; ++c) {
    for (int yo = 0; yo < out_h; ++yo) {
      const BilinearTap& a = ty[yo];
      for (int xo = 0; xo < out_w; ++xo) {
        const BilinearTap& b = tx[xo];
        y.at(c, yo, xo) = a.l0 * (b.l0 * x.at(c, a.i0, b.i0) + b.l1 * x.at(c, a.i0, b.i1)) +
                          a.l1 * (b.l0 * x.at(c, a.i1, b.i0) + b.l1 * x.at(c, a.i1, b.i1));
      }
    }
  }
  const Var out = push(std::move(y));
  if (!requires_grad()) return out;
  node(out).backward = [this, xv, out, ty, tx]() {
    const Tensor& dy = node(out).grad;
    Tensor& dx = grad(xv);
    for (int c = 0; c < dy.c; ++c) {
      for (int yo = 0; yo < dy.h; ++yo) {
        const BilinearTap& a = ty[yo];
        for (int xo = 0; xo < dy.w; ++xo) {
          const BilinearTap& b = tx[xo];
          const float g = dy.at(c, yo, xo);
          dx.at(c, a.i0, b.i0) += a.l0 * b.l0 * g;
          dx.at(c, a.i0, b.i1) += a.l0 * b.l1 * g;
          dx.at(c, a.i1, b.i0) += a.l1 * b.l0 * g;
          dx.at(c, a.i1, b.i1) += a.l1 * b.l1 * g;
        }
      }
    }
  };
  return out;
}

void Graph::backward() {
  if (!requires_grad()) throw ConfigError("backward on an inference graph");
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = *nodes_[i];
    if (n.has_grad && n.backward) n.backward();
  }
}

}  // namespace inspose::nn
