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

// Minimal reverse-mode differentiation over (C, H, W) float tensors: just the
// layers the pose network needs (convolution, group norm, ReLU, sum, nearest
// and bilinear resampling).

#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "inspose/tensor.hpp"

namespace inspose::nn {

struct Parameter {
  std::string name;
  std::vector<int> shape;
  std::vector<float> value;
};

class ParameterStore {
 public:
  int add(const std::string& name, std::vector<int> shape);
  int id(const std::string& name) const;  // throws ConfigError when missing
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  Parameter& operator[](int i) { return params_[i]; }
  const Parameter& operator[](int i) const { return params_[i]; }
  int size() const { return static_cast<int>(params_.size()); }
  std::size_t num_scalars() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
  std::map<std::string, int> index_;
};

using GradientBuffer = std::vector<std::vector<float>>;

GradientBuffer zero_gradients(const ParameterStore& store);

// Kaiming-uniform style fan-in initialization for conv weights.
void init_conv_weight(Parameter& p, std::mt19937_64& rng, double gain = 1.0);
void init_normal(Parameter& p, std::mt19937_64& rng, double stddev);
void init_constant(Parameter& p, float v);

// Identifier of a value recorded on a Graph.
using Var = int;

class Graph {
 public:
  // grads == nullptr builds an inference-only graph (no backward state).
  Graph(const ParameterStore& params, GradientBuffer* grads);

  Var input(Tensor t);
  const Tensor& value(Var v) const { return nodes_[v]->value; }
  // Gradient buffer of v, allocated as zeros on first access.
  Tensor& grad(Var v);
  bool requires_grad() const { return grads_ != nullptr; }

  // k x k convolution with zero padding. weight shape [out, in, k, k].
  Var conv2d(Var x, int weight, int bias, int stride, int pad);
  Var group_norm(Var x, int gamma, int beta, int groups, float eps = 1e-5f);
  Var relu(Var x);
  Var add(Var a, Var b);
  Var upsample_nearest(Var x, int out_h, int out_w);
  // Bilinear resampling with half-pixel centers (align_corners = false).
  Var resize_bilinear(Var x, int out_h, int out_w);

  // Propagates every gradient set so far back to the parameters.
  void backward();

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    std::function<void()> backward;
  };

  Var push(Tensor value);
  Node& node(Var v) { return *nodes_[v]; }

  const ParameterStore& params_;
  GradientBuffer* grads_;
  std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace inspose::nn
