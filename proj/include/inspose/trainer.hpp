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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "inspose/assignment.hpp"
#include "inspose/checkpoint.hpp"
#include "inspose/config.hpp"
#include "inspose/datagen.hpp"
#include "inspose/evalkit.hpp"
#include "inspose/losses.hpp"
#include "inspose/network.hpp"
#include "inspose/nn.hpp"

namespace inspose {

// Images and annotations held in memory for training.
struct TrainingSet {
  Dataset records;
  std::vector<Image> images;
  std::vector<std::vector<InstanceAnnotation>> instances;

  std::size_t size() const { return images.size(); }
};

// Synthetic scenes or a COCO file, as selected by cfg.data.
TrainingSet load_training_set(const TrainConfig& cfg);
TrainingSet make_training_set(Dataset records, std::vector<Image> images);

// Supervision for one padded input image.
struct ImageTargets {
  std::vector<LevelAssignment> levels;  // P3..P7
  std::vector<OneHotTarget> onehots;    // per instance, output plane
  OffsetTarget offsets;                 // output plane, empty when disabled
  Tensor heatmap;                       // stride-8 plane, empty when disabled
  int kpf_locations = 0;                // positives whose instance has a valid keypoint
};

ImageTargets build_targets(const ModelConfig& model, const AssignmentConfig& assign,
                           const std::vector<InstanceAnnotation>& instances, int padded_h,
                           int padded_w);

// Batch-wide loss denominators.
struct LossNormalizers {
  double cls = 1.0;
  double kpf = 1.0;
  double offset = 0.0;
  double heatmap = 1.0;
};

LossNormalizers batch_normalizers(const std::vector<ImageTargets>& targets);

// Forward, loss and backward for one image. Gradients are accumulated into
// grads. Returned components are this image's share of the batch loss.
LossReport image_loss_and_backward(const Model& model, const Tensor& input,
                                   const ImageTargets& targets, const LossNormalizers& norms,
                                   const LossConfig& loss, nn::GradientBuffer& grads);

// SGD with momentum and L2 weight decay:
//   v = momentum * v + (g + weight_decay * w),  w -= lr * v
class Sgd {
 public:
  Sgd(const nn::ParameterStore& params, double momentum, double weight_decay);
  void step(nn::ParameterStore& params, const nn::GradientBuffer& grads, double lr);
  std::vector<std::vector<float>>& velocity() { return velocity_; }
  const std::vector<std::vector<float>>& velocity() const { return velocity_; }

 private:
  double momentum_;
  double weight_decay_;
  std::vector<std::vector<float>> velocity_;
};

// Scales grads so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_gradients(nn::GradientBuffer& grads, double max_norm);

// Learning rate after linear warmup and the x0.1 step decays.
double learning_rate(const OptimConfig& optim, int epoch, std::int64_t iteration);

struct IterationLog {
  int epoch = 0;
  std::int64_t iteration = 0;
  double lr = 0.0;
  LossReport loss;
};

struct TrainOptions {
  std::optional<std::filesystem::path> resume;
  // Stop after this many epochs in this invocation (0 = run the schedule).
  int max_epochs_this_run = 0;
  bool write_log = true;
  bool verbose = false;
  std::function<void(const IterationLog&)> on_iteration;
};

struct TrainResult {
  Model model;
  TrainState state;
  std::vector<std::filesystem::path> checkpoints;
  LossReport last_loss;
};

// Epoch loop writing metrics.jsonl, config.txt and epoch_NNN.ckpt files
// (every output.checkpoint_every epochs) under cfg.output_dir. A non-finite
// loss writes nonfinite_batch.json and throws Error.
TrainResult run_train(const TrainConfig& cfg, const TrainOptions& opt = {});
// Same, with a caller-supplied training set.
TrainResult run_train(const TrainConfig& cfg, const TrainingSet& data, const TrainOptions& opt = {});

// OKS constants for evaluating a model trained with cfg.
std::vector<double> eval_kappas(const TrainConfig& cfg, int num_keypoints);

std::vector<std::vector<Detection>> predict(const Model& model, const std::vector<Image>& images,
                                            const InferenceConfig& cfg);

struct EvalOptions {
  std::filesystem::path image_root;  // default: <ann dir>/images, else <ann dir>
  std::filesystem::path out_dir;     // writes eval.json and eval.txt when set
  double kappa = 0.0;                // > 0 overrides the OKS constants
};

EvalResult run_eval(const std::filesystem::path& ckpt, const std::filesystem::path& ann,
                    const EvalOptions& opt = {});

struct InferReport {
  int images = 0;
  int failures = 0;
  int detections = 0;
};

// Expands pattern, runs inference on every match in sorted order and writes a
// COCO results list. image_id is the numeric file stem when it has one, else
// the position in the sorted list. Unreadable files are reported on stderr
// and skipped.
InferReport run_infer(const std::filesystem::path& ckpt, const std::string& pattern,
                      const std::filesystem::path& out);

std::vector<std::string> expand_glob(const std::string& pattern);
// Inference settings stored with a checkpoint.
InferenceConfig checkpoint_inference_config(const Checkpoint& ckpt);

}  // namespace inspose
