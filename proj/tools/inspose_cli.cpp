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
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "inspose/checkpoint.hpp"
#include "inspose/config.hpp"
#include "inspose/datagen.hpp"
#include "inspose/decoder.hpp"
#include "inspose/error.hpp"
#include "inspose/trainer.hpp"
#include "inspose/visualize.hpp"

namespace {

using namespace inspose;

// Turns leftover "--key value" / "--key=value" arguments into overrides.
ConfigMap parse_overrides(const std::vector<std::string>& extras) {
  ConfigMap out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (a.rfind("--", 0) != 0) throw ConfigError("unexpected argument " + a);
    const std::string body = a.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      out[body.substr(0, eq)] = body.substr(eq + 1);
    } else {
      if (i + 1 >= extras.size()) throw ConfigError("missing value for " + a);
      out[body] = extras[++i];
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"InsPose multi-person pose estimation toolkit"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train a model; any config key may be given as --key value");
  std::string config_path, resume;
  std::uint64_t seed = 0;
  bool verbose = false;
  int max_epochs = 0;
  train->add_option("--config", config_path, "configuration file")->required();
  auto* seed_opt = train->add_option("--seed", seed, "random seed");
  train->add_option("--resume", resume, "checkpoint to resume from");
  train->add_option("--stop-after-epochs", max_epochs, "stop after this many epochs in this run");
  train->add_flag("--verbose", verbose, "print per-iteration losses");
  train->allow_extras();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint against COCO keypoint annotations");
  std::string ckpt, ann, images_dir, out_dir;
  double kappa = 0.0;
  eval->add_option("--ckpt", ckpt, "checkpoint")->required();
  eval->add_option("--ann", ann, "COCO keypoint annotation file")->required();
  eval->add_option("--images-dir", images_dir, "image directory (default <ann dir>/images)");
  eval->add_option("--out-dir", out_dir, "write eval.json and eval.txt here");
  eval->add_option("--kappa", kappa, "uniform OKS constant override");

  auto* infer = app.add_subcommand("infer", "write COCO keypoint results for a set of images");
  std::string pattern, out;
  infer->add_option("--ckpt", ckpt, "checkpoint")->required();
  infer->add_option("--images", pattern, "image glob")->required();
  infer->add_option("--out", out, "results JSON")->required();

  auto* vis = app.add_subcommand("visualize", "draw detected poses on an image");
  std::string image_path;
  double min_score = 0.3;
  vis->add_option("--ckpt", ckpt, "checkpoint")->required();
  vis->add_option("--image", image_path, "input PNG")->required();
  vis->add_option("--out", out, "output PNG")->required();
  vis->add_option("--min-score", min_score, "draw detections at or above this score");

  auto* gen = app.add_subcommand("generate", "export a synthetic dataset (PNG images + COCO json)");
  SceneConfig scene;
  int count = 20;
  gen->add_option("--out-dir", out_dir, "output directory")->required();
  gen->add_option("--count", count, "number of images");
  gen->add_option("--seed", scene.seed, "scene seed");
  gen->add_option("--keypoints", scene.num_keypoints, "keypoints per person (17 or 5)");
  gen->add_option("--width", scene.width, "image width");
  gen->add_option("--height", scene.height, "image height");
  gen->add_option("--min-persons", scene.min_persons, "minimum persons per image");
  gen->add_option("--max-persons", scene.max_persons, "maximum persons per image");
  gen->add_option("--min-figure-height", scene.min_figure_height, "smallest figure height, pixels");
  gen->add_option("--max-figure-height", scene.max_figure_height, "largest figure height, pixels");
  gen->add_option("--occlusion-prob", scene.occlusion_prob, "probability of an occluder per figure");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      ConfigMap overrides = parse_overrides(train->remaining());
      if (*seed_opt) {
        overrides["seed"] = std::to_string(seed);
        overrides.try_emplace("model.init_seed", std::to_string(seed));
      }
      const TrainConfig cfg = load_train_config(config_path, overrides);
      TrainOptions opt;
      if (!resume.empty()) opt.resume = resume;
      opt.max_epochs_this_run = max_epochs;
      opt.verbose = verbose;
      const TrainResult r = run_train(cfg, opt);
      for (const auto& p : r.checkpoints) std::cout << "checkpoint " << p.string() << "\n";
      std::cout << "finished epoch " << r.state.epoch << " iteration " << r.state.iteration << "\n";
    } else if (*eval) {
      EvalOptions opt;
      opt.image_root = images_dir;
      opt.out_dir = out_dir;
      opt.kappa = kappa;
      std::cout << run_eval(ckpt, ann, opt).to_text();
    } else if (*infer) {
      const InferReport r = run_infer(ckpt, pattern, out);
      std::cout << "images " << r.images << " failures " << r.failures << " detections "
                << r.detections << "\n";
      if (r.images == 0) std::cerr << "inspose infer: no files match " << pattern << "\n";
    } else if (*vis) {
      default_device();
      const Checkpoint c = load_checkpoint(ckpt);
      const Model model = model_from_checkpoint(c);
      std::vector<Detection> dets;
      for (Detection& d : run_inference(model, read_png(image_path), checkpoint_inference_config(c)))
        if (d.score >= min_score) dets.push_back(std::move(d));
      const Skeleton skeleton = Skeleton::for_keypoints(model.config().num_keypoints);
      render_visualization(read_png(image_path), dets, skeleton, out);
      std::cout << "drew " << dets.size() << " detections\n";
    } else if (*gen) {
      scene.validate();
      const Dataset ds = export_synthetic(scene, count, out_dir);
      std::cout << "wrote " << ds.size() << " images to " << out_dir << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "inspose: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
