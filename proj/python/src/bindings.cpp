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
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "inspose/checkpoint.hpp"
#include "inspose/config.hpp"
#include "inspose/datagen.hpp"
#include "inspose/decoder.hpp"
#include "inspose/error.hpp"
#include "inspose/evalkit.hpp"
#include "inspose/geometry.hpp"
#include "inspose/kpnet.hpp"
#include "inspose/trainer.hpp"

namespace py = pybind11;
using namespace inspose;

namespace {

using FloatArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

// (K, 3) rows of x, y, v.
Pose pose_from_array(const FloatArray& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw py::value_error("pose must have shape (K, 3)");
  Pose p;
  auto r = a.unchecked<2>();
  for (py::ssize_t j = 0; j < a.shape(0); ++j)
    p.keypoints.push_back({r(j, 0), r(j, 1), static_cast<int>(r(j, 2))});
  return p;
}

py::array_t<double> pose_to_array(const Pose& p) {
  py::array_t<double> out({static_cast<py::ssize_t>(p.size()), py::ssize_t{3}});
  auto w = out.mutable_unchecked<2>();
  for (int j = 0; j < p.size(); ++j) {
    w(j, 0) = p.keypoints[j].x;
    w(j, 1) = p.keypoints[j].y;
    w(j, 2) = p.keypoints[j].v;
  }
  return out;
}

Image image_from_array(const ByteArray& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("image must have shape (H, W, 3)");
  Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(img.pixels.data(), a.data(), img.pixels.size());
  return img;
}

py::array_t<std::uint8_t> image_to_array(const Image& img) {
  py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(img.height), static_cast<py::ssize_t>(img.width),
                                 py::ssize_t{3}});
  std::memcpy(out.mutable_data(), img.pixels.data(), img.pixels.size());
  return out;
}

Tensor tensor_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3) throw py::value_error("expected a (C, H, W) array");
  Tensor t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
  std::memcpy(t.data.data(), a.data(), t.size() * sizeof(float));
  return t;
}

py::dict detection_to_dict(const Detection& d) {
  py::dict out;
  out["score"] = d.score;
  out["keypoints"] = pose_to_array(d.pose);
  out["joint_scores"] = d.joint_scores;
  out["box"] = std::vector<double>{d.rect.x_min, d.rect.y_min, d.rect.x_max, d.rect.y_max};
  return out;
}

SceneConfig scene_config(int width, int height, int num_keypoints, int min_persons, int max_persons,
                         std::uint64_t seed) {
  SceneConfig c;
  c.width = width;
  c.height = height;
  c.num_keypoints = num_keypoints;
  c.min_persons = min_persons;
  c.max_persons = max_persons;
  // Figure heights follow the smaller image side.
  c.min_figure_height = std::min(c.min_figure_height, 0.3 * std::min(width, height));
  c.max_figure_height = std::max(c.min_figure_height, std::min(c.max_figure_height, 0.75 * std::min(width, height)));
  c.seed = seed;
  return c;
}

class Predictor {
 public:
  explicit Predictor(const std::filesystem::path& ckpt_path)
      : ckpt_(load_checkpoint(ckpt_path)), model_(model_from_checkpoint(ckpt_)),
        infer_(checkpoint_inference_config(ckpt_)) {
    model_.set_training(false);
  }

  py::list predict(const ByteArray& image) const {
    const Image img = image_from_array(image);
    std::vector<Detection> dets;
    {
      py::gil_scoped_release release;
      dets = run_inference(model_, img, infer_);
    }
    py::list out;
    for (const Detection& d : dets) out.append(detection_to_dict(d));
    return out;
  }

  int num_keypoints() const { return model_.config().num_keypoints; }
  ConfigMap config() const { return ckpt_.config; }
  py::dict state() const {
    py::dict s;
    s["epoch"] = ckpt_.state.epoch;
    s["iteration"] = ckpt_.state.iteration;
    return s;
  }

 private:
  Checkpoint ckpt_;
  Model model_;
  InferenceConfig infer_;
};

}  // namespace

PYBIND11_MODULE(_inspose, m) {
  m.doc() = "InsPose multi-person pose estimation core";

  // Translators run newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<GeometryError>(m, "GeometryError", PyExc_ValueError);

  m.def(
      "kpnet_param_count",
      [](int num_keypoints, int hidden, int depth, int channels) {
        return KpnetSpec{num_keypoints, hidden, depth, channels}.param_count();
      },
      py::arg("num_keypoints") = 17, py::arg("hidden") = 8, py::arg("depth") = 3, py::arg("channels") = 8);

  m.def(
      "oks",
      [](const FloatArray& pred, const FloatArray& gt, double area, const std::vector<double>& kappas) {
        return oks(pose_from_array(pred), pose_from_array(gt), area, kappas);
      },
      py::arg("pred"), py::arg("gt"), py::arg("area"), py::arg("kappas"));

  m.def("coco_kappas", &coco_kappas);

  m.def(
      "keypoint_nms",
      [](const FloatArray& boxes, const std::vector<double>& scores, double iou) {
        if (boxes.ndim() != 2 || boxes.shape(1) != 4 || static_cast<std::size_t>(boxes.shape(0)) != scores.size())
          throw py::value_error("boxes must have shape (N, 4) matching scores");
        auto b = boxes.unchecked<2>();
        std::vector<Detection> dets(scores.size());
        for (std::size_t i = 0; i < dets.size(); ++i) {
          dets[i].score = scores[i];
          dets[i].rect = {b(i, 0), b(i, 1), b(i, 2), b(i, 3)};
          dets[i].joint_scores = {static_cast<double>(i)};  // carries the input index
        }
        std::vector<int> kept;
        for (const Detection& d : keypoint_nms(std::move(dets), iou))
          kept.push_back(static_cast<int>(d.joint_scores[0]));
        return kept;
      },
      py::arg("boxes"), py::arg("scores"), py::arg("iou") = 0.6,
      "Indices of the boxes kept by greedy NMS, highest score first.");

  m.def(
      "decode_keypoints",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& logits,
         std::optional<py::array_t<float, py::array::c_style | py::array::forcecast>> offsets, int stride) {
        const Tensor l = tensor_from_array(logits);
        std::optional<Tensor> o;
        if (offsets) o = tensor_from_array(*offsets);
        const DecodedPose d = decode_keypoints(l, o ? &*o : nullptr, stride);
        return py::make_tuple(pose_to_array(d.pose), d.joint_scores);
      },
      py::arg("logits"), py::arg("offsets") = py::none(), py::arg("stride") = 8);

  m.def(
      "generate_scene",
      [](int width, int height, int num_keypoints, int min_persons, int max_persons, std::uint64_t seed,
         int index) {
        const Scene s = generate_scene(scene_config(width, height, num_keypoints, min_persons, max_persons, seed),
                                       index);
        py::list poses;
        for (const InstanceAnnotation& inst : s.instances) poses.append(pose_to_array(inst.pose));
        return py::make_tuple(image_to_array(s.image), poses);
      },
      py::arg("width") = 256, py::arg("height") = 256, py::arg("num_keypoints") = 17, py::arg("min_persons") = 1,
      py::arg("max_persons") = 4, py::arg("seed") = 0, py::arg("index") = 0,
      "Synthetic image (H, W, 3) and a list of (K, 3) poses.");

  m.def(
      "export_synthetic",
      [](const std::filesystem::path& out_dir, int count, int width, int height, int num_keypoints,
         int min_persons, int max_persons, std::uint64_t seed) {
        const SceneConfig c = scene_config(width, height, num_keypoints, min_persons, max_persons, seed);
        {
          py::gil_scoped_release release;
          export_synthetic(c, count, out_dir);
        }
        return (out_dir / "annotations.json").string();
      },
      py::arg("out_dir"), py::arg("count"), py::arg("width") = 256, py::arg("height") = 256,
      py::arg("num_keypoints") = 17, py::arg("min_persons") = 1, py::arg("max_persons") = 4, py::arg("seed") = 0,
      "Writes images/*.png and annotations.json; returns the annotation path.");

  m.def(
      "load_config",
      [](const std::filesystem::path& path, const ConfigMap& overrides) {
        return to_config_map(load_train_config(path, overrides));
      },
      py::arg("path"), py::arg("overrides") = ConfigMap{});

  m.def(
      "train",
      [](const std::filesystem::path& config, const ConfigMap& overrides, std::optional<std::filesystem::path> resume,
         int stop_after_epochs) {
        const TrainConfig cfg = load_train_config(config, overrides);
        TrainOptions opt;
        opt.resume = resume;
        opt.max_epochs_this_run = stop_after_epochs;
        TrainResult r = [&] {
          py::gil_scoped_release release;
          return run_train(cfg, opt);
        }();
        py::dict out;
        out["epoch"] = r.state.epoch;
        out["iteration"] = r.state.iteration;
        std::vector<std::string> ckpts;
        for (const auto& p : r.checkpoints) ckpts.push_back(p.string());
        out["checkpoints"] = ckpts;
        out["loss"] = r.last_loss.total;
        return out;
      },
      py::arg("config"), py::arg("overrides") = ConfigMap{}, py::arg("resume") = py::none(),
      py::arg("stop_after_epochs") = 0);

  m.def(
      "evaluate",
      [](const std::filesystem::path& ckpt, const std::filesystem::path& ann,
         std::optional<std::filesystem::path> images_dir) {
        EvalOptions opt;
        if (images_dir) opt.image_root = *images_dir;
        const EvalResult r = [&] {
          py::gil_scoped_release release;
          return run_eval(ckpt, ann, opt);
        }();
        return py::module_::import("json").attr("loads")(r.to_json().dump());
      },
      py::arg("ckpt"), py::arg("ann"), py::arg("images_dir") = py::none());

  m.def("default_device", &default_device);

  py::class_<Predictor>(m, "Predictor")
      .def(py::init<const std::filesystem::path&>(), py::arg("ckpt"))
      .def("predict", &Predictor::predict, py::arg("image"),
           "Detections for an (H, W, 3) uint8 image, highest score first.")
      .def_property_readonly("num_keypoints", &Predictor::num_keypoints)
      .def_property_readonly("config", &Predictor::config)
      .def_property_readonly("state", &Predictor::state);
}
