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
#include "inspose/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "inspose/error.hpp"

namespace inspose {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected an integer, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const auto r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected an unsigned integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  // Accept simple fractions such as "1/8".
  const auto slash = v.find('/');
  if (slash != std::string::npos)
    return to_double(key, v.substr(0, slash)) / to_double(key, v.substr(slash + 1));
  try {
    std::size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("config key " + key + ": expected a boolean, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_int(key, item));
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;

std::map<std::string, Setter> model_setters(ModelConfig& m) {
  return {
      {"model.num_keypoints", [&](auto& k, auto& v) { m.num_keypoints = to_int(k, v); }},
      {"model.kp_hidden", [&](auto& k, auto& v) { m.kp_hidden = to_int(k, v); }},
      {"model.kp_depth", [&](auto& k, auto& v) { m.kp_depth = to_int(k, v); }},
      {"model.kp_channels", [&](auto& k, auto& v) { m.kp_channels = to_int(k, v); }},
      {"model.output_stride", [&](auto& k, auto& v) { m.output_stride = to_int(k, v); }},
      {"model.res_ratio",
       [&](auto& k, auto& v) {
         const double r = to_double(k, v);
         if (!(r > 0.0)) throw ConfigError("model.res_ratio must be positive");
         m.output_stride = static_cast<int>(std::lround(1.0 / r));
       }},
      {"model.rel_coord_scale", [&](auto& k, auto& v) { m.rel_coord_scale = to_double(k, v); }},
      {"model.stem_width", [&](auto& k, auto& v) { m.stem_width = to_int(k, v); }},
      {"model.stage_widths", [&](auto& k, auto& v) { m.stage_widths = to_int_list(k, v); }},
      {"model.stage_blocks", [&](auto& k, auto& v) { m.stage_blocks = to_int(k, v); }},
      {"model.fpn_channels", [&](auto& k, auto& v) { m.fpn_channels = to_int(k, v); }},
      {"model.tower_channels", [&](auto& k, auto& v) { m.tower_channels = to_int(k, v); }},
      {"model.tower_depth", [&](auto& k, auto& v) { m.tower_depth = to_int(k, v); }},
      {"model.kp_branch_channels", [&](auto& k, auto& v) { m.kp_branch_channels = to_int(k, v); }},
      {"model.kp_branch_depth", [&](auto& k, auto& v) { m.kp_branch_depth = to_int(k, v); }},
      {"model.offset_channels", [&](auto& k, auto& v) { m.offset_channels = to_int(k, v); }},
      {"model.heatmap_channels", [&](auto& k, auto& v) { m.heatmap_channels = to_int(k, v); }},
      {"model.gn_groups", [&](auto& k, auto& v) { m.gn_groups = to_int(k, v); }},
      {"model.disk_offset", [&](auto& k, auto& v) { m.disk_offset = to_bool(k, v); }},
      {"model.heatmap", [&](auto& k, auto& v) { m.heatmap = to_bool(k, v); }},
      {"model.controller_init_std", [&](auto& k, auto& v) { m.controller_init_std = to_double(k, v); }},
      {"model.cls_prior", [&](auto& k, auto& v) { m.cls_prior = to_double(k, v); }},
      {"model.init_seed", [&](auto& k, auto& v) { m.init_seed = to_u64(k, v); }},
  };
}

std::map<std::string, Setter> train_setters(TrainConfig& c) {
  auto s = model_setters(c.model);
  std::map<std::string, Setter> more = {
      {"seed", [&](auto& k, auto& v) { c.seed = to_u64(k, v); }},
      {"output.dir", [&](auto&, auto& v) { c.output_dir = v; }},
      {"output.checkpoint_every", [&](auto& k, auto& v) { c.checkpoint_every = to_int(k, v); }},
      {"assign.center_radius", [&](auto& k, auto& v) { c.assign.center_radius = to_double(k, v); }},
      {"assign.disk_radius", [&](auto& k, auto& v) { c.assign.disk_radius = to_double(k, v); }},
      {"assign.heatmap_sigma", [&](auto& k, auto& v) { c.assign.heatmap_sigma = to_double(k, v); }},
      {"loss.focal_alpha", [&](auto& k, auto& v) { c.loss.focal_alpha = to_double(k, v); }},
      {"loss.focal_gamma", [&](auto& k, auto& v) { c.loss.focal_gamma = to_double(k, v); }},
      {"loss.heatmap_alpha", [&](auto& k, auto& v) { c.loss.heatmap_alpha = to_double(k, v); }},
      {"loss.heatmap_beta", [&](auto& k, auto& v) { c.loss.heatmap_beta = to_double(k, v); }},
      {"loss.w_cls", [&](auto& k, auto& v) { c.loss.w_cls = to_double(k, v); }},
      {"loss.w_kpf", [&](auto& k, auto& v) { c.loss.w_kpf = to_double(k, v); }},
      {"loss.w_do", [&](auto& k, auto& v) { c.loss.w_do = to_double(k, v); }},
      {"loss.w_hm", [&](auto& k, auto& v) { c.loss.w_hm = to_double(k, v); }},
      {"optim.lr", [&](auto& k, auto& v) { c.optim.lr = to_double(k, v); }},
      {"optim.momentum", [&](auto& k, auto& v) { c.optim.momentum = to_double(k, v); }},
      {"optim.weight_decay", [&](auto& k, auto& v) { c.optim.weight_decay = to_double(k, v); }},
      {"optim.batch_size", [&](auto& k, auto& v) { c.optim.batch_size = to_int(k, v); }},
      {"optim.epochs", [&](auto& k, auto& v) { c.optim.epochs = to_int(k, v); }},
      {"optim.decay_epochs", [&](auto& k, auto& v) { c.optim.decay_epochs = to_int_list(k, v); }},
      {"optim.warmup_iters", [&](auto& k, auto& v) { c.optim.warmup_iters = to_int(k, v); }},
      {"optim.grad_clip", [&](auto& k, auto& v) { c.optim.grad_clip = to_double(k, v); }},
      {"optim.max_iters", [&](auto& k, auto& v) { c.optim.max_iters = to_int(k, v); }},
      {"data.source", [&](auto&, auto& v) { c.data.source = v; }},
      {"data.num_images", [&](auto& k, auto& v) { c.data.num_images = to_int(k, v); }},
      {"data.ann", [&](auto&, auto& v) { c.data.ann = v; }},
      {"data.image_root", [&](auto&, auto& v) { c.data.image_root = v; }},
      {"augment.enabled", [&](auto& k, auto& v) { c.data.augment = to_bool(k, v); }},
      {"augment.flip_prob", [&](auto& k, auto& v) { c.data.augment_cfg.flip_prob = to_double(k, v); }},
      {"augment.short_side_min", [&](auto& k, auto& v) { c.data.augment_cfg.short_side_min = to_int(k, v); }},
      {"augment.short_side_max", [&](auto& k, auto& v) { c.data.augment_cfg.short_side_max = to_int(k, v); }},
      {"augment.max_long_side", [&](auto& k, auto& v) { c.data.augment_cfg.max_long_side = to_int(k, v); }},
      {"scene.width", [&](auto& k, auto& v) { c.scene.width = to_int(k, v); }},
      {"scene.height", [&](auto& k, auto& v) { c.scene.height = to_int(k, v); }},
      {"scene.min_persons", [&](auto& k, auto& v) { c.scene.min_persons = to_int(k, v); }},
      {"scene.max_persons", [&](auto& k, auto& v) { c.scene.max_persons = to_int(k, v); }},
      {"scene.min_figure_height", [&](auto& k, auto& v) { c.scene.min_figure_height = to_double(k, v); }},
      {"scene.max_figure_height", [&](auto& k, auto& v) { c.scene.max_figure_height = to_double(k, v); }},
      {"scene.occlusion_prob", [&](auto& k, auto& v) { c.scene.occlusion_prob = to_double(k, v); }},
      {"scene.seed", [&](auto& k, auto& v) { c.scene.seed = to_u64(k, v); }},
      {"infer.score_threshold", [&](auto& k, auto& v) { c.infer.score_threshold = to_double(k, v); }},
      {"infer.pre_nms_top_n", [&](auto& k, auto& v) { c.infer.pre_nms_top_n = to_int(k, v); }},
      {"infer.nms_iou", [&](auto& k, auto& v) { c.infer.nms_iou = to_double(k, v); }},
      {"infer.max_detections", [&](auto& k, auto& v) { c.infer.max_detections = to_int(k, v); }},
      {"eval.kappa", [&](auto& k, auto& v) { c.eval_kappa = to_double(k, v); }},
  };
  s.insert(more.begin(), more.end());
  return s;
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_model_config(ModelConfig& cfg, const ConfigMap& map) {
  auto setters = model_setters(cfg);
  for (const auto& [k, v] : map) {
    auto it = setters.find(k);
    if (it == setters.end()) throw ConfigError("unknown model config key " + k);
    it->second(k, v);
  }
}

void apply_config(TrainConfig& cfg, const ConfigMap& map) {
  auto setters = train_setters(cfg);
  for (const auto& [k, v] : map) {
    auto it = setters.find(k);
    if (it == setters.end()) throw ConfigError("unknown config key " + k);
    it->second(k, v);
  }
}

TrainConfig load_train_config(const std::filesystem::path& path, const ConfigMap& overrides) {
  TrainConfig cfg;
  apply_config(cfg, read_config_file(path));
  apply_config(cfg, overrides);
  cfg.validate();
  return cfg;
}

ConfigMap model_config_map(const ModelConfig& m) {
  return {
      {"model.num_keypoints", std::to_string(m.num_keypoints)},
      {"model.kp_hidden", std::to_string(m.kp_hidden)},
      {"model.kp_depth", std::to_string(m.kp_depth)},
      {"model.kp_channels", std::to_string(m.kp_channels)},
      {"model.output_stride", std::to_string(m.output_stride)},
      {"model.rel_coord_scale", fmt(m.rel_coord_scale)},
      {"model.stem_width", std::to_string(m.stem_width)},
      {"model.stage_widths", join(m.stage_widths)},
      {"model.stage_blocks", std::to_string(m.stage_blocks)},
      {"model.fpn_channels", std::to_string(m.fpn_channels)},
      {"model.tower_channels", std::to_string(m.tower_channels)},
      {"model.tower_depth", std::to_string(m.tower_depth)},
      {"model.kp_branch_channels", std::to_string(m.kp_branch_channels)},
      {"model.kp_branch_depth", std::to_string(m.kp_branch_depth)},
      {"model.offset_channels", std::to_string(m.offset_channels)},
      {"model.heatmap_channels", std::to_string(m.heatmap_channels)},
      {"model.gn_groups", std::to_string(m.gn_groups)},
      {"model.disk_offset", m.disk_offset ? "true" : "false"},
      {"model.heatmap", m.heatmap ? "true" : "false"},
      {"model.controller_init_std", fmt(m.controller_init_std)},
      {"model.cls_prior", fmt(m.cls_prior)},
      {"model.init_seed", std::to_string(m.init_seed)},
  };
}

ConfigMap to_config_map(const TrainConfig& c) {
  ConfigMap m = model_config_map(c.model);
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  ConfigMap more = {
      {"seed", std::to_string(c.seed)},
      {"output.dir", c.output_dir},
      {"output.checkpoint_every", std::to_string(c.checkpoint_every)},
      {"assign.center_radius", fmt(c.assign.center_radius)},
      {"assign.disk_radius", fmt(c.assign.disk_radius)},
      {"assign.heatmap_sigma", fmt(c.assign.heatmap_sigma)},
      {"loss.focal_alpha", fmt(c.loss.focal_alpha)},
      {"loss.focal_gamma", fmt(c.loss.focal_gamma)},
      {"loss.heatmap_alpha", fmt(c.loss.heatmap_alpha)},
      {"loss.heatmap_beta", fmt(c.loss.heatmap_beta)},
      {"loss.w_cls", fmt(c.loss.w_cls)},
      {"loss.w_kpf", fmt(c.loss.w_kpf)},
      {"loss.w_do", fmt(c.loss.w_do)},
      {"loss.w_hm", fmt(c.loss.w_hm)},
      {"optim.lr", fmt(c.optim.lr)},
      {"optim.momentum", fmt(c.optim.momentum)},
      {"optim.weight_decay", fmt(c.optim.weight_decay)},
      {"optim.batch_size", std::to_string(c.optim.batch_size)},
      {"optim.epochs", std::to_string(c.optim.epochs)},
      {"optim.decay_epochs", join(c.optim.decay_epochs)},
      {"optim.warmup_iters", std::to_string(c.optim.warmup_iters)},
      {"optim.grad_clip", fmt(c.optim.grad_clip)},
      {"optim.max_iters", std::to_string(c.optim.max_iters)},
      {"data.source", c.data.source},
      {"data.num_images", std::to_string(c.data.num_images)},
      {"data.ann", c.data.ann},
      {"data.image_root", c.data.image_root},
      {"augment.enabled", b(c.data.augment)},
      {"augment.flip_prob", fmt(c.data.augment_cfg.flip_prob)},
      {"augment.short_side_min", std::to_string(c.data.augment_cfg.short_side_min)},
      {"augment.short_side_max", std::to_string(c.data.augment_cfg.short_side_max)},
      {"augment.max_long_side", std::to_string(c.data.augment_cfg.max_long_side)},
      {"scene.width", std::to_string(c.scene.width)},
      {"scene.height", std::to_string(c.scene.height)},
      {"scene.min_persons", std::to_string(c.scene.min_persons)},
      {"scene.max_persons", std::to_string(c.scene.max_persons)},
      {"scene.min_figure_height", fmt(c.scene.min_figure_height)},
      {"scene.max_figure_height", fmt(c.scene.max_figure_height)},
      {"scene.occlusion_prob", fmt(c.scene.occlusion_prob)},
      {"scene.seed", std::to_string(c.scene.seed)},
      {"infer.score_threshold", fmt(c.infer.score_threshold)},
      {"infer.pre_nms_top_n", std::to_string(c.infer.pre_nms_top_n)},
      {"infer.nms_iou", fmt(c.infer.nms_iou)},
      {"infer.max_detections", std::to_string(c.infer.max_detections)},
      {"eval.kappa", fmt(c.eval_kappa)},
  };
  m.insert(more.begin(), more.end());
  return m;
}

std::string to_config_text(const TrainConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : to_config_map(cfg)) out += k + " = " + v + "\n";
  return out;
}

void TrainConfig::validate() const {
  model.validate();
  infer.validate();
  if (!(optim.lr > 0.0)) throw ConfigError("optim.lr must be positive");
  if (optim.batch_size < 1) throw ConfigError("optim.batch_size must be >= 1");
  if (optim.epochs < 1) throw ConfigError("optim.epochs must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("output.checkpoint_every must be >= 1");
  for (std::size_t i = 0; i < optim.decay_epochs.size(); ++i) {
    if (i > 0 && optim.decay_epochs[i] <= optim.decay_epochs[i - 1])
      throw ConfigError("optim.decay_epochs must be strictly increasing");
    if (optim.decay_epochs[i] >= optim.epochs)
      throw ConfigError("optim.decay_epochs must be below optim.epochs");
  }
  if (!(assign.center_radius > 0.0) || !(assign.disk_radius > 0.0) || !(assign.heatmap_sigma > 0.0))
    throw ConfigError("assignment radii must be positive");
  if (data.source != "synthetic" && data.source != "coco")
    throw ConfigError("data.source must be synthetic or coco");
  if (data.source == "synthetic") {
    SceneConfig sc = scene;
    sc.num_keypoints = model.num_keypoints;
    sc.validate();
    if (data.num_images < 1) throw ConfigError("data.num_images must be >= 1");
  } else if (data.ann.empty()) {
    throw ConfigError("data.ann is required for coco data");
  }
}

TrainConfig TrainConfig::reference_schedule() {
  TrainConfig c;
  c.optim.batch_size = 16;
  c.optim.epochs = 36;
  c.optim.decay_epochs = {27, 33};
  return c;
}

std::string default_device() {
  const char* env = std::getenv("INSPOSE_DEVICE");
  const std::string dev = env && *env ? env : "cpu";
  if (dev != "cpu") throw ConfigError("INSPOSE_DEVICE=" + dev + " is not available; only cpu is supported");
  return dev;
}

}  // namespace inspose
