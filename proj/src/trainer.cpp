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
#include "inspose/trainer.hpp"

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "inspose/decoder.hpp"
#include "inspose/error.hpp"
#include "inspose/image.hpp"
#include "inspose/kpnet.hpp"

namespace inspose {

namespace {

using nlohmann::json;

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint32_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), salt};
  return std::mt19937_64(seq);
}

void add_scaled(std::span<float> dst, std::span<const float> src, double scale) {
  const float s = static_cast<float>(scale);
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
}

bool finite(const LossReport& r) {
  return std::isfinite(r.l_cls) && std::isfinite(r.l_kpf) && std::isfinite(r.l_do) &&
         std::isfinite(r.l_hm) && std::isfinite(r.total);
}

json instances_json(const std::vector<InstanceAnnotation>& anns) {
  json out = json::array();
  for (const InstanceAnnotation& a : anns) {
    json kps = json::array();
    for (const Keypoint& k : a.pose.keypoints) kps.push_back({k.x, k.y, static_cast<int>(k.v)});
    out.push_back({{"keypoints", kps}, {"area", a.area}});
  }
  return out;
}

std::vector<int> flip_table(int num_keypoints, bool& available) {
  try {
    available = true;
    return Skeleton::for_keypoints(num_keypoints).flip_index;
  } catch (const ConfigError&) {
    available = false;
    std::vector<int> id(num_keypoints);
    std::iota(id.begin(), id.end(), 0);
    return id;
  }
}

Checkpoint make_checkpoint(const TrainConfig& cfg, const Model& model, const Sgd& sgd,
                           const TrainState& state) {
  Checkpoint ckpt;
  ckpt.config = to_config_map(cfg);
  ckpt.state = state;
  ckpt.arrays = model_arrays(model);
  int i = 0;
  for (const nn::Parameter& p : model.params())
    ckpt.arrays.push_back({"momentum/" + p.name, p.shape, sgd.velocity()[i++]});
  return ckpt;
}

std::string numbered(const char* fmt, long long v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

TrainingSet make_training_set(Dataset records, std::vector<Image> images) {
  TrainingSet set;
  set.records = std::move(records);
  set.images = std::move(images);
  for (std::size_t i = 0; i < set.records.size(); ++i)
    set.instances.push_back(set.records.training_instances(i));
  return set;
}

TrainingSet load_training_set(const TrainConfig& cfg) {
  if (cfg.data.source == "synthetic") {
    SceneConfig scene = cfg.scene;
    scene.num_keypoints = cfg.model.num_keypoints;
    Dataset ds = synthetic_dataset(scene, cfg.data.num_images);
    std::vector<Image> images;
    for (int i = 0; i < cfg.data.num_images; ++i) images.push_back(generate_scene(scene, i).image);
    return make_training_set(std::move(ds), std::move(images));
  }
  std::filesystem::path root = cfg.data.image_root;
  if (root.empty()) root = std::filesystem::path(cfg.data.ann).parent_path() / "images";
  Dataset ds = load_coco(cfg.data.ann, root);
  if (ds.num_keypoints != cfg.model.num_keypoints)
    throw ConfigError("annotation file has K = " + std::to_string(ds.num_keypoints) +
                      ", model expects " + std::to_string(cfg.model.num_keypoints));
  std::vector<Image> images;
  for (std::size_t i = 0; i < ds.size(); ++i) images.push_back(ds.load_image(i));
  return make_training_set(std::move(ds), std::move(images));
}

ImageTargets build_targets(const ModelConfig& model, const AssignmentConfig& assign,
                           const std::vector<InstanceAnnotation>& instances, int padded_h,
                           int padded_w) {
  ImageTargets t;
  std::vector<MapShape> shapes;
  for (int s : kLevelStrides) shapes.push_back({padded_h / s, padded_w / s});
  t.levels = assign_instances(default_levels(), shapes, instances, assign);

  const int os = model.output_stride;
  const int oh = padded_h / os;
  const int ow = padded_w / os;
  for (const InstanceAnnotation& inst : instances)
    t.onehots.push_back(keypoint_onehot_target(inst, os, oh, ow));
  for (const LevelAssignment& lv : t.levels)
    for (std::size_t i = 0; i < lv.cls_label.size(); ++i)
      if (lv.cls_label[i] && t.onehots[lv.instance_index[i]].num_valid() > 0) ++t.kpf_locations;

  if (model.disk_offset) {
    const double radius = assign.disk_radius * 8.0 / os;
    t.offsets = disk_offset_target(instances, model.num_keypoints, os, radius, oh, ow);
  }
  if (model.heatmap)
    t.heatmap = heatmap_target(instances, model.num_keypoints, 8, assign.heatmap_sigma,
                               padded_h / 8, padded_w / 8);
  return t;
}

LossNormalizers batch_normalizers(const std::vector<ImageTargets>& targets) {
  double pos = 0, kpf = 0, off = 0, peaks = 0;
  for (const ImageTargets& t : targets) {
    for (const LevelAssignment& lv : t.levels) pos += lv.num_positive();
    kpf += t.kpf_locations;
    for (float m : t.offsets.mask.data) off += m > 0.0f ? 2.0 : 0.0;
    peaks += static_cast<double>(count_heatmap_peaks(t.heatmap));
  }
  LossNormalizers n;
  n.cls = std::max(pos, 1.0);
  n.kpf = std::max(kpf, 1.0);
  n.offset = off;
  n.heatmap = std::max(peaks, 1.0);
  return n;
}

LossReport image_loss_and_backward(const Model& model, const Tensor& input,
                                   const ImageTargets& targets, const LossNormalizers& norms,
                                   const LossConfig& loss, nn::GradientBuffer& grads) {
  const ModelConfig& mc = model.config();
  nn::Graph g(model.params(), &grads);
  const ForwardVars fv = model.forward(g, model.image_input(g, input), mc.heatmap);

  double l_cls = 0.0;
  for (std::size_t l = 0; l < fv.heads.cls_logits.size(); ++l) {
    const nn::Var v = fv.heads.cls_logits[l];
    const Tensor& logits = g.value(v);
    const LevelAssignment& lv = targets.levels[l];
    if (logits.h != lv.h || logits.w != lv.w) throw ConfigError("level shape differs from targets");
    std::vector<float> scratch(logits.size(), 0.0f);
    l_cls += focal_cls_loss<float>(logits.data, lv.cls_label, loss.focal_alpha, loss.focal_gamma,
                                   norms.cls, scratch);
    add_scaled(g.grad(v).data, scratch, loss.w_cls);
  }

  // KP-Net loss over every positive location of every level.
  const KpnetSpec spec = mc.kpnet_spec();
  const std::size_t cf = static_cast<std::size_t>(spec.param_count());
  struct Loc {
    int level;
    std::size_t cell;
  };
  std::vector<Loc> locs;
  std::vector<std::vector<float>> params, pgrads;
  std::vector<KpfSample<float>> samples;
  for (std::size_t l = 0; l < targets.levels.size(); ++l) {
    const LevelAssignment& lv = targets.levels[l];
    const Tensor& ctrl = g.value(fv.heads.controllers[l]);
    const std::size_t hw = ctrl.plane_size();
    for (std::size_t i = 0; i < lv.cls_label.size(); ++i) {
      if (!lv.cls_label[i]) continue;
      const OneHotTarget& tgt = targets.onehots[lv.instance_index[i]];
      if (tgt.num_valid() == 0) continue;
      std::vector<float> p(cf);
      for (std::size_t c = 0; c < cf; ++c) p[c] = ctrl.data[c * hw + i];
      params.push_back(std::move(p));
      locs.push_back({static_cast<int>(l), i});
    }
  }
  pgrads.assign(params.size(), std::vector<float>(cf, 0.0f));
  for (std::size_t k = 0; k < locs.size(); ++k) {
    const LevelAssignment& lv = targets.levels[locs[k].level];
    const int x = static_cast<int>(locs[k].cell % lv.w);
    const int y = static_cast<int>(locs[k].cell / lv.w);
    const auto [ix, iy] = map_location_to_image(x, y, lv.stride);
    KpfSample<float> s;
    s.params = params[k];
    s.ctrl_x = ix;
    s.ctrl_y = iy;
    s.target = &targets.onehots[lv.instance_index[locs[k].cell]];
    s.grad_params = pgrads[k];
    samples.push_back(s);
  }
  const Tensor& features = g.value(fv.features);
  Tensor gfeat(features.c, features.h, features.w);
  const double l_kpf = kpf_loss<float>(samples, features, spec,
                                       KpfOptions{mc.output_stride, mc.rel_coord_scale},
                                       norms.kpf, &gfeat);
  if (!samples.empty()) {
    add_scaled(g.grad(fv.features).data, gfeat.data, loss.w_kpf);
    for (std::size_t k = 0; k < locs.size(); ++k) {
      Tensor& gc = g.grad(fv.heads.controllers[locs[k].level]);
      const std::size_t hw = gc.plane_size();
      const float w = static_cast<float>(loss.w_kpf);
      for (std::size_t c = 0; c < cf; ++c) gc.data[c * hw + locs[k].cell] += w * pgrads[k][c];
    }
  }

  double l_do = 0.0;
  if (fv.offsets >= 0) {
    const Tensor& pred = g.value(fv.offsets);
    Tensor scratch(pred.c, pred.h, pred.w);
    l_do = disk_offset_loss<float>(pred, targets.offsets.field, targets.offsets.mask, norms.offset,
                                   &scratch);
    add_scaled(g.grad(fv.offsets).data, scratch.data, loss.w_do);
  }

  double l_hm = 0.0;
  if (fv.heatmap >= 0) {
    const Tensor& logits = g.value(fv.heatmap);
    Tensor scratch(logits.c, logits.h, logits.w);
    l_hm = heatmap_focal_loss<float>(logits, targets.heatmap, loss.heatmap_alpha,
                                     loss.heatmap_beta, norms.heatmap, &scratch);
    add_scaled(g.grad(fv.heatmap).data, scratch.data, loss.w_hm);
  }

  g.backward();
  LossReport r = total_loss(l_cls, l_kpf, l_do, l_hm, mc.disk_offset, mc.heatmap);
  r.total = loss.w_cls * r.l_cls + loss.w_kpf * r.l_kpf + loss.w_do * r.l_do + loss.w_hm * r.l_hm;
  return r;
}

Sgd::Sgd(const nn::ParameterStore& params, double momentum, double weight_decay)
    : momentum_(momentum), weight_decay_(weight_decay) {
  for (const nn::Parameter& p : params) velocity_.emplace_back(p.value.size(), 0.0f);
}

void Sgd::step(nn::ParameterStore& params, const nn::GradientBuffer& grads, double lr) {
  const float mu = static_cast<float>(momentum_);
  const float wd = static_cast<float>(weight_decay_);
  const float rate = static_cast<float>(lr);
  for (int i = 0; i < params.size(); ++i) {
    std::vector<float>& w = params[i].value;
    std::vector<float>& v = velocity_[i];
    const std::vector<float>& g = grads[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      v[k] = mu * v[k] + (g[k] + wd * w[k]);
      w[k] -= rate * v[k];
    }
  }
}

double clip_gradients(nn::GradientBuffer& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (float v : g) sq += static_cast<double>(v) * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const float s = static_cast<float>(max_norm / norm);
    for (auto& g : grads)
      for (float& v : g) v *= s;
  }
  return norm;
}

double learning_rate(const OptimConfig& optim, int epoch, std::int64_t iteration) {
  double lr = optim.lr;
  for (int d : optim.decay_epochs)
    if (epoch >= d) lr *= 0.1;
  if (iteration < optim.warmup_iters) {
    const double start = 1.0 / 3.0;
    lr *= start + (1.0 - start) * static_cast<double>(iteration) / optim.warmup_iters;
  }
  return lr;
}

TrainResult run_train(const TrainConfig& cfg, const TrainOptions& opt) {
  cfg.validate();
  return run_train(cfg, load_training_set(cfg), opt);
}

TrainResult run_train(const TrainConfig& cfg, const TrainingSet& data, const TrainOptions& opt) {
  cfg.validate();
  default_device();
  if (data.size() == 0) throw ConfigError("training set is empty");

  TrainResult result{Model(cfg.model), TrainState{}, {}, LossReport{}};
  Model& model = result.model;
  model.set_training(true);
  Sgd sgd(model.params(), cfg.optim.momentum, cfg.optim.weight_decay);
  TrainState& state = result.state;

  if (opt.resume) {
    const Checkpoint ckpt = load_checkpoint(*opt.resume);
    load_model_arrays(model, ckpt);
    int i = 0;
    for (const nn::Parameter& p : model.params()) {
      const NamedArray* a = ckpt.find("momentum/" + p.name);
      if (a == nullptr || a->data.size() != p.value.size())
        throw ConfigError("checkpoint has no usable momentum buffer for " + p.name);
      sgd.velocity()[i++] = a->data;
    }
    state = ckpt.state;
  }

  const std::filesystem::path dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "config.txt");
    out << to_config_text(cfg);
  }
  std::ofstream log;
  if (opt.write_log) {
    log.open(dir / "metrics.jsonl", opt.resume ? std::ios::app : std::ios::trunc);
    if (!log) throw Error("cannot open metrics log in " + dir.string());
  }

  bool flip_ok = false;
  const std::vector<int> flip_index = flip_table(cfg.model.num_keypoints, flip_ok);
  AugmentConfig aug = cfg.data.augment_cfg;
  if (!flip_ok) aug.flip_prob = 0.0;

  const std::int64_t n = static_cast<std::int64_t>(data.size());
  const std::int64_t batch = cfg.optim.batch_size;
  const std::int64_t iters_per_epoch = (n + batch - 1) / batch;
  const auto budget_done = [&] {
    return cfg.optim.max_iters > 0 && state.iteration >= cfg.optim.max_iters;
  };

  int epochs_run = 0;
  while (state.epoch < cfg.optim.epochs && !budget_done()) {
    if (opt.max_epochs_this_run > 0 && epochs_run >= opt.max_epochs_this_run) break;
    const int epoch = state.epoch;
    std::vector<std::int64_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto shuffle_rng = seeded_rng(cfg.seed, static_cast<std::uint64_t>(epoch), 0, 0x5f1e);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    while (state.epoch_offset < iters_per_epoch && !budget_done()) {
      const std::int64_t b = state.epoch_offset;
      std::vector<std::int64_t> idx(order.begin() + b * batch,
                                    order.begin() + std::min(n, (b + 1) * batch));
      std::vector<Tensor> inputs;
      std::vector<std::vector<InstanceAnnotation>> anns;
      std::vector<ImageTargets> targets;
      for (std::int64_t i : idx) {
        Image img = data.images[i];
        std::vector<InstanceAnnotation> inst = data.instances[i];
        if (cfg.data.augment) {
          auto rng = seeded_rng(cfg.seed, static_cast<std::uint64_t>(epoch),
                                static_cast<std::uint64_t>(i), 0xa06);
          std::tie(img, inst) = augment(img, inst, aug, flip_index, rng);
        }
        inputs.push_back(preprocess_image(img));
        targets.push_back(build_targets(cfg.model, cfg.assign, inst, inputs.back().h,
                                        inputs.back().w));
        anns.push_back(std::move(inst));
      }
      const LossNormalizers norms = batch_normalizers(targets);
      nn::GradientBuffer grads = nn::zero_gradients(model.params());
      LossReport sum;
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        const LossReport r =
            image_loss_and_backward(model, inputs[k], targets[k], norms, cfg.loss, grads);
        sum.l_cls += r.l_cls;
        sum.l_kpf += r.l_kpf;
        sum.l_do += r.l_do;
        sum.l_hm += r.l_hm;
        sum.total += r.total;
      }
      if (!finite(sum)) {
        json dump = {{"epoch", epoch},
                     {"iteration", state.iteration},
                     {"loss", {{"l_cls", sum.l_cls}, {"l_kpf", sum.l_kpf}, {"l_do", sum.l_do},
                               {"l_hm", sum.l_hm}}},
                     {"images", json::array()}};
        for (std::size_t k = 0; k < idx.size(); ++k)
          dump["images"].push_back({{"index", idx[k]},
                                    {"file_name", data.records.images[idx[k]].file_name},
                                    {"input_shape", {inputs[k].c, inputs[k].h, inputs[k].w}},
                                    {"instances", instances_json(anns[k])}});
        std::ofstream(dir / "nonfinite_batch.json") << dump.dump(2) << "\n";
        throw Error("non-finite loss at iteration " + std::to_string(state.iteration) +
                    "; batch written to " + (dir / "nonfinite_batch.json").string());
      }
      if (cfg.optim.grad_clip > 0.0) clip_gradients(grads, cfg.optim.grad_clip);
      const double lr = learning_rate(cfg.optim, epoch, state.iteration);
      sgd.step(model.params(), grads, lr);
      ++state.iteration;
      ++state.epoch_offset;
      result.last_loss = sum;

      const IterationLog entry{epoch, state.iteration, lr, sum};
      if (opt.write_log) {
        json rec = {{"epoch", epoch}, {"iter", state.iteration}, {"lr", lr},
                    {"l_cls", sum.l_cls}, {"l_kpf", sum.l_kpf}};
        if (cfg.model.disk_offset) rec["l_do"] = sum.l_do;
        if (cfg.model.heatmap) rec["l_hm"] = sum.l_hm;
        rec["loss"] = sum.total;
        log << rec.dump() << "\n";
        log.flush();
      }
      if (opt.verbose)
        std::fprintf(stderr, "epoch %d iter %lld lr %.5g loss %.5f (cls %.4f kpf %.4f do %.4f hm %.4f)\n",
                     epoch, static_cast<long long>(state.iteration), lr, sum.total, sum.l_cls,
                     sum.l_kpf, sum.l_do, sum.l_hm);
      if (opt.on_iteration) opt.on_iteration(entry);
    }

    if (state.epoch_offset >= iters_per_epoch) {
      state.epoch = epoch + 1;
      state.epoch_offset = 0;
      ++epochs_run;
      const bool last = state.epoch == cfg.optim.epochs || budget_done() ||
                        (opt.max_epochs_this_run > 0 && epochs_run >= opt.max_epochs_this_run);
      if (last || state.epoch % cfg.checkpoint_every == 0) {
        const auto path = dir / numbered("epoch_%03lld.ckpt", state.epoch);
        save_checkpoint(make_checkpoint(cfg, model, sgd, state), path);
        result.checkpoints.push_back(path);
      }
    } else {
      const auto path = dir / numbered("iter_%07lld.ckpt", state.iteration);
      save_checkpoint(make_checkpoint(cfg, model, sgd, state), path);
      result.checkpoints.push_back(path);
    }
  }
  return result;
}

std::vector<double> eval_kappas(const TrainConfig& cfg, int num_keypoints) {
  if (cfg.eval_kappa > 0.0) return uniform_kappas(num_keypoints, cfg.eval_kappa);
  if (cfg.data.source == "synthetic") return uniform_kappas(num_keypoints);
  try {
    return Skeleton::for_keypoints(num_keypoints).kappas;
  } catch (const ConfigError&) {
    return uniform_kappas(num_keypoints);
  }
}

std::vector<std::vector<Detection>> predict(const Model& model, const std::vector<Image>& images,
                                            const InferenceConfig& cfg) {
  std::vector<std::vector<Detection>> out;
  for (const Image& img : images) out.push_back(run_inference(model, img, cfg));
  return out;
}

InferenceConfig checkpoint_inference_config(const Checkpoint& ckpt) {
  TrainConfig c;
  apply_config(c, ckpt.config);
  c.infer.validate();
  return c.infer;
}

EvalResult run_eval(const std::filesystem::path& ckpt_path, const std::filesystem::path& ann,
                    const EvalOptions& opt) {
  default_device();
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Model model = model_from_checkpoint(ckpt);
  TrainConfig train_cfg;
  apply_config(train_cfg, ckpt.config);

  std::filesystem::path root = opt.image_root;
  if (root.empty()) {
    root = ann.parent_path() / "images";
    if (!std::filesystem::is_directory(root)) root = ann.parent_path();
  }
  const Dataset ds = load_coco(ann, root);
  const int k = model.config().num_keypoints;
  if (ds.num_keypoints != k)
    throw ConfigError("annotations have K = " + std::to_string(ds.num_keypoints) +
                      ", checkpoint model has K = " + std::to_string(k));

  std::vector<std::vector<Detection>> dets;
  for (std::size_t i = 0; i < ds.size(); ++i)
    dets.push_back(run_inference(model, ds.load_image(i), train_cfg.infer));
  const std::vector<double> kappas =
      opt.kappa > 0.0 ? uniform_kappas(k, opt.kappa) : eval_kappas(train_cfg, k);
  const EvalResult result = compute_ap(dets, dataset_ground_truth(ds), EvalParams(kappas));

  if (!opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    std::ofstream(opt.out_dir / "eval.json") << result.to_json().dump(2) << "\n";
    std::ofstream(opt.out_dir / "eval.txt") << result.to_text();
  }
  return result;
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  if (rc == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  ::globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw Error("glob failed for pattern " + pattern);
  std::sort(out.begin(), out.end());
  return out;
}

InferReport run_infer(const std::filesystem::path& ckpt_path, const std::string& pattern,
                      const std::filesystem::path& out) {
  default_device();
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Model model = model_from_checkpoint(ckpt);
  const InferenceConfig infer = checkpoint_inference_config(ckpt);

  InferReport report;
  json results = json::array();
  const std::vector<std::string> files = expand_glob(pattern);
  for (std::size_t i = 0; i < files.size(); ++i) {
    ++report.images;
    const std::filesystem::path p = files[i];
    const std::string stem = p.stem().string();
    std::int64_t image_id = static_cast<std::int64_t>(i);
    if (!stem.empty() && stem.size() < 19 &&
        std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); }))
      image_id = std::stoll(stem);
    try {
      const std::vector<Detection> dets = run_inference(model, read_png(p), infer);
      report.detections += static_cast<int>(dets.size());
      for (auto& rec : to_coco_results(image_id, dets)) results.push_back(std::move(rec));
    } catch (const std::exception& e) {
      ++report.failures;
      std::cerr << "inspose infer: skipping " << p.string() << ": " << e.what() << "\n";
    }
  }
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  std::ofstream f(out);
  if (!f) throw Error("cannot write " + out.string());
  f << results.dump() << "\n";
  return report;
}

}  // namespace inspose
