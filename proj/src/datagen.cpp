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
#include "inspose/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include "inspose/error.hpp"

namespace inspose {

namespace {

using json = nlohmann::json;

constexpr Rgb kJointColors[17] = {
    {255, 0, 255}, {0, 90, 255},  {255, 140, 0},  {0, 200, 255}, {255, 210, 0}, {40, 40, 255},
    {255, 80, 20}, {0, 255, 120}, {255, 0, 80},   {0, 255, 255}, {255, 255, 0}, {120, 0, 255},
    {255, 0, 0},   {0, 255, 0},   {200, 255, 0},  {0, 120, 120}, {160, 0, 60}};

// Body model in 17-joint COCO order, y pointing down, unit figure height.
std::vector<std::pair<double, double>> pose_body(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  std::vector<std::pair<double, double>> p(17);
  const double lean = range(-0.25, 0.25);
  const double nx = std::sin(lean), ny = -std::cos(lean);  // torso direction (up)
  const double px = -ny, py = nx;                          // perpendicular, pointing to +x
  const double neck_x = 0.30 * nx, neck_y = 0.30 * ny;
  const double head_x = neck_x + 0.11 * nx, head_y = neck_y + 0.11 * ny;
  p[0] = {head_x, head_y};
  p[1] = {head_x + 0.035, head_y - 0.03};
  p[2] = {head_x - 0.035, head_y - 0.03};
  p[3] = {head_x + 0.07, head_y};
  p[4] = {head_x - 0.07, head_y};
  p[5] = {neck_x + 0.10 * px, neck_y + 0.10 * py};
  p[6] = {neck_x - 0.10 * px, neck_y - 0.10 * py};
  p[11] = {0.06 * px, 0.06 * py};
  p[12] = {-0.06 * px, -0.06 * py};
  // side = +1 for the figure's left (image +x), -1 for its right.
  auto limb = [&](int root, int mid, int end, double side, double l1, double l2, double a_lo,
                  double a_hi, double b_lo, double b_hi) {
    const double a = range(a_lo, a_hi);
    const double b = a + range(b_lo, b_hi);
    p[mid] = {p[root].first + side * l1 * std::sin(a), p[root].second + l1 * std::cos(a)};
    p[end] = {p[mid].first + side * l2 * std::sin(b), p[mid].second + l2 * std::cos(b)};
  };
  limb(5, 7, 9, 1.0, 0.15, 0.14, -0.3, 2.6, -1.5, 1.5);
  limb(6, 8, 10, -1.0, 0.15, 0.14, -0.3, 2.6, -1.5, 1.5);
  limb(11, 13, 15, 1.0, 0.23, 0.22, -0.2, 0.8, -0.8, 0.3);
  limb(12, 14, 16, -1.0, 0.23, 0.22, -0.2, 0.8, -0.8, 0.3);
  return p;
}

constexpr std::pair<int, int> kBodyEdges[] = {{5, 6},  {5, 7},   {7, 9},   {6, 8},   {8, 10},
                                              {11, 12}, {11, 13}, {13, 15}, {12, 14}, {14, 16}};

std::vector<int> subset_for(int num_keypoints) {
  if (num_keypoints == 17) {
    std::vector<int> all(17);
    for (int i = 0; i < 17; ++i) all[i] = i;
    return all;
  }
  if (num_keypoints == 5) return {0, 9, 10, 15, 16};
  throw ConfigError("synthetic skeletons support K = 17 or K = 5, got " +
                    std::to_string(num_keypoints));
}

json pose_to_json(const Pose& pose) {
  json kps = json::array();
  for (const Keypoint& k : pose.keypoints) {
    kps.push_back(k.x);
    kps.push_back(k.y);
    kps.push_back(k.v);
  }
  return kps;
}

}  // namespace

Skeleton Skeleton::coco17() {
  Skeleton s;
  s.names = {"nose",       "left_eye",      "right_eye",      "left_ear",    "right_ear",
             "left_shoulder", "right_shoulder", "left_elbow", "right_elbow", "left_wrist",
             "right_wrist", "left_hip",     "right_hip",      "left_knee",   "right_knee",
             "left_ankle",  "right_ankle"};
  s.flip_index = {0, 2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11, 14, 13, 16, 15};
  s.edges = {{15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12},
             {5, 6},   {5, 7},   {6, 8},   {7, 9},   {8, 10},  {1, 2},  {0, 1},
             {0, 2},   {1, 3},   {2, 4},   {3, 5},   {4, 6}};
  s.groups.assign(17, JointGroup::kCenter);
  for (int j = 1; j < 17; ++j) s.groups[j] = (j % 2 == 1) ? JointGroup::kLeft : JointGroup::kRight;
  s.kappas = coco_kappas();
  return s;
}

Skeleton Skeleton::reduced5() {
  Skeleton s;
  s.names = {"nose", "left_wrist", "right_wrist", "left_ankle", "right_ankle"};
  s.flip_index = {0, 2, 1, 4, 3};
  s.edges = {{0, 1}, {0, 2}, {0, 3}, {0, 4}};
  s.groups = {JointGroup::kCenter, JointGroup::kLeft, JointGroup::kRight, JointGroup::kLeft,
              JointGroup::kRight};
  s.kappas = uniform_kappas(5);
  return s;
}

Skeleton Skeleton::for_keypoints(int num_keypoints) {
  if (num_keypoints == 17) return coco17();
  if (num_keypoints == 5) return reduced5();
  throw ConfigError("no built-in skeleton for K = " + std::to_string(num_keypoints));
}

void SceneConfig::validate() const {
  if (width < 32 || height < 32) throw ConfigError("scene must be at least 32x32");
  if (min_persons < 0 || max_persons < min_persons) throw ConfigError("invalid person range");
  if (!(min_figure_height > 4.0) || max_figure_height < min_figure_height)
    throw ConfigError("invalid figure height range");
  if (occlusion_prob < 0.0 || occlusion_prob > 1.0) throw ConfigError("invalid occlusion_prob");
  subset_for(num_keypoints);
}

Scene generate_scene(const SceneConfig& cfg, int index) {
  cfg.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

  const int W = cfg.width, H = cfg.height;
  Scene scene;
  scene.image = Image(W, H);
  // Muted vertical gradient background with mild noise.
  Rgb top, bottom;
  for (int k = 0; k < 3; ++k) {
    top[k] = static_cast<std::uint8_t>(range(70, 150));
    bottom[k] = static_cast<std::uint8_t>(range(70, 150));
  }
  std::uniform_int_distribution<int> noise(-6, 6);
  for (int y = 0; y < H; ++y) {
    const double t = static_cast<double>(y) / (H - 1);
    for (int x = 0; x < W; ++x) {
      Rgb c;
      for (int k = 0; k < 3; ++k)
        c[k] = static_cast<std::uint8_t>(std::clamp(
            static_cast<int>((1 - t) * top[k] + t * bottom[k]) + noise(rng), 0, 255));
      scene.image.set(x, y, c);
    }
  }

  const std::vector<int> subset = subset_for(cfg.num_keypoints);
  const int persons = std::uniform_int_distribution<int>(cfg.min_persons, cfg.max_persons)(rng);

  struct Figure {
    std::vector<std::pair<double, double>> joints;  // 17, image coordinates
    double height;
    Rgb color;
    Box box;
  };
  std::vector<Figure> figures;
  for (int n = 0; n < persons; ++n) {
    for (int attempt = 0; attempt < 30; ++attempt) {
      Figure f;
      f.height = range(cfg.min_figure_height, cfg.max_figure_height);
      auto body = pose_body(rng);
      const bool mirrored = u(rng) < 0.3;
      double x0 = 1e9, y0 = 1e9, x1 = -1e9, y1 = -1e9;
      for (auto& [x, y] : body) {
        if (mirrored) x = -x;
        x *= f.height;
        y *= f.height;
        x0 = std::min(x0, x); y0 = std::min(y0, y);
        x1 = std::max(x1, x); y1 = std::max(y1, y);
      }
      const double margin = 0.12 * f.height + 2.0;
      if (x1 - x0 + 2 * margin > W || y1 - y0 + 2 * margin > H) continue;
      const double tx = range(margin - x0, W - margin - x1);
      const double ty = range(margin - y0, H - margin - y1);
      for (auto& [x, y] : body) {
        x += tx;
        y += ty;
      }
      f.joints = std::move(body);
      f.box = {x0 + tx, y0 + ty, x1 + tx, y1 + ty};
      const bool overlaps = std::any_of(figures.begin(), figures.end(), [&](const Figure& o) {
        return box_iou(o.box, f.box) > 0.15;
      });
      if (overlaps) continue;
      for (int k = 0; k < 3; ++k) f.color[k] = static_cast<std::uint8_t>(range(20, 60));
      figures.push_back(std::move(f));
      break;
    }
  }

  // Pixel-index space is continuous space shifted by half a pixel.
  auto px = [](double v) { return v - 0.5; };
  for (const Figure& f : figures) {
    const auto& p = f.joints;
    const double thick = std::max(2.0, 0.035 * f.height);
    const double neck_x = 0.5 * (p[5].first + p[6].first), neck_y = 0.5 * (p[5].second + p[6].second);
    const double pel_x = 0.5 * (p[11].first + p[12].first), pel_y = 0.5 * (p[11].second + p[12].second);
    draw_line(scene.image, px(neck_x), px(neck_y), px(pel_x), px(pel_y), thick * 1.6, f.color);
    draw_line(scene.image, px(neck_x), px(neck_y), px(p[0].first), px(p[0].second), thick, f.color);
    draw_disk(scene.image, px(p[0].first), px(p[0].second), 0.085 * f.height, f.color);
    for (auto [a, b] : kBodyEdges)
      draw_line(scene.image, px(p[a].first), px(p[a].second), px(p[b].first), px(p[b].second), thick,
                f.color);
    const double r = std::max(1.6, 0.022 * f.height);
    for (auto it = subset.rbegin(); it != subset.rend(); ++it) {
      const int j = *it;
      draw_disk(scene.image, px(p[j].first), px(p[j].second), r, kJointColors[j]);
    }
  }

  for (const Figure& f : figures) {
    if (!(u(rng) < cfg.occlusion_prob)) continue;
    const int j = subset[std::uniform_int_distribution<int>(0, static_cast<int>(subset.size()) - 1)(rng)];
    const double s = 0.12 * f.height;
    const int cx = static_cast<int>(f.joints[j].first + range(-0.3, 0.3) * s);
    const int cy = static_cast<int>(f.joints[j].second + range(-0.3, 0.3) * s);
    const std::uint8_t g = static_cast<std::uint8_t>(range(160, 200));
    fill_rect(scene.image, cx - static_cast<int>(s), cy - static_cast<int>(s), cx + static_cast<int>(s),
              cy + static_cast<int>(s), {g, g, g});
  }

  for (const Figure& f : figures) {
    std::vector<Keypoint> kps;
    for (int j : subset) {
      const auto [x, y] = f.joints[j];
      const int ix = std::clamp(static_cast<int>(std::floor(x)), 0, W - 1);
      const int iy = std::clamp(static_cast<int>(std::floor(y)), 0, H - 1);
      const bool seen = scene.image.get(ix, iy) == kJointColors[j];
      kps.push_back({x, y, seen ? kLabeledVisible : kLabeledInvisible});
    }
    scene.instances.push_back(make_instance(Pose(std::move(kps))));
  }
  return scene;
}

std::vector<InstanceAnnotation> Dataset::training_instances(std::size_t index) const {
  std::vector<InstanceAnnotation> out;
  for (const AnnotationRecord& a : images.at(index).annotations) {
    if (a.iscrowd || a.pose.num_labeled() == 0) continue;
    out.push_back(make_instance(a.pose, a.area));
  }
  return out;
}

Image Dataset::load_image(std::size_t index) const {
  return read_png(image_root / images.at(index).file_name);
}

Dataset load_coco(const std::filesystem::path& annotation_path,
                  const std::filesystem::path& image_root) {
  std::ifstream in(annotation_path);
  if (!in) throw ParseError("cannot open annotation file " + annotation_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(annotation_path.string() + ": " + e.what());
  }

  Dataset ds;
  ds.image_root = image_root;
  ds.num_keypoints = -1;
  if (doc.contains("categories")) {
    for (const auto& c : doc["categories"])
      if (c.contains("keypoints")) ds.num_keypoints = static_cast<int>(c["keypoints"].size());
  }

  std::map<std::int64_t, std::size_t> by_id;
  if (!doc.contains("images") || !doc["images"].is_array())
    throw ParseError("annotation file has no images array");
  for (const auto& im : doc["images"]) {
    ImageRecord r;
    try {
      r.id = im.at("id").get<std::int64_t>();
      r.file_name = im.value("file_name", "");
      r.width = im.value("width", 0);
      r.height = im.value("height", 0);
    } catch (const json::exception& e) {
      throw ParseError("image record " + im.value("id", json()).dump() + ": " + e.what());
    }
    by_id[r.id] = ds.images.size();
    ds.images.push_back(std::move(r));
  }

  for (const auto& a : doc.value("annotations", json::array())) {
    const std::string rid = a.contains("id") ? a["id"].dump() : std::string("<no id>");
    try {
      AnnotationRecord rec;
      rec.id = a.at("id").get<std::int64_t>();
      const std::int64_t image_id = a.at("image_id").get<std::int64_t>();
      const auto it = by_id.find(image_id);
      if (it == by_id.end()) throw ParseError("unknown image_id " + std::to_string(image_id));
      if (a.value("category_id", 1) != 1) continue;
      const auto& kps = a.at("keypoints");
      if (!kps.is_array() || kps.size() % 3 != 0 || kps.empty())
        throw ParseError("keypoints must be a non-empty flat list of triplets");
      const int k = static_cast<int>(kps.size() / 3);
      if (ds.num_keypoints < 0) ds.num_keypoints = k;
      if (k != ds.num_keypoints)
        throw ParseError("expected " + std::to_string(ds.num_keypoints) + " keypoints, got " +
                         std::to_string(k));
      for (int j = 0; j < k; ++j) {
        const int v = kps[3 * j + 2].get<int>();
        if (v < 0 || v > 2) throw ParseError("visibility flag out of range");
        rec.pose.keypoints.push_back({kps[3 * j].get<double>(), kps[3 * j + 1].get<double>(), v});
      }
      rec.num_keypoints = a.value("num_keypoints", rec.pose.num_labeled());
      rec.iscrowd = a.value("iscrowd", 0) != 0;
      if (a.contains("bbox")) {
        const auto& b = a["bbox"];
        if (!b.is_array() || b.size() != 4) throw ParseError("bbox must have 4 numbers");
        rec.bbox = {b[0].get<double>(), b[1].get<double>(), b[0].get<double>() + b[2].get<double>(),
                    b[1].get<double>() + b[3].get<double>()};
      } else if (rec.pose.num_labeled() > 0) {
        rec.bbox = min_enclosing_rect(rec.pose);
      }
      rec.area = a.value("area", rec.bbox.area());
      ds.images[it->second].annotations.push_back(std::move(rec));
    } catch (const ParseError& e) {
      throw ParseError("annotation " + rid + ": " + e.what());
    } catch (const json::exception& e) {
      throw ParseError("annotation " + rid + ": " + e.what());
    }
  }
  if (ds.num_keypoints < 0) ds.num_keypoints = 17;
  return ds;
}

void save_coco(const Dataset& dataset, const std::filesystem::path& annotation_path) {
  json doc;
  doc["images"] = json::array();
  doc["annotations"] = json::array();
  for (const ImageRecord& im : dataset.images) {
    doc["images"].push_back(
        {{"id", im.id}, {"file_name", im.file_name}, {"width", im.width}, {"height", im.height}});
    for (const AnnotationRecord& a : im.annotations) {
      doc["annotations"].push_back({{"id", a.id},
                                    {"image_id", im.id},
                                    {"category_id", 1},
                                    {"keypoints", pose_to_json(a.pose)},
                                    {"num_keypoints", a.num_keypoints},
                                    {"bbox", {a.bbox.x_min, a.bbox.y_min, a.bbox.width(), a.bbox.height()}},
                                    {"area", a.area},
                                    {"iscrowd", a.iscrowd ? 1 : 0}});
    }
  }
  json cat = {{"id", 1}, {"name", "person"}, {"supercategory", "person"}};
  if (dataset.num_keypoints == 17 || dataset.num_keypoints == 5) {
    const Skeleton s = Skeleton::for_keypoints(dataset.num_keypoints);
    cat["keypoints"] = s.names;
    json edges = json::array();
    for (auto [a, b] : s.edges) edges.push_back({a + 1, b + 1});
    cat["skeleton"] = edges;
  }
  doc["categories"] = json::array({cat});
  std::ofstream out(annotation_path);
  if (!out) throw Error("cannot write " + annotation_path.string());
  out << doc.dump() << '\n';
}

Dataset synthetic_dataset(const SceneConfig& cfg, int count) {
  Dataset ds;
  ds.num_keypoints = cfg.num_keypoints;
  std::int64_t ann_id = 1;
  for (int i = 0; i < count; ++i) {
    const Scene scene = generate_scene(cfg, i);
    ImageRecord im;
    im.id = i + 1;
    char name[32];
    std::snprintf(name, sizeof(name), "%06lld.png", static_cast<long long>(im.id));
    im.file_name = name;
    im.width = cfg.width;
    im.height = cfg.height;
    for (const InstanceAnnotation& inst : scene.instances) {
      AnnotationRecord a;
      a.id = ann_id++;
      a.pose = inst.pose;
      a.bbox = inst.pseudo_box;
      a.area = inst.area;
      a.num_keypoints = inst.pose.num_labeled();
      im.annotations.push_back(std::move(a));
    }
    ds.images.push_back(std::move(im));
  }
  return ds;
}

Dataset export_synthetic(const SceneConfig& cfg, int count, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "images");
  Dataset ds = synthetic_dataset(cfg, count);
  ds.image_root = out_dir / "images";
  for (int i = 0; i < count; ++i)
    write_png(generate_scene(cfg, i).image, ds.image_root / ds.images[i].file_name);
  save_coco(ds, out_dir / "annotations.json");
  return ds;
}

std::vector<InstanceAnnotation> flip_annotations(const std::vector<InstanceAnnotation>& anns,
                                                 int image_width, std::span<const int> flip_index) {
  std::vector<InstanceAnnotation> out;
  for (const InstanceAnnotation& a : anns) {
    if (flip_index.size() != a.pose.keypoints.size())
      throw ConfigError("flip table size does not match keypoint count");
    std::vector<Keypoint> kps(a.pose.keypoints.size());
    for (std::size_t j = 0; j < kps.size(); ++j) {
      Keypoint k = a.pose.keypoints[j];
      k.x = image_width - k.x;
      kps[flip_index[j]] = k;
    }
    InstanceAnnotation f = make_instance(Pose(std::move(kps)), a.area);
    f.iscrowd = a.iscrowd;
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<InstanceAnnotation> scale_annotations(const std::vector<InstanceAnnotation>& anns,
                                                  double sx, double sy) {
  std::vector<InstanceAnnotation> out;
  for (const InstanceAnnotation& a : anns) {
    Pose p = a.pose;
    for (Keypoint& k : p.keypoints) {
      k.x *= sx;
      k.y *= sy;
    }
    InstanceAnnotation s = make_instance(std::move(p), a.area * sx * sy);
    s.iscrowd = a.iscrowd;
    out.push_back(std::move(s));
  }
  return out;
}

std::pair<Image, std::vector<InstanceAnnotation>> augment(const Image& image,
                                                          const std::vector<InstanceAnnotation>& anns,
                                                          const AugmentConfig& cfg,
                                                          std::span<const int> flip_index,
                                                          std::mt19937_64& rng) {
  const int short_side = std::uniform_int_distribution<int>(cfg.short_side_min, cfg.short_side_max)(rng);
  const bool flip = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < cfg.flip_prob;
  const int img_short = std::min(image.width, image.height);
  const int img_long = std::max(image.width, image.height);
  double f = static_cast<double>(short_side) / img_short;
  if (img_long * f > cfg.max_long_side) f = static_cast<double>(cfg.max_long_side) / img_long;
  const int w = std::max(1, static_cast<int>(std::lround(image.width * f)));
  const int h = std::max(1, static_cast<int>(std::lround(image.height * f)));

  Image out = (w == image.width && h == image.height) ? image : resize_image(image, w, h);
  auto out_anns = scale_annotations(anns, static_cast<double>(w) / image.width,
                                    static_cast<double>(h) / image.height);
  if (flip) {
    out = flip_horizontal(out);
    out_anns = flip_annotations(out_anns, w, flip_index);
  }
  return {std::move(out), std::move(out_anns)};
}

}  // namespace inspose
