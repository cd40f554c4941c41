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
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "inspose/assignment.hpp"
#include "inspose/image.hpp"

namespace inspose {

enum class JointGroup { kCenter, kLeft, kRight };

// Keypoint naming, left/right swap table and drawing edges for a dataset.
struct Skeleton {
  std::vector<std::string> names;
  std::vector<int> flip_index;              // j -> mirrored joint index
  std::vector<std::pair<int, int>> edges;   // for visualization
  std::vector<JointGroup> groups;
  std::vector<double> kappas;               // OKS constants

  int size() const { return static_cast<int>(names.size()); }

  static Skeleton coco17();
  // nose, left/right wrist, left/right ankle.
  static Skeleton reduced5();
  // coco17 for K = 17, reduced5 for K = 5.
  static Skeleton for_keypoints(int num_keypoints);
};

struct SceneConfig {
  int width = 256;
  int height = 256;
  int min_persons = 1;
  int max_persons = 4;
  double min_figure_height = 60.0;  // pixels, head to feet
  double max_figure_height = 180.0;
  double occlusion_prob = 0.1;
  int num_keypoints = 17;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Scene {
  Image image;
  std::vector<InstanceAnnotation> instances;
};

// Deterministic in (cfg, index). Every annotated keypoint lies in
// [0, width] x [0, height]; joints hidden by occluders or other figures are
// marked v = 1.
Scene generate_scene(const SceneConfig& cfg, int index);

// COCO-style keypoint dataset.
struct AnnotationRecord {
  std::int64_t id = 0;
  Pose pose;
  Box bbox;            // x_min, y_min, x_max, y_max
  double area = 0.0;
  bool iscrowd = false;
  int num_keypoints = 0;  // labeled keypoint count as stored in the file
};

struct ImageRecord {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  std::vector<AnnotationRecord> annotations;
};

struct Dataset {
  std::filesystem::path image_root;
  int num_keypoints = 17;
  std::vector<ImageRecord> images;

  std::size_t size() const { return images.size(); }
  // Non-crowd persons with at least one labeled keypoint.
  std::vector<InstanceAnnotation> training_instances(std::size_t index) const;
  Image load_image(std::size_t index) const;
};

// Parses a COCO person-keypoints annotation file. Throws ParseError naming
// the offending record on malformed input.
Dataset load_coco(const std::filesystem::path& annotation_path,
                  const std::filesystem::path& image_root);
void save_coco(const Dataset& dataset, const std::filesystem::path& annotation_path);

// Renders count scenes to out_dir/images/*.png plus out_dir/annotations.json.
Dataset export_synthetic(const SceneConfig& cfg, int count, const std::filesystem::path& out_dir);

// Dataset records for in-memory scenes (file names are synthetic).
Dataset synthetic_dataset(const SceneConfig& cfg, int count);

struct AugmentConfig {
  double flip_prob = 0.5;
  int short_side_min = 224;
  int short_side_max = 288;
  int max_long_side = 384;
};

std::vector<InstanceAnnotation> flip_annotations(const std::vector<InstanceAnnotation>& anns,
                                                 int image_width, std::span<const int> flip_index);
std::vector<InstanceAnnotation> scale_annotations(const std::vector<InstanceAnnotation>& anns,
                                                  double sx, double sy);

// Aspect-preserving resize to a random short side (long side capped), then a
// random horizontal flip with left/right joint swap. No rotation or crop.
std::pair<Image, std::vector<InstanceAnnotation>> augment(const Image& image,
                                                          const std::vector<InstanceAnnotation>& anns,
                                                          const AugmentConfig& cfg,
                                                          std::span<const int> flip_index,
                                                          std::mt19937_64& rng);

}  // namespace inspose
