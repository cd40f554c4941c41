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
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "constructed_outputs.hpp"
#include "generators.hpp"
#include "inspose/assignment.hpp"
#include "inspose/decoder.hpp"
#include "inspose/error.hpp"

namespace inspose {
namespace {

std::vector<Tensor> one_level(const std::vector<float>& probs) {
  Tensor s(1, 1, static_cast<int>(probs.size()));
  s.data = probs;
  return {s};
}

std::vector<Tensor> dummy_controllers(int n) {
  Tensor c(2, 1, n);
  for (int i = 0; i < n; ++i) {
    c.at(0, 0, i) = static_cast<float>(i);
    c.at(1, 0, i) = static_cast<float>(-i);
  }
  return {c};
}

TEST(InferenceConfig, Defaults) {
  const InferenceConfig c;
  EXPECT_EQ(c.score_threshold, 0.1);
  EXPECT_EQ(c.pre_nms_top_n, 500);
  EXPECT_EQ(c.max_detections, 100);
  EXPECT_EQ(c.nms_iou, 0.6);
  InferenceConfig bad;
  bad.pre_nms_top_n = 50;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(SelectCandidates, ThresholdAndOrder) {
  const std::vector<int> strides = {8};
  const auto c = select_candidates(one_level({0.05f, 0.3f, 0.2f}), dummy_controllers(3), strides,
                                   InferenceConfig{});
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].cell_x, 1);
  EXPECT_EQ(c[1].cell_x, 2);
  EXPECT_FLOAT_EQ(static_cast<float>(c[0].score), 0.3f);
  EXPECT_EQ(c[0].params, (std::vector<float>{1.0f, -1.0f}));
  EXPECT_EQ(c[0].image_x, 12.0);
  EXPECT_EQ(c[0].image_y, 4.0);
}

TEST(SelectCandidates, ScoreEqualToThresholdIsDropped) {
  const std::vector<int> strides = {8};
  const auto c = select_candidates(one_level({0.1f, 0.1001f, 0.0999f}), dummy_controllers(3),
                                   strides, InferenceConfig{});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].cell_x, 1);
}

TEST(SelectCandidates, KeepsTopPreNmsByScore) {
  std::vector<float> probs(600);
  for (int i = 0; i < 600; ++i) probs[i] = 0.2f + 0.001f * static_cast<float>((i * 7) % 600);
  const std::vector<int> strides = {8};
  const auto c = select_candidates(one_level(probs), dummy_controllers(600), strides, InferenceConfig{});
  ASSERT_EQ(c.size(), 500u);
  std::vector<float> sorted = probs;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_FLOAT_EQ(static_cast<float>(c[i].score), sorted[i]);
}

TEST(SelectCandidates, AllBelowThresholdGivesNothing) {
  const std::vector<int> strides = {8};
  EXPECT_TRUE(select_candidates(one_level({0.01f, 0.09f}), dummy_controllers(2), strides,
                                InferenceConfig{}).empty());
}

TEST(SelectCandidates, EqualScoresKeepLevelThenRowMajorOrder) {
  Tensor a(1, 2, 2), b(1, 1, 1);
  a.data = {0.5f, 0.2f, 0.5f, 0.5f};
  b.data = {0.5f};
  Tensor ca(1, 2, 2), cb(1, 1, 1);
  const std::vector<Tensor> scores = {a, b}, ctrls = {ca, cb};
  const std::vector<int> strides = {8, 16};
  const auto c = select_candidates(scores, ctrls, strides, InferenceConfig{});
  ASSERT_EQ(c.size(), 5u);
  EXPECT_EQ(c[0].level, 0);
  EXPECT_EQ(c[1].cell_y * 2 + c[1].cell_x, 2);
  EXPECT_EQ(c[2].cell_y * 2 + c[2].cell_x, 3);
  EXPECT_EQ(c[3].level, 1);
}

TEST(DecodeKeypoints, WorkedExample) {
  Tensor logits(1, 10, 16);
  logits.at(0, 7, 12) = 5.0f;
  Tensor off(2, 10, 16);
  off.at(0, 7, 12) = 0.625f;
  off.at(1, 7, 12) = 0.125f;
  const DecodedPose d = decode_keypoints(logits, &off, 8);
  EXPECT_DOUBLE_EQ(d.pose.keypoints[0].x, 101.0);
  EXPECT_DOUBLE_EQ(d.pose.keypoints[0].y, 57.0);
  EXPECT_EQ(d.pose.keypoints[0].v, kLabeledVisible);
  const double z = std::exp(5.0) + 159.0;
  EXPECT_NEAR(d.joint_scores[0], std::exp(5.0) / z, 1e-9);

  const DecodedPose plain = decode_keypoints(logits, nullptr, 8);
  EXPECT_EQ(plain.pose.keypoints[0].x, 96.0);
  EXPECT_EQ(plain.pose.keypoints[0].y, 56.0);
}

TEST(DecodeKeypoints, ConstantMapsPickFirstCell) {
  Tensor logits(3, 4, 5);
  const DecodedPose d = decode_keypoints(logits, nullptr, 8);
  for (const Keypoint& k : d.pose.keypoints) {
    EXPECT_EQ(k.x, 0.0);
    EXPECT_EQ(k.y, 0.0);
  }
  EXPECT_NEAR(d.joint_scores[0], 1.0 / 20.0, 1e-12);
}

TEST(DecodeKeypoints, EncodeDecodeRoundtrip) {
  std::mt19937_64 rng(1);
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    const int stride = 1 << testing::uniform_int(rng, 1, 4);
    const int h = 32, w = 40;
    const double radius = testing::uniform(rng, 1.5, 4.0);
    const int k = 17;
    Pose pose = testing::random_pose(rng, k, 0, 0, w * stride - 1e-3, h * stride - 1e-3, 1.0);
    for (Keypoint& kp : pose.keypoints) kp.v = kLabeledVisible;
    const InstanceAnnotation inst = make_instance(pose);
    const OneHotTarget onehot = keypoint_onehot_target(inst, stride, h, w);
    const OffsetTarget off = disk_offset_target({inst}, k, stride, radius, h, w);
    const DecodedPose d = decode_keypoints(onehot.masks(), &off.field, stride);
    for (int j = 0; j < k; ++j) {
      const int cell = onehot.cell[j];
      if (off.mask.plane(j)[cell] <= 0.0f) continue;
      EXPECT_NEAR(d.pose.keypoints[j].x, pose.keypoints[j].x, 1e-6);
      EXPECT_NEAR(d.pose.keypoints[j].y, pose.keypoints[j].y, 1e-6);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 1700);
}

TEST(DecodeDetections, EveryCandidateDecodesToItsOwnCell) {
  const ModelConfig c = testing::peak_at_self_config(3);
  std::vector<double> scores(4 * 4, 0.0);
  scores[5] = 0.9;  // cell (1, 1)
  const auto dets = decode_detections(testing::constructed_outputs(c, 4, 4, scores), c, InferenceConfig{});
  ASSERT_EQ(dets.size(), 1u);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(dets[0].pose.keypoints[j].x, (1 + 0.1 * j) * 8, 1e-5);
    EXPECT_NEAR(dets[0].pose.keypoints[j].y, (1 + 0.05 * j) * 8, 1e-5);
  }
  EXPECT_NEAR(dets[0].rect.x_max, 1.2 * 8, 1e-5);
  EXPECT_NEAR(dets[0].score, 0.9, 1e-6);
}

TEST(DecodeDetections, CapsFinalDetections) {
  const ModelConfig c = testing::peak_at_self_config(5);
  std::vector<double> scores(16 * 16);
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = 0.2 + 0.7 * static_cast<double>(i) / scores.size();
  const auto dets = decode_detections(testing::constructed_outputs(c, 16, 16, scores), c, InferenceConfig{});
  ASSERT_EQ(dets.size(), 100u);
  for (std::size_t i = 1; i < dets.size(); ++i) EXPECT_GE(dets[i - 1].score, dets[i].score);
  EXPECT_NEAR(dets.front().score, scores.back(), 1e-6);
}

TEST(DecodeDetections, NmsRemovesOverlappingRectangles) {
  ModelConfig c = testing::peak_at_self_config(2);
  std::vector<double> scores(4 * 4, 0.0);
  scores[0] = 0.8;
  scores[1] = 0.7;
  DenseOutputs out = testing::constructed_outputs(c, 4, 4, scores);
  // Make cells 0 and 1 decode to the same rectangle.
  out.offsets.at(0, 0, 1) = -1.0f;
  out.offsets.at(2, 0, 0) = 1.0f;
  out.offsets.at(2, 0, 1) = 0.0f;
  out.offsets.at(3, 0, 0) = 1.0f;
  out.offsets.at(3, 0, 1) = 1.0f;
  out.offsets.at(1, 0, 1) = 0.0f;
  const auto dets = decode_detections(out, c, InferenceConfig{});
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_NEAR(dets[0].score, 0.8, 1e-6);
}

TEST(RunInference, ZeroControllerModelPicksFirstCell) {
  ModelConfig c = ModelConfig::tiny(5);
  c.controller_init_std = 0.0;
  c.cls_prior = 0.5;
  Model model(c);
  model.set_training(false);
  Image img(128, 128, {90, 120, 150});
  const auto dets = run_inference(model, img, InferenceConfig{});
  ASSERT_FALSE(dets.empty());
  EXPECT_LE(dets.size(), 100u);
  for (const Detection& d : dets)
    for (const Keypoint& k : d.pose.keypoints) {
      EXPECT_EQ(k.x, 0.0);
      EXPECT_EQ(k.y, 0.0);
    }
}

TEST(RunInference, RepeatedCallsAreBitIdentical) {
  Model model{ModelConfig::tiny(5)};
  model.set_training(false);
  std::mt19937_64 rng(2);
  Image img(128, 96);
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 128; ++x)
      img.set(x, y, {static_cast<std::uint8_t>(rng() % 256), static_cast<std::uint8_t>(rng() % 256), 0});
  InferenceConfig cfg;
  cfg.score_threshold = 0.005;
  const auto a = run_inference(model, img, cfg);
  const auto b = run_inference(model, img, cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].score, b[i].score);
    EXPECT_EQ(a[i].pose, b[i].pose);
  }
}

TEST(CocoResults, RecordLayout) {
  Detection d;
  d.score = 0.75;
  d.pose = Pose({Keypoint{1.5, 2.5, 2}, Keypoint{3, 4, 2}});
  d.joint_scores = {0.9, 0.4};
  const std::vector<Detection> dets = {d};
  const auto j = to_coco_results(42, dets);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["image_id"], 42);
  EXPECT_EQ(j[0]["category_id"], 1);
  EXPECT_EQ(j[0]["score"], 0.75);
  EXPECT_EQ(j[0]["keypoints"].size(), 6u);
  EXPECT_EQ(j[0]["keypoints"][3], 3.0);
  EXPECT_EQ(j[0]["keypoints"][5], 0.4);
}

}  // namespace
}  // namespace inspose
