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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <filesystem>
#include <fstream>
#include <random>

#include "generators.hpp"
#include "inspose/decoder.hpp"
#include "inspose/error.hpp"
#include "inspose/evalkit.hpp"

namespace inspose {
namespace {

EvalGroundTruth gt_from(const Pose& p, double area) {
  EvalGroundTruth g;
  g.pose = p;
  g.bbox = min_enclosing_rect(p);
  g.area = area;
  g.num_keypoints = p.num_labeled();
  return g;
}

Detection det_from(const Pose& p, double score) {
  Detection d;
  d.pose = p;
  for (Keypoint& k : d.pose.keypoints) k.v = kLabeledVisible;
  d.score = score;
  d.rect = min_enclosing_rect(d.pose);
  return d;
}

Pose shifted(const Pose& p, double dx) {
  Pose q = p;
  for (Keypoint& k : q.keypoints) k.x += dx;
  return q;
}

// Interpolated precision at recall t: the best precision at any operating
// point with recall >= t, or 0 when recall t is never reached.
double ap_oracle(const std::vector<double>& scores, const std::vector<bool>& tp, int num_gt,
                 const std::vector<double>& recall_points) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  std::vector<std::pair<double, double>> points;  // (recall, precision)
  int t = 0, f = 0;
  for (std::size_t i : order) {
    tp[i] ? ++t : ++f;
    points.push_back({double(t) / num_gt, double(t) / (t + f)});
  }
  double sum = 0;
  for (double thr : recall_points) {
    double best = 0;
    for (const auto& [rc, pr] : points)
      if (rc >= thr) best = std::max(best, pr);
    sum += best;
  }
  return sum / recall_points.size();
}

TEST(EvalOks, BoxOnlyGroundTruthUsesExpandedBox) {
  EvalGroundTruth g;
  g.pose = Pose(std::vector<Keypoint>(2));
  g.bbox = Box{10, 10, 20, 20};
  g.area = 100;
  const std::vector<double> k = {0.1, 0.1};
  // Inside [0, 30] x [0, 30]: similarity 1.
  EXPECT_DOUBLE_EQ(eval_oks(Pose({Keypoint{0, 0, 2}, Keypoint{30, 30, 2}}), g, k), 1.0);
  const double far = eval_oks(Pose({Keypoint{-5, 0, 2}, Keypoint{30, 30, 2}}), g, k);
  EXPECT_NEAR(far, 0.5 * (std::exp(-25.0 / (2 * 100 * 0.01)) + 1.0), 1e-12);
}

TEST(GreedyMatch, HighestScoreTakesBestGroundTruth) {
  std::mt19937_64 rng(1);
  const Pose a = testing::random_pose(rng, 5, 0, 0, 50, 50, 1.0);
  const Pose b = shifted(a, 200);
  const std::vector<EvalGroundTruth> gts = {gt_from(a, 2500), gt_from(b, 2500)};
  const std::vector<Detection> dets = {det_from(shifted(a, 1), 0.5), det_from(a, 0.9),
                                       det_from(shifted(b, 0.5), 0.7)};
  const auto kappas = uniform_kappas(5);
  const ImageMatch m = greedy_match(dets, gts, 0.5, kappas);
  ASSERT_EQ(m.det_scores, (std::vector<double>{0.9, 0.7, 0.5}));
  EXPECT_EQ(m.det_gt, (std::vector<int>{0, 1, -1}));
  EXPECT_EQ(m.num_gt(), 2);
}

TEST(GreedyMatch, CrowdAndUnlabeledGroundTruthsAreIgnored) {
  std::mt19937_64 rng(2);
  const Pose a = testing::random_pose(rng, 5, 0, 0, 50, 50, 1.0);
  EvalGroundTruth crowd = gt_from(a, 2500);
  crowd.iscrowd = true;
  const std::vector<EvalGroundTruth> gts = {crowd};
  const std::vector<Detection> dets = {det_from(a, 0.9), det_from(a, 0.8)};
  const ImageMatch m = greedy_match(dets, gts, 0.5, uniform_kappas(5));
  EXPECT_EQ(m.num_gt(), 0);
  // A crowd region can absorb several detections; all of them are ignored.
  EXPECT_EQ(m.det_gt, (std::vector<int>{0, 0}));
  EXPECT_TRUE(m.det_ignore[0] && m.det_ignore[1]);
}

TEST(GreedyMatch, AreaRangeIgnoresOutsideInstances) {
  std::mt19937_64 rng(3);
  const Pose a = testing::random_pose(rng, 5, 0, 0, 20, 20, 1.0);
  const std::vector<EvalGroundTruth> gts = {gt_from(a, 400)};
  const std::vector<Detection> dets = {det_from(a, 0.9)};
  const EvalParams p(uniform_kappas(5));
  const ImageMatch m = greedy_match(dets, gts, 0.5, p.kappas, p.large);
  EXPECT_EQ(m.num_gt(), 0);
  EXPECT_TRUE(m.det_ignore[0]);
}

TEST(GreedyMatch, CapsDetectionsPerImage) {
  std::mt19937_64 rng(4);
  const Pose a = testing::random_pose(rng, 5, 0, 0, 50, 50, 1.0);
  std::vector<Detection> dets;
  for (int i = 0; i < 30; ++i) dets.push_back(det_from(shifted(a, 100 + i), 0.01 * i));
  const std::vector<EvalGroundTruth> gts = {gt_from(a, 2500)};
  const ImageMatch m = greedy_match(dets, gts, 0.5, uniform_kappas(5), {}, 20);
  EXPECT_EQ(m.det_scores.size(), 20u);
  EXPECT_DOUBLE_EQ(m.det_scores.front(), 0.29);
}

TEST(InterpolatedAp, WorkedCurve) {
  // FP at 0.9, TP at 0.8 and 0.7 with two ground truths: envelope 2/3.
  const std::vector<double> s = {0.9, 0.8, 0.7};
  const std::vector<bool> tp = {false, true, true}, ign(3, false);
  const EvalParams p(uniform_kappas(1));
  const PrCurveResult r = interpolated_ap(s, tp, ign, 2, p.recall_points);
  EXPECT_NEAR(r.ap, 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_EQ(interpolated_ap(s, tp, ign, 0, p.recall_points).ap, -1.0);
}

TEST(InterpolatedAp, MatchesOracleOnRandomCurves) {
  std::mt19937_64 rng(5);
  const EvalParams p(uniform_kappas(1));
  for (int t = 0; t < 100; ++t) {
    const int n = testing::uniform_int(rng, 1, 60);
    std::vector<double> s(n);
    std::vector<bool> tp(n), ign(n, false);
    int tps = 0;
    for (int i = 0; i < n; ++i) {
      s[i] = std::round(testing::uniform(rng, 0, 1) * 30) / 30;
      tp[i] = testing::uniform(rng, 0, 1) < 0.6;
      tps += tp[i];
    }
    const int num_gt = tps + testing::uniform_int(rng, 0, 5);
    if (num_gt == 0) continue;
    EXPECT_NEAR(interpolated_ap(s, tp, ign, num_gt, p.recall_points).ap, ap_oracle(s, tp, num_gt, p.recall_points), 1e-12);
  }
}

TEST(ComputeAp, GroundTruthAsDetectionsScoresOne) {
  std::mt19937_64 rng(6);
  std::vector<std::vector<Detection>> dets(10);
  std::vector<std::vector<EvalGroundTruth>> gts(10);
  for (int i = 0; i < 10; ++i)
    for (int k = 0; k < testing::uniform_int(rng, 1, 3); ++k) {
      const Pose p = testing::random_pose(rng, 17, 300 * k, 0, 120, 200, 1.0);
      const double area = min_enclosing_rect(p).area();
      gts[i].push_back(gt_from(p, area));
      dets[i].push_back(det_from(p, testing::uniform(rng, 0.2, 1.0)));
    }
  const EvalResult r = compute_ap(dets, gts, EvalParams(coco_kappas()));
  EXPECT_DOUBLE_EQ(r.ap, 1.0);
  EXPECT_DOUBLE_EQ(r.ap50, 1.0);
  EXPECT_DOUBLE_EQ(r.ap75, 1.0);
  EXPECT_DOUBLE_EQ(r.ar, 1.0);
  EXPECT_DOUBLE_EQ(r.ap_large, 1.0);
}

TEST(ComputeAp, NoDetectionsScoresZeroAndUndefinedSplitsAreNegative) {
  std::mt19937_64 rng(7);
  const Pose p = testing::random_pose(rng, 5, 0, 0, 200, 200, 1.0);
  const std::vector<std::vector<EvalGroundTruth>> gts = {{gt_from(p, 40000)}};
  const EvalResult r = compute_ap(std::vector<std::vector<Detection>>(1), gts, EvalParams(uniform_kappas(5)));
  EXPECT_EQ(r.ap, 0.0);
  EXPECT_EQ(r.ap_medium, -1.0);
  EXPECT_EQ(r.ap_large, 0.0);
  EXPECT_THROW(compute_ap(std::vector<std::vector<Detection>>(1), std::vector<std::vector<EvalGroundTruth>>(1), EvalParams(uniform_kappas(5))), ConfigError);
}

TEST(ComputeAp, ReportIsDeterministicText) {
  std::mt19937_64 rng(8);
  const Pose p = testing::random_pose(rng, 5, 0, 0, 200, 200, 1.0);
  const std::vector<std::vector<EvalGroundTruth>> gts = {{gt_from(p, 40000)}};
  const std::vector<std::vector<Detection>> dets = {{det_from(shifted(p, 3), 0.8)}};
  const EvalResult a = compute_ap(dets, gts, EvalParams(uniform_kappas(5)));
  const EvalResult b = compute_ap(dets, gts, EvalParams(uniform_kappas(5)));
  EXPECT_EQ(a.to_text(), b.to_text());
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_NE(a.to_text().find("Average Precision"), std::string::npos);
  EXPECT_TRUE(a.to_json().contains("AP50"));
}

TEST(CocoResults, RoundTripThroughFile) {
  std::mt19937_64 rng(9);
  std::vector<Detection> dets = {det_from(testing::random_pose(rng, 5, 0, 0, 90, 90, 1.0), 0.8)};
  dets[0].joint_scores = {0.1, 0.2, 0.3, 0.4, 0.5};
  const auto path = std::filesystem::temp_directory_path() / "inspose_results_roundtrip.json";
  std::ofstream(path) << to_coco_results(7, dets).dump();
  const auto loaded = load_coco_results(path);
  ASSERT_EQ(loaded.count(7), 1u);
  EXPECT_EQ(loaded.at(7)[0].pose, dets[0].pose);
  EXPECT_EQ(loaded.at(7)[0].joint_scores, dets[0].joint_scores);
  EXPECT_DOUBLE_EQ(loaded.at(7)[0].score, 0.8);
  std::ofstream(path) << "[{\"image_id\": 1, \"score\": 0.5, \"keypoints\": [1, 2]}]";
  EXPECT_THROW(load_coco_results(path), ParseError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace inspose
