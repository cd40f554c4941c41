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

#include "generators.hpp"
#include "gradcheck.hpp"
#include "inspose/losses.hpp"

namespace inspose {
namespace {

using testing::numeric_gradient;
using testing::relative_error;
using testing::uniform;

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TEST(FocalClsLoss, AnalyticValueAtHalf) {
  const std::vector<double> logits = {0.0};
  const std::vector<unsigned char> labels = {1};
  EXPECT_NEAR(focal_cls_loss<double>(logits, labels, 0.25, 2.0, 1.0), 0.04332, 1e-5);
  EXPECT_NEAR(focal_cls_loss<double>(logits, labels, 0.25, 2.0, 1.0), 0.0625 * std::log(2.0), 1e-15);
  const std::vector<unsigned char> neg = {0};
  EXPECT_NEAR(focal_cls_loss<double>(logits, neg, 0.25, 2.0, 1.0), 0.75 * 0.25 * std::log(2.0), 1e-15);
}

TEST(FocalClsLoss, MatchesDirectFormulaAndNormalizer) {
  std::mt19937_64 rng(1);
  std::vector<double> logits(40);
  std::vector<unsigned char> labels(40);
  double ref = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    logits[i] = uniform(rng, -6, 6);
    labels[i] = uniform(rng, 0, 1) < 0.3;
    const double p = sig(logits[i]);
    ref += labels[i] ? -0.25 * std::pow(1 - p, 2) * std::log(p) : -0.75 * std::pow(p, 2) * std::log(1 - p);
  }
  EXPECT_NEAR(focal_cls_loss<double>(logits, labels, 0.25, 2.0, 7.0), ref / 7.0, 1e-12);
}

TEST(FocalClsLoss, StableForExtremeLogits) {
  const std::vector<double> logits = {-80.0, 80.0};
  const std::vector<unsigned char> labels = {1, 0};
  const double v = focal_cls_loss<double>(logits, labels, 0.25, 2.0, 1.0);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, 0.25 * 80 + 0.75 * 80, 1e-6);
}

TEST(FocalClsLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x(12);
    std::vector<unsigned char> labels(12);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = uniform(rng, -4, 4);
      labels[i] = uniform(rng, 0, 1) < 0.4;
    }
    const double norm = uniform(rng, 1, 5);
    std::vector<double> g(x.size(), 0.0);
    focal_cls_loss<double>(x, labels, 0.25, 2.0, norm, g);
    const auto num = numeric_gradient(
        [&](const std::vector<double>& v) { return focal_cls_loss<double>(v, labels, 0.25, 2.0, norm); }, x);
    EXPECT_LE(relative_error(g, num), 1e-3);
  }
}

OneHotTarget target_with(int h, int w, std::vector<int> cells) {
  OneHotTarget t;
  t.h = h;
  t.w = w;
  t.cell = std::move(cells);
  return t;
}

TEST(KpfLoss, UniformLogitsGiveLogOfPlaneSize) {
  KpnetSpec spec;
  const std::vector<double> params(spec.param_count(), 0.0);
  BasicTensor<double> features(8, 16, 16);
  std::vector<int> cells(17);
  for (int j = 0; j < 17; ++j) cells[j] = j * 13;
  const OneHotTarget tgt = target_with(16, 16, cells);
  KpfSample<double> s{params, 64.0, 64.0, &tgt, {}};
  const std::vector<KpfSample<double>> samples = {s};
  const double v = kpf_loss<double>(samples, features, spec, KpfOptions{}, 1.0);
  EXPECT_NEAR(v, 5.5452, 1e-4);
  EXPECT_NEAR(v, std::log(256.0), 1e-12);
}

TEST(KpfLoss, MeanOverValidKeypointsSumOverLocations) {
  std::mt19937_64 rng(3);
  KpnetSpec spec{3, 4, 2, 2};
  BasicTensor<double> features(2, 5, 6);
  for (double& v : features.data) v = uniform(rng, -1, 1);
  std::vector<std::vector<double>> params(2, std::vector<double>(spec.param_count()));
  for (auto& p : params)
    for (double& v : p) v = uniform(rng, -1, 1);
  const OneHotTarget t0 = target_with(5, 6, {3, -1, 17});
  const OneHotTarget t1 = target_with(5, 6, {-1, -1, -1});
  const OneHotTarget t2 = target_with(5, 6, {0, 29, 5});
  std::vector<KpfSample<double>> samples = {{params[0], 10.0, 12.0, &t0, {}},
                                            {params[1], 3.0, 3.0, &t1, {}},
                                            {params[1], 30.0, 20.0, &t2, {}}};
  double ref = 0;
  const std::vector<std::pair<int, const OneHotTarget*>> used = {{0, &t0}, {2, &t2}};
  for (const auto& [si, tgt] : used) {
    const auto& s = samples[si];
    const auto logits = apply_kpnet(kpnet_input(features, s.ctrl_x, s.ctrl_y, 8, 16.0),
                                    split_kpnet_params<double>(s.params, spec));
    double sum = 0;
    int valid = 0;
    for (int j = 0; j < 3; ++j) {
      if (tgt->cell[j] < 0) continue;
      double z = 0;
      for (double v : logits.plane(j)) z += std::exp(v);
      sum += -(logits.plane(j)[tgt->cell[j]] - std::log(z));
      ++valid;
    }
    ref += sum / valid;
  }
  EXPECT_NEAR(kpf_loss<double>(samples, features, spec, KpfOptions{}, 4.0), ref / 4.0, 1e-12);
}

TEST(KpfLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  KpnetSpec spec{3, 4, 3, 2};
  for (int t = 0; t < 20; ++t) {
    const int h = 4, w = 5;
    std::vector<double> x(spec.param_count() * 2 + 2 * h * w);
    for (double& v : x) v = uniform(rng, -1, 1);
    const OneHotTarget t0 = target_with(h, w, {testing::uniform_int(rng, 0, 19), -1, testing::uniform_int(rng, 0, 19)});
    const OneHotTarget t1 = target_with(h, w, {testing::uniform_int(rng, 0, 19), testing::uniform_int(rng, 0, 19), 2});
    const double cx0 = uniform(rng, 0, 40), cy0 = uniform(rng, 0, 32);
    const std::size_t cf = spec.param_count();
    const auto eval = [&](const std::vector<double>& v, std::vector<double>* grad) {
      std::vector<double> p0(v.begin(), v.begin() + cf), p1(v.begin() + cf, v.begin() + 2 * cf);
      BasicTensor<double> f(2, h, w);
      std::copy(v.begin() + 2 * cf, v.end(), f.data.begin());
      std::vector<double> g0(cf, 0.0), g1(cf, 0.0);
      BasicTensor<double> gf(2, h, w);
      std::vector<KpfSample<double>> s = {{p0, cx0, cy0, &t0, grad ? std::span<double>(g0) : std::span<double>()},
                                          {p1, 20.0, 12.0, &t1, grad ? std::span<double>(g1) : std::span<double>()}};
      const double loss = kpf_loss<double>(s, f, spec, KpfOptions{8, 16.0}, 2.0, grad ? &gf : nullptr);
      if (grad) {
        grad->assign(g0.begin(), g0.end());
        grad->insert(grad->end(), g1.begin(), g1.end());
        grad->insert(grad->end(), gf.data.begin(), gf.data.end());
      }
      return loss;
    };
    std::vector<double> g;
    eval(x, &g);
    const auto num = numeric_gradient([&](const std::vector<double>& v) { return eval(v, nullptr); }, x);
    EXPECT_LE(relative_error(g, num), 1e-3);
  }
}

TEST(DiskOffsetLoss, MeanAbsoluteErrorOverSupervisedEntries) {
  BasicTensor<double> pred(2, 1, 3), target(2, 1, 3), mask(1, 1, 3);
  pred.data = {1.0, 2.0, 3.0, 0.0, 0.0, 0.0};
  target.data = {0.5, 2.0, 0.0, 1.0, -1.0, 9.0};
  mask.data = {1.0, 1.0, 0.0};
  // |0.5| + |0| + |-1| + |1| over 4 entries.
  EXPECT_NEAR(disk_offset_loss(pred, target, mask, 4.0), 2.5 / 4.0, 1e-15);
  EXPECT_EQ(disk_offset_loss(pred, target, mask, 0.0), 0.0);
}

TEST(DiskOffsetLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    BasicTensor<double> target(4, 3, 3), mask(2, 3, 3);
    for (double& v : target.data) v = uniform(rng, -3, 3);
    for (double& v : mask.data) v = uniform(rng, 0, 1) < 0.5 ? 1.0 : 0.0;
    std::vector<double> x(target.size());
    for (double& v : x) v = uniform(rng, -3, 3);
    const auto eval = [&](const std::vector<double>& v, BasicTensor<double>* g) {
      BasicTensor<double> p(4, 3, 3);
      p.data = v;
      return disk_offset_loss(p, target, mask, 5.0, g);
    };
    BasicTensor<double> g(4, 3, 3);
    eval(x, &g);
    const auto num = numeric_gradient([&](const std::vector<double>& v) { return eval(v, nullptr); }, x);
    EXPECT_LE(relative_error(g.data, num), 1e-3);
  }
}

TEST(HeatmapFocalLoss, AnalyticValueAtPeak) {
  BasicTensor<double> logits(1, 1, 1), target(1, 1, 1);
  target.data = {1.0};
  EXPECT_NEAR(heatmap_focal_loss(logits, target, 2.0, 4.0, 1.0), 0.17329, 1e-5);
  EXPECT_NEAR(heatmap_focal_loss(logits, target, 2.0, 4.0, 1.0), 0.25 * std::log(2.0), 1e-15);
}

TEST(HeatmapFocalLoss, PenaltyReducedNegatives) {
  BasicTensor<double> logits(1, 1, 2), target(1, 1, 2);
  logits.data = {0.3, -1.2};
  target.data = {0.5, 0.0};
  const double p0 = sig(0.3), p1 = sig(-1.2);
  const double ref = -std::pow(0.5, 4) * p0 * p0 * std::log(1 - p0) - p1 * p1 * std::log(1 - p1);
  EXPECT_NEAR(heatmap_focal_loss(logits, target, 2.0, 4.0, 3.0), ref / 3.0, 1e-14);
  EXPECT_EQ(count_heatmap_peaks(target), 0u);
  target.data[0] = 1.0;
  EXPECT_EQ(count_heatmap_peaks(target), 1u);
}

TEST(HeatmapFocalLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    BasicTensor<double> target(2, 4, 4);
    for (double& v : target.data) v = uniform(rng, 0, 1) < 0.15 ? 1.0 : uniform(rng, 0, 0.99);
    std::vector<double> x(target.size());
    for (double& v : x) v = uniform(rng, -4, 4);
    const auto eval = [&](const std::vector<double>& v, BasicTensor<double>* g) {
      BasicTensor<double> l(2, 4, 4);
      l.data = v;
      return heatmap_focal_loss(l, target, 2.0, 4.0, 3.0, g);
    };
    BasicTensor<double> g(2, 4, 4);
    eval(x, &g);
    const auto num = numeric_gradient([&](const std::vector<double>& v) { return eval(v, nullptr); }, x);
    EXPECT_LE(relative_error(g.data, num), 1e-3);
  }
}

TEST(TotalLoss, DisabledBranchesContributeZero) {
  const LossReport all = total_loss(1.0, 2.0, 3.0, 4.0);
  EXPECT_EQ(all.total, 10.0);
  const LossReport no_do = total_loss(1.0, 2.0, 3.0, 4.0, false, true);
  EXPECT_EQ(no_do.l_do, 0.0);
  EXPECT_EQ(no_do.total, 7.0);
  const LossReport none = total_loss(1.0, 2.0, 3.0, 4.0, false, false);
  EXPECT_EQ(none.total, 3.0);
}

}  // namespace
}  // namespace inspose
