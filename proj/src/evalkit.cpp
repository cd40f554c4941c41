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
#include "inspose/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "inspose/error.hpp"

namespace inspose {

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

bool gt_ignored(const EvalGroundTruth& gt, const AreaRange& range) {
  return gt.iscrowd || gt.num_keypoints == 0 || gt.area < range.lo || gt.area > range.hi;
}

double det_area(const Detection& d) {
  const Box r = d.pose.num_labeled() > 0 ? min_enclosing_rect(d.pose) : d.rect;
  return r.area();
}

double mean_defined(const std::vector<double>& v) {
  double s = 0.0;
  int n = 0;
  for (double x : v)
    if (x > -1.0) {
      s += x;
      ++n;
    }
  return n ? s / n : -1.0;
}

}  // namespace

EvalGroundTruth to_eval_gt(const AnnotationRecord& rec) {
  return {rec.pose, rec.bbox, rec.area, rec.iscrowd, rec.num_keypoints};
}

EvalGroundTruth to_eval_gt(const InstanceAnnotation& inst) {
  return {inst.pose, inst.pseudo_box, inst.area, inst.iscrowd, inst.pose.num_labeled()};
}

EvalParams::EvalParams(std::vector<double> k)
    : oks_thresholds(linspace(0.5, 0.95, 10)), recall_points(linspace(0.0, 1.0, 101)),
      kappas(std::move(k)) {}

double eval_oks(const Pose& det, const EvalGroundTruth& gt, std::span<const double> kappas) {
  if (gt.pose.num_labeled() > 0) return oks(det, gt.pose, gt.area, kappas);
  // No labeled joints: distance to the box grown by its size on each side.
  const double w = gt.bbox.width(), h = gt.bbox.height();
  const double x0 = gt.bbox.x_min - w, x1 = gt.bbox.x_min + 2 * w;
  const double y0 = gt.bbox.y_min - h, y1 = gt.bbox.y_min + 2 * h;
  double sum = 0.0;
  for (std::size_t j = 0; j < det.keypoints.size(); ++j) {
    const double dx = std::max(0.0, x0 - det.keypoints[j].x) + std::max(0.0, det.keypoints[j].x - x1);
    const double dy = std::max(0.0, y0 - det.keypoints[j].y) + std::max(0.0, det.keypoints[j].y - y1);
    const double area = gt.area > 0.0 ? gt.area : 1e-12;
    sum += std::exp(-(dx * dx + dy * dy) / (2.0 * area * kappas[j] * kappas[j]));
  }
  return det.keypoints.empty() ? 0.0 : sum / det.keypoints.size();
}

int ImageMatch::num_gt() const {
  return static_cast<int>(std::count(gt_ignore.begin(), gt_ignore.end(), false));
}

ImageMatch greedy_match(std::span<const Detection> dets, std::span<const EvalGroundTruth> gts,
                        double oks_threshold, std::span<const double> kappas, const AreaRange& range,
                        int max_dets) {
  // Non-ignored ground truths are tried first.
  std::vector<std::size_t> gorder(gts.size());
  std::iota(gorder.begin(), gorder.end(), 0);
  std::stable_sort(gorder.begin(), gorder.end(), [&](std::size_t a, std::size_t b) {
    return !gt_ignored(gts[a], range) && gt_ignored(gts[b], range);
  });
  std::vector<std::size_t> dorder(dets.size());
  std::iota(dorder.begin(), dorder.end(), 0);
  std::stable_sort(dorder.begin(), dorder.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  if (dorder.size() > static_cast<std::size_t>(max_dets)) dorder.resize(max_dets);

  ImageMatch m;
  m.gt_ignore.resize(gts.size());
  m.gt_matched.assign(gts.size(), false);
  for (std::size_t g = 0; g < gts.size(); ++g) m.gt_ignore[g] = gt_ignored(gts[g], range);

  for (std::size_t d : dorder) {
    double best = std::min(oks_threshold, 1.0 - 1e-10);
    int match = -1;
    for (std::size_t g : gorder) {
      if (m.gt_matched[g] && !gts[g].iscrowd) continue;
      if (match > -1 && !m.gt_ignore[match] && m.gt_ignore[g]) break;
      const double s = eval_oks(dets[d].pose, gts[g], kappas);
      if (s < best) continue;
      best = s;
      match = static_cast<int>(g);
    }
    bool ignore = false;
    if (match >= 0) {
      ignore = m.gt_ignore[match];
      m.gt_matched[match] = true;
    } else {
      const double a = det_area(dets[d]);
      ignore = a < range.lo || a > range.hi;
    }
    m.det_scores.push_back(dets[d].score);
    m.det_gt.push_back(match);
    m.det_ignore.push_back(ignore);
  }
  return m;
}

PrCurveResult interpolated_ap(std::span<const double> scores, const std::vector<bool>& tp,
                              const std::vector<bool>& ignore, int num_gt,
                              std::span<const double> recall_points) {
  PrCurveResult r;
  if (num_gt == 0) return r;
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> rc, pr;
  double tps = 0.0, fps = 0.0;
  for (std::size_t i : order) {
    if (ignore[i]) continue;
    if (tp[i]) tps += 1.0; else fps += 1.0;
    rc.push_back(tps / num_gt);
    pr.push_back(tps / (tps + fps + std::numeric_limits<double>::epsilon()));
  }
  r.recall = rc.empty() ? 0.0 : rc.back();
  for (std::size_t i = pr.size(); i-- > 1;) pr[i - 1] = std::max(pr[i - 1], pr[i]);
  double sum = 0.0;
  for (double t : recall_points) {
    const auto it = std::lower_bound(rc.begin(), rc.end(), t);
    if (it != rc.end()) sum += pr[it - rc.begin()];
  }
  r.ap = sum / recall_points.size();
  return r;
}

EvalResult compute_ap(const std::vector<std::vector<Detection>>& dets,
                      const std::vector<std::vector<EvalGroundTruth>>& gts, const EvalParams& params) {
  if (dets.size() != gts.size()) throw ConfigError("compute_ap: per-image lists differ in length");

  // (ap per threshold, recall per threshold) for one area range.
  auto evaluate_range = [&](const AreaRange& range, std::vector<double>& aps, std::vector<double>& ars) {
    for (double t : params.oks_thresholds) {
      std::vector<double> scores;
      std::vector<bool> tp, ignore;
      int num_gt = 0;
      for (std::size_t i = 0; i < gts.size(); ++i) {
        const ImageMatch m = greedy_match(dets[i], gts[i], t, params.kappas, range, params.max_dets);
        num_gt += m.num_gt();
        for (std::size_t d = 0; d < m.det_scores.size(); ++d) {
          scores.push_back(m.det_scores[d]);
          tp.push_back(m.det_gt[d] >= 0);
          ignore.push_back(m.det_ignore[d]);
        }
      }
      const PrCurveResult r = interpolated_ap(scores, tp, ignore, num_gt, params.recall_points);
      aps.push_back(r.ap);
      ars.push_back(r.recall);
    }
  };

  EvalResult res;
  std::vector<double> aps, ars;
  evaluate_range(params.all, aps, ars);
  if (aps.empty() || aps.front() < 0.0)
    throw ConfigError("compute_ap: no ground-truth instance to evaluate against");
  res.ap_per_threshold = aps;
  res.ap = mean_defined(aps);
  res.ar = mean_defined(ars);
  auto at = [&](const std::vector<double>& v, double thr) {
    for (std::size_t i = 0; i < params.oks_thresholds.size(); ++i)
      if (std::abs(params.oks_thresholds[i] - thr) < 1e-9) return v[i];
    return -1.0;
  };
  res.ap50 = at(aps, 0.5);
  res.ap75 = at(aps, 0.75);
  res.ar50 = at(ars, 0.5);
  res.ar75 = at(ars, 0.75);

  std::vector<double> apm, arm, apl, arl;
  evaluate_range(params.medium, apm, arm);
  evaluate_range(params.large, apl, arl);
  res.ap_medium = mean_defined(apm);
  res.ar_medium = mean_defined(arm);
  res.ap_large = mean_defined(apl);
  res.ar_large = mean_defined(arl);
  return res;
}

nlohmann::json EvalResult::to_json() const {
  return {{"AP", ap},   {"AP50", ap50}, {"AP75", ap75}, {"AP_M", ap_medium}, {"AP_L", ap_large},
          {"AR", ar},   {"AR50", ar50}, {"AR75", ar75}, {"AR_M", ar_medium}, {"AR_L", ar_large},
          {"AP_per_threshold", ap_per_threshold}};
}

std::string EvalResult::to_text() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  auto line = [&](const char* metric, const char* iou, const char* area, double v) {
    os << " Average " << metric << " (" << (metric[0] == 'P' ? "AP" : "AR") << ") @[ OKS=" << iou
       << " | area=" << area << " | maxDets= 20 ] = " << v << '\n';
  };
  line("Precision", "0.50:0.95", "   all", ap);
  line("Precision", "0.50     ", "   all", ap50);
  line("Precision", "0.75     ", "   all", ap75);
  line("Precision", "0.50:0.95", "medium", ap_medium);
  line("Precision", "0.50:0.95", " large", ap_large);
  line("Recall   ", "0.50:0.95", "   all", ar);
  line("Recall   ", "0.50     ", "   all", ar50);
  line("Recall   ", "0.75     ", "   all", ar75);
  line("Recall   ", "0.50:0.95", "medium", ar_medium);
  line("Recall   ", "0.50:0.95", " large", ar_large);
  return os.str();
}

std::vector<std::vector<EvalGroundTruth>> dataset_ground_truth(const Dataset& ds) {
  std::vector<std::vector<EvalGroundTruth>> out;
  for (const ImageRecord& im : ds.images) {
    std::vector<EvalGroundTruth> g;
    for (const AnnotationRecord& a : im.annotations) g.push_back(to_eval_gt(a));
    out.push_back(std::move(g));
  }
  return out;
}

std::map<std::int64_t, std::vector<Detection>> load_coco_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open results file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw ParseError("results file must hold a list of records");
  std::map<std::int64_t, std::vector<Detection>> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& r = doc[i];
    try {
      Detection d;
      d.score = r.at("score").get<double>();
      const auto& kps = r.at("keypoints");
      if (kps.size() % 3 != 0 || kps.empty()) throw ParseError("keypoints must be triplets");
      for (std::size_t j = 0; j < kps.size(); j += 3) {
        d.pose.keypoints.push_back({kps[j].get<double>(), kps[j + 1].get<double>(), kLabeledVisible});
        d.joint_scores.push_back(kps[j + 2].get<double>());
      }
      d.rect = min_enclosing_rect(d.pose);
      out[r.at("image_id").get<std::int64_t>()].push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("result record " + std::to_string(i) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("result record " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace inspose
