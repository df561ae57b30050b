// SPDX-License-Identifier: Apache-2.0

#include "metrics_oracle.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace oracle {

using pcx::LabeledScene;
using pcx::SemanticClass;
using pcx::metrics::GroundTruthInstance;
using pcx::metrics::MetricsReport;
using pcx::metrics::PredictedInstance;

namespace {

double set_iou(const std::set<std::uint32_t>& a, const std::set<std::uint32_t>& b) {
  std::size_t inter = 0;
  for (std::uint32_t v : a) inter += b.count(v);
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct RankedPred {
  std::size_t input_index;
  std::string scene_id;
  double confidence;
  std::set<std::uint32_t> mask;
};

}  // namespace

double oracle_average_precision(const std::vector<PredictedInstance>& preds,
                                const std::vector<GroundTruthInstance>& gts,
                                double threshold) {
  // global processing order: confidence desc, scene id asc, input index asc
  std::vector<RankedPred> ranked;
  ranked.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    ranked.push_back({i, preds[i].scene_id, preds[i].confidence,
                      std::set<std::uint32_t>(preds[i].point_indices.begin(),
                                              preds[i].point_indices.end())});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedPred& a, const RankedPred& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.scene_id != b.scene_id) return a.scene_id < b.scene_id;
    return a.input_index < b.input_index;
  });

  std::vector<std::set<std::uint32_t>> gt_masks;
  gt_masks.reserve(gts.size());
  for (const GroundTruthInstance& g : gts) {
    gt_masks.emplace_back(g.point_indices.begin(), g.point_indices.end());
  }

  // greedy: each prediction takes the unmatched same-scene ground truth with
  // the highest IoU, when that IoU reaches the threshold
  std::vector<bool> gt_used(gts.size(), false);
  std::vector<bool> is_tp(ranked.size(), false);
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g] || gts[g].scene_id != ranked[r].scene_id) continue;
      const double v = set_iou(ranked[r].mask, gt_masks[g]);
      if (v > best) {
        best = v;
        best_gt = g;
      }
    }
    if (best_gt < gts.size() && best >= threshold) {
      gt_used[best_gt] = true;
      is_tp[r] = true;
    }
  }

  std::vector<double> precision(ranked.size()), recall(ranked.size());
  std::size_t tp = 0;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    if (is_tp[r]) ++tp;
    precision[r] = static_cast<double>(tp) / static_cast<double>(r + 1);
    recall[r] = static_cast<double>(tp) / static_cast<double>(gts.size());
  }

  // literal interpolated-precision integral over distinct recall values
  std::vector<double> distinct_recalls;
  for (double r : recall) {
    if (distinct_recalls.empty() || r > distinct_recalls.back()) {
      distinct_recalls.push_back(r);
    }
  }
  double ap = 0.0;
  double prev = 0.0;
  for (double r : distinct_recalls) {
    if (r == 0.0) continue;
    double p_interp = 0.0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      if (recall[i] >= r) p_interp = std::max(p_interp, precision[i]);
    }
    ap += (r - prev) * p_interp;
    prev = r;
  }
  return ap;
}

MetricsReport oracle_evaluate(const std::vector<PredictedInstance>& preds,
                              const std::vector<LabeledScene>& scenes) {
  // ground truth straight from the label arrays
  std::vector<GroundTruthInstance> gts;
  for (const LabeledScene& scene : scenes) {
    std::map<pcx::InstanceId, std::vector<std::uint32_t>> masks;
    for (std::size_t i = 0; i < scene.instance_of_point.size(); ++i) {
      if (scene.instance_of_point[i] != 0) {
        masks[scene.instance_of_point[i]].push_back(static_cast<std::uint32_t>(i));
      }
    }
    for (const auto& [id, mask] : masks) {
      gts.push_back({scene.scene_id, scene.classes.at(id), mask});
    }
  }

  std::set<SemanticClass> classes;
  for (const auto& g : gts) classes.insert(g.object_class);
  for (const auto& p : preds) classes.insert(p.object_class);

  const std::vector<double>& thresholds = pcx::metrics::iou_thresholds();
  MetricsReport report;
  double sum_map = 0.0, sum50 = 0.0, sum25 = 0.0;
  std::size_t included = 0;

  for (const SemanticClass& cls : classes) {
    std::vector<PredictedInstance> cp;
    for (const auto& p : preds) {
      if (p.object_class == cls) cp.push_back(p);
    }
    std::vector<GroundTruthInstance> cg;
    for (const auto& g : gts) {
      if (g.object_class == cls) cg.push_back(g);
    }

    pcx::metrics::ClassMetrics cm;
    cm.support = cg.size();
    if (cg.empty()) {
      cm.excluded = true;
      report.excluded_classes.push_back(cls);
      report.per_class.emplace(cls, std::move(cm));
      continue;
    }
    for (double t : thresholds) cm.ap.push_back(oracle_average_precision(cp, cg, t));
    double band = 0.0;
    for (std::size_t i = 1; i < thresholds.size(); ++i) band += cm.ap[i];
    cm.ap_mean_50_95 = band / static_cast<double>(thresholds.size() - 1);
    sum_map += cm.ap_mean_50_95;
    sum50 += cm.ap[pcx::metrics::kAp50Index];
    sum25 += cm.ap[pcx::metrics::kAp25Index];
    ++included;
    report.per_class.emplace(cls, std::move(cm));
  }
  if (included > 0) {
    report.map_50_95 = sum_map / static_cast<double>(included);
    report.ap50 = sum50 / static_cast<double>(included);
    report.ap25 = sum25 / static_cast<double>(included);
  }
  return report;
}

}  // namespace oracle
