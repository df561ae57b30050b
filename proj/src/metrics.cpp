// SPDX-License-Identifier: Apache-2.0

#include "pcx/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <unordered_map>

#include "json_util.hpp"

namespace pcx::metrics {

using jsonu::Json;

double iou(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  if (a.empty() && b.empty()) {
    throw Error(ErrorCode::BothEmpty, "IoU of two empty index sets");
  }
  std::size_t inter = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

/// Descending confidence, ties by ascending position.
std::vector<std::size_t> confidence_order(const std::vector<PredictedInstance>& preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (preds[a].confidence != preds[b].confidence) {
      return preds[a].confidence > preds[b].confidence;
    }
    return a < b;
  });
  return order;
}

/// Core greedy pass; assumes single-scene single-class inputs.
std::vector<MatchOutcome> greedy_match(const std::vector<PredictedInstance>& preds,
                                       const std::vector<GroundTruthInstance>& gts,
                                       double threshold) {
  std::vector<MatchOutcome> outcomes;
  outcomes.reserve(preds.size());
  std::vector<bool> gt_taken(gts.size(), false);

  for (std::size_t p : confidence_order(preds)) {
    MatchOutcome outcome;
    outcome.pred_index = p;
    double best_iou = -1.0;
    std::size_t best_gt = 0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_taken[g]) continue;
      const double v = iou(preds[p].point_indices, gts[g].point_indices);
      if (v > best_iou) {  // strict: IoU ties keep the lowest gt index
        best_iou = v;
        best_gt = g;
      }
    }
    if (best_iou >= threshold) {
      gt_taken[best_gt] = true;
      outcome.matched = true;
      outcome.gt_index = best_gt;
      outcome.iou_value = best_iou;
    }
    outcomes.push_back(outcome);
  }
  return outcomes;
}

}  // namespace

std::vector<MatchOutcome> match_instances(const std::vector<PredictedInstance>& preds,
                                          const std::vector<GroundTruthInstance>& gts,
                                          double threshold) {
  const std::string* scene = nullptr;
  const std::string* cls = nullptr;
  auto check = [&](const std::string& s, const std::string& c) {
    if (scene == nullptr) {
      scene = &s;
      cls = &c;
      return;
    }
    if (s != *scene || c != *cls) {
      throw Error(ErrorCode::CrossSceneInput,
                  "match_instances expects one scene and one class, got (" + *scene + ", " +
                      *cls + ") and (" + s + ", " + c + ")");
    }
  };
  for (const auto& p : preds) check(p.scene_id, p.object_class);
  for (const auto& g : gts) check(g.scene_id, g.object_class);
  return greedy_match(preds, gts, threshold);
}

double average_precision(const std::vector<PredictedInstance>& preds,
                         const std::vector<GroundTruthInstance>& gts, double threshold) {
  if (gts.empty()) {
    throw Error(ErrorCode::NoGroundTruth, "class has no ground-truth instances");
  }
  for (const auto& p : preds) {
    if (p.object_class != gts.front().object_class) {
      throw Error(ErrorCode::CrossSceneInput,
                  "average_precision expects one class, got \"" + p.object_class +
                      "\" and \"" + gts.front().object_class + "\"");
    }
  }

  // matching is per scene; confidence ranking is global
  std::map<std::string, std::vector<std::size_t>> preds_by_scene;
  std::map<std::string, std::vector<std::size_t>> gts_by_scene;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    preds_by_scene[preds[i].scene_id].push_back(i);
  }
  for (std::size_t i = 0; i < gts.size(); ++i) {
    gts_by_scene[gts[i].scene_id].push_back(i);
  }

  std::vector<bool> pred_matched(preds.size(), false);
  for (const auto& [scene_id, pred_indices] : preds_by_scene) {
    std::vector<PredictedInstance> scene_preds;
    scene_preds.reserve(pred_indices.size());
    for (std::size_t i : pred_indices) scene_preds.push_back(preds[i]);

    std::vector<GroundTruthInstance> scene_gts;
    if (const auto it = gts_by_scene.find(scene_id); it != gts_by_scene.end()) {
      for (std::size_t i : it->second) scene_gts.push_back(gts[i]);
    }
    for (const MatchOutcome& outcome : greedy_match(scene_preds, scene_gts, threshold)) {
      if (outcome.matched) pred_matched[pred_indices[outcome.pred_index]] = true;
    }
  }

  // global order: confidence desc, then scene id, then input index
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (preds[a].confidence != preds[b].confidence) {
      return preds[a].confidence > preds[b].confidence;
    }
    if (preds[a].scene_id != preds[b].scene_id) {
      return preds[a].scene_id < preds[b].scene_id;
    }
    return a < b;
  });

  const double n_gt = static_cast<double>(gts.size());
  std::vector<double> precision;
  std::vector<double> recall;
  precision.reserve(order.size());
  recall.reserve(order.size());
  std::size_t tp = 0, fp = 0;
  for (std::size_t i : order) {
    pred_matched[i] ? ++tp : ++fp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / n_gt);
  }

  // monotone non-increasing envelope, then integrate over recall increases
  std::vector<double> envelope = precision;
  for (std::size_t i = envelope.size(); i-- > 1;) {
    envelope[i - 1] = std::max(envelope[i - 1], envelope[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < envelope.size(); ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * envelope[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

const std::vector<double>& iou_thresholds() {
  static const std::vector<double> thresholds = [] {
    std::vector<double> t{5.0 / 20.0};             // AP25
    for (int i = 10; i <= 19; ++i) t.push_back(i / 20.0);  // 0.50 .. 0.95
    return t;
  }();
  return thresholds;
}

std::vector<GroundTruthInstance> extract_ground_truth(
    const std::vector<LabeledScene>& scenes) {
  std::vector<GroundTruthInstance> gts;
  for (const LabeledScene& scene : scenes) {
    for (const auto& [id, cls] : scene.classes) {
      GroundTruthInstance gt;
      gt.scene_id = scene.scene_id;
      gt.object_class = cls;
      for (std::size_t index : instance_points(scene, id)) {
        gt.point_indices.push_back(static_cast<std::uint32_t>(index));
      }
      gts.push_back(std::move(gt));
    }
  }
  return gts;
}

MetricsReport evaluate(const std::vector<PredictedInstance>& preds,
                       const std::vector<LabeledScene>& gt_scenes) {
  std::unordered_map<std::string, const LabeledScene*> scenes_by_id;
  for (const LabeledScene& scene : gt_scenes) {
    if (!scenes_by_id.emplace(scene.scene_id, &scene).second) {
      throw Error(ErrorCode::InvalidScene,
                  "duplicate scene_id \"" + scene.scene_id + "\" in ground truth");
    }
  }

  for (std::size_t i = 0; i < preds.size(); ++i) {
    const PredictedInstance& p = preds[i];
    const auto it = scenes_by_id.find(p.scene_id);
    if (it == scenes_by_id.end()) {
      throw Error(ErrorCode::UnknownScene,
                  "prediction " + std::to_string(i) + " references unknown scene \"" +
                      p.scene_id + "\"");
    }
    if (p.point_indices.empty()) {
      throw Error(ErrorCode::InvalidPrediction,
                  "prediction " + std::to_string(i) + " has an empty point set");
    }
    if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) {
      throw Error(ErrorCode::InvalidPrediction,
                  "prediction " + std::to_string(i) + " has confidence outside [0,1]");
    }
    const std::size_t n_points = it->second->cloud.size();
    for (std::uint32_t index : p.point_indices) {
      if (index >= n_points) {
        throw Error(ErrorCode::InvalidPrediction,
                    "prediction " + std::to_string(i) + " indexes point " +
                        std::to_string(index) + " in a " + std::to_string(n_points) +
                        "-point scene");
      }
    }
  }

  const std::vector<GroundTruthInstance> gts = extract_ground_truth(gt_scenes);

  std::set<SemanticClass> class_names;
  for (const auto& g : gts) class_names.insert(g.object_class);
  for (const auto& p : preds) class_names.insert(p.object_class);

  MetricsReport report;
  const std::vector<double>& thresholds = iou_thresholds();
  double sum_map = 0.0, sum_ap50 = 0.0, sum_ap25 = 0.0;
  std::size_t included = 0;

  for (const SemanticClass& cls : class_names) {
    std::vector<PredictedInstance> class_preds;
    for (const auto& p : preds) {
      if (p.object_class == cls) class_preds.push_back(p);
    }
    std::vector<GroundTruthInstance> class_gts;
    for (const auto& g : gts) {
      if (g.object_class == cls) class_gts.push_back(g);
    }

    ClassMetrics cm;
    cm.support = class_gts.size();
    if (class_gts.empty()) {
      cm.excluded = true;
      report.excluded_classes.push_back(cls);
      report.per_class.emplace(cls, std::move(cm));
      continue;
    }

    cm.ap.reserve(thresholds.size());
    for (double t : thresholds) {
      cm.ap.push_back(average_precision(class_preds, class_gts, t));
    }
    double band_sum = 0.0;
    for (std::size_t i = kAp50Index; i < thresholds.size(); ++i) band_sum += cm.ap[i];
    cm.ap_mean_50_95 = band_sum / static_cast<double>(thresholds.size() - kAp50Index);

    sum_map += cm.ap_mean_50_95;
    sum_ap50 += cm.ap[kAp50Index];
    sum_ap25 += cm.ap[kAp25Index];
    ++included;
    report.per_class.emplace(cls, std::move(cm));
  }

  if (included > 0) {
    report.map_50_95 = sum_map / static_cast<double>(included);
    report.ap50 = sum_ap50 / static_cast<double>(included);
    report.ap25 = sum_ap25 / static_cast<double>(included);
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

std::vector<PredictedInstance> read_predictions(const std::string& json_bytes) {
  const Json j = jsonu::parse(json_bytes, "predictions");
  jsonu::require_array(j, "/");

  std::vector<PredictedInstance> preds;
  preds.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "/" + std::to_string(i);
    const Json& e = j[i];
    jsonu::reject_unknown_keys(e, path, {"scene_id", "class", "confidence", "point_indices"});

    PredictedInstance p;
    p.scene_id = jsonu::get_string(jsonu::require_key(e, path, "scene_id"), path + "/scene_id");
    p.object_class = jsonu::get_string(jsonu::require_key(e, path, "class"), path + "/class");
    p.confidence = jsonu::get_finite_double(jsonu::require_key(e, path, "confidence"),
                                            path + "/confidence");
    if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) {
      jsonu::fail(path + "/confidence", "must lie in [0,1]");
    }
    const Json& indices = jsonu::require_key(e, path, "point_indices");
    jsonu::require_array(indices, path + "/point_indices");
    if (indices.empty()) jsonu::fail(path + "/point_indices", "must be non-empty");
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const std::string ipath = path + "/point_indices/" + std::to_string(k);
      const std::uint64_t v = jsonu::get_u64(indices[k], ipath);
      if (v > UINT32_MAX) jsonu::fail(ipath, "index out of range");
      p.point_indices.push_back(static_cast<std::uint32_t>(v));
    }
    std::vector<std::uint32_t> sorted = p.point_indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      jsonu::fail(path + "/point_indices", "duplicate index in point set");
    }
    p.point_indices = std::move(sorted);
    preds.push_back(std::move(p));
  }
  return preds;
}

std::string write_predictions(const std::vector<PredictedInstance>& preds) {
  Json j = Json::array();
  for (const PredictedInstance& p : preds) {
    Json e;
    e["scene_id"] = p.scene_id;
    e["class"] = p.object_class;
    e["confidence"] = p.confidence;
    e["point_indices"] = p.point_indices;
    j.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string write_report(const MetricsReport& report) {
  char key[16];
  Json j;
  j["mAP"] = report.map_50_95;
  j["AP50"] = report.ap50;
  j["AP25"] = report.ap25;
  Json classes = Json::object();
  for (const auto& [cls, cm] : report.per_class) {
    Json c;
    c["support"] = cm.support;
    c["excluded"] = cm.excluded;
    if (!cm.excluded) {
      Json ap = Json::object();
      const std::vector<double>& thresholds = iou_thresholds();
      for (std::size_t i = 0; i < thresholds.size(); ++i) {
        std::snprintf(key, sizeof(key), "%.2f", thresholds[i]);
        ap[key] = cm.ap[i];
      }
      c["ap"] = std::move(ap);
      c["ap_mean_50_95"] = cm.ap_mean_50_95;
    }
    classes[cls] = std::move(c);
  }
  j["classes"] = std::move(classes);
  j["excluded_classes"] = report.excluded_classes;
  return j.dump(2) + "\n";
}

}  // namespace pcx::metrics
