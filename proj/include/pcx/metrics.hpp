// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pcx/scene.hpp"

namespace pcx::metrics {

// 3D instance-segmentation evaluation over point-index masks. The protocol
// is the standard greedy, confidence-ordered matching with the monotone
// precision envelope; tie-breaking is pinned (confidence ties by scene id
// then input index, IoU ties by ascending ground-truth index) so results
// are bit-reproducible.

struct PredictedInstance {
  std::string scene_id;
  std::vector<std::uint32_t> point_indices;  // non-empty, sorted, unique
  SemanticClass object_class;
  double confidence = 0.0;  // in [0, 1]
};

struct GroundTruthInstance {
  std::string scene_id;
  SemanticClass object_class;
  std::vector<std::uint32_t> point_indices;  // sorted
};

/// |a n b| / |a u b| over sorted unique index sets. Throws BothEmpty when
/// both sets are empty.
double iou(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b);

struct MatchOutcome {
  std::size_t pred_index = 0;  // position in the preds argument
  bool matched = false;
  std::size_t gt_index = 0;    // valid when matched
  double iou_value = 0.0;      // valid when matched
};

/// Greedy matching within one scene and one class: predictions in descending
/// confidence (ties by ascending index) take the unmatched ground truth of
/// highest IoU when that IoU reaches the threshold; each ground truth
/// matches at most once. Outcomes are returned in the processing order.
/// Throws CrossSceneInput when inputs span scenes or classes.
std::vector<MatchOutcome> match_instances(const std::vector<PredictedInstance>& preds,
                                          const std::vector<GroundTruthInstance>& gts,
                                          double threshold);

/// Pools one class across scenes, accumulates TP/FP in global confidence
/// order, applies the monotone non-increasing precision envelope, and
/// integrates over distinct recall points. Throws NoGroundTruth when gts is
/// empty (the class is excluded from means, not scored 0).
double average_precision(const std::vector<PredictedInstance>& preds,
                         const std::vector<GroundTruthInstance>& gts, double threshold);

/// {0.25} followed by the 0.50:0.05:0.95 band (11 thresholds total).
const std::vector<double>& iou_thresholds();
inline constexpr std::size_t kAp25Index = 0;
inline constexpr std::size_t kAp50Index = 1;

struct ClassMetrics {
  std::size_t support = 0;  // ground-truth instance count
  bool excluded = false;    // zero ground truth: flagged, not scored
  std::vector<double> ap;   // aligned with iou_thresholds(); empty when excluded
  double ap_mean_50_95 = 0.0;
};

struct MetricsReport {
  double map_50_95 = 0.0;  // mean over classes of mean AP over 0.50..0.95
  double ap50 = 0.0;
  double ap25 = 0.0;
  std::map<SemanticClass, ClassMetrics> per_class;
  std::vector<SemanticClass> excluded_classes;
};

/// One GroundTruthInstance per (scene, instance id), via instance_points.
std::vector<GroundTruthInstance> extract_ground_truth(
    const std::vector<LabeledScene>& scenes);

/// Full evaluation: per-class AP at every threshold, means over classes with
/// ground truth. Throws UnknownScene for predictions naming absent scenes
/// and InvalidPrediction for out-of-range indices or confidences.
MetricsReport evaluate(const std::vector<PredictedInstance>& preds,
                       const std::vector<LabeledScene>& gt_scenes);

// Predictions file: JSON array of
//   {"scene_id", "class", "confidence", "point_indices": [int, ...]}
std::vector<PredictedInstance> read_predictions(const std::string& json_bytes);
std::string write_predictions(const std::vector<PredictedInstance>& preds);

/// Report JSON with stable key order.
std::string write_report(const MetricsReport& report);

}  // namespace pcx::metrics
