#pragma once

#include <array>
#include <span>
#include <vector>

#include "driftlab/geometry.hpp"
#include "driftlab/nms.hpp"

namespace driftlab {

/// Headline evaluation numbers for one detector run. detail holds the miss
/// rates at the nine FPPI reference points behind mr2.
struct EvalResult {
  double ap = 0;
  double mr2 = 0;
  double ji = 0;
  std::array<double, 9> detail{};
};

using SceneDetections = std::vector<std::vector<Detection>>;
using SceneBoxes = std::vector<std::vector<Box>>;

/// Average precision at a single IoU threshold: detections pooled across
/// scenes, sorted by descending score, greedily matched to the highest-IoU
/// unmatched ground truth of their scene; 101-point interpolated area under
/// the precision-recall curve. Throws UndefinedMetricError when there is no
/// ground truth at all.
double average_precision(const SceneDetections& dets, const SceneBoxes& gts, double iou_thresh);

/// COCO-style AP: mean of average_precision over thresholds 0.50:0.05:0.95.
double average_precision_coco(const SceneDetections& dets, const SceneBoxes& gts);

struct MissRateResult {
  double mr2 = 0;
  std::array<double, 9> detail{};
};

/// Log-average miss rate over nine FPPI reference points log-spaced in
/// [1e-2, 1e0]. Each reference takes the miss rate of the largest-FPPI
/// operating point not exceeding it (the zero-detection point anchors the
/// sweep); the geometric mean clamps zero miss rates at 1e-10, and a result
/// at the clamp floor itself reports as exactly 0.
MissRateResult log_average_miss_rate(const SceneDetections& dets, const SceneBoxes& gts,
                                     double iou_thresh);

struct JaccardResult {
  double gt_weighted = 0;  // headline value
  double pooled = 0;       // dataset-pooled variant, logged alongside
};

/// Per-scene maximum-cardinality matching between detections and ground
/// truth on edges with IoU >= iou_thresh; per-scene JI = |M|/(|D|+|G|-|M|),
/// reported as the GT-weighted mean across scenes.
JaccardResult jaccard_index(const SceneDetections& dets, const SceneBoxes& gts,
                            double iou_thresh = 0.5);

/// Minimum IoU of (prediction, assigned target) pairs within one scene; the
/// compactness floor of the scene's positive predictions.
double mitp(std::span<const Box> predictions, std::span<const Box> assigned_targets);

/// All three headline metrics in one pass.
EvalResult evaluate(const SceneDetections& dets, const SceneBoxes& gts, double iou_thresh);

}  // namespace driftlab
