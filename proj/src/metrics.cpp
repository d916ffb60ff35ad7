#include "driftlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "driftlab/error.hpp"
#include "driftlab/matching.hpp"

namespace driftlab {

namespace {

constexpr double kMissRateClamp = 1e-10;

struct PooledDet {
  double score;
  std::size_t scene;
  std::size_t index;
  bool is_tp = false;
};

std::size_t total_gt_count(const SceneBoxes& gts) {
  std::size_t total = 0;
  for (const auto& g : gts) total += g.size();
  return total;
}

// Pool detections, sort by descending score (scene then index breaking
// ties), and greedy-match each to the highest-IoU unmatched ground truth of
// its scene at the given threshold.
std::vector<PooledDet> pooled_matches(const SceneDetections& dets, const SceneBoxes& gts,
                                      double iou_thresh) {
  if (dets.size() != gts.size()) {
    throw ContractError("detection and ground-truth lists must align by scene");
  }
  std::vector<PooledDet> pool;
  for (std::size_t s = 0; s < dets.size(); ++s) {
    for (std::size_t i = 0; i < dets[s].size(); ++i) {
      pool.push_back({dets[s][i].score, s, i});
    }
  }
  std::sort(pool.begin(), pool.end(), [](const PooledDet& a, const PooledDet& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.scene != b.scene) return a.scene < b.scene;
    return a.index < b.index;
  });

  std::vector<std::vector<char>> gt_matched(gts.size());
  for (std::size_t s = 0; s < gts.size(); ++s) gt_matched[s].assign(gts[s].size(), 0);

  for (PooledDet& d : pool) {
    const Box& box = dets[d.scene][d.index].box;
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < gts[d.scene].size(); ++g) {
      if (gt_matched[d.scene][g]) continue;
      const double v = iou(box, gts[d.scene][g]);
      if (v >= iou_thresh && v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      gt_matched[d.scene][best] = 1;
      d.is_tp = true;
    }
  }
  return pool;
}

}  // namespace

double average_precision(const SceneDetections& dets, const SceneBoxes& gts, double iou_thresh) {
  const std::size_t total_gt = total_gt_count(gts);
  if (total_gt == 0) {
    throw UndefinedMetricError("average precision undefined without ground truth");
  }
  const std::vector<PooledDet> pool = pooled_matches(dets, gts, iou_thresh);

  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < pool.size(); ++k) {
    if (pool[k].is_tp) ++tp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(total_gt));
  }

  // 101-point interpolation: at each recall level, the best precision
  // achieved at that recall or beyond.
  double ap = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double level = r / 100.0;
    double best = 0.0;
    for (std::size_t k = 0; k < precision.size(); ++k) {
      if (recall[k] >= level) best = std::max(best, precision[k]);
    }
    ap += best;
  }
  return ap / 101.0;
}

double average_precision_coco(const SceneDetections& dets, const SceneBoxes& gts) {
  double sum = 0;
  for (int k = 0; k < 10; ++k) {
    sum += average_precision(dets, gts, 0.5 + 0.05 * k);
  }
  return sum / 10.0;
}

MissRateResult log_average_miss_rate(const SceneDetections& dets, const SceneBoxes& gts,
                                     double iou_thresh) {
  if (gts.empty()) {
    throw UndefinedMetricError("miss rate requires at least one scene");
  }
  const std::size_t total_gt = total_gt_count(gts);
  if (total_gt == 0) {
    throw UndefinedMetricError("miss rate undefined without ground truth");
  }
  const std::vector<PooledDet> pool = pooled_matches(dets, gts, iou_thresh);
  const double n_scenes = static_cast<double>(gts.size());

  // Operating points along the score sweep; k = 0 is the empty detector.
  std::vector<double> fppi{0.0};
  std::vector<double> miss{1.0};
  std::size_t tp = 0, fp = 0;
  for (const PooledDet& d : pool) {
    d.is_tp ? ++tp : ++fp;
    fppi.push_back(static_cast<double>(fp) / n_scenes);
    miss.push_back(1.0 - static_cast<double>(tp) / static_cast<double>(total_gt));
  }

  MissRateResult res;
  double log_sum = 0.0;
  for (int r = 0; r < 9; ++r) {
    const double ref = std::pow(10.0, -2.0 + 2.0 * r / 8.0);
    std::size_t pick = 0;
    for (std::size_t k = 0; k < fppi.size(); ++k) {
      if (fppi[k] <= ref) pick = k;  // fppi non-decreasing: keeps the last
    }
    res.detail[r] = miss[pick];
    log_sum += std::log(std::max(miss[pick], kMissRateClamp));
  }
  res.mr2 = std::exp(log_sum / 9.0);
  if (res.mr2 <= kMissRateClamp * 1.000001) res.mr2 = 0.0;
  return res;
}

JaccardResult jaccard_index(const SceneDetections& dets, const SceneBoxes& gts,
                            double iou_thresh) {
  if (dets.size() != gts.size()) {
    throw ContractError("detection and ground-truth lists must align by scene");
  }
  const std::size_t total_gt = total_gt_count(gts);
  if (total_gt == 0) {
    throw UndefinedMetricError("jaccard index undefined without ground truth");
  }

  double weighted_sum = 0.0;
  double weight = 0.0;
  std::size_t pooled_match = 0, pooled_d = 0, pooled_g = 0;
  for (std::size_t s = 0; s < dets.size(); ++s) {
    const std::size_t nd = dets[s].size();
    const std::size_t ng = gts[s].size();
    std::vector<std::vector<int>> adjacency(nd);
    for (std::size_t d = 0; d < nd; ++d) {
      for (std::size_t g = 0; g < ng; ++g) {
        if (iou(dets[s][d].box, gts[s][g]) >= iou_thresh) {
          adjacency[d].push_back(static_cast<int>(g));
        }
      }
    }
    const std::size_t matched = max_bipartite_match(adjacency, ng).size;
    pooled_match += matched;
    pooled_d += nd;
    pooled_g += ng;
    if (nd + ng == 0) continue;  // vacuously perfect, zero weight anyway
    const double ji = static_cast<double>(matched) / static_cast<double>(nd + ng - matched);
    weighted_sum += static_cast<double>(ng) * ji;
    weight += static_cast<double>(ng);
  }

  JaccardResult res;
  res.gt_weighted = weighted_sum / weight;
  res.pooled = static_cast<double>(pooled_match) /
               static_cast<double>(pooled_d + pooled_g - pooled_match);
  return res;
}

double mitp(std::span<const Box> predictions, std::span<const Box> assigned_targets) {
  if (predictions.size() != assigned_targets.size()) {
    throw ContractError("mitp requires aligned prediction/target lists");
  }
  if (predictions.empty()) {
    throw UndefinedMetricError("mitp undefined on an empty pair list");
  }
  double min_iou = 1.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    min_iou = std::min(min_iou, iou(predictions[i], assigned_targets[i]));
  }
  return min_iou;
}

EvalResult evaluate(const SceneDetections& dets, const SceneBoxes& gts, double iou_thresh) {
  EvalResult res;
  res.ap = average_precision(dets, gts, iou_thresh);
  const MissRateResult mr = log_average_miss_rate(dets, gts, iou_thresh);
  res.mr2 = mr.mr2;
  res.detail = mr.detail;
  res.ji = jaccard_index(dets, gts, iou_thresh).gt_weighted;
  return res;
}

}  // namespace driftlab
