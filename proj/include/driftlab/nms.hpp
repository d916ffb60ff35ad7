#pragma once

#include <vector>

#include "driftlab/geometry.hpp"

namespace driftlab {

struct Detection {
  Box box;
  double score = 0;  // in [0, 1]
};

/// Greedy non-maximum suppression: repeatedly keep the highest-score
/// remaining detection and drop everything whose IoU with it strictly
/// exceeds the threshold. Output sorted by descending score, input order
/// breaking ties; scores untouched. Threshold must lie in (0, 1).
std::vector<Detection> greedy_nms(const std::vector<Detection>& dets, double threshold);

}  // namespace driftlab
