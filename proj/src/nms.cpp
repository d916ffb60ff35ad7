#include "driftlab/nms.hpp"

#include <algorithm>
#include <numeric>

#include "driftlab/error.hpp"

namespace driftlab {

std::vector<Detection> greedy_nms(const std::vector<Detection>& dets, double threshold) {
  if (!(threshold > 0) || !(threshold < 1)) {
    throw ConfigError("nms threshold must lie in (0, 1)");
  }
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&dets](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  std::vector<char> suppressed(dets.size(), 0);
  std::vector<Detection> kept;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (suppressed[order[i]]) continue;
    const Detection& keep = dets[order[i]];
    kept.push_back(keep);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (suppressed[order[j]]) continue;
      if (iou(keep.box, dets[order[j]].box) > threshold) {
        suppressed[order[j]] = 1;
      }
    }
  }
  return kept;
}

}  // namespace driftlab
