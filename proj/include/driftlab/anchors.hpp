#pragma once

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "driftlab/geometry.hpp"

namespace driftlab {

/// Layout of a multi-level anchor grid: one feature level per stride, the
/// same scale and ratio banks applied at every level. Ratios are H:W.
struct AnchorGridSpec {
  double image_w = 0;
  double image_h = 0;
  std::vector<double> strides;
  std::vector<double> scales;
  std::vector<double> ratios;

  /// Throws ConfigError on non-positive sizes, strides, scales or ratios,
  /// or when a stride exceeds the image on either axis.
  void validate() const;
};

/// Anchors plus the grid metadata the sigmoid codec and YOLO-style
/// positivity rule need. The three arrays are index-aligned; cell_origin is
/// the scene-unit top-left corner of each anchor's owning cell.
struct AnchorSet {
  std::vector<Box> boxes;
  std::vector<std::array<double, 2>> cell_origin;
  std::vector<double> stride_of;

  std::size_t size() const { return boxes.size(); }
  bool has_cell_metadata() const {
    return cell_origin.size() == boxes.size() && stride_of.size() == boxes.size();
  }
};

/// RetinaNet-style tiling: for each level, each cell, one anchor per
/// (ratio, scale) pair, centered on the cell center with area (scale*stride)^2
/// and H/W = ratio. Cell counts are ceil(image/stride); anchors may extend
/// past image borders and are not clipped. Ordering is level-major, then
/// row-major cells, then ratio, then scale.
AnchorSet generate_grid_anchors(const AnchorGridSpec& spec);

/// YOLO-style per-cell priors: one anchor per (cell, prior), centered on the
/// cell center and sized by the prior (w, h). Row-major cells, priors in
/// input order.
AnchorSet generate_prior_anchors(int grid_w, int grid_h, double stride,
                                 std::span<const std::pair<double, double>> priors);

}  // namespace driftlab
