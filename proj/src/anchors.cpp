#include "driftlab/anchors.hpp"

#include <cmath>
#include <string>

#include "driftlab/error.hpp"

namespace driftlab {

void AnchorGridSpec::validate() const {
  if (!(image_w > 0) || !(image_h > 0)) {
    throw ConfigError("anchor grid: image dimensions must be positive");
  }
  if (strides.empty() || scales.empty() || ratios.empty()) {
    throw ConfigError("anchor grid: strides, scales and ratios must be non-empty");
  }
  for (double s : strides) {
    if (!(s > 0)) throw ConfigError("anchor grid: strides must be positive");
    if (s > image_w || s > image_h) {
      throw ConfigError("anchor grid: stride " + std::to_string(s) +
                        " yields no full cell on a " + std::to_string(image_w) + "x" +
                        std::to_string(image_h) + " image");
    }
  }
  for (double s : scales) {
    if (!(s > 0)) throw ConfigError("anchor grid: scales must be positive");
  }
  for (double r : ratios) {
    if (!(r > 0)) throw ConfigError("anchor grid: ratios must be positive");
  }
}

AnchorSet generate_grid_anchors(const AnchorGridSpec& spec) {
  spec.validate();
  AnchorSet out;
  for (double stride : spec.strides) {
    const int cells_w = static_cast<int>(std::ceil(spec.image_w / stride));
    const int cells_h = static_cast<int>(std::ceil(spec.image_h / stride));
    for (int row = 0; row < cells_h; ++row) {
      for (int col = 0; col < cells_w; ++col) {
        const double cx = (col + 0.5) * stride;
        const double cy = (row + 0.5) * stride;
        for (double ratio : spec.ratios) {
          for (double scale : spec.scales) {
            // area (scale*stride)^2 preserved across ratios, H/W = ratio
            const double side = scale * stride;
            const double sqrt_r = std::sqrt(ratio);
            out.boxes.emplace_back(cx, cy, side / sqrt_r, side * sqrt_r);
            out.cell_origin.push_back({col * stride, row * stride});
            out.stride_of.push_back(stride);
          }
        }
      }
    }
  }
  return out;
}

AnchorSet generate_prior_anchors(int grid_w, int grid_h, double stride,
                                 std::span<const std::pair<double, double>> priors) {
  if (grid_w < 1 || grid_h < 1 || !(stride > 0)) {
    throw ConfigError("prior anchors: grid dimensions and stride must be positive");
  }
  if (priors.empty()) {
    throw ConfigError("prior anchors: prior list must be non-empty");
  }
  for (const auto& [w, h] : priors) {
    if (!(w > 0) || !(h > 0)) throw ConfigError("prior anchors: priors must be positive");
  }
  AnchorSet out;
  for (int row = 0; row < grid_h; ++row) {
    for (int col = 0; col < grid_w; ++col) {
      const double cx = (col + 0.5) * stride;
      const double cy = (row + 0.5) * stride;
      for (const auto& [w, h] : priors) {
        out.boxes.emplace_back(cx, cy, w, h);
        out.cell_origin.push_back({col * stride, row * stride});
        out.stride_of.push_back(stride);
      }
    }
  }
  return out;
}

}  // namespace driftlab
