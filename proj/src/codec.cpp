#include "driftlab/codec.hpp"

#include <cmath>
#include <string>

#include "driftlab/error.hpp"

namespace driftlab {

namespace {

void check_offsets_finite(const OffsetVector& off) {
  if (!std::isfinite(off.tx) || !std::isfinite(off.ty) || !std::isfinite(off.tw) ||
      !std::isfinite(off.th)) {
    throw NumericRangeError("offset vector must be finite");
  }
}

void check_extent_offsets(const OffsetVector& off) {
  if (std::fabs(off.tw) > kMaxExtentOffset || std::fabs(off.th) > kMaxExtentOffset) {
    throw NumericRangeError("extent offset magnitude exceeds " +
                            std::to_string(kMaxExtentOffset) + " (tw=" + std::to_string(off.tw) +
                            ", th=" + std::to_string(off.th) + ")");
  }
}

double logit(double p) {
  return std::log(p / (1.0 - p));
}

CellRef cell_of(const AnchorSet& anchors, std::size_t index) {
  if (!anchors.has_cell_metadata()) {
    throw ContractError("sigmoid codec requires anchor cell metadata");
  }
  return {anchors.cell_origin[index][0], anchors.cell_origin[index][1],
          anchors.stride_of[index]};
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Box decode_linear(const Box& anchor, const OffsetVector& off) {
  check_offsets_finite(off);
  check_extent_offsets(off);
  return Box(off.tx * anchor.w + anchor.cx, off.ty * anchor.h + anchor.cy,
             std::exp(off.tw) * anchor.w, std::exp(off.th) * anchor.h);
}

OffsetVector encode_linear(const Box& anchor, const Box& target) {
  return {(target.cx - anchor.cx) / anchor.w, (target.cy - anchor.cy) / anchor.h,
          std::log(target.w / anchor.w), std::log(target.h / anchor.h)};
}

Box decode_sigmoid(const CellRef& cell, const Box& anchor, const OffsetVector& off) {
  check_offsets_finite(off);
  check_extent_offsets(off);
  // center in cell units, then back to scene units
  const double cx_cells = sigmoid(off.tx) + cell.origin_x / cell.stride;
  const double cy_cells = sigmoid(off.ty) + cell.origin_y / cell.stride;
  return Box(cx_cells * cell.stride, cy_cells * cell.stride, std::exp(off.tw) * anchor.w,
             std::exp(off.th) * anchor.h);
}

OffsetVector encode_sigmoid(const CellRef& cell, const Box& anchor, const Box& target) {
  const double fx = (target.cx - cell.origin_x) / cell.stride;
  const double fy = (target.cy - cell.origin_y) / cell.stride;
  if (fx < kCellDomainMargin || fx > 1.0 - kCellDomainMargin || fy < kCellDomainMargin ||
      fy > 1.0 - kCellDomainMargin) {
    throw DomainError("target center (" + std::to_string(target.cx) + ", " +
                      std::to_string(target.cy) + ") not strictly inside cell at (" +
                      std::to_string(cell.origin_x) + ", " + std::to_string(cell.origin_y) +
                      "), stride " + std::to_string(cell.stride));
  }
  return {logit(fx), logit(fy), std::log(target.w / anchor.w), std::log(target.h / anchor.h)};
}

Box decode_offset(CodecKind kind, const AnchorSet& anchors, std::size_t index,
                  const OffsetVector& off) {
  if (kind == CodecKind::Linear) {
    return decode_linear(anchors.boxes[index], off);
  }
  return decode_sigmoid(cell_of(anchors, index), anchors.boxes[index], off);
}

OffsetVector encode_target(CodecKind kind, const AnchorSet& anchors, std::size_t index,
                           const Box& target) {
  if (kind == CodecKind::Linear) {
    return encode_linear(anchors.boxes[index], target);
  }
  return encode_sigmoid(cell_of(anchors, index), anchors.boxes[index], target);
}

}  // namespace driftlab
