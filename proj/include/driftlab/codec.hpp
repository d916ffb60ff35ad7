#pragma once

#include "driftlab/anchors.hpp"
#include "driftlab/geometry.hpp"

namespace driftlab {

/// Dimensionless regression offsets exchanged between the prediction head,
/// the assignment stages and the trainer.
struct OffsetVector {
  double tx = 0;
  double ty = 0;
  double tw = 0;
  double th = 0;

  bool operator==(const OffsetVector&) const = default;
};

enum class CodecKind { Linear, Sigmoid };

/// Owning grid cell of an anchor, for the sigmoid codec: scene-unit origin
/// of the cell's top-left corner plus the cell side length.
struct CellRef {
  double origin_x = 0;
  double origin_y = 0;
  double stride = 1;
};

// Extent offsets are exponentiated on decode; beyond this they cannot mean a
// real scene extent and decoding fails with NumericRangeError.
inline constexpr double kMaxExtentOffset = 50.0;

// Margin (in cell units) by which an encoded center must clear the cell
// boundary; logit() is unbounded at the edges.
inline constexpr double kCellDomainMargin = 1e-6;

/// Linear restore map: center shifted by offset * anchor extent, extent
/// scaled by exp(offset).
Box decode_linear(const Box& anchor, const OffsetVector& off);

/// Exact algebraic inverse of decode_linear.
OffsetVector encode_linear(const Box& anchor, const Box& target);

/// Sigmoid restore map: decoded center is sigmoid(offset) of the way across
/// the owning cell (cell-unit arithmetic, then scaled by stride), so it
/// always lands strictly inside the cell. Extents as in decode_linear.
Box decode_sigmoid(const CellRef& cell, const Box& anchor, const OffsetVector& off);

/// Inverse of decode_sigmoid. The target center must lie strictly inside the
/// cell (margin kCellDomainMargin in cell units) or DomainError is thrown;
/// callers must not pair cell-external targets with sigmoid-codec anchors.
OffsetVector encode_sigmoid(const CellRef& cell, const Box& anchor, const Box& target);

double sigmoid(double x);

/// Codec dispatch over an anchor set entry; Sigmoid pulls the cell metadata
/// from the set (ContractError when absent).
Box decode_offset(CodecKind kind, const AnchorSet& anchors, std::size_t index,
                  const OffsetVector& off);
OffsetVector encode_target(CodecKind kind, const AnchorSet& anchors, std::size_t index,
                           const Box& target);

}  // namespace driftlab
