#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace driftlab {

/// Axis-aligned rectangle in continuous scene units, stored as center + extent.
/// Extents are strictly positive; degenerate boxes are rejected at construction
/// so downstream area divisions are always safe.
struct Box {
  double cx = 0;
  double cy = 0;
  double w = 1;
  double h = 1;

  Box() = default;
  Box(double cx_, double cy_, double w_, double h_);

  double x1() const { return cx - w / 2; }
  double y1() const { return cy - h / 2; }
  double x2() const { return cx + w / 2; }
  double y2() const { return cy + h / 2; }
  double area() const { return w * h; }

  bool operator==(const Box&) const = default;
};

struct Corners {
  double x1, y1, x2, y2;
};

Corners to_corners(const Box& b);

/// Inverse of to_corners. Throws ValidationError on x1>=x2 or y1>=y2.
Box from_corners(double x1, double y1, double x2, double y2);

/// Intersection-over-union of two boxes. Exact rectangle arithmetic,
/// symmetric, 0 when disjoint, 1 iff identical in corner form.
double iou(const Box& a, const Box& b);

/// Dense IoU grid between two box sets, row-major: values[i*n_cols + j]
/// = iou(first[i], second[j]).
struct IouMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * n_cols + j]; }
};

/// Throws ContractError when either list is empty; callers must handle
/// zero-target scenes before calling.
IouMatrix iou_matrix(std::span<const Box> first, std::span<const Box> second);

}  // namespace driftlab
