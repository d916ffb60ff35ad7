#include "driftlab/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "driftlab/error.hpp"

namespace driftlab {

namespace {

void check_extents(double cx, double cy, double w, double h) {
  if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(w) || !std::isfinite(h)) {
    throw ValidationError("box fields must be finite");
  }
  if (!(w > 0) || !(h > 0)) {
    throw ValidationError("box extents must be strictly positive (got w=" + std::to_string(w) +
                          ", h=" + std::to_string(h) + ")");
  }
}

}  // namespace

Box::Box(double cx_, double cy_, double w_, double h_) : cx(cx_), cy(cy_), w(w_), h(h_) {
  check_extents(cx, cy, w, h);
}

Corners to_corners(const Box& b) {
  return {b.x1(), b.y1(), b.x2(), b.y2()};
}

Box from_corners(double x1, double y1, double x2, double y2) {
  if (!(x1 < x2) || !(y1 < y2)) {
    throw ValidationError("degenerate corners: require x1<x2 and y1<y2");
  }
  return Box((x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1);
}

double iou(const Box& a, const Box& b) {
  const double ix = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  if (ix <= 0) return 0.0;
  const double iy = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iy <= 0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return std::min(inter / uni, 1.0);
}

IouMatrix iou_matrix(std::span<const Box> first, std::span<const Box> second) {
  if (first.empty() || second.empty()) {
    throw ContractError("iou_matrix requires non-empty box lists");
  }
  IouMatrix m;
  m.n_rows = first.size();
  m.n_cols = second.size();
  m.values.resize(m.n_rows * m.n_cols);
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    for (std::size_t j = 0; j < m.n_cols; ++j) {
      m.values[i * m.n_cols + j] = iou(first[i], second[j]);
    }
  }
  return m;
}

}  // namespace driftlab
