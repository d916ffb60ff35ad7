#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "driftlab/anchors.hpp"
#include "driftlab/assignment.hpp"
#include "driftlab/codec.hpp"
#include "driftlab/scenes.hpp"

namespace driftlab {

/// Shared linear prediction head: feature_dim x 5 weights (row-major per
/// feature) plus bias. Channels 0..3 are the offset outputs, channel 4 the
/// objectness logit.
struct RegressorParams {
  std::size_t feature_dim = 0;
  std::vector<double> weights;
  std::array<double, 5> bias{};

  double w(std::size_t feature, std::size_t channel) const {
    return weights[feature * 5 + channel];
  }
};

enum class AssignmentMode { FixedBaseline, Tsaa };

struct TrainConfig {
  int epochs = 150;
  double learning_rate = 0.05;
  double smooth_l1_beta = 1.0;
  AssignmentMode assignment_mode = AssignmentMode::FixedBaseline;
  CodecKind codec_kind = CodecKind::Linear;
  std::uint64_t seed = 7;
  int patch_radius = 2;   // occupancy cells around the anchor's cell
  int grid_res = 16;      // occupancy grid resolution
  int reassign_every = 1; // epochs between adaptive reassignments

  void validate() const;
};

struct TrainLogRow {
  double mean_mitp = 0;
  double regression_loss = 0;
  double classification_loss = 0;
  int reassignment_count = 0;  // positives whose target differs from stage 1
};

/// Per-epoch training series; the drift diagnostic data.
struct TrainLog {
  std::vector<TrainLogRow> rows;
};

/// Fraction of each grid cell covered by at least one ground-truth box,
/// computed exactly from rectangle unions. Carries the scene dimensions so
/// feature extraction can normalize geometry.
struct OccupancyGrid {
  int res = 0;
  double scene_w = 0;
  double scene_h = 0;
  std::vector<double> values;  // row-major, res x res

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * res + col]; }
};

OccupancyGrid rasterize_occupancy(const Scene& scene, int grid_res);

inline std::size_t feature_dim(int patch_radius) {
  const std::size_t side = 2 * static_cast<std::size_t>(patch_radius) + 1;
  return side * side + 4;
}

/// Occupancy patch centered on the anchor's grid cell (row-major, zero
/// padded past the borders) followed by the anchor's normalized geometry
/// (cx/W, cy/H, log w, log h).
std::vector<double> extract_features(std::size_t anchor_index, const AnchorSet& anchors,
                                     const OccupancyGrid& grid, int patch_radius);

struct ForwardOut {
  OffsetVector off;
  double logit = 0;
};

ForwardOut forward(const RegressorParams& params, std::span<const double> features);

/// One training example: an anchor's features plus either its regression
/// target (positive) or a background label.
struct TrainExample {
  std::span<const double> features;
  bool positive = false;
  OffsetVector target;
};

struct LossGrad {
  double loss = 0;
  double regression_loss = 0;
  double classification_loss = 0;
  RegressorParams grad;
};

/// Smooth-L1 over the offset channels of positives (summed per anchor, then
/// averaged over positives) plus binary cross-entropy on the objectness
/// logit averaged over every example. Gradients are analytic. An empty
/// positive set zeroes the regression term with a warning on stderr.
LossGrad loss_and_grad(const RegressorParams& params, std::span<const TrainExample> batch,
                       double smooth_l1_beta);

struct TrainResult {
  RegressorParams params;
  TrainLog log;
};

/// Full-batch gradient descent over the scene set, one parameter update per
/// epoch. FixedBaseline assigns once from the raw anchors and never changes;
/// Tsaa freezes stage-1 positivity and forced pairs but reassigns stage-2
/// targets from the current predictions every reassign_every epochs. Each
/// epoch logs the mean per-scene MITP under the epoch's own assignment, the
/// losses, and how many positives sit on a reassigned target. Deterministic
/// given (scenes, configs, seed).
TrainResult train(std::span<const Scene> scenes, const AnchorSet& anchors,
                  const AssignerConfig& assigner_cfg, const TrainConfig& train_cfg);

}  // namespace driftlab
