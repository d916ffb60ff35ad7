#pragma once

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "driftlab/anchors.hpp"
#include "driftlab/assignment.hpp"
#include "driftlab/scenes.hpp"
#include "driftlab/trainer.hpp"

namespace driftlab {

/// Anchor layout section: either a RetinaNet-style multi-level grid or a
/// YOLO-style prior grid.
struct AnchorConfig {
  enum class Kind { Grid, Prior };
  Kind kind = Kind::Grid;

  AnchorGridSpec grid{64, 64, {8.0}, {1.0, 1.2599210498948732, 1.5874010519681994},
                      {1.0, 2.0, 3.0}};

  int grid_w = 8;
  int grid_h = 8;
  double stride = 8;
  std::vector<std::pair<double, double>> priors{{5, 11}, {7, 15}, {4, 8}};

  AnchorSet build() const;
};

struct EvalConfig {
  enum class ApMode { Single, Coco };

  double score_threshold = 0.05;  // objectness filter before NMS
  double nms_threshold = 0.5;
  double iou_threshold = 0.5;     // metric matching threshold
  ApMode ap_mode = ApMode::Single;
};

/// Whole-experiment configuration, loaded from one JSON file. Every section
/// has working defaults; unknown keys are rejected to catch typos.
struct ExperimentConfig {
  std::filesystem::path output_dir = ".";
  SceneGenConfig scenes;
  int scene_count = 100;
  AnchorConfig anchors;
  AssignerConfig assigner;
  TrainConfig trainer;
  EvalConfig eval;

  static ExperimentConfig load(const std::filesystem::path& path);

  /// Section validity plus cross-section consistency: the sigmoid codec is
  /// the YOLO pairing and requires prior anchors.
  void validate() const;
};

}  // namespace driftlab
