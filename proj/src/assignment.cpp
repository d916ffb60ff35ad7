#include "driftlab/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "driftlab/error.hpp"

namespace driftlab {

namespace {

void check_scene(const AnchorSet& anchors, std::span<const Box> targets) {
  if (targets.empty()) {
    throw EmptySceneError("assignment requires at least one target");
  }
  if (anchors.size() < targets.size()) {
    throw InfeasibilityError("fewer anchors (" + std::to_string(anchors.size()) +
                             ") than targets (" + std::to_string(targets.size()) + ")");
  }
}

// Stage-1 verdicts from the anchor-IoU matrix, before forced overrides.
std::vector<AnchorLabel> stage1_labels(const IouMatrix& m, const AssignerConfig& cfg,
                                       const AssignmentGate* gate) {
  std::vector<AnchorLabel> labels(m.n_rows);
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t j = 0; j < m.n_cols; ++j) {
      if (gate && !gate->positive.at(i, j)) continue;
      if (m.at(i, j) > best_iou) {
        best_iou = m.at(i, j);
        best = static_cast<int>(j);
      }
    }
    if (gate) {
      // YOLO rule: positive toward the best admissible target, else negative.
      if (best >= 0) {
        labels[i] = {AnchorLabel::Kind::Positive, best, Provenance::Stage1};
      } else {
        labels[i] = {AnchorLabel::Kind::Negative, -1, Provenance::Stage1};
      }
      continue;
    }
    if (best_iou >= cfg.nt_pos) {
      labels[i] = {AnchorLabel::Kind::Positive, best, Provenance::Stage1};
    } else if (best_iou < cfg.nt_neg) {
      labels[i] = {AnchorLabel::Kind::Negative, -1, Provenance::Stage1};
    } else {
      labels[i] = {AnchorLabel::Kind::Ignore, -1, Provenance::Stage1};
    }
  }
  return labels;
}

std::vector<std::pair<int, int>> forced_pairs(const IouMatrix& m, const BoolMatrix* candidates) {
  const std::size_t n_anchors = m.n_rows;
  const std::size_t n_targets = m.n_cols;
  std::vector<char> anchor_claimed(n_anchors, 0);
  std::vector<int> anchor_of_target(n_targets, -1);

  // Claims resolve in globally decreasing IoU priority, ties to the lower
  // target then anchor index: a contested anchor goes to the higher-IoU
  // target, and a loser re-picks among the anchors still unclaimed when its
  // turn comes back around.
  for (std::size_t round = 0; round < n_targets; ++round) {
    int best_t = -1, best_a = -1;
    double best_iou = -1.0;
    for (std::size_t t = 0; t < n_targets; ++t) {
      if (anchor_of_target[t] >= 0) continue;
      bool any = false;
      for (std::size_t a = 0; a < n_anchors; ++a) {
        if (anchor_claimed[a]) continue;
        if (candidates && !candidates->at(a, t)) continue;
        any = true;
        if (m.at(a, t) > best_iou) {
          best_iou = m.at(a, t);
          best_t = static_cast<int>(t);
          best_a = static_cast<int>(a);
        }
      }
      if (!any) {
        throw InfeasibilityError("no admissible unclaimed anchor for target " +
                                 std::to_string(t));
      }
    }
    anchor_of_target[best_t] = best_a;
    anchor_claimed[best_a] = 1;
  }

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(n_targets);
  for (std::size_t t = 0; t < n_targets; ++t) {
    pairs.emplace_back(static_cast<int>(t), anchor_of_target[t]);
  }
  return pairs;
}

void apply_forced(std::vector<AnchorLabel>& labels,
                  const std::vector<std::pair<int, int>>& pairs) {
  for (const auto& [target, anchor] : pairs) {
    labels[anchor] = {AnchorLabel::Kind::Positive, target, Provenance::LowQuality};
  }
}

}  // namespace

void AssignerConfig::validate() const {
  if (!(nt_neg >= 0) || !(nt_neg <= nt_pos) || !(nt_pos <= 1)) {
    throw ConfigError("assigner thresholds must satisfy 0 <= nt_neg <= nt_pos <= 1");
  }
  if (!(nt_proposal >= 0) || !(nt_proposal <= 1)) {
    throw ConfigError("nt_proposal must lie in [0, 1]");
  }
  if (!(r_t >= 1)) {
    throw ConfigError("r_t must be >= 1");
  }
}

bool same_verdict(const AnchorLabel& a, const AnchorLabel& b) {
  if (a.kind != b.kind) return false;
  return a.kind != AnchorLabel::Kind::Positive || a.target == b.target;
}

BoolMatrix yolo_positive_mask(const AnchorSet& anchors, std::span<const Box> targets,
                              const AssignerConfig& cfg) {
  cfg.validate();
  if (!anchors.has_cell_metadata()) {
    throw ContractError("yolo_positive_mask requires anchor cell metadata");
  }
  BoolMatrix mask;
  mask.n_rows = anchors.size();
  mask.n_cols = targets.size();
  mask.values.assign(mask.n_rows * mask.n_cols, 0);
  for (std::size_t i = 0; i < mask.n_rows; ++i) {
    const Box& a = anchors.boxes[i];
    const double stride = anchors.stride_of[i];
    const double cell_x = std::floor(a.cx / stride);
    const double cell_y = std::floor(a.cy / stride);
    for (std::size_t j = 0; j < mask.n_cols; ++j) {
      const Box& t = targets[j];
      const bool same_cell = std::floor(t.cx / stride) == cell_x &&
                             std::floor(t.cy / stride) == cell_y;
      if (!same_cell) continue;
      if (cfg.yolo_use_ratio_condition) {
        const double ratio = std::max(std::max(a.w / t.w, t.w / a.w),
                                      std::max(a.h / t.h, t.h / a.h));
        if (ratio > cfg.r_t) continue;
      }
      mask.values[i * mask.n_cols + j] = 1;
    }
  }
  return mask;
}

AssignmentGate make_sigmoid_gate(const AnchorSet& anchors, std::span<const Box> targets,
                                 const AssignerConfig& cfg) {
  AssignmentGate gate;
  gate.positive = yolo_positive_mask(anchors, targets, cfg);
  AssignerConfig cell_only = cfg;
  cell_only.yolo_use_ratio_condition = false;
  gate.forced = yolo_positive_mask(anchors, targets, cell_only);
  // Tighten the cell test by the codec's domain margin: a target centered
  // exactly on a cell edge passes the floor comparison but is not encodable.
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const double stride = anchors.stride_of[i];
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const double fx = (targets[j].cx - anchors.cell_origin[i][0]) / stride;
      const double fy = (targets[j].cy - anchors.cell_origin[i][1]) / stride;
      if (fx < kCellDomainMargin || fx > 1.0 - kCellDomainMargin || fy < kCellDomainMargin ||
          fy > 1.0 - kCellDomainMargin) {
        gate.positive.values[i * targets.size() + j] = 0;
        gate.forced.values[i * targets.size() + j] = 0;
      }
    }
  }
  return gate;
}

std::vector<std::pair<int, int>> low_quality_match(const AnchorSet& anchors,
                                                   std::span<const Box> targets,
                                                   const BoolMatrix* candidates) {
  check_scene(anchors, targets);
  const IouMatrix m = iou_matrix(anchors.boxes, targets);
  return forced_pairs(m, candidates);
}

AssignmentLabeling baseline_assign(const AnchorSet& anchors, std::span<const Box> targets,
                                   const AssignerConfig& cfg, const AssignmentGate* gate) {
  cfg.validate();
  check_scene(anchors, targets);
  const IouMatrix m = iou_matrix(anchors.boxes, targets);

  AssignmentLabeling out;
  out.anchor_count = anchors.size();
  out.target_count = targets.size();
  out.labels = stage1_labels(m, cfg, gate);
  apply_forced(out.labels, forced_pairs(m, gate ? &gate->forced : nullptr));
  return out;
}

AssignmentLabeling tsaa_assign(const AnchorSet& anchors, std::span<const OffsetVector> offsets,
                               std::span<const Box> targets, const AssignerConfig& cfg,
                               CodecKind codec, const AssignmentGate* gate) {
  cfg.validate();
  if (offsets.size() != anchors.size()) {
    throw ContractError("tsaa_assign: offset count " + std::to_string(offsets.size()) +
                        " does not match anchor count " + std::to_string(anchors.size()));
  }
  check_scene(anchors, targets);
  const IouMatrix m = iou_matrix(anchors.boxes, targets);

  AssignmentLabeling out;
  out.anchor_count = anchors.size();
  out.target_count = targets.size();
  out.labels = stage1_labels(m, cfg, gate);
  apply_forced(out.labels, forced_pairs(m, gate ? &gate->forced : nullptr));

  // Stage 2: reassign every non-frozen stage-1 positive by its prediction box.
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    AnchorLabel& label = out.labels[i];
    if (label.kind != AnchorLabel::Kind::Positive || label.provenance != Provenance::Stage1) {
      continue;
    }
    const Box prediction = decode_offset(codec, anchors, i, offsets[i]);
    int best = -1;
    double best_score = 0.0;
    for (std::size_t j = 0; j < targets.size(); ++j) {
      if (gate && !gate->forced.at(i, j)) continue;
      double score = iou(prediction, targets[j]);
      if (cfg.mode == AssignMode::TwoStage) {
        score += m.at(i, j);
      }
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(j);
      }
    }
    if (best >= 0) {
      label.target = best;
      label.provenance = Provenance::Stage2Adaptive;
    }
    // else: prediction overlaps no admissible target; the stage-1 verdict stands
  }
  return out;
}

std::vector<TargetOffset> build_targets(const AssignmentLabeling& labeling,
                                        const AnchorSet& anchors, std::span<const Box> targets,
                                        CodecKind codec) {
  if (labeling.anchor_count != anchors.size() || labeling.target_count != targets.size()) {
    throw ContractError("build_targets: labeling shape does not match anchors/targets");
  }
  std::vector<TargetOffset> out;
  for (std::size_t i = 0; i < labeling.labels.size(); ++i) {
    const AnchorLabel& label = labeling.labels[i];
    if (label.kind != AnchorLabel::Kind::Positive) continue;
    out.push_back({i, encode_target(codec, anchors, i, targets[label.target])});
  }
  return out;
}

LabelingSummary summarize(const AssignmentLabeling& labeling) {
  LabelingSummary s;
  for (const AnchorLabel& label : labeling.labels) {
    switch (label.kind) {
      case AnchorLabel::Kind::Positive:
        switch (label.provenance) {
          case Provenance::LowQuality: ++s.low_quality; break;
          case Provenance::Stage1: ++s.stage1; break;
          case Provenance::Stage2Adaptive: ++s.stage2_adaptive; break;
        }
        break;
      case AnchorLabel::Kind::Negative: ++s.negative; break;
      case AnchorLabel::Kind::Ignore: ++s.ignored; break;
    }
  }
  return s;
}

}  // namespace driftlab
