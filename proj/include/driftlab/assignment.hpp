#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "driftlab/anchors.hpp"
#include "driftlab/codec.hpp"
#include "driftlab/geometry.hpp"

namespace driftlab {

/// How an anchor earned its positive label: forced low-quality match (frozen
/// for the whole training run), first-stage anchor-IoU judgment, or adaptive
/// second-stage reassignment from its prediction box.
enum class Provenance { LowQuality, Stage1, Stage2Adaptive };

struct AnchorLabel {
  enum class Kind { Positive, Negative, Ignore };
  Kind kind = Kind::Negative;
  int target = -1;                             // valid when Positive
  Provenance provenance = Provenance::Stage1;  // valid when Positive
};

/// Per-anchor verdicts for one scene.
struct AssignmentLabeling {
  std::vector<AnchorLabel> labels;
  std::size_t anchor_count = 0;
  std::size_t target_count = 0;
};

/// Verdict equality: kind and assigned target, ignoring provenance (which
/// records how the verdict was reached, not what it is).
bool same_verdict(const AnchorLabel& a, const AnchorLabel& b);

enum class AssignMode { OneStage, TwoStage };

struct AssignerConfig {
  double nt_pos = 0.5;      // positive threshold (N_t1)
  double nt_neg = 0.4;      // negative threshold (N_t2)
  double nt_proposal = 0.5; // proposal threshold for two-stage-detector configs (N_t3)
  double r_t = 4.0;         // extent-ratio bound of the YOLO positivity rule
  AssignMode mode = AssignMode::OneStage;
  // Improved YOLO rule (extent ratio AND same cell) when true; the plain
  // center-in-cell rule when false.
  bool yolo_use_ratio_condition = true;

  void validate() const;
};

struct BoolMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<char> values;

  bool at(std::size_t i, std::size_t j) const { return values[i * n_cols + j] != 0; }
};

/// Anchor-target admissibility for sigmoid-codec runs. `positive` gates the
/// stage-1 positivity judgment (YOLO rule); `forced` (same-cell only) gates
/// forced matches and stage-2 reassignment so every assigned target stays
/// encodable by the sigmoid codec.
struct AssignmentGate {
  BoolMatrix positive;
  BoolMatrix forced;
};

/// Per-(anchor, target) positivity of the YOLO rule: extent ratios within
/// r_t (when enabled) and anchor/target centers in the same grid cell.
/// Requires anchor cell metadata.
BoolMatrix yolo_positive_mask(const AnchorSet& anchors, std::span<const Box> targets,
                              const AssignerConfig& cfg);

AssignmentGate make_sigmoid_gate(const AnchorSet& anchors, std::span<const Box> targets,
                                 const AssignerConfig& cfg);

/// One forced (target, anchor) pair per target, pairs unique. Claims resolve
/// in globally decreasing IoU priority (ties to the lower target index, then
/// anchor index): an anchor contested by several targets goes to the higher
/// IoU and losers take their best anchor among those still unclaimed at
/// their turn. With `candidates` set, each target only considers anchors
/// admissible for it. Throws InfeasibilityError when a target runs out of
/// admissible unclaimed anchors.
std::vector<std::pair<int, int>> low_quality_match(const AnchorSet& anchors,
                                                   std::span<const Box> targets,
                                                   const BoolMatrix* candidates = nullptr);

/// Fixed max-IoU assignment: per anchor, positive toward the argmax target
/// when its best IoU reaches nt_pos, negative below nt_neg, ignored in
/// between; then forced low-quality pairs override. With a gate, stage-1
/// positivity follows the gate's `positive` mask (no ignore band) and forced
/// matches are restricted to `forced`.
AssignmentLabeling baseline_assign(const AnchorSet& anchors, std::span<const Box> targets,
                                   const AssignerConfig& cfg,
                                   const AssignmentGate* gate = nullptr);

/// Two-stage adaptive assignment: stage-1 positivity and forced low-quality
/// pairs are judged on the raw anchors exactly as baseline_assign; every
/// remaining stage-1 positive is then reassigned to the target its decoded
/// prediction box overlaps the most (prediction IoU alone in OneStage mode,
/// prediction IoU + anchor IoU in TwoStage mode). An anchor whose prediction
/// overlaps no admissible target keeps its stage-1 target; Stage2Adaptive
/// provenance therefore implies a strictly positive reassignment score.
AssignmentLabeling tsaa_assign(const AnchorSet& anchors, std::span<const OffsetVector> offsets,
                               std::span<const Box> targets, const AssignerConfig& cfg,
                               CodecKind codec, const AssignmentGate* gate = nullptr);

struct TargetOffset {
  std::size_t anchor_index;
  OffsetVector offsets;
};

/// Regression targets for every positive anchor: encode(anchor, assigned
/// target) under the given codec, in anchor order. Sigmoid-codec domain
/// errors propagate; they signal an assignment that violated the cell
/// constraint.
std::vector<TargetOffset> build_targets(const AssignmentLabeling& labeling,
                                        const AnchorSet& anchors, std::span<const Box> targets,
                                        CodecKind codec);

struct LabelingSummary {
  std::size_t low_quality = 0;
  std::size_t stage1 = 0;
  std::size_t stage2_adaptive = 0;
  std::size_t negative = 0;
  std::size_t ignored = 0;
};

LabelingSummary summarize(const AssignmentLabeling& labeling);

}  // namespace driftlab
