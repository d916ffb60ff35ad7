#include <doctest.h>

#include <cmath>
#include <set>

#include "driftlab/assignment.hpp"
#include "driftlab/error.hpp"
#include "driftlab/rng.hpp"
#include "oracles.hpp"

using namespace driftlab;

namespace {

AnchorSet make_anchor_set(const std::vector<Box>& boxes, double stride = 8.0) {
  AnchorSet set;
  for (const Box& b : boxes) {
    set.boxes.push_back(b);
    set.cell_origin.push_back(
        {std::floor(b.cx / stride) * stride, std::floor(b.cy / stride) * stride});
    set.stride_of.push_back(stride);
  }
  return set;
}

AssignerConfig retina_cfg() {
  AssignerConfig cfg;
  cfg.nt_pos = 0.5;
  cfg.nt_neg = 0.4;
  return cfg;
}

}  // namespace

TEST_CASE("single anchor matching its target is positive toward it") {
  const AnchorSet anchors = make_anchor_set({Box(10, 10, 6, 6)});
  const std::vector<Box> targets{Box(10, 10, 6, 6)};
  const AssignmentLabeling out = baseline_assign(anchors, targets, retina_cfg());
  REQUIRE(out.labels.size() == 1);
  CHECK(out.labels[0].kind == AnchorLabel::Kind::Positive);
  CHECK(out.labels[0].target == 0);
  // the target's best anchor is also its forced match, so it stays frozen
  CHECK(out.labels[0].provenance == Provenance::LowQuality);
}

TEST_CASE("best IoU inside the threshold band is ignored") {
  // anchor1 takes the forced match; anchor0 sits in the ignore band
  const Box target(10, 10, 8, 8);
  const Box band_anchor(10, 10 + 8 * (1 - 0.45) / (1 + 0.45), 8, 8);  // iou 0.45
  const AnchorSet anchors = make_anchor_set({band_anchor, Box(10, 10, 8, 8)});
  const std::vector<Box> targets{target};
  const AssignmentLabeling out = baseline_assign(anchors, targets, retina_cfg());
  CHECK(iou(band_anchor, target) == doctest::Approx(0.45).epsilon(1e-9));
  CHECK(out.labels[0].kind == AnchorLabel::Kind::Ignore);
  CHECK(out.labels[1].kind == AnchorLabel::Kind::Positive);
}

TEST_CASE("max IoU below the negative threshold is negative") {
  const AnchorSet anchors = make_anchor_set({Box(40, 40, 6, 6), Box(10, 10, 8, 8)});
  const std::vector<Box> targets{Box(10, 10, 8, 8)};
  const AssignmentLabeling out = baseline_assign(anchors, targets, retina_cfg());
  CHECK(out.labels[0].kind == AnchorLabel::Kind::Negative);
}

TEST_CASE("baseline matches the brute-force reimplementation") {
  Rng rng(51);
  for (int trial = 0; trial < 60; ++trial) {
    const oracles::RandomInstance inst = oracles::random_instance(rng, 20, 5);
    const AssignmentLabeling out = baseline_assign(inst.anchors, inst.targets, retina_cfg());
    const std::vector<oracles::BruteLabel> expected =
        oracles::brute_baseline(inst.anchors, inst.targets, retina_cfg());
    REQUIRE(out.labels.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(oracles::matches(expected[i], out.labels[i]));
    }
  }
}

TEST_CASE("low-quality matching on a block-diagonal instance") {
  const AnchorSet anchors = make_anchor_set({Box(10, 10, 8, 8), Box(40, 40, 8, 8)});
  const std::vector<Box> targets{Box(11, 10, 8, 8), Box(41, 40, 8, 8)};
  const auto pairs = low_quality_match(anchors, targets);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::pair<int, int>{0, 0});
  CHECK(pairs[1] == std::pair<int, int>{1, 1});
}

TEST_CASE("contested anchor goes to the higher-IoU target") {
  // anchor0 is the argmax anchor of both targets; target0 overlaps it more,
  // so target1 falls back to anchor1. Enumerated by hand:
  //   iou(a0,t0)=56/72, iou(a0,t1)=48/80, iou(a1,t1)=32/96, iou(a1,t0)=8/120
  const AnchorSet anchors =
      make_anchor_set({Box(12, 10, 8, 8), Box(18, 10, 8, 8), Box(40, 40, 8, 8)});
  const std::vector<Box> targets{Box(11, 10, 8, 8), Box(14, 10, 8, 8)};
  CHECK(iou(anchors.boxes[0], targets[0]) > iou(anchors.boxes[0], targets[1]));
  CHECK(iou(anchors.boxes[1], targets[1]) > iou(anchors.boxes[2], targets[1]));

  const auto pairs = low_quality_match(anchors, targets);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::pair<int, int>{0, 0});
  CHECK(pairs[1] == std::pair<int, int>{1, 1});
}

TEST_CASE("low-quality matching agrees with the globally greedy oracle") {
  Rng rng(52);
  for (int trial = 0; trial < 100; ++trial) {
    const oracles::RandomInstance inst = oracles::random_instance(rng, 25, 6);
    const auto ours = low_quality_match(inst.anchors, inst.targets);
    const auto ref = oracles::brute_low_quality(inst.anchors, inst.targets);
    CHECK(ours == ref);

    // pairs unique, one per target
    std::set<int> anchors_used;
    for (const auto& [t, a] : ours) anchors_used.insert(a);
    CHECK(anchors_used.size() == inst.targets.size());
  }
}

TEST_CASE("every target keeps a positive anchor after either assigner") {
  Rng rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    const oracles::RandomInstance inst = oracles::random_instance(rng, 25, 6);
    for (bool tsaa : {false, true}) {
      const AssignmentLabeling out =
          tsaa ? tsaa_assign(inst.anchors, inst.offsets, inst.targets, retina_cfg(),
                             CodecKind::Linear)
               : baseline_assign(inst.anchors, inst.targets, retina_cfg());
      std::vector<char> covered(inst.targets.size(), 0);
      for (const AnchorLabel& label : out.labels) {
        if (label.kind == AnchorLabel::Kind::Positive) covered[label.target] = 1;
      }
      for (char c : covered) CHECK(c == 1);
    }
  }
}

TEST_CASE("fewer anchors than targets is infeasible") {
  const AnchorSet anchors = make_anchor_set({Box(10, 10, 8, 8)});
  const std::vector<Box> targets{Box(10, 10, 8, 8), Box(40, 40, 8, 8)};
  CHECK_THROWS_AS(low_quality_match(anchors, targets), InfeasibilityError);
  CHECK_THROWS_AS(baseline_assign(anchors, targets, retina_cfg()), InfeasibilityError);
}

TEST_CASE("empty target list is rejected") {
  const AnchorSet anchors = make_anchor_set({Box(10, 10, 8, 8)});
  const std::vector<Box> none;
  CHECK_THROWS_AS(baseline_assign(anchors, none, retina_cfg()), EmptySceneError);
  const std::vector<OffsetVector> offsets(1);
  CHECK_THROWS_AS(tsaa_assign(anchors, offsets, none, retina_cfg(), CodecKind::Linear),
                  EmptySceneError);
}

TEST_CASE("offset count must match anchor count") {
  const AnchorSet anchors = make_anchor_set({Box(10, 10, 8, 8), Box(20, 10, 8, 8)});
  const std::vector<Box> targets{Box(10, 10, 8, 8)};
  const std::vector<OffsetVector> offsets(1);
  CHECK_THROWS_AS(tsaa_assign(anchors, offsets, targets, retina_cfg(), CodecKind::Linear),
                  ContractError);
}

TEST_CASE("yolo positivity rule") {
  AssignerConfig cfg = retina_cfg();
  cfg.r_t = 4.0;

  const AnchorSet anchors = make_anchor_set({Box(12, 12, 6, 10)});
  SUBCASE("anchor equal to target in the same cell") {
    const std::vector<Box> targets{Box(12, 12, 6, 10)};
    const BoolMatrix mask = yolo_positive_mask(anchors, targets, cfg);
    CHECK(mask.at(0, 0));
  }
  SUBCASE("extent ratio beyond r_t fails") {
    const std::vector<Box> targets{Box(12, 12, 1.2, 10)};  // width ratio 5
    const BoolMatrix mask = yolo_positive_mask(anchors, targets, cfg);
    CHECK_FALSE(mask.at(0, 0));
  }
  SUBCASE("target center in the adjacent cell fails") {
    const std::vector<Box> targets{Box(17, 12, 6, 10)};  // cell x=2 vs anchor cell x=1
    const BoolMatrix mask = yolo_positive_mask(anchors, targets, cfg);
    CHECK_FALSE(mask.at(0, 0));
  }
  SUBCASE("cell-only toggle admits bad ratios in the same cell") {
    cfg.yolo_use_ratio_condition = false;
    const std::vector<Box> targets{Box(12, 12, 1.2, 10)};
    const BoolMatrix mask = yolo_positive_mask(anchors, targets, cfg);
    CHECK(mask.at(0, 0));
  }
}

TEST_CASE("tsaa with zero offsets reduces to the baseline") {
  Rng rng(54);
  for (int trial = 0; trial < 100; ++trial) {
    const oracles::RandomInstance inst = oracles::random_instance(rng, 25, 6);
    const std::vector<OffsetVector> zeros(inst.anchors.size());
    const AssignmentLabeling base = baseline_assign(inst.anchors, inst.targets, retina_cfg());
    const AssignmentLabeling adaptive =
        tsaa_assign(inst.anchors, zeros, inst.targets, retina_cfg(), CodecKind::Linear);
    REQUIRE(base.labels.size() == adaptive.labels.size());
    for (std::size_t i = 0; i < base.labels.size(); ++i) {
      CHECK(same_verdict(base.labels[i], adaptive.labels[i]));
    }
  }
}

TEST_CASE("drifted prediction is reassigned to the object it overlaps") {
  // anchorB and anchorA pin the forced matches; the drifter overlaps target B
  // (iou 0.6) but its prediction decodes onto target A.
  const Box target_a(20, 10, 8, 8);
  const Box target_b(10, 10, 8, 8);
  const AnchorSet anchors =
      make_anchor_set({Box(10, 10, 8, 8), Box(20, 10, 8, 8), Box(12, 10, 8, 8)});
  const std::vector<Box> targets{target_a, target_b};
  CHECK(iou(anchors.boxes[2], target_b) == doctest::Approx(0.6));
  CHECK(iou(anchors.boxes[2], target_a) == 0.0);

  SUBCASE("one-stage: prediction IoU alone decides") {
    // tx = (20-12)/8 moves the drifter's prediction exactly onto A
    const std::vector<OffsetVector> offsets{{0, 0, 0, 0}, {0, 0, 0, 0}, {1.0, 0, 0, 0}};
    const AssignmentLabeling out =
        tsaa_assign(anchors, offsets, targets, retina_cfg(), CodecKind::Linear);
    CHECK(out.labels[2].kind == AnchorLabel::Kind::Positive);
    CHECK(out.labels[2].target == 0);
    CHECK(out.labels[2].provenance == Provenance::Stage2Adaptive);
    // frozen forced matches stay put
    CHECK(out.labels[0].provenance == Provenance::LowQuality);
    CHECK(out.labels[0].target == 1);
    CHECK(out.labels[1].provenance == Provenance::LowQuality);
    CHECK(out.labels[1].target == 0);
  }

  SUBCASE("two-stage: anchor IoU dominance keeps the stage-1 target") {
    // prediction center 17: iou(p,A)=40/88, iou(p,B)=8/120; adding anchor
    // IoU gives B 0.6667 vs A 0.4545
    const std::vector<OffsetVector> offsets{{0, 0, 0, 0}, {0, 0, 0, 0}, {0.625, 0, 0, 0}};
    AssignerConfig cfg = retina_cfg();

    cfg.mode = AssignMode::OneStage;
    const AssignmentLabeling one =
        tsaa_assign(anchors, offsets, targets, cfg, CodecKind::Linear);
    CHECK(one.labels[2].target == 0);

    cfg.mode = AssignMode::TwoStage;
    const AssignmentLabeling two =
        tsaa_assign(anchors, offsets, targets, cfg, CodecKind::Linear);
    CHECK(two.labels[2].target == 1);
    CHECK(two.labels[2].provenance == Provenance::Stage2Adaptive);
  }
}

TEST_CASE("tsaa matches the brute-force reimplementation") {
  Rng rng(55);
  for (int trial = 0; trial < 60; ++trial) {
    const oracles::RandomInstance inst = oracles::random_instance(rng, 20, 5);
    for (const AssignMode mode : {AssignMode::OneStage, AssignMode::TwoStage}) {
      for (const CodecKind codec : {CodecKind::Linear, CodecKind::Sigmoid}) {
        AssignerConfig cfg = retina_cfg();
        cfg.mode = mode;
        const AssignmentLabeling out =
            tsaa_assign(inst.anchors, inst.offsets, inst.targets, cfg, codec);
        const std::vector<oracles::BruteLabel> expected =
            oracles::brute_tsaa(inst.anchors, inst.offsets, inst.targets, cfg, codec);
        for (std::size_t i = 0; i < expected.size(); ++i) {
          CHECK(oracles::matches(expected[i], out.labels[i]));
        }
      }
    }
  }
}

TEST_CASE("stage 2 reassigns but never re-judges positivity") {
  Rng rng(56);
  for (int trial = 0; trial < 50; ++trial) {
    const oracles::RandomInstance inst = oracles::random_instance(rng, 25, 5);
    const AssignmentLabeling base = baseline_assign(inst.anchors, inst.targets, retina_cfg());
    const AssignmentLabeling adaptive =
        tsaa_assign(inst.anchors, inst.offsets, inst.targets, retina_cfg(), CodecKind::Linear);
    for (std::size_t i = 0; i < base.labels.size(); ++i) {
      CHECK((base.labels[i].kind == AnchorLabel::Kind::Positive) ==
            (adaptive.labels[i].kind == AnchorLabel::Kind::Positive));
    }
  }
}

TEST_CASE("tsaa postcondition: adaptive targets sit in the stage-2 argmax set") {
  Rng rng(57);
  for (int trial = 0; trial < 50; ++trial) {
    const oracles::RandomInstance inst = oracles::random_instance(rng, 25, 5);
    const AssignmentLabeling out =
        tsaa_assign(inst.anchors, inst.offsets, inst.targets, retina_cfg(), CodecKind::Linear);
    const auto forced = low_quality_match(inst.anchors, inst.targets);

    for (std::size_t i = 0; i < out.labels.size(); ++i) {
      const AnchorLabel& label = out.labels[i];
      if (label.kind != AnchorLabel::Kind::Positive) continue;
      if (label.provenance == Provenance::LowQuality) {
        bool found = false;
        for (const auto& [t, a] : forced) {
          if (a == static_cast<int>(i)) {
            CHECK(label.target == t);
            found = true;
          }
        }
        CHECK(found);
      } else if (label.provenance == Provenance::Stage2Adaptive) {
        const Box p = decode_offset(CodecKind::Linear, inst.anchors, i, inst.offsets[i]);
        double best = 0;
        for (const Box& t : inst.targets) best = std::max(best, iou(p, t));
        CHECK(best > 0.0);
        CHECK(iou(p, inst.targets[label.target]) == doctest::Approx(best));
      }
    }
  }
}

TEST_CASE("build_targets encodes exactly the positives") {
  const AnchorSet anchors =
      make_anchor_set({Box(10, 10, 8, 8), Box(40, 40, 6, 6), Box(11, 10, 8, 8)});
  const std::vector<Box> targets{Box(10, 10, 8, 8)};
  const AssignmentLabeling out = baseline_assign(anchors, targets, retina_cfg());
  REQUIRE(out.labels[1].kind == AnchorLabel::Kind::Negative);

  const std::vector<TargetOffset> offsets =
      build_targets(out, anchors, targets, CodecKind::Linear);
  // anchor 1 is negative and absent; anchor 0 encodes to zero offsets
  REQUIRE(offsets.size() == 2);
  CHECK(offsets[0].anchor_index == 0);
  CHECK(offsets[0].offsets == OffsetVector{0, 0, 0, 0});
  CHECK(offsets[1].anchor_index == 2);

  for (const TargetOffset& t : offsets) {
    const Box back = decode_offset(CodecKind::Linear, anchors, t.anchor_index, t.offsets);
    const Box assigned = targets[out.labels[t.anchor_index].target];
    CHECK(std::fabs(back.cx - assigned.cx) < 1e-9);
    CHECK(std::fabs(back.w - assigned.w) < 1e-9);
  }
}

TEST_CASE("sigmoid gate keeps every positive encodable") {
  Rng rng(58);
  AssignerConfig cfg = retina_cfg();
  const std::vector<std::pair<double, double>> priors{{5, 11}, {7, 15}, {4, 8}};
  const AnchorSet anchors = generate_prior_anchors(8, 8, 8, priors);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Box> targets;
    const int n = 1 + static_cast<int>(rng.uniform() * 5);
    for (int i = 0; i < n; ++i) targets.push_back(oracles::random_box(rng, 1, 63, 3, 14));

    const AssignmentGate gate = make_sigmoid_gate(anchors, targets, cfg);
    std::vector<OffsetVector> offsets;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      offsets.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.5, 0.5),
                         rng.uniform(-0.5, 0.5)});
    }
    for (const AssignmentLabeling& out :
         {baseline_assign(anchors, targets, cfg, &gate),
          tsaa_assign(anchors, offsets, targets, cfg, CodecKind::Sigmoid, &gate)}) {
      CHECK_NOTHROW(build_targets(out, anchors, targets, CodecKind::Sigmoid));
      // gated stage-1 has no ignore band
      for (const AnchorLabel& label : out.labels) {
        CHECK(label.kind != AnchorLabel::Kind::Ignore);
      }
    }
  }
}

TEST_CASE("gated positivity follows the mask") {
  AssignerConfig cfg = retina_cfg();
  const std::vector<std::pair<double, double>> priors{{6, 10}};
  const AnchorSet anchors = generate_prior_anchors(2, 1, 8, priors);
  // target center in cell 0, big overlap with nothing
  const std::vector<Box> targets{Box(4, 4, 6, 10)};
  const AssignmentGate gate = make_sigmoid_gate(anchors, targets, cfg);
  const AssignmentLabeling out = baseline_assign(anchors, targets, cfg, &gate);
  CHECK(out.labels[0].kind == AnchorLabel::Kind::Positive);
  CHECK(out.labels[1].kind == AnchorLabel::Kind::Negative);
}

TEST_CASE("labeling summary counts by provenance") {
  const AnchorSet anchors =
      make_anchor_set({Box(10, 10, 8, 8), Box(40, 40, 6, 6), Box(11, 10, 8, 8)});
  const std::vector<Box> targets{Box(10, 10, 8, 8)};
  const LabelingSummary s = summarize(baseline_assign(anchors, targets, retina_cfg()));
  CHECK(s.low_quality == 1);
  CHECK(s.stage1 == 1);
  CHECK(s.stage2_adaptive == 0);
  CHECK(s.negative == 1);
  CHECK(s.ignored == 0);
}
