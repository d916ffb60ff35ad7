#include <doctest.h>

#include <cmath>

#include "driftlab/error.hpp"
#include "driftlab/metrics.hpp"
#include "driftlab/rng.hpp"
#include "oracles.hpp"

using namespace driftlab;

namespace {

// One scene, two well-separated ground truths.
SceneBoxes two_gts() {
  return {{Box(10, 10, 4, 4), Box(30, 30, 4, 4)}};
}

SceneDetections perfect_for(const SceneBoxes& gts) {
  SceneDetections dets(gts.size());
  for (std::size_t s = 0; s < gts.size(); ++s) {
    for (const Box& g : gts[s]) dets[s].push_back({g, 1.0});
  }
  return dets;
}

}  // namespace

TEST_CASE("perfect detector scores ap=1 ji=1 mr2=0") {
  const SceneBoxes gts = two_gts();
  const SceneDetections dets = perfect_for(gts);
  CHECK(average_precision(dets, gts, 0.5) == doctest::Approx(1.0));
  CHECK(jaccard_index(dets, gts).gt_weighted == doctest::Approx(1.0));
  CHECK(log_average_miss_rate(dets, gts, 0.5).mr2 == 0.0);
}

TEST_CASE("empty detector scores ap=0 mr2=1") {
  const SceneBoxes gts = two_gts();
  const SceneDetections dets(1);
  CHECK(average_precision(dets, gts, 0.5) == 0.0);
  CHECK(log_average_miss_rate(dets, gts, 0.5).mr2 == doctest::Approx(1.0));
  CHECK(jaccard_index(dets, gts).gt_weighted == 0.0);
}

TEST_CASE("hand-evaluated three-detection AP fixture") {
  // TP @.9, FP @.8, TP @.7 over 2 GT. PR staircase: (r=.5,p=1), (r=.5,p=.5),
  // (r=1,p=2/3). 101-point AP = (51*1 + 50*(2/3))/101 = 253/303.
  const SceneBoxes gts = two_gts();
  SceneDetections dets(1);
  dets[0].push_back({Box(10, 10, 4, 4), 0.9});
  dets[0].push_back({Box(50, 50, 4, 4), 0.8});
  dets[0].push_back({Box(30, 30, 4, 4), 0.7});
  CHECK(average_precision(dets, gts, 0.5) == doctest::Approx(253.0 / 303.0).epsilon(1e-6));
}

TEST_CASE("hand-enumerated miss-rate sweep") {
  // Scene 1: GTs A,B with a TP @.9 and an FP @.8; scene 2: GT C with TP @.7.
  // Operating points (fppi, miss): (0,1) -> (0,2/3) -> (.5,2/3) -> (.5,1/3).
  // References below 0.5 pick miss 2/3 (7 of them), the rest pick 1/3.
  SceneBoxes gts{{Box(10, 10, 4, 4), Box(30, 30, 4, 4)}, {Box(20, 20, 4, 4)}};
  SceneDetections dets(2);
  dets[0].push_back({Box(10, 10, 4, 4), 0.9});
  dets[0].push_back({Box(50, 50, 4, 4), 0.8});
  dets[1].push_back({Box(20, 20, 4, 4), 0.7});

  const MissRateResult res = log_average_miss_rate(dets, gts, 0.5);
  for (int r = 0; r < 7; ++r) CHECK(res.detail[r] == doctest::Approx(2.0 / 3.0));
  for (int r = 7; r < 9; ++r) CHECK(res.detail[r] == doctest::Approx(1.0 / 3.0));
  const double expected =
      std::exp((7 * std::log(2.0 / 3.0) + 2 * std::log(1.0 / 3.0)) / 9.0);
  CHECK(res.mr2 == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("jaccard on a known 2-edge matching") {
  SceneBoxes gts{{Box(10, 10, 4, 4), Box(30, 30, 4, 4)}};
  SceneDetections dets(1);
  dets[0].push_back({Box(10, 10, 4, 4), 0.9});
  dets[0].push_back({Box(30, 30, 4, 4), 0.8});
  dets[0].push_back({Box(50, 50, 4, 4), 0.7});
  CHECK(jaccard_index(dets, gts).gt_weighted == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("jaccard uses maximum matching, not score-greedy matching") {
  // One detection overlaps both GTs and would grab the wrong one greedily;
  // maximum matching still pairs both.
  SceneBoxes gts{{Box(10, 10, 8, 8), Box(16, 10, 8, 8)}};
  SceneDetections dets(1);
  dets[0].push_back({Box(13, 10, 8, 8), 0.9});   // overlaps both
  dets[0].push_back({Box(10, 10, 8, 8), 0.2});   // only GT0
  const double ji = jaccard_index(dets, gts, 0.4).gt_weighted;
  CHECK(ji == doctest::Approx(2.0 / 2.0));  // |M|=2, |D|+|G|-|M| = 2
}

TEST_CASE("metrics depend only on score ranks") {
  Rng rng(61);
  SceneBoxes gts(3);
  SceneDetections dets(3);
  for (int s = 0; s < 3; ++s) {
    for (int g = 0; g < 4; ++g) gts[s].push_back(oracles::random_box(rng, 0, 40, 3, 10));
    for (int d = 0; d < 6; ++d) {
      dets[s].push_back({oracles::random_box(rng, 0, 40, 3, 10), rng.uniform(0.2, 1.0)});
    }
  }
  SceneDetections scaled = dets;
  for (auto& scene : scaled) {
    for (Detection& d : scene) d.score *= 0.37;
  }
  CHECK(average_precision(dets, gts, 0.5) == average_precision(scaled, gts, 0.5));
  CHECK(log_average_miss_rate(dets, gts, 0.5).mr2 ==
        log_average_miss_rate(scaled, gts, 0.5).mr2);
  CHECK(jaccard_index(dets, gts).gt_weighted == jaccard_index(scaled, gts).gt_weighted);
}

TEST_CASE("removing a spurious false positive never hurts AP or JI") {
  const SceneBoxes gts = two_gts();
  SceneDetections with_fp(1);
  with_fp[0].push_back({Box(10, 10, 4, 4), 0.9});
  with_fp[0].push_back({Box(50, 50, 4, 4), 0.85});  // spurious
  with_fp[0].push_back({Box(30, 30, 4, 4), 0.8});
  SceneDetections without = with_fp;
  without[0].erase(without[0].begin() + 1);

  CHECK(average_precision(without, gts, 0.5) >= average_precision(with_fp, gts, 0.5));
  CHECK(jaccard_index(without, gts).gt_weighted >= jaccard_index(with_fp, gts).gt_weighted);
}

TEST_CASE("converting a miss into a hit never raises mr2") {
  const SceneBoxes gts = two_gts();
  SceneDetections partial(1);
  partial[0].push_back({Box(10, 10, 4, 4), 0.9});
  partial[0].push_back({Box(50, 50, 4, 4), 0.5});  // FP
  SceneDetections full = partial;
  full[0].push_back({Box(30, 30, 4, 4), 0.7});  // former FN now matched

  CHECK(log_average_miss_rate(full, gts, 0.5).mr2 <=
        log_average_miss_rate(partial, gts, 0.5).mr2);
}

TEST_CASE("mitp basics") {
  const std::vector<Box> preds{Box(10, 10, 4, 4), Box(30, 30, 4, 4)};
  CHECK(mitp(preds, preds) == doctest::Approx(1.0));

  const std::vector<Box> drifted{Box(10, 10, 4, 4), Box(90, 90, 4, 4)};
  CHECK(mitp(drifted, preds) == 0.0);

  Rng rng(62);
  std::vector<Box> a, b;
  double expected = 1.0;
  for (int i = 0; i < 5; ++i) {
    a.push_back(oracles::random_box(rng));
    b.push_back(oracles::random_box(rng));
    expected = std::min(expected, iou(a.back(), b.back()));
  }
  CHECK(mitp(a, b) == doctest::Approx(expected));

  CHECK_THROWS_AS(mitp({}, {}), UndefinedMetricError);
  CHECK_THROWS_AS(mitp(a, preds), ContractError);
}

TEST_CASE("coco-style AP averages over thresholds") {
  const SceneBoxes gts = two_gts();
  CHECK(average_precision_coco(perfect_for(gts), gts) == doctest::Approx(1.0));

  // a detection matching only loosely passes low thresholds and fails high ones
  SceneDetections loose(1);
  loose[0].push_back({Box(10.8, 10, 4, 4), 0.9});
  loose[0].push_back({Box(30, 30, 4, 4), 0.8});
  const double coco = average_precision_coco(loose, gts);
  const double at50 = average_precision(loose, gts, 0.5);
  CHECK(coco < at50);
  CHECK(coco > 0.0);
}

TEST_CASE("metrics reject zero ground truth") {
  const SceneBoxes gts(2);  // two scenes, no boxes
  const SceneDetections dets(2);
  CHECK_THROWS_AS(average_precision(dets, gts, 0.5), UndefinedMetricError);
  CHECK_THROWS_AS(log_average_miss_rate(dets, gts, 0.5), UndefinedMetricError);
  CHECK_THROWS_AS(jaccard_index(dets, gts), UndefinedMetricError);
}

TEST_CASE("evaluate bundles the three metrics") {
  const SceneBoxes gts = two_gts();
  const SceneDetections dets = perfect_for(gts);
  const EvalResult res = evaluate(dets, gts, 0.5);
  CHECK(res.ap == doctest::Approx(1.0));
  CHECK(res.ji == doctest::Approx(1.0));
  CHECK(res.mr2 == 0.0);
  for (double v : res.detail) CHECK(v == 0.0);
}
