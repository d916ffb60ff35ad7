#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "driftlab/geometry.hpp"

namespace driftlab {

/// A set of ground-truth boxes inside a bounded region; the unit of
/// generation, training and evaluation.
struct Scene {
  std::string id;
  double scene_w = 0;
  double scene_h = 0;
  std::vector<Box> gt_boxes;

  /// Throws ValidationError when the scene is empty or a box leaves the
  /// scene bounds.
  void validate() const;
};

/// Controls for the synthetic crowd generator. Sizes are log-normal over
/// box height, aspects log-normal over H/W; target_dense_pairs is the
/// expected per-scene count of ground-truth pairs with IoU > 0.5.
struct SceneGenConfig {
  double scene_w = 64;
  double scene_h = 64;
  double mean_instances = 14;
  double target_dense_pairs = 2.4;
  double aspect_mu = 0.79;   // ln 2.2: person-like tall boxes
  double aspect_sigma = 0.2;
  double size_mu = 2.48;     // ln 12 scene units of height
  double size_sigma = 0.25;
  int cluster_count = 4;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Number of unordered box pairs with IoU > 0.5.
int dense_pair_count(std::span<const Box> boxes);

/// Deterministic function of (cfg, n): instance counts Poisson around
/// mean_instances, placements clustered, then per scene an adjustment loop
/// contracts boxes toward their cluster (or spreads the densest pair apart)
/// until the scene hits its drawn dense-pair quota. Fails with
/// GenerationError when the batch-average dense-pair count ends outside
/// +-20% of target_dense_pairs.
std::vector<Scene> generate_scenes(const SceneGenConfig& cfg, int n);

struct CrowdStats {
  double mean_instances = 0;
  double mean_dense_pairs = 0;
};

CrowdStats crowdedness_stats(std::span<const Scene> scenes);

/// Scene file round trip (JSON). Reading validates every scene invariant;
/// malformed files raise ParseError with location context.
void write_scenes(std::span<const Scene> scenes, const std::filesystem::path& path);
std::vector<Scene> read_scenes(const std::filesystem::path& path);

}  // namespace driftlab
