#include "driftlab/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "driftlab/error.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

constexpr double kBoundsSlack = 1e-9;

struct Placement {
  std::vector<Box> boxes;
  std::vector<int> cluster_of;
};

double clamp(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

Box clamp_into_scene(double cx, double cy, double w, double h, const SceneGenConfig& cfg) {
  w = clamp(w, 1.0, 0.6 * cfg.scene_w);
  h = clamp(h, 1.0, 0.6 * cfg.scene_h);
  cx = clamp(cx, w / 2, cfg.scene_w - w / 2);
  cy = clamp(cy, h / 2, cfg.scene_h - h / 2);
  return Box(cx, cy, w, h);
}

// One contraction step: every box moves toward the centroid of its cluster's
// member centers.
void contract_clusters(Placement& p, int n_clusters, double factor,
                       const SceneGenConfig& cfg) {
  std::vector<double> sum_x(n_clusters, 0), sum_y(n_clusters, 0);
  std::vector<int> count(n_clusters, 0);
  for (std::size_t i = 0; i < p.boxes.size(); ++i) {
    sum_x[p.cluster_of[i]] += p.boxes[i].cx;
    sum_y[p.cluster_of[i]] += p.boxes[i].cy;
    ++count[p.cluster_of[i]];
  }
  for (std::size_t i = 0; i < p.boxes.size(); ++i) {
    const int c = p.cluster_of[i];
    if (count[c] < 2) continue;
    const double gx = sum_x[c] / count[c];
    const double gy = sum_y[c] / count[c];
    const Box& b = p.boxes[i];
    p.boxes[i] = clamp_into_scene(gx + (b.cx - gx) * factor, gy + (b.cy - gy) * factor, b.w,
                                  b.h, cfg);
  }
}

// Merge all clusters toward the global centroid; used once local contraction
// saturates without reaching the quota.
void contract_global(Placement& p, double factor, const SceneGenConfig& cfg) {
  double gx = 0, gy = 0;
  for (const Box& b : p.boxes) {
    gx += b.cx;
    gy += b.cy;
  }
  gx /= static_cast<double>(p.boxes.size());
  gy /= static_cast<double>(p.boxes.size());
  for (Box& b : p.boxes) {
    b = clamp_into_scene(gx + (b.cx - gx) * factor, gy + (b.cy - gy) * factor, b.w, b.h, cfg);
  }
}

// Push the two boxes of the currently densest pair apart.
void separate_densest_pair(Placement& p, const SceneGenConfig& cfg) {
  int bi = -1, bj = -1;
  double best = 0.5;
  for (std::size_t i = 0; i < p.boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < p.boxes.size(); ++j) {
      const double v = iou(p.boxes[i], p.boxes[j]);
      if (v > best) {
        best = v;
        bi = static_cast<int>(i);
        bj = static_cast<int>(j);
      }
    }
  }
  if (bi < 0) return;
  Box& a = p.boxes[bi];
  Box& b = p.boxes[bj];
  double dx = b.cx - a.cx;
  double dy = b.cy - a.cy;
  const double norm = std::hypot(dx, dy);
  if (norm < 1e-9) {
    dx = 1.0;
    dy = 0.0;
  } else {
    dx /= norm;
    dy /= norm;
  }
  const double step = 0.08 * (a.w + a.h + b.w + b.h) / 4.0;
  a = clamp_into_scene(a.cx - dx * step, a.cy - dy * step, a.w, a.h, cfg);
  b = clamp_into_scene(b.cx + dx * step, b.cy + dy * step, b.w, b.h, cfg);
}

Scene generate_one(const SceneGenConfig& cfg, int index) {
  Rng rng(Rng::mix(cfg.seed, static_cast<std::uint64_t>(index) + 1));

  const int n_inst = std::max(1, rng.poisson(cfg.mean_instances));
  const int n_clusters = std::max(1, std::min(cfg.cluster_count, n_inst));

  const double margin_x = cfg.scene_w / 8;
  const double margin_y = cfg.scene_h / 8;
  std::vector<std::pair<double, double>> centers(n_clusters);
  for (auto& c : centers) {
    c = {rng.uniform(margin_x, cfg.scene_w - margin_x),
         rng.uniform(margin_y, cfg.scene_h - margin_y)};
  }

  Placement p;
  const double jitter = std::min(cfg.scene_w, cfg.scene_h) / 5.0;
  for (int i = 0; i < n_inst; ++i) {
    const int c = i % n_clusters;
    const double h = rng.lognormal(cfg.size_mu, cfg.size_sigma);
    const double aspect = clamp(rng.lognormal(cfg.aspect_mu, cfg.aspect_sigma), 0.5, 6.0);
    const double cx = centers[c].first + rng.normal(0, jitter);
    const double cy = centers[c].second + rng.normal(0, jitter);
    p.boxes.push_back(clamp_into_scene(cx, cy, h / aspect, h, cfg));
    p.cluster_of.push_back(c);
  }

  // Randomized rounding keeps the batch mean on target for fractional quotas.
  const double frac = cfg.target_dense_pairs - std::floor(cfg.target_dense_pairs);
  int quota = static_cast<int>(std::floor(cfg.target_dense_pairs)) +
              (rng.uniform() < frac ? 1 : 0);
  // Some drawn size pairs cannot exceed IoU 0.5 at any placement (the bound
  // at coincident centers is the overlap of the size rectangles); cap the
  // quota at what these boxes can actually form.
  int feasible = 0;
  for (std::size_t i = 0; i < p.boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < p.boxes.size(); ++j) {
      const Box& a = p.boxes[i];
      const Box& b = p.boxes[j];
      const double inter = std::min(a.w, b.w) * std::min(a.h, b.h);
      if (inter / (a.area() + b.area() - inter) > 0.5) ++feasible;
    }
  }
  quota = std::min(quota, feasible);

  Placement best = p;
  int best_pairs = dense_pair_count(p.boxes);
  int best_gap = std::abs(best_pairs - quota);
  for (int iter = 0; iter < 600 && best_gap > 0; ++iter) {
    const int pairs = dense_pair_count(p.boxes);
    if (pairs < quota) {
      contract_clusters(p, n_clusters, 0.9, cfg);
      if (iter % 10 == 9) contract_global(p, 0.93, cfg);
    } else if (pairs > quota) {
      separate_densest_pair(p, cfg);
    }
    const int now = dense_pair_count(p.boxes);
    const int gap = std::abs(now - quota);
    // ties prefer the denser state: quotas between reachable counts would
    // otherwise bias the batch mean low
    if (gap < best_gap || (gap == best_gap && now > best_pairs)) {
      best_gap = gap;
      best_pairs = now;
      best = p;
    }
  }

  Scene scene;
  scene.scene_w = cfg.scene_w;
  scene.scene_h = cfg.scene_h;
  scene.gt_boxes = std::move(best.boxes);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04d", index);
  scene.id = buf;
  return scene;
}

nlohmann::json scene_to_json(const Scene& s) {
  nlohmann::json boxes = nlohmann::json::array();
  for (const Box& b : s.gt_boxes) {
    boxes.push_back({b.cx, b.cy, b.w, b.h});
  }
  return {{"id", s.id}, {"w", s.scene_w}, {"h", s.scene_h}, {"boxes", std::move(boxes)}};
}

Scene scene_from_json(const nlohmann::json& j, std::size_t index) {
  const std::string where = "scenes[" + std::to_string(index) + "]";
  if (!j.is_object() || !j.contains("id") || !j.contains("w") || !j.contains("h") ||
      !j.contains("boxes")) {
    throw ParseError(where + ": expected object with id, w, h, boxes");
  }
  Scene s;
  try {
    s.id = j.at("id").get<std::string>();
    s.scene_w = j.at("w").get<double>();
    s.scene_h = j.at("h").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  const nlohmann::json& boxes = j.at("boxes");
  if (!boxes.is_array()) {
    throw ParseError(where + ".boxes: expected array");
  }
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    const nlohmann::json& b = boxes[k];
    if (!b.is_array() || b.size() != 4 || !b[0].is_number() || !b[1].is_number() ||
        !b[2].is_number() || !b[3].is_number()) {
      throw ParseError(where + ".boxes[" + std::to_string(k) +
                       "]: expected [cx, cy, w, h] numbers");
    }
    s.gt_boxes.emplace_back(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                            b[3].get<double>());
  }
  return s;
}

}  // namespace

void Scene::validate() const {
  if (gt_boxes.empty()) {
    throw ValidationError("scene '" + id + "' has no boxes");
  }
  if (!(scene_w > 0) || !(scene_h > 0)) {
    throw ValidationError("scene '" + id + "' has non-positive dimensions");
  }
  const double slack = kBoundsSlack * std::max({1.0, scene_w, scene_h});
  for (const Box& b : gt_boxes) {
    if (b.x1() < -slack || b.y1() < -slack || b.x2() > scene_w + slack ||
        b.y2() > scene_h + slack) {
      throw ValidationError("scene '" + id + "': box outside scene bounds");
    }
  }
}

void SceneGenConfig::validate() const {
  if (!(scene_w > 0) || !(scene_h > 0)) throw ConfigError("scene dimensions must be positive");
  if (!(mean_instances > 0)) throw ConfigError("mean_instances must be positive");
  if (!(target_dense_pairs >= 0)) throw ConfigError("target_dense_pairs must be >= 0");
  if (!(aspect_sigma >= 0) || !(size_sigma >= 0)) {
    throw ConfigError("log-normal sigmas must be >= 0");
  }
  if (cluster_count < 1) throw ConfigError("cluster_count must be >= 1");
}

int dense_pair_count(std::span<const Box> boxes) {
  int count = 0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (iou(boxes[i], boxes[j]) > 0.5) ++count;
    }
  }
  return count;
}

std::vector<Scene> generate_scenes(const SceneGenConfig& cfg, int n) {
  cfg.validate();
  if (n < 1) throw ConfigError("scene count must be >= 1");

  std::vector<Scene> scenes;
  scenes.reserve(n);
  double pair_sum = 0;
  for (int i = 0; i < n; ++i) {
    scenes.push_back(generate_one(cfg, i));
    pair_sum += dense_pair_count(scenes.back().gt_boxes);
  }

  const double mean_pairs = pair_sum / n;
  if (cfg.target_dense_pairs == 0) {
    if (mean_pairs != 0) {
      throw GenerationError("dense-pair target 0 unreachable: generated batch averages " +
                            std::to_string(mean_pairs) + " pairs per scene");
    }
  } else if (std::abs(mean_pairs - cfg.target_dense_pairs) > 0.2 * cfg.target_dense_pairs) {
    throw GenerationError("dense-pair target " + std::to_string(cfg.target_dense_pairs) +
                          " unreachable at this density: batch mean " +
                          std::to_string(mean_pairs) + " per scene");
  }
  return scenes;
}

CrowdStats crowdedness_stats(std::span<const Scene> scenes) {
  CrowdStats stats;
  if (scenes.empty()) return stats;
  for (const Scene& s : scenes) {
    stats.mean_instances += static_cast<double>(s.gt_boxes.size());
    stats.mean_dense_pairs += dense_pair_count(s.gt_boxes);
  }
  stats.mean_instances /= static_cast<double>(scenes.size());
  stats.mean_dense_pairs /= static_cast<double>(scenes.size());
  return stats;
}

void write_scenes(std::span<const Scene> scenes, const std::filesystem::path& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Scene& s : scenes) {
    arr.push_back(scene_to_json(s));
  }
  std::ofstream out(path);
  if (!out) {
    throw ParseError("cannot open '" + path.string() + "' for writing");
  }
  out << nlohmann::json{{"scenes", std::move(arr)}}.dump(1) << '\n';
}

std::vector<Scene> read_scenes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open scene file '" + path.string() + "'");
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("scenes") || !doc.at("scenes").is_array()) {
    throw ParseError(path.string() + ": expected top-level {\"scenes\": [...]}");
  }
  std::vector<Scene> scenes;
  const nlohmann::json& arr = doc.at("scenes");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    try {
      scenes.push_back(scene_from_json(arr[i], i));
      scenes.back().validate();
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ": scenes[" + std::to_string(i) + "]: " + e.what());
    }
  }
  return scenes;
}

}  // namespace driftlab
