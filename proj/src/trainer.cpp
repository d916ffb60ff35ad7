#include "driftlab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "driftlab/error.hpp"
#include "driftlab/metrics.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

// Exact area of the union of boxes restricted to [x0,x1]x[y0,y1], by
// coordinate compression over the clipped rectangles.
double union_area_in_cell(std::span<const Box> boxes, double x0, double y0, double x1,
                          double y1) {
  std::vector<std::array<double, 4>> rects;
  std::vector<double> xs{x0, x1};
  std::vector<double> ys{y0, y1};
  for (const Box& b : boxes) {
    const double rx0 = std::max(b.x1(), x0);
    const double ry0 = std::max(b.y1(), y0);
    const double rx1 = std::min(b.x2(), x1);
    const double ry1 = std::min(b.y2(), y1);
    if (rx0 >= rx1 || ry0 >= ry1) continue;
    rects.push_back({rx0, ry0, rx1, ry1});
    xs.push_back(rx0);
    xs.push_back(rx1);
    ys.push_back(ry0);
    ys.push_back(ry1);
  }
  if (rects.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

  double area = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double mx = (xs[i] + xs[i + 1]) / 2;
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const double my = (ys[j] + ys[j + 1]) / 2;
      for (const auto& r : rects) {
        if (mx > r[0] && mx < r[2] && my > r[1] && my < r[3]) {
          area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
          break;
        }
      }
    }
  }
  return area;
}

double smooth_l1(double r, double beta) {
  const double a = std::fabs(r);
  return a < beta ? 0.5 * r * r / beta : a - 0.5 * beta;
}

double smooth_l1_grad(double r, double beta) {
  return std::fabs(r) < beta ? r / beta : (r > 0 ? 1.0 : -1.0);
}

// Numerically stable softplus for the BCE term.
double softplus(double z) {
  return std::log1p(std::exp(-std::fabs(z))) + std::max(z, 0.0);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (!(smooth_l1_beta > 0)) throw ConfigError("smooth_l1_beta must be positive");
  if (patch_radius < 0) throw ConfigError("patch_radius must be >= 0");
  if (grid_res < 8) throw ConfigError("grid_res must be >= 8");
  if (reassign_every < 1) throw ConfigError("reassign_every must be >= 1");
}

OccupancyGrid rasterize_occupancy(const Scene& scene, int grid_res) {
  if (grid_res < 8) throw ConfigError("grid_res must be >= 8");
  OccupancyGrid grid;
  grid.res = grid_res;
  grid.scene_w = scene.scene_w;
  grid.scene_h = scene.scene_h;
  grid.values.assign(static_cast<std::size_t>(grid_res) * grid_res, 0.0);
  const double cw = scene.scene_w / grid_res;
  const double ch = scene.scene_h / grid_res;
  for (int row = 0; row < grid_res; ++row) {
    for (int col = 0; col < grid_res; ++col) {
      const double x0 = col * cw;
      const double y0 = row * ch;
      const double covered = union_area_in_cell(scene.gt_boxes, x0, y0, x0 + cw, y0 + ch);
      grid.values[static_cast<std::size_t>(row) * grid_res + col] = covered / (cw * ch);
    }
  }
  return grid;
}

std::vector<double> extract_features(std::size_t anchor_index, const AnchorSet& anchors,
                                     const OccupancyGrid& grid, int patch_radius) {
  const Box& a = anchors.boxes[anchor_index];
  const double cw = grid.scene_w / grid.res;
  const double ch = grid.scene_h / grid.res;
  const int col = std::clamp(static_cast<int>(std::floor(a.cx / cw)), 0, grid.res - 1);
  const int row = std::clamp(static_cast<int>(std::floor(a.cy / ch)), 0, grid.res - 1);

  std::vector<double> features;
  features.reserve(feature_dim(patch_radius));
  for (int dr = -patch_radius; dr <= patch_radius; ++dr) {
    for (int dc = -patch_radius; dc <= patch_radius; ++dc) {
      const int r = row + dr;
      const int c = col + dc;
      const bool inside = r >= 0 && r < grid.res && c >= 0 && c < grid.res;
      features.push_back(inside ? grid.at(r, c) : 0.0);
    }
  }
  features.push_back(a.cx / grid.scene_w);
  features.push_back(a.cy / grid.scene_h);
  features.push_back(std::log(a.w));
  features.push_back(std::log(a.h));
  return features;
}

ForwardOut forward(const RegressorParams& params, std::span<const double> features) {
  if (features.size() != params.feature_dim ||
      params.weights.size() != params.feature_dim * 5) {
    throw ContractError("forward: feature/parameter dimension mismatch");
  }
  std::array<double, 5> out = params.bias;
  for (std::size_t f = 0; f < features.size(); ++f) {
    const double v = features[f];
    if (v == 0.0) continue;
    for (std::size_t c = 0; c < 5; ++c) {
      out[c] += params.weights[f * 5 + c] * v;
    }
  }
  return {{out[0], out[1], out[2], out[3]}, out[4]};
}

LossGrad loss_and_grad(const RegressorParams& params, std::span<const TrainExample> batch,
                       double smooth_l1_beta) {
  if (batch.empty()) throw ContractError("loss_and_grad: empty batch");
  LossGrad out;
  out.grad.feature_dim = params.feature_dim;
  out.grad.weights.assign(params.weights.size(), 0.0);
  out.grad.bias.fill(0.0);

  std::size_t n_pos = 0;
  for (const TrainExample& ex : batch) {
    if (ex.positive) ++n_pos;
  }
  if (n_pos == 0) {
    std::cerr << "warning: batch has no positive examples; regression term is 0\n";
  }

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double inv_p = n_pos > 0 ? 1.0 / static_cast<double>(n_pos) : 0.0;

  for (const TrainExample& ex : batch) {
    const ForwardOut pred = forward(params, ex.features);
    std::array<double, 5> delta{};  // dloss/dout per channel

    if (ex.positive) {
      const double pc[4] = {pred.off.tx, pred.off.ty, pred.off.tw, pred.off.th};
      const double tc[4] = {ex.target.tx, ex.target.ty, ex.target.tw, ex.target.th};
      for (int c = 0; c < 4; ++c) {
        const double r = pc[c] - tc[c];
        out.regression_loss += smooth_l1(r, smooth_l1_beta) * inv_p;
        delta[c] = smooth_l1_grad(r, smooth_l1_beta) * inv_p;
      }
    }
    const double label = ex.positive ? 1.0 : 0.0;
    out.classification_loss += (softplus(pred.logit) - label * pred.logit) * inv_n;
    delta[4] = (sigmoid(pred.logit) - label) * inv_n;

    for (std::size_t f = 0; f < ex.features.size(); ++f) {
      const double v = ex.features[f];
      if (v == 0.0) continue;
      for (std::size_t c = 0; c < 5; ++c) {
        out.grad.weights[f * 5 + c] += delta[c] * v;
      }
    }
    for (std::size_t c = 0; c < 5; ++c) {
      out.grad.bias[c] += delta[c];
    }
  }
  out.loss = out.regression_loss + out.classification_loss;
  return out;
}

TrainResult train(std::span<const Scene> scenes, const AnchorSet& anchors,
                  const AssignerConfig& assigner_cfg, const TrainConfig& train_cfg) {
  train_cfg.validate();
  assigner_cfg.validate();
  if (scenes.empty()) throw ContractError("train requires at least one scene");
  if (anchors.size() == 0) throw ContractError("train requires a non-empty anchor set");
  if (train_cfg.codec_kind == CodecKind::Sigmoid && !anchors.has_cell_metadata()) {
    throw ContractError("sigmoid codec requires anchors with cell metadata");
  }

  const std::size_t n_scenes = scenes.size();
  const std::size_t n_anchors = anchors.size();
  const CodecKind codec = train_cfg.codec_kind;

  // Per-scene caches; everything judged from raw anchors is computed once.
  std::vector<std::vector<std::vector<double>>> features(n_scenes);
  std::vector<AssignmentGate> gates;
  std::vector<AssignmentLabeling> fixed_labelings(n_scenes);
  std::vector<AssignmentLabeling> current(n_scenes);
  if (codec == CodecKind::Sigmoid) gates.resize(n_scenes);

  for (std::size_t s = 0; s < n_scenes; ++s) {
    scenes[s].validate();
    const OccupancyGrid grid = rasterize_occupancy(scenes[s], train_cfg.grid_res);
    features[s].reserve(n_anchors);
    for (std::size_t i = 0; i < n_anchors; ++i) {
      features[s].push_back(extract_features(i, anchors, grid, train_cfg.patch_radius));
    }
    const AssignmentGate* gate = nullptr;
    if (codec == CodecKind::Sigmoid) {
      gates[s] = make_sigmoid_gate(anchors, scenes[s].gt_boxes, assigner_cfg);
      gate = &gates[s];
    }
    fixed_labelings[s] = baseline_assign(anchors, scenes[s].gt_boxes, assigner_cfg, gate);
    current[s] = fixed_labelings[s];
  }

  // Seeded init, scale 0.01.
  Rng rng(train_cfg.seed);
  RegressorParams params;
  params.feature_dim = feature_dim(train_cfg.patch_radius);
  params.weights.resize(params.feature_dim * 5);
  for (double& w : params.weights) w = 0.01 * rng.normal();
  for (double& b : params.bias) b = 0.01 * rng.normal();

  TrainResult result;
  result.log.rows.reserve(train_cfg.epochs);

  std::vector<OffsetVector> offsets(n_anchors);
  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    RegressorParams grad_total;
    grad_total.feature_dim = params.feature_dim;
    grad_total.weights.assign(params.weights.size(), 0.0);
    grad_total.bias.fill(0.0);

    TrainLogRow row;
    for (std::size_t s = 0; s < n_scenes; ++s) {
      for (std::size_t i = 0; i < n_anchors; ++i) {
        offsets[i] = forward(params, features[s][i]).off;
      }

      if (train_cfg.assignment_mode == AssignmentMode::Tsaa &&
          epoch % train_cfg.reassign_every == 0) {
        const AssignmentGate* gate = codec == CodecKind::Sigmoid ? &gates[s] : nullptr;
        current[s] = tsaa_assign(anchors, offsets, scenes[s].gt_boxes, assigner_cfg, codec,
                                 gate);
      }
      const AssignmentLabeling& labeling = current[s];

      std::vector<Box> pred_boxes;
      std::vector<Box> assigned;
      std::vector<TrainExample> batch;
      batch.reserve(n_anchors);
      for (std::size_t i = 0; i < n_anchors; ++i) {
        const AnchorLabel& label = labeling.labels[i];
        if (label.kind == AnchorLabel::Kind::Ignore) continue;
        TrainExample ex;
        ex.features = features[s][i];
        if (label.kind == AnchorLabel::Kind::Positive) {
          ex.positive = true;
          ex.target = encode_target(codec, anchors, i, scenes[s].gt_boxes[label.target]);
          pred_boxes.push_back(decode_offset(codec, anchors, i, offsets[i]));
          assigned.push_back(scenes[s].gt_boxes[label.target]);
          const AnchorLabel& stage1 = fixed_labelings[s].labels[i];
          if (stage1.kind == AnchorLabel::Kind::Positive && stage1.target != label.target) {
            ++row.reassignment_count;
          }
        }
        batch.push_back(ex);
      }

      row.mean_mitp += mitp(pred_boxes, assigned) / static_cast<double>(n_scenes);

      const LossGrad lg = loss_and_grad(params, batch, train_cfg.smooth_l1_beta);
      row.regression_loss += lg.regression_loss / static_cast<double>(n_scenes);
      row.classification_loss += lg.classification_loss / static_cast<double>(n_scenes);
      for (std::size_t k = 0; k < grad_total.weights.size(); ++k) {
        grad_total.weights[k] += lg.grad.weights[k] / static_cast<double>(n_scenes);
      }
      for (std::size_t c = 0; c < 5; ++c) {
        grad_total.bias[c] += lg.grad.bias[c] / static_cast<double>(n_scenes);
      }
    }

    for (std::size_t k = 0; k < params.weights.size(); ++k) {
      params.weights[k] -= train_cfg.learning_rate * grad_total.weights[k];
    }
    for (std::size_t c = 0; c < 5; ++c) {
      params.bias[c] -= train_cfg.learning_rate * grad_total.bias[c];
    }
    result.log.rows.push_back(row);
  }

  result.params = std::move(params);
  return result;
}

}  // namespace driftlab
