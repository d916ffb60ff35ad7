#include "driftlab/config.hpp"

#include <fstream>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "driftlab/error.hpp"

namespace driftlab {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::string& section,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("unknown key '" + key + "' in " + section);
    }
  }
}

template <typename T>
void read_into(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(section + "." + key + ": " + e.what());
  }
}

void parse_scenes(const json& j, SceneGenConfig& cfg, int& count) {
  reject_unknown_keys(j, "scenes",
                      {"scene_w", "scene_h", "mean_instances", "target_dense_pairs",
                       "aspect_mu", "aspect_sigma", "size_mu", "size_sigma", "cluster_count",
                       "seed", "count"});
  read_into(j, "scene_w", cfg.scene_w, "scenes");
  read_into(j, "scene_h", cfg.scene_h, "scenes");
  read_into(j, "mean_instances", cfg.mean_instances, "scenes");
  read_into(j, "target_dense_pairs", cfg.target_dense_pairs, "scenes");
  read_into(j, "aspect_mu", cfg.aspect_mu, "scenes");
  read_into(j, "aspect_sigma", cfg.aspect_sigma, "scenes");
  read_into(j, "size_mu", cfg.size_mu, "scenes");
  read_into(j, "size_sigma", cfg.size_sigma, "scenes");
  read_into(j, "cluster_count", cfg.cluster_count, "scenes");
  read_into(j, "seed", cfg.seed, "scenes");
  read_into(j, "count", count, "scenes");
}

void parse_anchors(const json& j, AnchorConfig& cfg) {
  reject_unknown_keys(j, "anchors", {"kind", "image_w", "image_h", "strides", "scales",
                                     "ratios", "grid_w", "grid_h", "stride", "priors"});
  std::string kind = "grid";
  read_into(j, "kind", kind, "anchors");
  if (kind == "grid") {
    cfg.kind = AnchorConfig::Kind::Grid;
  } else if (kind == "prior") {
    cfg.kind = AnchorConfig::Kind::Prior;
  } else {
    throw ConfigError("anchors.kind must be 'grid' or 'prior', got '" + kind + "'");
  }
  read_into(j, "image_w", cfg.grid.image_w, "anchors");
  read_into(j, "image_h", cfg.grid.image_h, "anchors");
  read_into(j, "strides", cfg.grid.strides, "anchors");
  read_into(j, "scales", cfg.grid.scales, "anchors");
  read_into(j, "ratios", cfg.grid.ratios, "anchors");
  read_into(j, "grid_w", cfg.grid_w, "anchors");
  read_into(j, "grid_h", cfg.grid_h, "anchors");
  read_into(j, "stride", cfg.stride, "anchors");
  if (j.contains("priors")) {
    try {
      cfg.priors.clear();
      for (const auto& p : j.at("priors")) {
        if (!p.is_array() || p.size() != 2) {
          throw ConfigError("anchors.priors entries must be [w, h] pairs");
        }
        cfg.priors.emplace_back(p[0].get<double>(), p[1].get<double>());
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("anchors.priors: ") + e.what());
    }
  }
}

void parse_assigner(const json& j, AssignerConfig& cfg) {
  reject_unknown_keys(j, "assigner", {"nt_pos", "nt_neg", "nt_proposal", "r_t", "mode",
                                      "yolo_use_ratio_condition"});
  read_into(j, "nt_pos", cfg.nt_pos, "assigner");
  read_into(j, "nt_neg", cfg.nt_neg, "assigner");
  read_into(j, "nt_proposal", cfg.nt_proposal, "assigner");
  read_into(j, "r_t", cfg.r_t, "assigner");
  read_into(j, "yolo_use_ratio_condition", cfg.yolo_use_ratio_condition, "assigner");
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "one_stage") {
      cfg.mode = AssignMode::OneStage;
    } else if (mode == "two_stage") {
      cfg.mode = AssignMode::TwoStage;
    } else {
      throw ConfigError("assigner.mode must be 'one_stage' or 'two_stage', got '" + mode + "'");
    }
  }
}

void parse_trainer(const json& j, TrainConfig& cfg) {
  reject_unknown_keys(j, "trainer",
                      {"epochs", "learning_rate", "smooth_l1_beta", "assignment_mode",
                       "codec_kind", "seed", "patch_radius", "grid_res", "reassign_every"});
  read_into(j, "epochs", cfg.epochs, "trainer");
  read_into(j, "learning_rate", cfg.learning_rate, "trainer");
  read_into(j, "smooth_l1_beta", cfg.smooth_l1_beta, "trainer");
  read_into(j, "seed", cfg.seed, "trainer");
  read_into(j, "patch_radius", cfg.patch_radius, "trainer");
  read_into(j, "grid_res", cfg.grid_res, "trainer");
  read_into(j, "reassign_every", cfg.reassign_every, "trainer");
  if (j.contains("assignment_mode")) {
    const std::string mode = j.at("assignment_mode").get<std::string>();
    if (mode == "baseline") {
      cfg.assignment_mode = AssignmentMode::FixedBaseline;
    } else if (mode == "tsaa") {
      cfg.assignment_mode = AssignmentMode::Tsaa;
    } else {
      throw ConfigError("trainer.assignment_mode must be 'baseline' or 'tsaa', got '" + mode +
                        "'");
    }
  }
  if (j.contains("codec_kind")) {
    const std::string kind = j.at("codec_kind").get<std::string>();
    if (kind == "linear") {
      cfg.codec_kind = CodecKind::Linear;
    } else if (kind == "sigmoid") {
      cfg.codec_kind = CodecKind::Sigmoid;
    } else {
      throw ConfigError("trainer.codec_kind must be 'linear' or 'sigmoid', got '" + kind + "'");
    }
  }
}

void parse_eval(const json& j, EvalConfig& cfg) {
  reject_unknown_keys(j, "eval",
                      {"score_threshold", "nms_threshold", "iou_threshold", "ap_mode"});
  read_into(j, "score_threshold", cfg.score_threshold, "eval");
  read_into(j, "nms_threshold", cfg.nms_threshold, "eval");
  read_into(j, "iou_threshold", cfg.iou_threshold, "eval");
  if (j.contains("ap_mode")) {
    const std::string mode = j.at("ap_mode").get<std::string>();
    if (mode == "single") {
      cfg.ap_mode = EvalConfig::ApMode::Single;
    } else if (mode == "coco") {
      cfg.ap_mode = EvalConfig::ApMode::Coco;
    } else {
      throw ConfigError("eval.ap_mode must be 'single' or 'coco', got '" + mode + "'");
    }
  }
}

}  // namespace

AnchorSet AnchorConfig::build() const {
  if (kind == Kind::Grid) {
    return generate_grid_anchors(grid);
  }
  return generate_prior_anchors(grid_w, grid_h, stride, priors);
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path.string() + "'");
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError(path.string() + ": config must be a JSON object");
  }
  reject_unknown_keys(doc, "config",
                      {"output_dir", "scenes", "anchors", "assigner", "trainer", "eval"});

  ExperimentConfig cfg;
  if (doc.contains("output_dir")) {
    cfg.output_dir = doc.at("output_dir").get<std::string>();
  }
  if (doc.contains("scenes")) parse_scenes(doc.at("scenes"), cfg.scenes, cfg.scene_count);
  if (doc.contains("anchors")) parse_anchors(doc.at("anchors"), cfg.anchors);
  if (doc.contains("assigner")) parse_assigner(doc.at("assigner"), cfg.assigner);
  if (doc.contains("trainer")) parse_trainer(doc.at("trainer"), cfg.trainer);
  if (doc.contains("eval")) parse_eval(doc.at("eval"), cfg.eval);
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  scenes.validate();
  if (scene_count < 1) throw ConfigError("scenes.count must be >= 1");
  if (anchors.kind == AnchorConfig::Kind::Grid) {
    anchors.grid.validate();
  } else {
    if (anchors.grid_w < 1 || anchors.grid_h < 1 || !(anchors.stride > 0)) {
      throw ConfigError("prior anchors need positive grid dimensions and stride");
    }
    if (anchors.priors.empty()) throw ConfigError("prior anchors need at least one prior");
  }
  assigner.validate();
  trainer.validate();
  if (!(eval.score_threshold >= 0) || !(eval.score_threshold < 1)) {
    throw ConfigError("eval.score_threshold must lie in [0, 1)");
  }
  if (!(eval.nms_threshold > 0) || !(eval.nms_threshold < 1)) {
    throw ConfigError("eval.nms_threshold must lie in (0, 1)");
  }
  if (!(eval.iou_threshold > 0) || !(eval.iou_threshold < 1)) {
    throw ConfigError("eval.iou_threshold must lie in (0, 1)");
  }
  if (trainer.codec_kind == CodecKind::Sigmoid && anchors.kind != AnchorConfig::Kind::Prior) {
    throw ConfigError("trainer.codec_kind 'sigmoid' requires anchors.kind 'prior'");
  }
}

}  // namespace driftlab
