// Experiment runner: scene generation, anchor assignment, training and
// evaluation over the JSON experiment config.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "driftlab/assignment.hpp"
#include "driftlab/config.hpp"
#include "driftlab/error.hpp"
#include "driftlab/metrics.hpp"
#include "driftlab/nms.hpp"
#include "driftlab/scenes.hpp"
#include "driftlab/serialize.hpp"
#include "driftlab/trainer.hpp"

namespace {

using namespace driftlab;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig load_config(const CommonArgs& args) {
  ExperimentConfig cfg = ExperimentConfig::load(args.config_path);
  if (args.seed) {
    cfg.scenes.seed = *args.seed;
    cfg.trainer.seed = *args.seed;
  }
  return cfg;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot open '" + path.string() + "' for writing");
  }
  out << text;
}

std::vector<std::string> scene_ids(const std::vector<Scene>& scenes) {
  std::vector<std::string> ids;
  ids.reserve(scenes.size());
  for (const Scene& s : scenes) ids.push_back(s.id);
  return ids;
}

int cmd_generate(const CommonArgs& common, const std::string& out_path,
                 std::optional<int> count) {
  ExperimentConfig cfg = load_config(common);
  const int n = count.value_or(cfg.scene_count);
  const std::vector<Scene> scenes = generate_scenes(cfg.scenes, n);
  write_scenes(scenes, out_path);
  const CrowdStats stats = crowdedness_stats(scenes);
  std::printf("wrote %d scenes to %s\n", n, out_path.c_str());
  std::printf("mean instances per scene: %.4f\n", stats.mean_instances);
  std::printf("mean dense pairs (IoU>0.5) per scene: %.4f\n", stats.mean_dense_pairs);
  return 0;
}

int cmd_assign(const CommonArgs& common, const std::string& scenes_path,
               const std::string& mode, const std::string& offsets_path,
               const std::string& out_path) {
  ExperimentConfig cfg = load_config(common);
  const std::vector<Scene> scenes = read_scenes(scenes_path);
  const AnchorSet anchors = cfg.anchors.build();
  const CodecKind codec = cfg.trainer.codec_kind;

  std::vector<std::vector<OffsetVector>> offsets;
  if (!offsets_path.empty()) {
    std::ifstream in(offsets_path);
    if (!in) throw ParseError("cannot open offsets file '" + offsets_path + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(offsets_path + ": " + e.what());
    }
    offsets = offsets_from_json(doc, scene_ids(scenes), anchors.size());
  } else if (mode == "tsaa") {
    std::cerr << "warning: tsaa mode without --offsets assumes all-zero offsets\n";
  }

  LabelingSummary totals;
  nlohmann::json per_scene = nlohmann::json::array();
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    std::optional<AssignmentGate> gate;
    if (codec == CodecKind::Sigmoid) {
      gate = make_sigmoid_gate(anchors, scenes[s].gt_boxes, cfg.assigner);
    }
    AssignmentLabeling labeling;
    if (mode == "baseline") {
      labeling = baseline_assign(anchors, scenes[s].gt_boxes, cfg.assigner,
                                 gate ? &*gate : nullptr);
    } else {
      const std::vector<OffsetVector> zeros(anchors.size());
      labeling = tsaa_assign(anchors, offsets.empty() ? zeros : offsets[s],
                             scenes[s].gt_boxes, cfg.assigner, codec,
                             gate ? &*gate : nullptr);
    }
    const LabelingSummary sum = summarize(labeling);
    totals.low_quality += sum.low_quality;
    totals.stage1 += sum.stage1;
    totals.stage2_adaptive += sum.stage2_adaptive;
    totals.negative += sum.negative;
    totals.ignored += sum.ignored;

    nlohmann::json entry = labeling_to_json(labeling);
    entry["id"] = scenes[s].id;
    per_scene.push_back(std::move(entry));
  }

  nlohmann::json doc{{"scenes", std::move(per_scene)},
                     {"summary",
                      {{"low_quality", totals.low_quality},
                       {"stage1", totals.stage1},
                       {"stage2_adaptive", totals.stage2_adaptive},
                       {"negative", totals.negative},
                       {"ignore", totals.ignored}}}};
  write_text(out_path, doc.dump(1) + "\n");

  std::printf("positives: %zu (low_quality %zu, stage1 %zu, stage2_adaptive %zu)\n",
              totals.low_quality + totals.stage1 + totals.stage2_adaptive, totals.low_quality,
              totals.stage1, totals.stage2_adaptive);
  std::printf("negatives: %zu, ignores: %zu\n", totals.negative, totals.ignored);
  return 0;
}

int cmd_train(const CommonArgs& common, const std::string& scenes_path, const std::string& mode,
              const std::string& out_dir) {
  ExperimentConfig cfg = load_config(common);
  if (mode == "baseline") {
    cfg.trainer.assignment_mode = AssignmentMode::FixedBaseline;
  } else if (mode == "tsaa") {
    cfg.trainer.assignment_mode = AssignmentMode::Tsaa;
  } else if (!mode.empty()) {
    throw ConfigError("--mode must be 'baseline' or 'tsaa', got '" + mode + "'");
  }

  const std::vector<Scene> scenes = read_scenes(scenes_path);
  const AnchorSet anchors = cfg.anchors.build();
  const TrainResult result = train(scenes, anchors, cfg.assigner, cfg.trainer);

  std::filesystem::create_directories(out_dir);
  write_text(std::filesystem::path(out_dir) / "train_log.csv", train_log_csv(result.log));
  write_text(std::filesystem::path(out_dir) / "params.json",
             params_to_json(result.params).dump(1) + "\n");

  const TrainLogRow& last = result.log.rows.back();
  std::printf("trained %d epochs on %zu scenes\n", cfg.trainer.epochs, scenes.size());
  std::printf("final mean MITP: %.6f, reg loss: %.6f, cls loss: %.6f, reassignments: %d\n",
              last.mean_mitp, last.regression_loss, last.classification_loss,
              last.reassignment_count);
  return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& scenes_path,
             const std::string& params_path, std::optional<double> nms_threshold,
             std::optional<double> score_threshold, const std::string& out_dir) {
  ExperimentConfig cfg = load_config(common);
  if (nms_threshold) cfg.eval.nms_threshold = *nms_threshold;
  if (score_threshold) cfg.eval.score_threshold = *score_threshold;
  cfg.validate();

  const std::vector<Scene> scenes = read_scenes(scenes_path);
  const AnchorSet anchors = cfg.anchors.build();

  std::ifstream in(params_path);
  if (!in) throw ParseError("cannot open params file '" + params_path + "'");
  nlohmann::json params_doc;
  try {
    params_doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(params_path + ": " + e.what());
  }
  const RegressorParams params = params_from_json(params_doc);
  if (params.feature_dim != feature_dim(cfg.trainer.patch_radius)) {
    throw ParseError("params feature_dim " + std::to_string(params.feature_dim) +
                     " does not match config patch_radius " +
                     std::to_string(cfg.trainer.patch_radius));
  }

  SceneDetections dets(scenes.size());
  SceneBoxes gts(scenes.size());
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    gts[s] = scenes[s].gt_boxes;
    const OccupancyGrid grid = rasterize_occupancy(scenes[s], cfg.trainer.grid_res);
    std::vector<Detection> raw;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const std::vector<double> features =
          extract_features(i, anchors, grid, cfg.trainer.patch_radius);
      const ForwardOut out = forward(params, features);
      const double score = sigmoid(out.logit);
      if (score < cfg.eval.score_threshold) continue;
      try {
        raw.push_back({decode_offset(cfg.trainer.codec_kind, anchors, i, out.off), score});
      } catch (const NumericRangeError&) {
        // unrepresentable extent from an untrained head; drop the candidate
      }
    }
    dets[s] = greedy_nms(raw, cfg.eval.nms_threshold);
  }

  EvalResult result = evaluate(dets, gts, cfg.eval.iou_threshold);
  if (cfg.eval.ap_mode == EvalConfig::ApMode::Coco) {
    result.ap = average_precision_coco(dets, gts);
  }
  const JaccardResult ji = jaccard_index(dets, gts, cfg.eval.iou_threshold);

  std::filesystem::create_directories(out_dir);
  write_text(std::filesystem::path(out_dir) / "eval.json",
             eval_result_to_json(result, ji.pooled).dump(1) + "\n");
  write_text(std::filesystem::path(out_dir) / "eval.csv", eval_result_csv(result));

  std::printf("AP: %.6f\n", result.ap);
  std::printf("MR^-2: %.6f\n", result.mr2);
  std::printf("JI (gt-weighted): %.6f, JI (pooled): %.6f\n", ji.gt_weighted, ji.pooled);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anchor-drift laboratory"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string out_path;
  std::string scenes_path;
  std::string mode;
  std::string offsets_path;
  std::string params_path;
  std::optional<int> count;
  std::optional<double> nms_threshold;
  std::optional<double> score_threshold;
  std::uint64_t seed_value = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "experiment config JSON")->required();
    sub->add_option("--seed", seed_value, "override config seeds")
        ->each([&](const std::string&) { seed_set = true; });
  };

  CLI::App* generate = app.add_subcommand("generate", "generate a synthetic scene corpus");
  add_common(generate);
  generate->add_option("--out", out_path, "scene file to write")->required();
  generate->add_option("--count", count, "number of scenes (default from config)");

  CLI::App* assign = app.add_subcommand("assign", "run anchor assignment over a scene file");
  add_common(assign);
  assign->add_option("--scenes", scenes_path, "scene file")->required();
  assign->add_option("--mode", mode, "baseline|tsaa")
      ->required()
      ->check(CLI::IsMember({"baseline", "tsaa"}));
  assign->add_option("--offsets", offsets_path, "prediction offsets JSON (tsaa)");
  assign->add_option("--out", out_path, "labeling JSON to write")->required();

  CLI::App* train_cmd = app.add_subcommand("train", "train the toy regressor");
  add_common(train_cmd);
  train_cmd->add_option("--scenes", scenes_path, "scene file")->required();
  train_cmd->add_option("--mode", mode, "baseline|tsaa (default from config)")
      ->check(CLI::IsMember({"baseline", "tsaa"}));
  train_cmd->add_option("--out", out_path, "output directory")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate trained parameters");
  add_common(eval_cmd);
  eval_cmd->add_option("--scenes", scenes_path, "scene file")->required();
  eval_cmd->add_option("--params", params_path, "trained params JSON")->required();
  eval_cmd->add_option("--nms-threshold", nms_threshold, "NMS IoU threshold");
  eval_cmd->add_option("--score-threshold", score_threshold, "objectness filter");
  eval_cmd->add_option("--out", out_path, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (seed_set) common.seed = seed_value;

  try {
    if (generate->parsed()) return cmd_generate(common, out_path, count);
    if (assign->parsed()) return cmd_assign(common, scenes_path, mode, offsets_path, out_path);
    if (train_cmd->parsed()) return cmd_train(common, scenes_path, mode, out_path);
    if (eval_cmd->parsed()) {
      return cmd_eval(common, scenes_path, params_path, nms_threshold, score_threshold,
                      out_path);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const GenerationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InfeasibilityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const UndefinedMetricError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
