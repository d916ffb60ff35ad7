#include "driftlab/serialize.hpp"

#include <cstdio>

#include "driftlab/error.hpp"

namespace driftlab {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::LowQuality: return "low_quality";
    case Provenance::Stage1: return "stage1";
    case Provenance::Stage2Adaptive: return "stage2_adaptive";
  }
  return "unknown";
}

}  // namespace

nlohmann::json labeling_to_json(const AssignmentLabeling& labeling) {
  nlohmann::json labels = nlohmann::json::array();
  for (std::size_t i = 0; i < labeling.labels.size(); ++i) {
    const AnchorLabel& label = labeling.labels[i];
    nlohmann::json rec{{"anchor", i}};
    switch (label.kind) {
      case AnchorLabel::Kind::Positive:
        rec["status"] = "positive";
        rec["target"] = label.target;
        rec["provenance"] = provenance_name(label.provenance);
        break;
      case AnchorLabel::Kind::Negative:
        rec["status"] = "negative";
        break;
      case AnchorLabel::Kind::Ignore:
        rec["status"] = "ignore";
        break;
    }
    labels.push_back(std::move(rec));
  }
  return {{"anchor_count", labeling.anchor_count},
          {"target_count", labeling.target_count},
          {"labels", std::move(labels)}};
}

nlohmann::json eval_result_to_json(const EvalResult& result, double ji_pooled) {
  return {{"ap", result.ap},
          {"mr2", result.mr2},
          {"ji", result.ji},
          {"ji_pooled", ji_pooled},
          {"miss_rate_detail", result.detail}};
}

std::string eval_result_csv(const EvalResult& result) {
  std::string csv = "ap,mr2,ji";
  for (int i = 0; i < 9; ++i) csv += ",miss_" + std::to_string(i);
  csv += "\n" + fmt_double(result.ap) + "," + fmt_double(result.mr2) + "," +
         fmt_double(result.ji);
  for (double v : result.detail) csv += "," + fmt_double(v);
  csv += "\n";
  return csv;
}

std::string train_log_csv(const TrainLog& log) {
  std::string csv = "epoch,mean_mitp,reg_loss,cls_loss,reassignments\n";
  for (std::size_t e = 0; e < log.rows.size(); ++e) {
    const TrainLogRow& row = log.rows[e];
    csv += std::to_string(e) + "," + fmt_double(row.mean_mitp) + "," +
           fmt_double(row.regression_loss) + "," + fmt_double(row.classification_loss) + "," +
           std::to_string(row.reassignment_count) + "\n";
  }
  return csv;
}

nlohmann::json params_to_json(const RegressorParams& params) {
  nlohmann::json weights = nlohmann::json::array();
  for (std::size_t f = 0; f < params.feature_dim; ++f) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < 5; ++c) row.push_back(params.weights[f * 5 + c]);
    weights.push_back(std::move(row));
  }
  return {{"feature_dim", params.feature_dim},
          {"weights", std::move(weights)},
          {"bias", params.bias}};
}

RegressorParams params_from_json(const nlohmann::json& j) {
  RegressorParams params;
  try {
    params.feature_dim = j.at("feature_dim").get<std::size_t>();
    const nlohmann::json& weights = j.at("weights");
    const nlohmann::json& bias = j.at("bias");
    if (!weights.is_array() || weights.size() != params.feature_dim || !bias.is_array() ||
        bias.size() != 5) {
      throw ParseError("params: weights must be feature_dim x 5 and bias length 5");
    }
    params.weights.reserve(params.feature_dim * 5);
    for (const auto& row : weights) {
      if (!row.is_array() || row.size() != 5) {
        throw ParseError("params: each weight row must hold 5 numbers");
      }
      for (const auto& v : row) params.weights.push_back(v.get<double>());
    }
    for (std::size_t c = 0; c < 5; ++c) params.bias[c] = bias[c].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("params: ") + e.what());
  }
  return params;
}

std::vector<std::vector<OffsetVector>> offsets_from_json(
    const nlohmann::json& j, const std::vector<std::string>& scene_ids,
    std::size_t anchors_per_scene) {
  if (!j.is_object() || !j.contains("scenes") || !j.at("scenes").is_array()) {
    throw ParseError("offsets: expected top-level {\"scenes\": [...]}");
  }
  const nlohmann::json& arr = j.at("scenes");
  if (arr.size() != scene_ids.size()) {
    throw ParseError("offsets: file holds " + std::to_string(arr.size()) +
                     " scenes, expected " + std::to_string(scene_ids.size()));
  }
  std::vector<std::vector<OffsetVector>> out;
  out.reserve(arr.size());
  for (std::size_t s = 0; s < arr.size(); ++s) {
    const std::string where = "offsets: scenes[" + std::to_string(s) + "]";
    const nlohmann::json& entry = arr[s];
    if (!entry.is_object() || !entry.contains("id") || !entry.contains("offsets")) {
      throw ParseError(where + ": expected object with id and offsets");
    }
    if (entry.at("id").get<std::string>() != scene_ids[s]) {
      throw ParseError(where + ": id '" + entry.at("id").get<std::string>() +
                       "' does not match scene '" + scene_ids[s] + "'");
    }
    const nlohmann::json& offs = entry.at("offsets");
    if (!offs.is_array() || offs.size() != anchors_per_scene) {
      throw ParseError(where + ": expected " + std::to_string(anchors_per_scene) +
                       " offset rows");
    }
    std::vector<OffsetVector> scene_offsets;
    scene_offsets.reserve(offs.size());
    for (std::size_t k = 0; k < offs.size(); ++k) {
      const nlohmann::json& o = offs[k];
      if (!o.is_array() || o.size() != 4) {
        throw ParseError(where + ".offsets[" + std::to_string(k) +
                         "]: expected [tx, ty, tw, th]");
      }
      scene_offsets.push_back(
          {o[0].get<double>(), o[1].get<double>(), o[2].get<double>(), o[3].get<double>()});
    }
    out.push_back(std::move(scene_offsets));
  }
  return out;
}

}  // namespace driftlab
