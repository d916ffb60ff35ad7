#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "driftlab/assignment.hpp"
#include "driftlab/metrics.hpp"
#include "driftlab/trainer.hpp"

namespace driftlab {

/// Debug dump of one labeling: anchor index -> status record.
nlohmann::json labeling_to_json(const AssignmentLabeling& labeling);

nlohmann::json eval_result_to_json(const EvalResult& result, double ji_pooled);

/// One header line plus one data row.
std::string eval_result_csv(const EvalResult& result);

/// One row per epoch: epoch, mean_mitp, reg_loss, cls_loss, reassignments.
std::string train_log_csv(const TrainLog& log);

nlohmann::json params_to_json(const RegressorParams& params);
RegressorParams params_from_json(const nlohmann::json& j);

/// Offsets file: {"scenes": [{"id": ..., "offsets": [[tx,ty,tw,th], ...]}]},
/// ordered like the scene file it accompanies. Validates ids and per-scene
/// counts against the expectation.
std::vector<std::vector<OffsetVector>> offsets_from_json(
    const nlohmann::json& j, const std::vector<std::string>& scene_ids,
    std::size_t anchors_per_scene);

}  // namespace driftlab
