#pragma once

#include "boxseg/pipeline.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>

namespace boxseg {

nlohmann::json evaluation_json(const MaskEvaluation& ev);

/// {"iteration", "mean_iou", "per_instance_iou", "skipped", "guard_trips", "loss_trace"}
nlohmann::json metrics_json(const IterationResult& r);

void write_loss_csv(std::ostream& os, const std::vector<EpochLoss>& trace);

/// Writes <run_dir>/iter_<t>/{masks/inst_NNNN.png, params.pmsk, metrics.json, loss.csv}.
void write_iteration(const std::filesystem::path& run_dir, const IterationResult& r);

}  // namespace boxseg
