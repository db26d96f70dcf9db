#pragma once

#include "boxseg/pipeline.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace boxseg {

// Config JSON mirrors PipelineConfig:
// {
//   "T": 3, "min_fg_fraction": 0.05, "box_enlarge": 0.2,
//   "superpixel": {"scale": 100, "min_size": 0},
//   "energy": {"delta_c": 5, "delta_t": 10, "lambda": 1,
//              "prob_clamp_eps": 1e-6, "uncovered_prior": 0.5},
//   "segmenter": {"k": 7, "learning_rate": 10, "epochs": 100, "batch_rois": 32,
//                 "seed": 7, "jitters_per_instance": 8, "jitter_scale_min": 0.7,
//                 "jitter_scale_max": 1.3, "jitter_shift": 0.2, "loss_1d_weight": 1}
// }
// Every key is optional; unknown keys are errors.

nlohmann::json config_to_json(const PipelineConfig& cfg);

/// Applies the keys present in `j` on top of `base`. Throws DataError naming
/// the offending key on unknown keys or wrong value types.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});

PipelineConfig read_config(const std::filesystem::path& path);

/// Applies "dotted.key=value" (value parsed as JSON, falling back to a string).
void apply_override(nlohmann::json& j, std::string_view assignment);

}  // namespace boxseg
