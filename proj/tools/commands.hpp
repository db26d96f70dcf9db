#pragma once

#include "boxseg/config.hpp"
#include "boxseg/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace boxseg::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kInternal = 3 };

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool verbose = false;
  std::optional<std::filesystem::path> config;
  std::vector<std::string> overrides;
};

/// Config file (if any) + --set overrides + global --seed/--jobs.
PipelineConfig resolve_config(const GlobalOptions& g);

DatasetManifest cmd_synth(int count, const std::filesystem::path& out_dir, const GlobalOptions& g);

std::vector<IterationResult> cmd_run(const std::filesystem::path& manifest,
                                     const std::filesystem::path& out_dir, const GlobalOptions& g,
                                     std::ostream& log);

/// {"iterations": [{"iteration", "mean_iou", "guard_trips"}...]}
nlohmann::json run_summary(const std::vector<IterationResult>& results);

/// Reads <pred_dir>/inst_NNNN.png for every manifest instance.
nlohmann::json cmd_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& manifest);

struct SuperpixelRequest {
  std::filesystem::path image;
  std::filesystem::path out;
  std::optional<Rect> region;
};

int cmd_superpixels(const SuperpixelRequest& req, const GlobalOptions& g);

struct RefineRequest {
  std::filesystem::path image;
  std::filesystem::path prob;
  Rect box;
  std::filesystem::path out;
  std::optional<std::filesystem::path> dimacs;
  std::optional<std::filesystem::path> labels;
};

Refinement cmd_refine(const RefineRequest& req, const GlobalOptions& g);

Rect parse_rect(const std::string& text);

}  // namespace boxseg::cli
