#include "boxseg/report.hpp"

#include "boxseg/dataset.hpp"

#include <fstream>
#include <ostream>

namespace boxseg {

namespace fs = std::filesystem;
using nlohmann::json;

json evaluation_json(const MaskEvaluation& ev) {
  json per = json::array();
  for (const auto& v : ev.per_instance) per.push_back(v ? json(*v) : json(nullptr));
  return {{"mean_iou", ev.mean_iou}, {"per_instance_iou", per}, {"skipped", ev.skipped}};
}

json metrics_json(const IterationResult& r) {
  json j = evaluation_json(r.eval);
  j["iteration"] = r.iteration;
  j["guard_trips"] = r.guard_trips;
  json trace = json::array();
  for (const EpochLoss& e : r.trace)
    trace.push_back({{"epoch", e.epoch}, {"loss_2d", e.loss_2d}, {"loss_1d", e.loss_1d}});
  j["loss_trace"] = std::move(trace);
  return j;
}

void write_loss_csv(std::ostream& os, const std::vector<EpochLoss>& trace) {
  os << "epoch,loss_2d,loss_1d\n";
  os.precision(17);
  for (const EpochLoss& e : trace) os << e.epoch << ',' << e.loss_2d << ',' << e.loss_1d << '\n';
}

void write_iteration(const fs::path& run_dir, const IterationResult& r) {
  const fs::path dir = run_dir / ("iter_" + std::to_string(r.iteration));
  std::error_code ec;
  fs::create_directories(dir / "masks", ec);
  if (ec) throw DataError("cannot create '" + dir.string() + "': " + ec.message());
  for (const PseudoMask& m : r.masks)
    write_mask_png(dir / "masks" / instance_mask_name(m.instance_index), m.mask);
  write_checkpoint(dir / "params.pmsk", r.params);
  std::ofstream metrics(dir / "metrics.json");
  metrics << metrics_json(r).dump(2) << '\n';
  std::ofstream csv(dir / "loss.csv");
  write_loss_csv(csv, r.trace);
  if (!metrics || !csv) throw DataError("failed writing outputs under '" + dir.string() + "'");
}

}  // namespace boxseg
