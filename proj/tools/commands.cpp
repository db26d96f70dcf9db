#include "commands.hpp"

#include "boxseg/report.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

namespace boxseg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

PipelineConfig resolve_config(const GlobalOptions& g) {
  json j = json::object();
  if (g.config) {
    std::ifstream is(*g.config);
    if (!is) throw DataError("cannot open config '" + g.config->string() + "'");
    try {
      is >> j;
    } catch (const json::parse_error& e) {
      throw DataError("config '" + g.config->string() + "': " + e.what());
    }
  }
  for (const std::string& o : g.overrides) apply_override(j, o);
  PipelineConfig cfg = config_from_json(j);
  if (g.seed) cfg.segmenter.seed = *g.seed;
  cfg.jobs = g.jobs;
  return cfg;
}

DatasetManifest cmd_synth(int count, const fs::path& out_dir, const GlobalOptions& g) {
  SynthOptions opts;
  opts.count = count;
  if (g.seed) opts.seed = *g.seed;
  return write_synthetic_corpus(out_dir, opts);
}

std::vector<IterationResult> cmd_run(const fs::path& manifest, const fs::path& out_dir,
                                     const GlobalOptions& g, std::ostream& log) {
  const PipelineConfig cfg = resolve_config(g);
  const Dataset data = load_dataset(manifest);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create '" + out_dir.string() + "': " + ec.message());
  {
    std::ofstream os(out_dir / "config.json");
    os << config_to_json(cfg).dump(2) << '\n';
  }
  // Each iteration is flushed to disk as soon as it completes.
  return run_algorithm1(data, cfg, [&](const IterationResult& r) {
    write_iteration(out_dir, r);
    if (g.verbose)
      log << "iteration " << r.iteration << ": mean IoU " << r.eval.mean_iou << ", guard trips "
          << r.guard_trips << '\n';
  });
}

json run_summary(const std::vector<IterationResult>& results) {
  json iters = json::array();
  for (const IterationResult& r : results)
    iters.push_back({{"iteration", r.iteration},
                     {"mean_iou", r.eval.mean_iou},
                     {"guard_trips", r.guard_trips}});
  return {{"iterations", iters}};
}

json cmd_eval(const fs::path& pred_dir, const fs::path& manifest) {
  const Dataset data = load_dataset(manifest);
  std::vector<BinaryMask> preds;
  std::vector<std::string> missing;
  for (std::size_t n = 0; n < data.instances.size(); ++n) {
    const fs::path p = pred_dir / instance_mask_name(int(n));
    if (!fs::exists(p)) {
      missing.push_back(p.filename().string());
      continue;
    }
    try {
      preds.push_back(read_mask_png(p));
    } catch (const ImageIoError& e) {
      throw DataError(e.what());
    }
    const ImageRgb& img = data.images[data.instances[n].image_index];
    if (preds.back().rows() != img.height() || preds.back().cols() != img.width())
      throw DataError("prediction '" + p.string() + "' differs in size from its image");
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "missing predictions for " << missing.size() << " instance(s):";
    for (const auto& m : missing) msg << ' ' << m;
    throw DataError(msg.str());
  }
  return evaluation_json(evaluate_masks(std::span<const BinaryMask>(preds), data.instances));
}

int cmd_superpixels(const SuperpixelRequest& req, const GlobalOptions& g) {
  const PipelineConfig cfg = resolve_config(g);
  const ImageRgb img = read_png_rgb(req.image);
  const Rect region = req.region ? *req.region : img.bounds();
  if (!region.valid() || !img.bounds().contains(region))
    throw DataError("superpixel region lies outside the image");
  const SuperpixelPartition part = felzenszwalb_segment(img, region, cfg.superpixel);
  write_png_gray16(req.out, label_image(part));
  return part.size();
}

Refinement cmd_refine(const RefineRequest& req, const GlobalOptions& g) {
  const PipelineConfig cfg = resolve_config(g);
  const ImageRgb img = read_png_rgb(req.image);
  const Raster<std::uint8_t> prob8 = read_png_gray8(req.prob);
  if (prob8.rows() != img.height() || prob8.cols() != img.width())
    throw DataError("probability map differs in size from the image");
  if (!req.box.valid() || !img.bounds().contains(req.box))
    throw DataError("box lies outside the image");

  const Instance inst{0, 0, req.box, std::nullopt};
  const Rect region = refinement_region(inst, img, cfg);
  const RealMap prob =
      prob8.block(region.y0, region.x0, region.height(), region.width()).cast<double>() / 255.0;
  Dataset single;
  single.images.push_back(img);
  single.instances.push_back(inst);
  const PseudoMask prev = initialize_pseudo_masks(single).front();
  Refinement ref = refine_from_probability(inst, img, prob, prev, cfg);
  write_mask_png(req.out, ref.mask.mask);
  if (req.labels) write_png_gray16(*req.labels, label_image(ref.partition));
  if (req.dimacs) {
    std::ofstream os(*req.dimacs);
    if (!os) throw DataError("cannot write '" + req.dimacs->string() + "'");
    write_dimacs(os, energy_to_network(ref.energy).graph);
  }
  return ref;
}

Rect parse_rect(const std::string& text) {
  Rect r;
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream is(text);
  if (!(is >> r.x0 >> c1 >> r.y0 >> c2 >> r.x1 >> c3 >> r.y1) || c1 != ',' || c2 != ',' ||
      c3 != ',' || !is.eof() && is.peek() != EOF)
    throw DataError("expected rectangle x0,y0,x1,y1 but got '" + text + "'");
  if (!r.valid()) throw DataError("rectangle '" + text + "' is empty");
  return r;
}

}  // namespace boxseg::cli
