#include "commands.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace boxseg;
using namespace boxseg::cli;

int main(int argc, char** argv) {
  CLI::App app{"Box-supervised pseudo-mask refinement"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (synth corpus / segmenter training)");
  app.add_option("--jobs", g.jobs, "Worker threads for per-instance refinement")->check(CLI::PositiveNumber);
  app.add_flag("--verbose,-v", g.verbose, "Progress output on stderr");
  std::string config_path;
  auto* config_opt = app.add_option("--config", config_path, "Pipeline config JSON");
  app.add_option("--set", g.overrides, "Config override key=value (dotted keys)");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  int count = 50;
  std::string synth_out;
  synth->add_option("--count", count, "Number of images")->check(CLI::PositiveNumber);
  synth->add_option("--out", synth_out, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Run iterative mask refinement");
  std::string run_manifest, run_out;
  run->add_option("--manifest", run_manifest, "Dataset manifest JSON")->required();
  run->add_option("--out", run_out, "Run directory")->required();

  auto* eval = app.add_subcommand("eval", "Score predicted masks against ground truth");
  std::string pred_dir, eval_manifest;
  eval->add_option("--pred-dir", pred_dir, "Directory of inst_NNNN.png masks")->required();
  eval->add_option("--manifest", eval_manifest, "Dataset manifest JSON")->required();

  auto* sp = app.add_subcommand("superpixels", "Write a 16-bit superpixel label map");
  SuperpixelRequest sp_req;
  std::string sp_image, sp_out, sp_region;
  sp->add_option("--image", sp_image, "Input RGB PNG")->required();
  sp->add_option("--out", sp_out, "Output 16-bit PNG")->required();
  sp->add_option("--region", sp_region, "Crop x0,y0,x1,y1 (default: whole image)");

  auto* refine = app.add_subcommand("refine", "Refine one instance mask from a probability PNG");
  RefineRequest rf_req;
  std::string rf_image, rf_prob, rf_box, rf_out, rf_dimacs, rf_labels;
  refine->add_option("--image", rf_image, "Input RGB PNG")->required();
  refine->add_option("--prob", rf_prob, "Foreground probability, 8-bit gray PNG (value/255)")->required();
  refine->add_option("--box", rf_box, "Ground-truth box x0,y0,x1,y1")->required();
  refine->add_option("--out", rf_out, "Output mask PNG")->required();
  refine->add_option("--dimacs", rf_dimacs, "Dump the flow network in DIMACS format");
  refine->add_option("--labels", rf_labels, "Dump the superpixel label map (16-bit PNG)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (seed_opt->count()) g.seed = seed;
  if (config_opt->count()) g.config = config_path;

  try {
    if (synth->parsed()) {
      const auto m = cmd_synth(count, synth_out, g);
      if (g.verbose) std::cerr << "wrote " << m.images.size() << " images to " << synth_out << '\n';
    } else if (run->parsed()) {
      const auto results = cmd_run(run_manifest, run_out, g, std::cerr);
      std::cout << run_summary(results).dump(2) << '\n';
    } else if (eval->parsed()) {
      std::cout << cmd_eval(pred_dir, eval_manifest).dump(2) << '\n';
    } else if (sp->parsed()) {
      sp_req.image = sp_image;
      sp_req.out = sp_out;
      if (!sp_region.empty()) sp_req.region = parse_rect(sp_region);
      const int n = cmd_superpixels(sp_req, g);
      if (g.verbose) std::cerr << n << " superpixels\n";
    } else if (refine->parsed()) {
      rf_req.image = rf_image;
      rf_req.prob = rf_prob;
      rf_req.box = parse_rect(rf_box);
      rf_req.out = rf_out;
      if (!rf_dimacs.empty()) rf_req.dimacs = rf_dimacs;
      if (!rf_labels.empty()) rf_req.labels = rf_labels;
      const Refinement ref = cmd_refine(rf_req, g);
      if (g.verbose)
        std::cerr << ref.partition.size() << " superpixels"
                  << (ref.guard_tripped ? ", guard tripped" : "") << '\n';
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const ImageIoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}
