// sts: surround-view temporal stereo experiments on synthetic scenes.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sts/commands.hpp"
#include "sts/config.hpp"
#include "sts/error.hpp"
#include "sts/io.hpp"
#include "sts/scenes.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> mode;
  std::optional<std::string> depth_mode;
  std::optional<int> stereo_bins;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "run configuration file")->required();
  cmd->add_option("--mode", o.mode, "sweep mode: surround | same_camera");
  cmd->add_option("--depth-mode", o.depth_mode, "depth bins: sid | ud");
  cmd->add_option("--stereo-bins", o.stereo_bins, "cost-volume bin count");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "scene seed override");
}

sts::RunConfig resolve(const Overrides& o) {
  sts::RunConfig cfg = sts::load_config(o.config);
  if (o.mode) cfg.sweep_mode = sts::parse_sweep_mode(*o.mode);
  if (o.depth_mode) cfg.depth_mode = sts::parse_depth_mode(*o.depth_mode);
  if (o.stereo_bins) cfg.stereo_bins = *o.stereo_bins;
  if (o.out) cfg.out = *o.out;
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  return cfg;
}

std::vector<double> parse_edges(const std::string& text) {
  std::vector<double> edges;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      edges.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw sts::Error(sts::ErrorKind::kInput, "range edge '" + item + "' is not a number");
    }
  }
  return edges;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surround-view temporal stereo depth on synthetic multi-camera scenes"};
  app.require_subcommand(1);

  Overrides sim_flags;
  auto* simulate = app.add_subcommand("simulate", "render every frame of a scene to tensor files");
  add_run_flags(simulate, sim_flags);

  Overrides sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "stereo, mono oracle, fusion and metrics on a frame pair");
  add_run_flags(sweep, sweep_flags);

  Overrides calib_flags;
  auto* calibrate = app.add_subcommand("calibrate", "fit the stereo logit scale against ground truth");
  add_run_flags(calibrate, calib_flags);

  sts::EvalOptions eval_opts;
  std::string edges;
  auto* eval = app.add_subcommand("eval", "range-binned SILog and absolute error of depth tensors");
  eval->add_option("--pred", eval_opts.predictions, "predicted depth tensors")->required();
  eval->add_option("--gt", eval_opts.ground_truth, "ground-truth depth tensors")->required();
  eval->add_option("--edges", edges, "comma-separated range edges in metres");
  eval->add_option("--out", eval_opts.out, "directory for eval.csv and summary.txt");

  std::string preset;
  std::uint64_t preset_seed = 7;
  std::string scene_out;
  auto* export_scene = app.add_subcommand("export-scene", "write a built-in scene as a scene file");
  export_scene->add_option("--preset", preset, "scene name")->required();
  export_scene->add_option("--seed", preset_seed, "scene seed");
  export_scene->add_option("--out", scene_out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) {
      sts::cmd_simulate(resolve(sim_flags), std::cout);
    } else if (*sweep) {
      sts::cmd_sweep(resolve(sweep_flags), std::cout);
    } else if (*calibrate) {
      sts::cmd_calibrate(resolve(calib_flags), std::cout);
    } else if (*eval) {
      if (!edges.empty()) eval_opts.bins.edges = parse_edges(edges);
      std::cout << sts::cmd_eval(eval_opts, std::cerr);
    } else if (*export_scene) {
      auto spec = sts::preset_scene(preset, preset_seed);
      if (!spec) {
        std::string names;
        for (const auto& n : sts::preset_names()) names += " " + n;
        throw sts::Error(sts::ErrorKind::kInput, "unknown preset '" + preset + "'; choose from" + names);
      }
      sts::write_text_file(scene_out, sts::format_scene(*spec));
    }
  } catch (const sts::Error& e) {
    std::cerr << "sts: error: " << e.what() << "\n";
    return sts::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "sts: internal error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
