#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sts/config.hpp"
#include "sts/costvol.hpp"
#include "sts/fusion.hpp"
#include "sts/metrics.hpp"
#include "sts/synthworld.hpp"

namespace sts {

/// Everything computed for one reference camera of a frame pair.
struct CameraSweep {
  std::string camera_id;
  StereoResult stereo;
  DepthLogits mono;                 // C_D bins at the output stride
  DepthDistribution fused;
  DepthDistribution stereo_only;
  DepthDistribution mono_only;
  Tensor depth_fused;
  Tensor depth_stereo;
  Tensor depth_mono;
  RenderedFrame truth;              // scene rendered at the output stride
};

struct SweepRun {
  std::vector<CameraSweep> cameras;
  std::vector<RenderedFrame> reference;  // feature-stride renders of the reference frame
};

/// Renders the frame pair (reference_frame - 1, reference_frame) and runs stereo, mono,
/// fusion and decoding for every camera.
SweepRun run_sweep(const SceneSpec& scene, const RunConfig& config);

/// Loads the scene named by the config and applies the seed override.
SceneSpec scene_for(const RunConfig& config);

struct Calibration {
  double scale = 1.0;
  double loss = 0.0;
  std::vector<std::pair<double, double>> curve;  // (scale, loss) per candidate
};

/// Temperature fit for the training-free stereo head: the scale s minimising the BCE of
/// softmax(s * stereo logits) against GT over every camera of the configured frame pair.
/// The config's own head is ignored.
Calibration calibrate_stereo_scale(const SceneSpec& scene, const RunConfig& config,
                                   std::span<const double> candidates);

/// Powers of sqrt(2) from 1 to 256.
std::vector<double> default_scale_candidates();

void cmd_simulate(const RunConfig& config, std::ostream& log);
void cmd_sweep(const RunConfig& config, std::ostream& log);

/// Writes stereo_head.bin (the calibrated scaled-mean head) and calibration.csv.
void cmd_calibrate(const RunConfig& config, std::ostream& log);

struct EvalOptions {
  std::vector<std::filesystem::path> predictions;
  std::vector<std::filesystem::path> ground_truth;
  RangeBins bins;
  std::filesystem::path out;  // empty: print only
};

/// CSV of SILog and mean absolute error per file pair and range; returns the CSV text.
/// The summary goes to `log` and lists ranges without pixels.
std::string cmd_eval(const EvalOptions& options, std::ostream& log);

}  // namespace sts
