#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "sts/bev.hpp"
#include "sts/fusion.hpp"
#include "sts/hypotheses.hpp"
#include "sts/sweep.hpp"
#include "sts/synthworld.hpp"

namespace sts {

// Config files hold one `key = value` per line; `#` starts a comment.
//
//   scene              path of the scene file, relative to the config file
//   depth.mode         sid | ud
//   depth.min          metres
//   depth.max          metres
//   depth.bins         final bin count C_D
//   depth.stereo_bins  cost-volume bin count C_D'
//   sweep.mode         surround | same_camera
//   sweep.frame        reference frame; its predecessor is the source frame
//   feature.stride     feature grid stride n (defaults to the scene's stride)
//   output.stride      logit stride m
//   cost.groups        correlation groups G
//   cost.head          optional regularizer weight file, relative to the config file
//   bev.extent         half side of the BEV grid in metres
//   bev.cell           BEV cell size in metres
//   mono.sigma_bins, mono.noise, mono.jitter_bins, mono.reference_depth
//   decode.mode        argmax | expectation
//   out                output directory, relative to the working directory
//   seed               overrides the scene seed
struct RunConfig {
  std::filesystem::path scene;
  DepthMode depth_mode = DepthMode::kSpacingIncreasing;
  double depth_min = 2.0;
  double depth_max = 58.0;
  int depth_bins = 112;
  int stereo_bins = 56;
  SweepMode sweep_mode = SweepMode::kSurround;
  std::size_t reference_frame = 1;
  std::optional<int> feature_stride;
  int output_stride = 16;
  int groups = 8;
  std::optional<std::filesystem::path> head;
  double bev_extent = 51.2;
  double bev_cell = 0.8;
  MonoQuality mono;
  DecodeMode decode = DecodeMode::kArgmax;
  std::filesystem::path out = "out";
  std::optional<std::uint64_t> seed;

  /// Numeric checks that do not need the scene. Throws kConfig.
  void validate() const;

  DepthHypothesisSet final_hypotheses() const;
  DepthHypothesisSet stereo_hypotheses() const;
  BevGridConfig bev_grid() const;
};

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);

/// Throws kInput naming the path when the file is missing.
RunConfig load_config(const std::filesystem::path& path);

/// Canonical `key = value` listing (scene and out as given).
std::string format_config(const RunConfig& config);

}  // namespace sts
