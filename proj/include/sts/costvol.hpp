#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "sts/hypotheses.hpp"
#include "sts/sweep.hpp"
#include "sts/tensor.hpp"

namespace sts {

/// Group-wise correlations: G x D x H' x W'.
struct CostVolume {
  Tensor data;
  int groups = 1;
};

/// One 1x1x1 convolution: out x in weights (row-major) plus bias.
struct RegularizerLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;
};

/// Per-cell channel-mixing head G -> h1 -> h2 -> 1 with max(0, x) between layers.
/// No layers means the training-free default: mean over groups.
struct RegularizerWeights {
  std::vector<RegularizerLayer> layers;

  bool is_default() const noexcept { return layers.empty(); }

  /// Throws kConfig unless the chain is three layers, groups -> ... -> 1.
  void check(std::size_t groups) const;

  // Binary layout, all little-endian:
  //   u32 layer_count
  //   per layer: u32 in, u32 out, f32 weights[out * in] (row-major), f32 bias[out]
  static RegularizerWeights load(const std::filesystem::path& path);

  /// Three-layer head computing scale * mean over groups. The first layer splits the
  /// mean into positive and negative parts so the ReLUs pass it through unchanged.
  static RegularizerWeights scaled_mean(std::size_t groups, double scale);
  void save(const std::filesystem::path& path) const;
};

/// S^g = (G / C_F) * <ref^g, warped^g>; zero where no source was valid.
CostVolume group_correlation(const FeatureMap& ref, const WarpedVolume& warped, int groups);

/// Warps and correlates in a single pass without materialising the warped volume.
/// Produces the same values as group_correlation(ref, build_warped_volume(...)).
struct CostVolumeBuild {
  CostVolume volume;
  CountTensor valid_count;
};
CostVolumeBuild build_cost_volume(const ReferenceView& ref, std::span<const SourceView> sources,
                                  const DepthHypothesisSet& hypotheses, SweepMode mode, int groups);

DepthLogits regularize(const CostVolume& volume, const RegularizerWeights& head, int stride);

/// Non-overlapping average pooling from logits.stride to target_stride.
DepthLogits pool_to_output(const DepthLogits& logits, int target_stride);

struct StereoConfig {
  DepthHypothesisSet stereo_bins;  // C_D'
  DepthHypothesisSet final_bins;   // C_D
  SweepMode mode = SweepMode::kSurround;
  int groups = 8;
  int output_stride = 16;
  RegularizerWeights head;
};

struct StereoResult {
  DepthLogits logits;         // C_D bins at output_stride
  DepthLogits stereo_logits;  // C_D' bins at output_stride, before expansion
  CountTensor valid_count;    // C_D' x H' x W' at the feature stride
};

/// sample positions -> warp -> group correlation -> regularize -> pool -> expand.
StereoResult stereo_pipeline(const ReferenceView& ref, std::span<const SourceView> sources,
                             const StereoConfig& config);

}  // namespace sts
