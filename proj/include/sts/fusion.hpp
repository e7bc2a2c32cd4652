#pragma once

#include <string_view>

#include "sts/hypotheses.hpp"
#include "sts/tensor.hpp"

namespace sts {

/// Per-cell categorical distribution over depth bins: C_D x H x W.
struct DepthDistribution {
  Tensor probs;
  DepthHypothesisSet bins;
  int stride = 1;

  std::size_t height() const { return probs.dim(1); }
  std::size_t width() const { return probs.dim(2); }
};

enum class DecodeMode { kArgmax, kExpectation };

DecodeMode parse_decode_mode(std::string_view text);
std::string_view to_string(DecodeMode mode);

/// softmax over depth of (stereo + mono), max-subtracted.
DepthDistribution fuse(const DepthLogits& stereo, const DepthLogits& mono, const DepthHypothesisSet& bins);

/// softmax of a single logit tensor.
DepthDistribution to_distribution(const DepthLogits& logits, const DepthHypothesisSet& bins);

/// Index of the most probable bin per cell; ties go to the lowest bin.
BasicTensor<std::int32_t> argmax_bins(const DepthDistribution& dist);

/// H x W depth map in metres.
Tensor decode_depth(const DepthDistribution& dist, DecodeMode mode);

inline constexpr double kBceEpsilon = 1e-7;

/// Mean over valid cells and bins of the binary cross-entropy against one-hot GT bins.
/// Cells whose GT is missing or outside [d_min, d_max] are ignored.
double bce_depth_loss(const DepthDistribution& dist, const Tensor& gt_depth);

}  // namespace sts
