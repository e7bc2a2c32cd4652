#include "sts/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sts/error.hpp"
#include "sts/parallel.hpp"

namespace sts {

DecodeMode parse_decode_mode(std::string_view text) {
  if (text == "argmax") return DecodeMode::kArgmax;
  if (text == "expectation") return DecodeMode::kExpectation;
  throw Error(ErrorKind::kConfig,
              "decode mode must be 'argmax' or 'expectation', got '" + std::string(text) + "'");
}

std::string_view to_string(DecodeMode mode) {
  return mode == DecodeMode::kArgmax ? "argmax" : "expectation";
}

namespace {

DepthDistribution softmax_of(const Tensor& a, const Tensor* b, const DepthHypothesisSet& bins, int stride) {
  if (a.rank() != 3 || a.dim(0) != bins.size()) {
    throw Error(ErrorKind::kShape, "logits " + shape_string(a.shape()) + " do not match " +
                                       std::to_string(bins.size()) + " depth bins");
  }
  const std::size_t depth = a.dim(0);
  const std::size_t plane = a.dim(1) * a.dim(2);
  DepthDistribution out{Tensor(a.shape()), bins, stride};
  parallel_for(plane, [&](std::size_t i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < depth; ++k) {
      const double z = a[k * plane + i] + (b ? (*b)[k * plane + i] : 0.0);
      out.probs[k * plane + i] = z;
      peak = std::max(peak, z);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < depth; ++k) {
      const double e = std::exp(out.probs[k * plane + i] - peak);
      out.probs[k * plane + i] = e;
      total += e;
    }
    const double inv = 1.0 / total;
    for (std::size_t k = 0; k < depth; ++k) out.probs[k * plane + i] *= inv;
  });
  return out;
}

}  // namespace

DepthDistribution fuse(const DepthLogits& stereo, const DepthLogits& mono, const DepthHypothesisSet& bins) {
  if (stereo.data.shape() != mono.data.shape() || stereo.stride != mono.stride) {
    throw Error(ErrorKind::kShape, "stereo logits " + shape_string(stereo.data.shape()) + "@" +
                                       std::to_string(stereo.stride) + " vs mono " +
                                       shape_string(mono.data.shape()) + "@" +
                                       std::to_string(mono.stride));
  }
  return softmax_of(stereo.data, &mono.data, bins, stereo.stride);
}

DepthDistribution to_distribution(const DepthLogits& logits, const DepthHypothesisSet& bins) {
  return softmax_of(logits.data, nullptr, bins, logits.stride);
}

BasicTensor<std::int32_t> argmax_bins(const DepthDistribution& dist) {
  const std::size_t depth = dist.probs.dim(0);
  const std::size_t plane = dist.height() * dist.width();
  BasicTensor<std::int32_t> out({dist.height(), dist.width()});
  for (std::size_t i = 0; i < plane; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < depth; ++k) {
      if (dist.probs[k * plane + i] > dist.probs[best * plane + i]) best = k;
    }
    out[i] = static_cast<std::int32_t>(best);
  }
  return out;
}

Tensor decode_depth(const DepthDistribution& dist, DecodeMode mode) {
  const std::size_t depth = dist.probs.dim(0);
  const std::size_t plane = dist.height() * dist.width();
  Tensor out({dist.height(), dist.width()});
  if (mode == DecodeMode::kArgmax) {
    const auto best = argmax_bins(dist);
    for (std::size_t i = 0; i < plane; ++i) out[i] = dist.bins.center(static_cast<std::size_t>(best[i]));
    return out;
  }
  for (std::size_t i = 0; i < plane; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < depth; ++k) acc += dist.probs[k * plane + i] * dist.bins.center(k);
    out[i] = acc;
  }
  return out;
}

double bce_depth_loss(const DepthDistribution& dist, const Tensor& gt_depth) {
  require_shape(gt_depth.shape(), {dist.height(), dist.width()}, "bce ground truth");
  const std::size_t depth = dist.probs.dim(0);
  const std::size_t plane = dist.height() * dist.width();
  double total = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < plane; ++i) {
    const int gt_bin = dist.bins.nearest_bin(gt_depth[i]);
    if (gt_bin < 0) continue;
    double cell = 0.0;
    for (std::size_t k = 0; k < depth; ++k) {
      const double p = std::clamp(dist.probs[k * plane + i], kBceEpsilon, 1.0 - kBceEpsilon);
      cell -= (static_cast<int>(k) == gt_bin) ? std::log(p) : std::log(1.0 - p);
    }
    total += cell / static_cast<double>(depth);
    ++cells;
  }
  if (cells == 0) throw Error(ErrorKind::kUndefinedMetric, "BCE loss over an empty valid mask");
  return total / static_cast<double>(cells);
}

}  // namespace sts
