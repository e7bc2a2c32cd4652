#include "sts/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "sts/error.hpp"

namespace sts {

void RangeBins::validate() const {
  if (edges.size() < 2) throw Error(ErrorKind::kConfig, "range bins need at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw Error(ErrorKind::kConfig, "range bin edges must be strictly increasing");
    }
  }
}

Mask valid_depth_mask(const Tensor& pred, const Tensor& gt) {
  require_shape(pred.shape(), gt.shape(), "prediction vs ground truth");
  Mask mask(gt.shape());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    mask[i] = (gt[i] > 0.0 && pred[i] > 0.0 && std::isfinite(pred[i]) && std::isfinite(gt[i])) ? 1 : 0;
  }
  return mask;
}

double silog(const Tensor& pred, const Tensor& gt, const Mask& mask) {
  require_shape(pred.shape(), gt.shape(), "silog prediction vs ground truth");
  require_shape(mask.shape(), gt.shape(), "silog mask");
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask[i]) continue;
    if (!(gt[i] > 0.0) || !(pred[i] > 0.0)) {
      throw Error(ErrorKind::kContract, "silog needs positive depths on masked cells");
    }
    const double delta = std::log(pred[i]) - std::log(gt[i]);
    sum += delta;
    sum_sq += delta * delta;
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::kUndefinedMetric, "silog over an empty mask");
  const double mean = sum / static_cast<double>(n);
  const double var = sum_sq / static_cast<double>(n) - mean * mean;
  return 100.0 * std::sqrt(std::max(var, 0.0));
}

double mean_abs_error(const Tensor& pred, const Tensor& gt, const Mask& mask) {
  require_shape(pred.shape(), gt.shape(), "abs error prediction vs ground truth");
  require_shape(mask.shape(), gt.shape(), "abs error mask");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask[i]) continue;
    sum += std::abs(pred[i] - gt[i]);
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::kUndefinedMetric, "mean absolute error over an empty mask");
  return sum / static_cast<double>(n);
}

std::vector<RangeResult> range_binned(const DepthMetric& metric, const Tensor& pred, const Tensor& gt,
                                      const RangeBins& bins, const Mask* mask) {
  bins.validate();
  require_shape(pred.shape(), gt.shape(), "range_binned prediction vs ground truth");
  if (mask) require_shape(mask->shape(), gt.shape(), "range_binned mask");
  std::vector<RangeResult> out;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    RangeResult r{bins.edges[b], bins.edges[b + 1], 0, std::nullopt};
    Mask sub(gt.shape());
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (mask && !(*mask)[i]) continue;
      if (gt[i] >= r.lo && gt[i] < r.hi) {
        sub[i] = 1;
        ++r.count;
      }
    }
    if (r.count > 0) r.value = metric(pred, gt, sub);
    out.push_back(r);
  }
  return out;
}

double bin_accuracy(const DepthDistribution& dist, const Tensor& gt_depth, int tolerance_bins,
                    const Mask* mask) {
  require_shape(gt_depth.shape(), {dist.height(), dist.width()}, "bin_accuracy ground truth");
  if (mask) require_shape(mask->shape(), gt_depth.shape(), "bin_accuracy mask");
  const auto best = argmax_bins(dist);
  std::size_t hits = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < gt_depth.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const int gt_bin = dist.bins.nearest_bin(gt_depth[i]);
    if (gt_bin < 0) continue;
    ++total;
    if (std::abs(best[i] - gt_bin) <= tolerance_bins) ++hits;
  }
  if (total == 0) throw Error(ErrorKind::kUndefinedMetric, "bin accuracy over an empty mask");
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace sts
