#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sts/fusion.hpp"
#include "sts/tensor.hpp"

namespace sts {

/// Half-open depth ranges [edges[i], edges[i+1]).
struct RangeBins {
  std::vector<double> edges{2.0, 10.0, 20.0, 30.0, 45.0, 58.0};

  void validate() const;
  std::size_t size() const noexcept { return edges.empty() ? 0 : edges.size() - 1; }
};

/// A metric over the cells selected by `mask` (nonzero entries).
using DepthMetric = std::function<double(const Tensor& pred, const Tensor& gt, const Mask& mask)>;

/// Mask of cells with gt > 0 and a finite, positive prediction.
Mask valid_depth_mask(const Tensor& pred, const Tensor& gt);

/// 100 * sqrt(mean(delta^2) - mean(delta)^2), delta = ln(pred) - ln(gt).
double silog(const Tensor& pred, const Tensor& gt, const Mask& mask);

double mean_abs_error(const Tensor& pred, const Tensor& gt, const Mask& mask);

struct RangeResult {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  std::optional<double> value;  // absent when the range holds no cells
};

/// Applies `metric` per GT depth range, restricted to `mask` when given.
std::vector<RangeResult> range_binned(const DepthMetric& metric, const Tensor& pred, const Tensor& gt,
                                      const RangeBins& bins, const Mask* mask = nullptr);

/// Fraction of cells with GT inside the bin range whose argmax bin is within
/// +-tolerance_bins of the GT bin. `mask`, when given, further restricts the cells.
double bin_accuracy(const DepthDistribution& dist, const Tensor& gt_depth, int tolerance_bins,
                    const Mask* mask = nullptr);

}  // namespace sts
