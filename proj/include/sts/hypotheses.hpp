#pragma once

#include <string_view>
#include <vector>

#include "sts/tensor.hpp"

namespace sts {

enum class DepthMode { kUniform, kSpacingIncreasing };

DepthMode parse_depth_mode(std::string_view text);
std::string_view to_string(DepthMode mode);

/// Ordered depth bin centres over [d_min, d_max].
class DepthHypothesisSet {
 public:
  DepthHypothesisSet() = default;
  DepthHypothesisSet(DepthMode mode, double d_min, double d_max, std::vector<double> centers);

  DepthMode mode() const noexcept { return mode_; }
  double d_min() const noexcept { return d_min_; }
  double d_max() const noexcept { return d_max_; }
  std::size_t size() const noexcept { return centers_.size(); }
  double center(std::size_t k) const { return centers_.at(k); }
  const std::vector<double>& centers() const noexcept { return centers_; }

  /// Continuous bin coordinate of a depth: 0 at d_min, size() at d_max, measured in
  /// log space for SID and linear space for UD.
  double position(double depth) const;

  /// Bin whose centre is nearest to `depth` in the mode's own metric, or -1 when the
  /// depth lies outside [d_min, d_max] (or is not a positive number).
  int nearest_bin(double depth) const;

  /// Same range and mode, different count.
  bool compatible_with(const DepthHypothesisSet& other) const noexcept;

 private:
  DepthMode mode_ = DepthMode::kSpacingIncreasing;
  double d_min_ = 0.0;
  double d_max_ = 0.0;
  std::vector<double> centers_;
};

/// Log-space edge formula: exp(log d_min + log(d_max / d_min) * k / count).
double sid_edge(double d_min, double d_max, int count, double k);

DepthHypothesisSet make_sid(double d_min, double d_max, int count);
DepthHypothesisSet make_ud(double d_min, double d_max, int count);
DepthHypothesisSet make_hypotheses(DepthMode mode, double d_min, double d_max, int count);

/// Per-cell scores over depth bins: bins x rows x cols at a given image stride.
struct DepthLogits {
  Tensor data;
  int stride = 1;

  std::size_t bins() const { return data.dim(0); }
  std::size_t height() const { return data.dim(1); }
  std::size_t width() const { return data.dim(2); }
};

/// Repeats each bin target_count / bins times in depth order.
DepthLogits expand_bins(const DepthLogits& logits, int target_count);

}  // namespace sts
