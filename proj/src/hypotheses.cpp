#include "sts/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sts/error.hpp"

namespace sts {

DepthMode parse_depth_mode(std::string_view text) {
  if (text == "sid") return DepthMode::kSpacingIncreasing;
  if (text == "ud") return DepthMode::kUniform;
  throw Error(ErrorKind::kConfig, "depth mode must be 'sid' or 'ud', got '" + std::string(text) + "'");
}

std::string_view to_string(DepthMode mode) {
  return mode == DepthMode::kSpacingIncreasing ? "sid" : "ud";
}

DepthHypothesisSet::DepthHypothesisSet(DepthMode mode, double d_min, double d_max,
                                       std::vector<double> centers)
    : mode_(mode), d_min_(d_min), d_max_(d_max), centers_(std::move(centers)) {}

double DepthHypothesisSet::position(double depth) const {
  const double n = static_cast<double>(centers_.size());
  if (mode_ == DepthMode::kSpacingIncreasing) {
    return n * std::log(depth / d_min_) / std::log(d_max_ / d_min_);
  }
  return n * (depth - d_min_) / (d_max_ - d_min_);
}

int DepthHypothesisSet::nearest_bin(double depth) const {
  if (!(depth >= d_min_ && depth <= d_max_) || centers_.empty()) return -1;
  // Centres sit at k + 0.5 in bin coordinates.
  const double k = std::floor(position(depth));
  const int last = static_cast<int>(centers_.size()) - 1;
  return std::clamp(static_cast<int>(k), 0, last);
}

bool DepthHypothesisSet::compatible_with(const DepthHypothesisSet& other) const noexcept {
  return mode_ == other.mode_ && d_min_ == other.d_min_ && d_max_ == other.d_max_;
}

namespace {

void check_range(double d_min, double d_max, int count) {
  if (!(d_min > 0.0) || !(d_max > d_min) || !std::isfinite(d_max) || count < 1) {
    throw Error(ErrorKind::kDomain, "depth range needs 0 < d_min < d_max and count >= 1 (got " +
                                        std::to_string(d_min) + ", " + std::to_string(d_max) + ", " +
                                        std::to_string(count) + ")");
  }
}

}  // namespace

double sid_edge(double d_min, double d_max, int count, double k) {
  check_range(d_min, d_max, count);
  return std::exp(std::log(d_min) + std::log(d_max / d_min) * k / count);
}

DepthHypothesisSet make_sid(double d_min, double d_max, int count) {
  check_range(d_min, d_max, count);
  std::vector<double> centers(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) centers[k] = sid_edge(d_min, d_max, count, k + 0.5);
  return {DepthMode::kSpacingIncreasing, d_min, d_max, std::move(centers)};
}

DepthHypothesisSet make_ud(double d_min, double d_max, int count) {
  check_range(d_min, d_max, count);
  const double step = (d_max - d_min) / count;
  std::vector<double> centers(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) centers[k] = d_min + step * (k + 0.5);
  return {DepthMode::kUniform, d_min, d_max, std::move(centers)};
}

DepthHypothesisSet make_hypotheses(DepthMode mode, double d_min, double d_max, int count) {
  return mode == DepthMode::kSpacingIncreasing ? make_sid(d_min, d_max, count)
                                                : make_ud(d_min, d_max, count);
}

DepthLogits expand_bins(const DepthLogits& logits, int target_count) {
  const auto bins = static_cast<int>(logits.bins());
  if (bins <= 0 || target_count <= 0 || target_count % bins != 0) {
    throw Error(ErrorKind::kAlignment, "cannot expand " + std::to_string(bins) + " depth bins to " +
                                           std::to_string(target_count) + " by duplication");
  }
  const std::size_t factor = static_cast<std::size_t>(target_count / bins);
  const std::size_t plane = logits.height() * logits.width();
  DepthLogits out{Tensor({static_cast<std::size_t>(target_count), logits.height(), logits.width()}),
                  logits.stride};
  for (std::size_t k = 0; k < static_cast<std::size_t>(bins); ++k) {
    const double* src = logits.data.data() + k * plane;
    for (std::size_t r = 0; r < factor; ++r) {
      std::copy(src, src + plane, out.data.data() + (k * factor + r) * plane);
    }
  }
  return out;
}

}  // namespace sts
