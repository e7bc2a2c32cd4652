#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "sts/fusion.hpp"
#include "sts/geometry.hpp"
#include "sts/sweep.hpp"
#include "sts/tensor.hpp"

namespace sts {

/// Depth-weighted frustum samples in the ego frame.
struct FrustumPoints {
  std::vector<Eigen::Vector3d> positions;
  std::vector<std::size_t> pixel;  // source cell index (row * width + col)
  Tensor features;                 // N x C_F, feature * probability

  std::size_t size() const noexcept { return positions.size(); }
  std::size_t channels() const { return features.rank() == 2 ? features.dim(1) : 0; }
};

/// Ego-frame grid: cell (ix, iy) covers
/// [origin_x + ix * cell, origin_x + (ix + 1) * cell) x [origin_y + iy * cell, ...).
struct BevGridConfig {
  double origin_x = -51.2;
  double origin_y = -51.2;
  double cell_size = 0.8;
  std::size_t cells_x = 128;
  std::size_t cells_y = 128;

  static BevGridConfig centered(double half_extent, double cell_size);
  void validate() const;
  /// Flat index ix * cells_y + iy, or -1 outside the grid.
  std::ptrdiff_t cell_of(const Eigen::Vector3d& point) const;
};

struct BevGrid {
  Tensor data;  // C_F x X x Y
  BevGridConfig config;

  Tensor l2_norm() const;  // X x Y
};

/// Every (cell, bin) with non-zero probability becomes a point at the bin centre depth
/// along the cell's ray, carrying feature * probability. `features` and `dist` must share
/// their grid.
FrustumPoints lift(const FeatureMap& features, const DepthDistribution& dist, const CameraModel& cam);

/// Sum-pools point features into their ground-plane cells; points outside are dropped.
BevGrid splat(const FrustumPoints& points, const BevGridConfig& config);

/// Average-pools a feature map to a coarser stride.
FeatureMap pool_features(const FeatureMap& map, int target_stride);

}  // namespace sts
